//! 2x2x2 decomposition into at most three simple tensors.
//!
//! Real slice operations place a well-conditioned pivot into the two leading
//! frontal positions; the closed-form three-term construction then applies
//! and is pulled back through the recorded operations.

use super::{finish, perm_matrix, perm_real, unit_q, DecomposeOutcome, Path};
use crate::error::{Error, Result};
use crate::scalar::{Quaternion, Real};
use crate::tensor::{
    apply_op, matrix_rank_decomp, pullback, Decomposition, Op, OpLog, SimpleTensor, Tensor3,
};

pub fn decompose_222<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    if t.dims != (2, 2, 2) {
        return Err(Error::DimensionMismatch(format!(
            "decompose_222 needs shape (2, 2, 2), got {:?}",
            t.dims
        )));
    }
    let bound = 3;
    if t.max_norm() <= R::zero() {
        return finish(t, Decomposition::empty(t.dims), bound, Path::Zero);
    }
    // A zero frontal slice leaves a single matrix: split it directly.
    for j in 0..2 {
        if t.frontal_slice(j).max_norm() <= R::zero() {
            let other = 1 - j;
            let d = matrix_rank_decomp(&t.frontal_slice(other), 2, other, t.dims);
            return finish(t, d, bound, Path::SingleSlice222);
        }
    }

    let mut log = OpLog::new();
    let mut work = t.clone();

    // Move the largest entry to position (0, 0, 0) by real permutations.
    let mut best = (0usize, 0usize, 0usize);
    let mut best_norm = R::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let n = work[(i, j, k)].norm();
                if n > best_norm {
                    best_norm = n;
                    best = (i, j, k);
                }
            }
        }
    }
    if best.0 == 1 {
        work = apply_op(&work, Op::LeftMode1(perm_matrix(&[1, 0])), &mut log)?;
    }
    if best.2 == 1 {
        work = apply_op(&work, Op::RightMode3(perm_matrix(&[1, 0])), &mut log)?;
    }
    if best.1 == 1 {
        work = apply_op(&work, Op::RealMode2(perm_real(&[1, 0])), &mut log)?;
    }

    // Make the second frontal pivot nonzero too: B11 <- B11 + s A11 with the
    // real coefficient s chosen to maximize the resulting norm.
    let a11 = work[(0, 0, 0)];
    let b11 = work[(0, 1, 0)];
    let mut s_best = 0.0f64;
    let mut s_norm = b11.norm();
    for s in [1.0f64, -1.0, 2.0] {
        let n = (b11 + a11.scale(R::real(s))).norm();
        if n > s_norm {
            s_norm = n;
            s_best = s;
        }
    }
    if s_best != 0.0 {
        let f = vec![
            vec![R::one(), R::zero()],
            vec![R::real(s_best), R::one()],
        ];
        work = apply_op(&work, Op::RealMode2(f), &mut log)?;
    }

    let a = work.frontal_slice(0);
    let b = work.frontal_slice(1);
    let a11_inv = a[(0, 0)].inv()?;
    let b11_inv = b[(0, 0)].inv()?;

    let one = Quaternion::one();
    let mut d = Decomposition::empty(t.dims);
    d.push(SimpleTensor::new(
        vec![a[(0, 0)], a[(1, 0)]],
        unit_q(2, 0),
        vec![one, a11_inv * a[(0, 1)]],
    ));
    d.push(SimpleTensor::new(
        vec![b[(0, 0)], b[(1, 0)]],
        unit_q(2, 1),
        vec![one, b11_inv * b[(0, 1)]],
    ));
    d.push(SimpleTensor::new(
        unit_q(2, 1),
        vec![
            a[(1, 1)] - a[(1, 0)] * a11_inv * a[(0, 1)],
            b[(1, 1)] - b[(1, 0)] * b11_inv * b[(0, 1)],
        ],
        unit_q(2, 1),
    ));
    let pulled = pullback(&d, &log)?;
    finish(t, pulled, bound, Path::Main222)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::replay_residual;
    use crate::matrix::HMatrix;
    use crate::tensor::{rank_certificate_square, RankCertificate};
    use crate::util::case_seed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = Quaternion<f64>;

    fn random_222(seed: u64) -> Tensor3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tensor3::zeros((2, 2, 2));
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    t[(i, j, k)] = Q::from_f64s(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                }
            }
        }
        t
    }

    #[test]
    fn zero_tensor_gives_zero_terms() {
        let out = decompose_222(&Tensor3::<f64>::zeros((2, 2, 2))).unwrap();
        assert_eq!(out.decomposition.terms.len(), 0);
        assert_eq!(out.path, Path::Zero);
    }

    #[test]
    fn rank_three_witness_decomposes_and_certifies() {
        // (I; [[0,1],[0,0]]) has rank exactly 3.
        let a = HMatrix::identity(2);
        let b = HMatrix::from_rows(vec![
            vec![Q::zero(), Q::one()],
            vec![Q::zero(), Q::zero()],
        ]);
        let t = Tensor3::from_frontal_slices(&[a, b]);
        let out = decompose_222(&t).unwrap();
        assert_eq!(out.decomposition.terms.len(), 3);
        assert!(replay_residual(&t, &out.decomposition) <= 1e-12);
        assert!(matches!(
            rank_certificate_square(&t),
            RankCertificate::MoreThanN
        ));
    }

    #[test]
    fn batch_random_within_bound() {
        for idx in 0..10_000u64 {
            let t = random_222(case_seed(0xd222, idx));
            let out = decompose_222(&t).unwrap();
            assert!(out.decomposition.terms.len() <= 3, "case {idx}");
            let r = replay_residual(&t, &out.decomposition);
            assert!(r <= 1e-8, "case {idx}: residual {r}");
        }
    }

    #[test]
    fn degenerate_single_slice() {
        let mut t = Tensor3::<f64>::zeros((2, 2, 2));
        t[(0, 1, 0)] = Q::i();
        t[(1, 1, 1)] = Q::j();
        let out = decompose_222(&t).unwrap();
        assert_eq!(out.path, Path::SingleSlice222);
        assert!(out.decomposition.terms.len() <= 2);
        assert!(replay_residual(&t, &out.decomposition) <= 1e-14);
    }
}
