//! 2x3x3 (and rotated 3x3x2) decomposition into at most four simple
//! tensors.
//!
//! The two horizontal slices are 3x3 quaternion matrices. A left
//! quaternion operation built from a left-eigenvalue search makes the
//! second slice singular; column operations against its right null vector
//! then expose either a closed four-term pattern or a smaller subproblem.

use super::{
    embed_mode2, embed_mode3, finish, perm_matrix, perm_real, take_mode2, take_mode3, unit_q,
    DecomposeOutcome, Path,
};
use crate::error::{Error, Result};
use crate::matrix::{vec_norm, HMatrix};
use crate::scalar::{Quaternion, Real};
use crate::tensor::{
    apply_op, matrix_rank_decomp, pullback, Decomposition, Op, OpLog, SimpleTensor, Tensor3,
};

pub fn decompose_233<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    match t.dims {
        (2, 3, 3) => decompose_233_horizontal(t),
        (3, 3, 2) => {
            let rotated = t.conj_rotate_13();
            let out = decompose_233_horizontal(&rotated)?;
            finish(t, out.decomposition.conj_rotate_13(), out.bound, out.path)
        }
        other => Err(Error::DimensionMismatch(format!(
            "decompose_233 needs shape (2, 3, 3) or (3, 3, 2), got {other:?}"
        ))),
    }
}

fn decompose_233_horizontal<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    let bound = 4;
    if t.max_norm() <= R::zero() {
        return finish(t, Decomposition::empty(t.dims), bound, Path::Zero);
    }
    let a0 = t.horizontal_slice(0);
    let b0 = t.horizontal_slice(1);
    if a0.h_rank() <= 2 && b0.h_rank() <= 2 {
        let mut d = matrix_rank_decomp(&a0, 1, 0, t.dims);
        d.extend(matrix_rank_decomp(&b0, 1, 1, t.dims));
        return finish(t, d, bound, Path::Split233);
    }

    let mut log = OpLog::new();
    let mut work = t.clone();

    // Put the better-conditioned slice first; it must be invertible.
    if super::block_score(&b0) > super::block_score(&a0) {
        work = apply_op(&work, Op::LeftMode1(perm_matrix(&[1, 0])), &mut log)?;
    }
    let a = work.horizontal_slice(0);
    let b = work.horizontal_slice(1);
    // A left shear by a left eigenvalue of -B A^{-1} makes the second slice
    // singular: x0 A + B = (x0 I + B A^{-1}) A.
    let x0 = b.mul(&a.h_inverse()?).left_eigen_search()?;
    let mut shear = HMatrix::identity(2);
    shear[(1, 0)] = x0;
    work = apply_op(&work, Op::LeftMode1(shear), &mut log)?;

    // Push the null direction of the singular slice into the last column.
    let c = work.horizontal_slice(1);
    let v = c.null_vector()?;
    let m_star = (0..3)
        .max_by(|&p, &q| v[p].norm().partial_cmp(&v[q].norm()).unwrap())
        .unwrap();
    let rest: Vec<usize> = (0..3).filter(|&k| k != m_star).collect();
    let r_op = HMatrix::from_fn(3, 3, |i, j| {
        if j == 2 {
            v[i]
        } else if i == rest[j] {
            Quaternion::one()
        } else {
            Quaternion::zero()
        }
    });
    work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;

    let scale = R::one() + work.max_norm();
    let tol = R::real(1e-8) * scale;
    let a = work.horizontal_slice(0);
    if vec_norm(&a.col(2)) <= tol {
        // Both slices lost their last column: a 2x3x2 subproblem remains.
        let sub = take_mode3(&work, &[0, 1]);
        let inner = super::d232::decompose_232(&sub)?;
        let embedded = embed_mode3(inner.decomposition, 3, &[0, 1]);
        let pulled = pullback(&embedded, &log)?;
        return finish(t, pulled, bound, Path::Sub232From233);
    }

    // Bring the largest entry of the surviving column to the first row
    // (a mode-2 permutation), then clear the rest of that row.
    let j_star = (0..3)
        .max_by(|&p, &q| a[(p, 2)].norm().partial_cmp(&a[(q, 2)].norm()).unwrap())
        .unwrap();
    if j_star != 0 {
        let mut perm = vec![j_star];
        perm.extend((0..3).filter(|&x| x != j_star));
        work = apply_op(&work, Op::RealMode2(perm_real(&perm)), &mut log)?;
    }
    let a = work.horizontal_slice(0);
    let pivot_inv = a[(0, 2)].inv()?;
    let mut r2 = HMatrix::identity(3);
    r2[(2, 0)] = pivot_inv * (-a[(0, 0)]);
    r2[(2, 1)] = pivot_inv * (-a[(0, 1)]);
    work = apply_op(&work, Op::RightMode3(r2), &mut log)?;

    let a = work.horizontal_slice(0);
    let c = work.horizontal_slice(1);
    if c[(0, 0)].norm() <= tol && c[(0, 1)].norm() <= tol {
        // The first mode-2 row is a single tube: peel it off and decompose
        // the remaining 2x2x3 block.
        let mut d = Decomposition::empty(t.dims);
        d.push(SimpleTensor::new(
            vec![Quaternion::one(), Quaternion::zero()],
            unit_q(3, 0),
            vec![Quaternion::zero(), Quaternion::zero(), a[(0, 2)]],
        ));
        let sub = take_mode2(&work, &[1, 2]);
        let inner = super::d223::decompose_223(&sub)?;
        d.extend(embed_mode2(inner.decomposition, 3, &[1, 2]));
        let pulled = pullback(&d, &log)?;
        return finish(t, pulled, bound, Path::Sub223From233);
    }
    if c[(0, 1)].norm() < c[(0, 0)].norm() {
        work = apply_op(&work, Op::RightMode3(perm_matrix(&[1, 0, 2])), &mut log)?;
    }
    // Clear the leading entry of the singular slice's first row.
    let c = work.horizontal_slice(1);
    let mut r3 = HMatrix::identity(3);
    r3[(1, 0)] = c[(0, 1)].inv()? * (-c[(0, 0)]);
    work = apply_op(&work, Op::RightMode3(r3), &mut log)?;

    let a = work.horizontal_slice(0);
    let c = work.horizontal_slice(1);
    let small1 = a[(1, 0)].norm() <= tol;
    let small2 = a[(2, 0)].norm() <= tol;
    if small1 && small2 {
        // The first column of the top slice vanished entirely.
        let mut d = Decomposition::empty(t.dims);
        d.push(SimpleTensor::new(
            vec![Quaternion::zero(), Quaternion::one()],
            vec![c[(0, 0)], c[(1, 0)], c[(2, 0)]],
            unit_q(3, 0),
        ));
        d.push(SimpleTensor::new(
            vec![Quaternion::one(), Quaternion::zero()],
            vec![a[(0, 2)], a[(1, 2)], a[(2, 2)]],
            unit_q(3, 2),
        ));
        d.extend(super::matrix_rank_decomp_capped(
            &work.lateral_slice(1),
            3,
            1,
            work.dims,
            2,
        ));
        let pulled = pullback(&d, &log)?;
        return finish(t, pulled, bound, Path::Lateral233);
    }
    if small1 != small2 {
        // Make both pivots of the first column nonzero by adding rows.
        let f = if small1 {
            vec![
                vec![R::one(), R::zero(), R::zero()],
                vec![R::zero(), R::one(), R::one()],
                vec![R::zero(), R::zero(), R::one()],
            ]
        } else {
            vec![
                vec![R::one(), R::zero(), R::zero()],
                vec![R::zero(), R::one(), R::zero()],
                vec![R::zero(), R::one(), R::one()],
            ]
        };
        work = apply_op(&work, Op::RealMode2(f), &mut log)?;
    }

    let a = work.horizontal_slice(0);
    let c = work.horizontal_slice(1);
    let p1_inv = a[(1, 0)].inv()?;
    let p2_inv = a[(2, 0)].inv()?;
    let one = Quaternion::one();
    let zero = Quaternion::zero();
    let mut d = Decomposition::empty(t.dims);
    d.push(SimpleTensor::new(
        vec![one, zero],
        vec![a[(0, 2)], a[(1, 2)], a[(2, 2)]],
        unit_q(3, 2),
    ));
    d.push(SimpleTensor::new(
        vec![a[(1, 0)], c[(1, 0)]],
        unit_q(3, 1),
        vec![one, p1_inv * a[(1, 1)], zero],
    ));
    d.push(SimpleTensor::new(
        vec![a[(2, 0)], c[(2, 0)]],
        unit_q(3, 2),
        vec![one, p2_inv * a[(2, 1)], zero],
    ));
    d.push(SimpleTensor::new(
        vec![zero, one],
        vec![
            c[(0, 1)],
            c[(1, 1)] - c[(1, 0)] * p1_inv * a[(1, 1)],
            c[(2, 1)] - c[(2, 0)] * p2_inv * a[(2, 1)],
        ],
        vec![zero, one, zero],
    ));
    let pulled = pullback(&d, &log)?;
    finish(t, pulled, bound, Path::Main233)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::replay_residual;
    use crate::util::case_seed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = Quaternion<f64>;

    fn random_tensor(dims: (usize, usize, usize), seed: u64) -> Tensor3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tensor3::zeros(dims);
        for i in 0..dims.0 {
            for j in 0..dims.1 {
                for k in 0..dims.2 {
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
    fn batch_random_233_and_332() {
        for idx in 0..2_000u64 {
            let dims = if idx % 2 == 0 { (2, 3, 3) } else { (3, 3, 2) };
            let t = random_tensor(dims, case_seed(0xd233, idx));
            let out = decompose_233(&t).unwrap();
            assert!(out.decomposition.terms.len() <= 4, "case {idx}");
            let r = replay_residual(&t, &out.decomposition);
            assert!(r <= 1e-7, "case {idx}: residual {r}");
        }
    }

    #[test]
    fn rank_deficient_slices_split() {
        // Both horizontal slices of rank at most 2 by construction.
        let mut s = Tensor3::<f64>::zeros((2, 3, 3));
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..3 {
                    // slice_i = p_j * q_k + r_j * s_k  (rank at most 2)
                    let p = Q::from_f64s(j as f64 + 1.0, 0.3, 0.0, 0.1 * i as f64);
                    let q = Q::from_f64s(k as f64 - 1.0, 0.0, 0.7, 0.0);
                    let r = Q::from_f64s(0.2, j as f64, 0.0, 0.0);
                    let sk = Q::from_f64s(1.0, 0.0, 0.0, k as f64 * 0.4 + i as f64);
                    s[(i, j, k)] = p * q + r * sk;
                }
            }
        }
        let out = decompose_233(&s).unwrap();
        assert_eq!(out.path, Path::Split233);
        assert!(out.decomposition.terms.len() <= 4);
        assert!(replay_residual(&s, &out.decomposition) <= 1e-8);
    }

    #[test]
    fn zero_and_dims() {
        let out = decompose_233(&Tensor3::<f64>::zeros((2, 3, 3))).unwrap();
        assert_eq!(out.path, Path::Zero);
        assert!(decompose_233(&Tensor3::<f64>::zeros((3, 2, 3))).is_err());
    }
}
