//! 2x2x3 (and rotated 3x2x2) decomposition into at most three simple
//! tensors via the column-operation cascade.

use super::{
    block_score, embed_mode3, finish, perm_matrix, take_mode3, unit_q, DecomposeOutcome, Path,
};
use crate::error::{Error, Result};
use crate::matrix::{vec_norm, HMatrix};
use crate::scalar::{Quaternion, Real};
use crate::tensor::{
    apply_op, matrix_rank_decomp, pullback, Decomposition, Op, OpLog, SimpleTensor, Tensor3,
};

pub fn decompose_223<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    match t.dims {
        (2, 2, 3) => decompose_223_frontal(t),
        (3, 2, 2) => {
            // Work on the conjugate-rotated tensor and rotate the terms back;
            // the rotation exchanges modes 1 and 3 and preserves rank.
            let rotated = t.conj_rotate_13();
            let out = decompose_223_frontal(&rotated)?;
            finish(t, out.decomposition.conj_rotate_13(), out.bound, out.path)
        }
        other => Err(Error::DimensionMismatch(format!(
            "decompose_223 needs shape (2, 2, 3) or (3, 2, 2), got {other:?}"
        ))),
    }
}

fn decompose_223_frontal<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    let bound = 3;
    if t.max_norm() <= R::zero() {
        return finish(t, Decomposition::empty(t.dims), bound, Path::Zero);
    }
    let scale = R::one() + t.max_norm();
    let a0 = t.frontal_slice(0);
    let b0 = t.frontal_slice(1);
    if a0.h_rank() <= 1 || b0.h_rank() <= 1 {
        let mut d = matrix_rank_decomp(&a0, 2, 0, t.dims);
        d.extend(matrix_rank_decomp(&b0, 2, 1, t.dims));
        return finish(t, d, bound, Path::Split223);
    }

    let mut log = OpLog::new();
    let mut work = t.clone();

    // Pick the best-conditioned column pair of the first slice and permute
    // it to the leading positions (a permutation is a real operation).
    let pair_of = |m: &HMatrix<R>, p: usize, q: usize| {
        HMatrix::from_fn(2, 2, |i, j| m[(i, if j == 0 { p } else { q })])
    };
    let mut best_pair = (0usize, 1usize);
    let mut best_score = R::zero();
    for (p, q) in [(0, 1), (0, 2), (1, 2)] {
        let s = block_score(&pair_of(&a0, p, q));
        if s > best_score {
            best_score = s;
            best_pair = (p, q);
        }
    }
    if best_score <= R::real(1e-10) * scale {
        return Err(Error::AlgorithmFailure(
            "first slice has no invertible column pair".into(),
        ));
    }
    let (p, q) = best_pair;
    if (p, q) != (0, 1) {
        let r = 3 - p - q;
        let mut perm = vec![0usize; 3];
        perm[p] = 0;
        perm[q] = 1;
        perm[r] = 2;
        work = apply_op(&work, Op::RightMode3(perm_matrix(&perm)), &mut log)?;
    }

    // Zero the third column of the first slice: C3 <- C3 - C1 x - C2 y.
    let a = work.frontal_slice(0);
    let lead = pair_of(&a, 0, 1);
    let rhs = HMatrix::from_fn(2, 1, |i, _| a[(i, 2)]);
    let z = lead.h_solve(&rhs)?;
    let mut r_op = HMatrix::identity(3);
    r_op[(0, 2)] = -z[(0, 0)];
    r_op[(1, 2)] = -z[(1, 0)];
    work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;

    let b = work.frontal_slice(1);
    let g: Vec<Quaternion<R>> = vec![b[(0, 2)], b[(1, 2)]];
    if vec_norm(&g) <= R::real(1e-9) * scale {
        // The whole third column vanished: a 2x2x2 subproblem remains.
        let sub = take_mode3(&work, &[0, 1]);
        let inner = super::d222::decompose_222(&sub)?;
        let embedded = embed_mode3(inner.decomposition, 3, &[0, 1]);
        let pulled = pullback(&embedded, &log)?;
        return finish(t, pulled, bound, Path::Sub222From223);
    }

    // Choose which of the first two columns of the second slice pairs best
    // with the third, then eliminate the first column of the second slice.
    let score_keep = block_score(&pair_of(&b, 1, 2));
    let score_swap = block_score(&pair_of(&b, 0, 2));
    if score_swap > score_keep {
        work = apply_op(&work, Op::RightMode3(perm_matrix(&[1, 0, 2])), &mut log)?;
    }
    let b = work.frontal_slice(1);
    let eg = pair_of(&b, 1, 2);
    let rhs = HMatrix::from_fn(2, 1, |i, _| b[(i, 0)]);
    let uv = eg.h_solve(&rhs)?;
    let mut r_op = HMatrix::identity(3);
    r_op[(1, 0)] = -uv[(0, 0)];
    r_op[(2, 0)] = -uv[(1, 0)];
    work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;

    // Express the remaining second-slice columns over the first-slice pair:
    // e = h c1 + b c2 and g = h c3 + b c4.
    let a = work.frontal_slice(0);
    let b = work.frontal_slice(1);
    let hb = pair_of(&a, 0, 1);
    let rhs = pair_of(&b, 1, 2);
    let coef = hb.h_solve(&rhs)?;
    let (c1, c2, c3, c4) = (coef[(0, 0)], coef[(1, 0)], coef[(0, 1)], coef[(1, 1)]);

    let path;
    if c3.norm() >= c4.norm() {
        // Remove the h-component of the middle column using the third one.
        let w = c3.inv()? * c1;
        let c5 = c2 - c4 * w;
        let mut r_op = HMatrix::identity(3);
        r_op[(2, 1)] = -w;
        work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;
        let a = work.frontal_slice(0);
        let b = work.frontal_slice(1);
        let mut d = Decomposition::empty(t.dims);
        d.push(SimpleTensor::new(
            vec![a[(0, 0)], a[(1, 0)]],
            vec![Quaternion::one(), Quaternion::zero()],
            unit_q(3, 0),
        ));
        d.push(SimpleTensor::new(
            vec![a[(0, 1)], a[(1, 1)]],
            vec![Quaternion::one(), c5],
            unit_q(3, 1),
        ));
        d.push(SimpleTensor::new(
            vec![b[(0, 2)], b[(1, 2)]],
            vec![Quaternion::zero(), Quaternion::one()],
            unit_q(3, 2),
        ));
        path = Path::Lateral223;
        let pulled = pullback(&d, &log)?;
        return finish(t, pulled, bound, path);
    }
    // Align the middle columns of both slices: after
    // C2 <- C2 + C1 k1 + C3 k3 they agree exactly.
    let k3 = c4.inv()? * (Quaternion::one() - c2);
    let k1 = c1 + c3 * k3;
    let mut r_op = HMatrix::identity(3);
    r_op[(0, 1)] = k1;
    r_op[(2, 1)] = k3;
    work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;
    let a = work.frontal_slice(0);
    let b = work.frontal_slice(1);
    let mut d = Decomposition::empty(t.dims);
    d.push(SimpleTensor::new(
        vec![a[(0, 0)], a[(1, 0)]],
        vec![Quaternion::one(), Quaternion::zero()],
        unit_q(3, 0),
    ));
    d.push(SimpleTensor::new(
        vec![a[(0, 1)], a[(1, 1)]],
        vec![Quaternion::one(), Quaternion::one()],
        unit_q(3, 1),
    ));
    d.push(SimpleTensor::new(
        vec![b[(0, 2)], b[(1, 2)]],
        vec![Quaternion::zero(), Quaternion::one()],
        unit_q(3, 2),
    ));
    path = Path::Aligned223;
    let pulled = pullback(&d, &log)?;
    finish(t, pulled, bound, path)
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

    /// The worked 2x2x3 example: two frontal slices with small quaternion
    /// entries that reduce to three simple tensors.
    fn worked_example() -> Tensor3<f64> {
        let q = Q::from_f64s;
        let a = HMatrix::from_rows(vec![
            vec![q(1.0, 0.0, 0.0, 0.0), q(0.0, 1.0, 0.0, 0.0), Q::zero()],
            vec![Q::zero(), q(0.0, 0.0, -1.0, 0.0), q(1.0, 1.0, 0.0, 0.0)],
        ]);
        let b = HMatrix::from_rows(vec![
            vec![Q::zero(), q(1.0, 0.0, 1.0, 0.0), Q::zero()],
            vec![Q::zero(), q(0.0, 1.0, 0.0, 1.0), q(1.0, 0.0, 1.0, 0.0)],
        ]);
        Tensor3::from_frontal_slices(&[a, b])
    }

    #[test]
    fn zero_slice_split_is_single_term() {
        // second slice zero, first slice rank 1
        let mut t = Tensor3::<f64>::zeros((2, 2, 3));
        for k in 0..3 {
            t[(0, 0, k)] = Q::from_f64s(1.0, 0.0, 0.0, 0.0).scale((k + 1) as f64);
            t[(1, 0, k)] = Q::i().scale((k + 1) as f64);
        }
        let out = decompose_223(&t).unwrap();
        assert_eq!(out.path, Path::Split223);
        assert!(out.decomposition.terms.len() <= 1);
        assert!(replay_residual(&t, &out.decomposition) <= 1e-12);
    }

    #[test]
    fn worked_example_within_three_terms() {
        let t = worked_example();
        let out = decompose_223(&t).unwrap();
        assert!(out.decomposition.terms.len() <= 3);
        assert!(replay_residual(&t, &out.decomposition) <= 1e-9);
    }

    #[test]
    fn batch_random_223_and_322() {
        for idx in 0..10_000u64 {
            let dims = if idx % 2 == 0 { (2, 2, 3) } else { (3, 2, 2) };
            let t = random_tensor(dims, case_seed(0xd223, idx));
            let out = decompose_223(&t).unwrap();
            assert!(out.decomposition.terms.len() <= 3, "case {idx}");
            let r = replay_residual(&t, &out.decomposition);
            assert!(r <= 1e-8, "case {idx}: residual {r}");
        }
    }

    #[test]
    fn third_column_collapse_routes_to_222() {
        // Construct a tensor whose third columns are exact combinations of
        // the first two in both slices.
        let base = random_tensor((2, 2, 2), 7);
        let mut t = Tensor3::<f64>::zeros((2, 2, 3));
        for i in 0..2 {
            for j in 0..2 {
                t[(i, j, 0)] = base[(i, j, 0)];
                t[(i, j, 1)] = base[(i, j, 1)];
                t[(i, j, 2)] = base[(i, j, 0)].scale(2.0) - base[(i, j, 1)];
            }
        }
        let out = decompose_223(&t).unwrap();
        assert!(out.decomposition.terms.len() <= 3);
        assert!(replay_residual(&t, &out.decomposition) <= 1e-10);
    }
}
