//! 3x3x3 decomposition into at most six simple tensors.
//!
//! If every horizontal slice has rank at most 2 the tensor splits into
//! three matrix decompositions. Otherwise a left shear built from a
//! left-eigenvalue search makes one horizontal slice singular; that slice
//! contributes at most two outer terms and the remaining 2x3x3 block at
//! most four.

use super::{embed_mode1, finish, take_mode1, DecomposeOutcome, Path};
use crate::error::{Error, Result};
use crate::matrix::HMatrix;
use crate::scalar::Real;
use crate::tensor::{apply_op, matrix_rank_decomp, pullback, Decomposition, Op, OpLog, Tensor3};

pub fn decompose_333<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    if t.dims != (3, 3, 3) {
        return Err(Error::DimensionMismatch(format!(
            "decompose_333 needs shape (3, 3, 3), got {:?}",
            t.dims
        )));
    }
    let bound = 6;
    if t.max_norm() <= R::zero() {
        return finish(t, Decomposition::empty(t.dims), bound, Path::Zero);
    }
    let slices: Vec<HMatrix<R>> = (0..3).map(|i| t.horizontal_slice(i)).collect();
    if slices.iter().all(|s| s.h_rank() <= 2) {
        let mut d = Decomposition::empty(t.dims);
        for (i, s) in slices.iter().enumerate() {
            d.extend(matrix_rank_decomp(s, 1, i, t.dims));
        }
        return finish(t, d, bound, Path::Split333);
    }

    let mut log = OpLog::new();
    let mut work = t.clone();

    // Pick the best-conditioned (rank 3) slice as the anchor and shear one
    // of the others singular against it.
    let i_star = (0..3)
        .max_by(|&p, &q| {
            super::block_score(&slices[p])
                .partial_cmp(&super::block_score(&slices[q]))
                .unwrap()
        })
        .unwrap();
    let others: Vec<usize> = (0..3).filter(|&i| i != i_star).collect();
    let i_c = others[0];
    let i_other = others[1];
    let anchor_inv = slices[i_star].h_inverse()?;
    let x0 = slices[i_c].mul(&anchor_inv).left_eigen_search()?;
    let mut shear = HMatrix::identity(3);
    shear[(i_c, i_star)] = x0;
    work = apply_op(&work, Op::LeftMode1(shear), &mut log)?;

    // The sheared slice is singular: at most two outer terms cover it.
    let mut d = super::matrix_rank_decomp_capped(
        &work.horizontal_slice(i_c),
        1,
        i_c,
        work.dims,
        2,
    );
    // The other two slices form a 2x3x3 subproblem.
    let keep = vec![i_star.min(i_other), i_star.max(i_other)];
    let sub = take_mode1(&work, &keep);
    let inner = super::d233::decompose_233(&sub)?;
    d.extend(embed_mode1(inner.decomposition, 3, &keep));
    let pulled = pullback(&d, &log)?;
    finish(t, pulled, bound, Path::Main333)
}
