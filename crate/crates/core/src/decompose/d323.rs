//! 3x2x3 decomposition into at most four simple tensors.
//!
//! The two frontal slices are 3x3 quaternion matrices (A; B). Degenerate
//! inputs split along a singular or rank-deficient slice. The main route
//! normalizes the pair to (I; N) where N is a companion-like pattern, then
//! replaces N by a nearby diagonalizable matrix M whose difference from N
//! is a single simple tensor; the eigenbasis of M supplies the other three
//! terms.

use super::{
    embed_mode1, embed_mode3, finish, perm_real, take_mode1, take_mode3, unit_q, DecomposeOutcome,
    Path,
};
use crate::error::{Error, Result};
use crate::matrix::HMatrix;
use crate::scalar::{Quaternion, Real};
use crate::tensor::{apply_op, pullback, Decomposition, Op, OpLog, SimpleTensor, Tensor3};

pub fn decompose_323<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    if t.dims != (3, 2, 3) {
        return Err(Error::DimensionMismatch(format!(
            "decompose_323 needs shape (3, 2, 3), got {:?}",
            t.dims
        )));
    }
    let bound = 4;
    if t.max_norm() <= R::zero() {
        return finish(t, Decomposition::empty(t.dims), bound, Path::Zero);
    }
    let mut log = OpLog::new();
    let mut work = t.clone();
    let scale = R::one() + t.max_norm();
    let sing_tol = R::real(1e-8) * scale;

    // A singular frontal slice splits off a 3x2x2 subproblem.
    let score_a = super::block_score(&work.frontal_slice(0));
    let score_b = super::block_score(&work.frontal_slice(1));
    if score_a.min(score_b) <= sing_tol {
        if score_b < score_a {
            work = apply_op(&work, Op::RealMode2(perm_real(&[1, 0])), &mut log)?;
        }
        return route_singular_front(t, work, log);
    }
    // A rank-deficient thin slice splits off a single simple tensor.
    for i in 0..3 {
        if work.horizontal_slice(i).h_rank() <= 1 {
            return route_horizontal(t, work, log, i);
        }
    }
    for k in 0..3 {
        if work.lateral_slice(k).h_rank() <= 1 {
            return route_lateral(t, work, log, k);
        }
    }

    // (a) Send the leading columns of A and B to e0 and e1.
    let a = work.frontal_slice(0);
    let b = work.frontal_slice(1);
    let mut best: Option<(R, HMatrix<R>)> = None;
    for u in 0..3 {
        let m = HMatrix::from_fn(3, 3, |i, j| match j {
            0 => a[(i, 0)],
            1 => b[(i, 0)],
            _ => {
                if i == u {
                    Quaternion::one()
                } else {
                    Quaternion::zero()
                }
            }
        });
        let s = super::block_score(&m);
        if best.as_ref().map_or(true, |(bs, _)| s > *bs) {
            best = Some((s, m));
        }
    }
    let m = best.unwrap().1;
    work = apply_op(&work, Op::LeftMode1(m.h_inverse()?), &mut log)?;

    // (b) Normalize the bottom rows: A row2 -> (0, 0, 1), B row2 -> (0, 1, 0).
    let a = work.frontal_slice(0);
    let b = work.frontal_slice(1);
    let v = HMatrix::from_rows(vec![
        vec![a[(2, 1)], a[(2, 2)]],
        vec![b[(2, 1)], b[(2, 2)]],
    ]);
    if super::block_score(&v) <= sing_tol {
        // The bottom rows are dependent: the last horizontal slice has
        // rank at most 1 in its trailing block, so split there instead.
        return route_horizontal(t, work, log, 2);
    }
    let flip = HMatrix::from_rows(vec![
        vec![Quaternion::zero(), Quaternion::one()],
        vec![Quaternion::one(), Quaternion::zero()],
    ]);
    let r2 = v.h_inverse()?.mul(&flip);
    let mut r_full = HMatrix::identity(3);
    for i in 0..2 {
        for j in 0..2 {
            r_full[(i + 1, j + 1)] = r2[(i, j)];
        }
    }
    work = apply_op(&work, Op::RightMode3(r_full), &mut log)?;

    // (c) Clear A[0][1] with the leading column.
    let a = work.frontal_slice(0);
    let mut r_op = HMatrix::identity(3);
    r_op[(0, 1)] = -a[(0, 1)];
    work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;
    // (d) Row shears: clear A[1][2], then B[0][1].
    let a = work.frontal_slice(0);
    let mut e = HMatrix::identity(3);
    e[(1, 2)] = -a[(1, 2)];
    work = apply_op(&work, Op::LeftMode1(e), &mut log)?;
    let b = work.frontal_slice(1);
    let mut e = HMatrix::identity(3);
    e[(0, 2)] = -b[(0, 1)];
    work = apply_op(&work, Op::LeftMode1(e), &mut log)?;
    // (e) Clear A[0][2] with the leading column.
    let a = work.frontal_slice(0);
    let mut r_op = HMatrix::identity(3);
    r_op[(0, 2)] = -a[(0, 2)];
    work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;
    // (f) Normalize the central pivot of A.
    let a = work.frontal_slice(0);
    let p = a[(1, 1)];
    if p.norm() <= sing_tol {
        // A is singular after all: take the singular-slice route now.
        return route_singular_front(t, work, log);
    }
    let l = HMatrix::diagonal(&[Quaternion::one(), p.inv()?, Quaternion::one()]);
    work = apply_op(&work, Op::LeftMode1(l), &mut log)?;

    // Now A is the identity up to residual and B matches the pattern
    // [[0, 0, w], [x, y, z], [0, 1, 0]].
    let b = work.frontal_slice(1);
    let w = b[(0, 2)];
    if w.norm() <= sing_tol {
        // The first horizontal slice degenerates to a single direction.
        return route_horizontal(t, work, log, 0);
    }
    let (x, y, z) = (b[(1, 0)], b[(1, 1)], b[(1, 2)]);
    // (g) Replace x by x' = s (u + v i) with (u, v) proportional to
    // (Im_i(w), Re(w)); then M = [[0,0,w],[x',0,0],[0,1,0]] has a complex
    // adjoint with characteristic polynomial lambda^6 + s^2 |w|^2, whose
    // six roots are distinct, so M is diagonalizable.
    let (aw, bw) = (w.w, w.x);
    let hyp = (aw * aw + bw * bw).sqrt();
    let (u, v) = if hyp > R::real(1e-12) * scale {
        (bw / hyp, aw / hyp)
    } else {
        let r = R::real(std::f64::consts::FRAC_1_SQRT_2);
        (r, r)
    };
    let mut last_err = Error::ConvergenceFailure;
    for s in [1.0f64, 2.0, 0.5, 4.0] {
        let xp = Quaternion::new(u, v, R::zero(), R::zero()).scale(R::real(s));
        let mut m = HMatrix::zeros(3, 3);
        m[(0, 2)] = w;
        m[(1, 0)] = xp;
        m[(2, 1)] = Quaternion::one();
        let (pm, lambdas) = match m.diagonalize() {
            Ok(r) => r,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        let pm_inv = match pm.h_inverse() {
            Ok(r) => r,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        // One simple tensor absorbs the difference between B and M.
        let mut d = Decomposition::empty(t.dims);
        d.push(SimpleTensor::new(
            unit_q(3, 1),
            vec![Quaternion::zero(), Quaternion::one()],
            vec![x - xp, y, z],
        ));
        for idx in 0..3 {
            let lam = Quaternion::from_complex(lambdas[idx]);
            d.push(SimpleTensor::new(
                pm.col(idx),
                vec![Quaternion::one(), lam],
                pm_inv.row(idx),
            ));
        }
        let pulled = pullback(&d, &log)?;
        return finish(t, pulled, bound, Path::Main323);
    }
    Err(last_err)
}

/// Leading frontal slice singular: push its null direction into the last
/// mode-3 column, split off that column of the other slice, and decompose
/// the remaining 3x2x2 block.
fn route_singular_front<R: Real>(
    orig: &Tensor3<R>,
    mut work: Tensor3<R>,
    mut log: OpLog<R>,
) -> Result<DecomposeOutcome<R>> {
    let a = work.frontal_slice(0);
    let v = a.null_vector()?;
    let k_star = (0..3)
        .max_by(|&p, &q| v[p].norm().partial_cmp(&v[q].norm()).unwrap())
        .unwrap();
    let r_op = HMatrix::from_fn(3, 3, |i, j| {
        if j == k_star {
            v[i]
        } else if i == j {
            Quaternion::one()
        } else {
            Quaternion::zero()
        }
    });
    work = apply_op(&work, Op::RightMode3(r_op), &mut log)?;
    let keep: Vec<usize> = (0..3).filter(|&k| k != k_star).collect();
    let b = work.frontal_slice(1);
    let mut d = Decomposition::empty(orig.dims);
    d.push(SimpleTensor::new(
        (0..3).map(|i| b[(i, k_star)]).collect(),
        vec![Quaternion::zero(), Quaternion::one()],
        unit_q(3, k_star),
    ));
    let sub = take_mode3(&work, &keep);
    let inner = super::d223::decompose_223(&sub)?;
    d.extend(embed_mode3(inner.decomposition, 3, &keep));
    let pulled = pullback(&d, &log)?;
    finish(orig, pulled, 4, Path::Singular323)
}

/// A 2x3 horizontal slice of rank at most 1 splits off one simple tensor.
fn route_horizontal<R: Real>(
    orig: &Tensor3<R>,
    work: Tensor3<R>,
    log: OpLog<R>,
    i0: usize,
) -> Result<DecomposeOutcome<R>> {
    let keep: Vec<usize> = (0..3).filter(|&i| i != i0).collect();
    let mut d = super::matrix_rank_decomp_capped(&work.horizontal_slice(i0), 1, i0, work.dims, 1);
    let sub = take_mode1(&work, &keep);
    let inner = super::d223::decompose_223(&sub)?;
    d.extend(embed_mode1(inner.decomposition, 3, &keep));
    let pulled = pullback(&d, &log)?;
    finish(orig, pulled, 4, Path::SliceSplit323)
}

/// A 3x2 lateral slice of rank at most 1 splits off one simple tensor.
fn route_lateral<R: Real>(
    orig: &Tensor3<R>,
    work: Tensor3<R>,
    log: OpLog<R>,
    k0: usize,
) -> Result<DecomposeOutcome<R>> {
    let keep: Vec<usize> = (0..3).filter(|&k| k != k0).collect();
    let mut d = super::matrix_rank_decomp_capped(&work.lateral_slice(k0), 3, k0, work.dims, 1);
    let sub = take_mode3(&work, &keep);
    let inner = super::d223::decompose_223(&sub)?;
    d.extend(embed_mode3(inner.decomposition, 3, &keep));
    let pulled = pullback(&d, &log)?;
    finish(orig, pulled, 4, Path::SliceSplit323)
}
