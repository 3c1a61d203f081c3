//! 2x3x2 decomposition into at most three simple tensors.
//!
//! The three frontal slices are 2x2 quaternion matrices (A; B; C). After a
//! complex shortcut, the algorithm normalizes the best-conditioned slice to
//! the identity and then splits on the spectral structure of the others:
//! a singular slice is reduced to a single matrix unit, a diagonalizable
//! slice yields the closed three-term form, and the fully defective case is
//! resolved by Schur triangularization followed by a quaternion quadratic
//! conjugation that restores diagonalizability.

use super::{
    decompose_232_complex, embed_mode2, finish, perm_matrix, perm_real, take_mode2, unit_q,
    DecomposeOutcome, Path,
};
use crate::error::{Error, Result};
use crate::matrix::{vec_norm, HMatrix};
use crate::scalar::{solve_quadratic, Quaternion, Real};
use crate::tensor::{
    apply_op, pullback, Decomposition, Op, OpLog, SimpleTensor, Tensor3,
};

const MAX_DEPTH: usize = 4;

pub fn decompose_232<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    if t.dims != (2, 3, 2) {
        return Err(Error::DimensionMismatch(format!(
            "decompose_232 needs shape (2, 3, 2), got {:?}",
            t.dims
        )));
    }
    let bound = 3;
    if t.max_norm() <= R::zero() {
        return finish(t, Decomposition::empty(t.dims), bound, Path::Zero);
    }
    let scale = R::one() + t.max_norm();

    // Purely complex input: the closed-form construction applies directly.
    let complex_cut = R::real(1e-10) * scale;
    let all_complex = (0..2).all(|i| {
        (0..3).all(|j| (0..2).all(|k| t[(i, j, k)].is_complex_within(complex_cut)))
    });
    if all_complex {
        if let Ok(out) = decompose_232_complex(t) {
            return Ok(out);
        }
        // fall through to the general quaternion route
    }

    let mut log = OpLog::new();
    let mut work = t.clone();

    let scores: Vec<R> = (0..3)
        .map(|j| super::block_score(&work.frontal_slice(j)))
        .collect();
    let sing_tol = R::real(1e-8) * scale;
    let (j_min, &s_min) = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if s_min <= sing_tol {
        if j_min != 0 {
            let mut perm = vec![j_min];
            perm.extend((0..3).filter(|&x| x != j_min));
            work = apply_op(&work, Op::RealMode2(perm_real(&perm)), &mut log)?;
        }
        return branch_singular(t, work, log);
    }
    // Normalize the best-conditioned slice to the identity.
    let (j_max, _) = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if j_max != 0 {
        let mut perm = vec![j_max];
        perm.extend((0..3).filter(|&x| x != j_max));
        work = apply_op(&work, Op::RealMode2(perm_real(&perm)), &mut log)?;
    }
    let a0_inv = work.frontal_slice(0).h_inverse()?;
    work = apply_op(&work, Op::LeftMode1(a0_inv), &mut log)?;
    branch_spectral(t, work, log, 0)
}

/// The leading frontal slice is singular. Reduce it to a matrix unit (or
/// drop it entirely) and decompose what remains in closed form.
fn branch_singular<R: Real>(
    orig: &Tensor3<R>,
    mut work: Tensor3<R>,
    mut log: OpLog<R>,
) -> Result<DecomposeOutcome<R>> {
    let bound = 3;
    let scale = R::one() + work.max_norm();
    let a = work.frontal_slice(0);
    if a.max_norm() <= R::real(1e-12) * scale {
        // Leading slice vanished: a 2x2x2 subtensor remains.
        let sub = take_mode2(&work, &[1, 2]);
        let inner = super::d222::decompose_222(&sub)?;
        let embedded = embed_mode2(inner.decomposition, 3, &[1, 2]);
        let pulled = pullback(&embedded, &log)?;
        return finish(orig, pulled, bound, Path::Singular232);
    }
    // Rank one: A = p q^T. Send p to e0 and q^T to e0^T.
    let pairs = a.rank_outer();
    let (p, q) = pairs
        .into_iter()
        .next()
        .ok_or_else(|| Error::AlgorithmFailure("singular slice lost its pivot".into()))?;
    let complete_left = |v: &[Quaternion<R>]| -> Result<HMatrix<R>> {
        let mut best: Option<(R, HMatrix<R>)> = None;
        for m in 0..2 {
            let cand = HMatrix::from_fn(2, 2, |i, j| {
                if j == 0 {
                    v[i]
                } else if i == m {
                    Quaternion::one()
                } else {
                    Quaternion::zero()
                }
            });
            let s = super::block_score(&cand);
            if best.as_ref().map_or(true, |(bs, _)| s > *bs) {
                best = Some((s, cand));
            }
        }
        Ok(best.unwrap().1)
    };
    let l = complete_left(&p)?.h_inverse()?;
    work = apply_op(&work, Op::LeftMode1(l), &mut log)?;
    let complete_top = |v: &[Quaternion<R>]| -> HMatrix<R> {
        let mut best: Option<(R, HMatrix<R>)> = None;
        for m in 0..2 {
            let cand = HMatrix::from_fn(2, 2, |i, j| {
                if i == 0 {
                    v[j]
                } else if j == m {
                    Quaternion::one()
                } else {
                    Quaternion::zero()
                }
            });
            let s = super::block_score(&cand);
            if best.as_ref().map_or(true, |(bs, _)| s > *bs) {
                best = Some((s, cand));
            }
        }
        best.unwrap().1
    };
    work = apply_op(
        &work,
        Op::RightMode3(complete_top(&q).h_inverse()?),
        &mut log,
    )?;

    // Now the leading slice is the matrix unit E11.
    let s0 = work.frontal_slice(0);
    let b = work.frontal_slice(1);
    let c = work.frontal_slice(2);
    let zero_tol = R::real(1e-8) * (R::one() + work.max_norm());
    let b22 = b[(1, 1)];
    let c22 = c[(1, 1)];
    if b22.norm() <= zero_tol && c22.norm() <= zero_tol {
        // Everything at the second mode-3 index lives in the first row.
        let mut d = super::matrix_rank_decomp_capped(&work.lateral_slice(0), 3, 0, work.dims, 2);
        d.push(SimpleTensor::new(
            unit_q(2, 0),
            vec![s0[(0, 1)], b[(0, 1)], c[(0, 1)]],
            unit_q(2, 1),
        ));
        let pulled = pullback(&d, &log)?;
        return finish(orig, pulled, bound, Path::Tubes232);
    }
    if b22.norm() <= zero_tol || c22.norm() <= zero_tol {
        // Make both corner pivots nonzero by a real slice addition.
        let f = if b22.norm() <= zero_tol {
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
    let s0 = work.frontal_slice(0);
    let b = work.frontal_slice(1);
    let c = work.frontal_slice(2);
    let b22_inv = b[(1, 1)].inv()?;
    let c22_inv = c[(1, 1)].inv()?;
    let one = Quaternion::one();
    let zero = Quaternion::zero();
    let mut d = Decomposition::empty(orig.dims);
    d.push(SimpleTensor::new(
        vec![b[(0, 1)] * b22_inv, one],
        vec![zero, one, zero],
        vec![b[(1, 0)], b[(1, 1)]],
    ));
    d.push(SimpleTensor::new(
        vec![c[(0, 1)] * c22_inv, one],
        vec![zero, zero, one],
        vec![c[(1, 0)], c[(1, 1)]],
    ));
    d.push(SimpleTensor::new(
        vec![one, zero],
        vec![
            s0[(0, 0)],
            b[(0, 0)] - b[(0, 1)] * b22_inv * b[(1, 0)],
            c[(0, 0)] - c[(0, 1)] * c22_inv * c[(1, 0)],
        ],
        vec![one, zero],
    ));
    let pulled = pullback(&d, &log)?;
    finish(orig, pulled, bound, Path::Singular232)
}

/// Leading slice is the identity; split on the spectral structure of the
/// second and third slices.
fn branch_spectral<R: Real>(
    orig: &Tensor3<R>,
    work: Tensor3<R>,
    log: OpLog<R>,
    depth: usize,
) -> Result<DecomposeOutcome<R>> {
    if depth > MAX_DEPTH {
        return Err(Error::AlgorithmFailure(
            "2x3x2 branch recursion exceeded its depth budget".into(),
        ));
    }
    if work.frontal_slice(1).diagonalize().is_ok() {
        return branch_diagonalizable(orig, work, log);
    }
    if work.frontal_slice(2).diagonalize().is_ok() {
        let mut log = log;
        let swapped = apply_op(&work, Op::RealMode2(perm_real(&[0, 2, 1])), &mut log)?;
        return branch_diagonalizable(orig, swapped, log);
    }
    branch_defective(orig, work, log, depth)
}

/// Second slice diagonalizes: conjugate and read off the three-term form.
fn branch_diagonalizable<R: Real>(
    orig: &Tensor3<R>,
    mut work: Tensor3<R>,
    mut log: OpLog<R>,
) -> Result<DecomposeOutcome<R>> {
    let (p, _) = work.frontal_slice(1).diagonalize()?;
    let p_inv = p.h_inverse()?;
    work = apply_op(&work, Op::LeftMode1(p_inv), &mut log)?;
    work = apply_op(&work, Op::RightMode3(p), &mut log)?;
    let s1 = work.frontal_slice(1);
    let s2 = work.frontal_slice(2);
    let (b11, b22) = (s1[(0, 0)], s1[(1, 1)]);
    let (c11, c12, c21, c22) = (s2[(0, 0)], s2[(0, 1)], s2[(1, 0)], s2[(1, 1)]);
    let one = Quaternion::one();
    let zero = Quaternion::zero();
    let mut d = Decomposition::empty(orig.dims);
    d.push(SimpleTensor::new(
        vec![one, c21],
        vec![zero, zero, one],
        vec![one, c12],
    ));
    d.push(SimpleTensor::new(
        vec![one, zero],
        vec![one, b11, c11 - one],
        vec![one, zero],
    ));
    d.push(SimpleTensor::new(
        vec![zero, one],
        vec![one, b22, c22 - c21 * c12],
        vec![zero, one],
    ));
    let pulled = pullback(&d, &log)?;
    finish(orig, pulled, 3, Path::Diagonal232)
}

/// Neither remaining slice diagonalizes. Triangularize the second slice,
/// normalize its Jordan structure to [[i, 0], [1, i]], and then either read
/// a triangular split or apply a quadratic conjugation that makes a real
/// combination of the slices diagonalizable.
fn branch_defective<R: Real>(
    orig: &Tensor3<R>,
    mut work: Tensor3<R>,
    mut log: OpLog<R>,
    depth: usize,
) -> Result<DecomposeOutcome<R>> {
    let scale = R::one() + work.max_norm();
    let b = work.frontal_slice(1);
    let (u, _t) = b.schur_triangularize()?;
    // Flip to lower-triangular form so the coupling sits below the diagonal.
    let u2 = u.mul(&perm_matrix(&[1, 0]));
    work = apply_op(&work, Op::LeftMode1(u2.conj_transpose()), &mut log)?;
    work = apply_op(&work, Op::RightMode3(u2), &mut log)?;
    let s1 = work.frontal_slice(1);
    let (d1, d2) = (s1[(0, 0)], s1[(1, 1)]);
    if (d1 - d2).norm() > R::real(1e-4) * scale {
        return Err(Error::AlgorithmFailure(
            "non-diagonalizable slice has distinct triangular diagonal".into(),
        ));
    }
    // Remove the shared real part by a real slice operation.
    let r = (d1.re() + d2.re()) * R::real(0.5);
    if r != R::zero() {
        let f = vec![
            vec![R::one(), R::zero(), R::zero()],
            vec![-r, R::one(), R::zero()],
            vec![R::zero(), R::zero(), R::one()],
        ];
        work = apply_op(&work, Op::RealMode2(f), &mut log)?;
    }
    let s1 = work.frontal_slice(1);
    let a_im = (s1[(0, 0)].x + s1[(1, 1)].x) * R::real(0.5);
    if a_im.abs() <= R::real(1e-8) * scale {
        // The slice is nilpotent up to noise, hence singular: reroute.
        work = apply_op(&work, Op::RealMode2(perm_real(&[1, 0, 2])), &mut log)?;
        return branch_singular(orig, work, log);
    }
    let f = vec![
        vec![R::one(), R::zero(), R::zero()],
        vec![R::zero(), a_im.recip(), R::zero()],
        vec![R::zero(), R::zero(), R::one()],
    ];
    work = apply_op(&work, Op::RealMode2(f), &mut log)?;

    // Kill the j/k components of the coupling by conjugating with
    // G = [[1, 0], [(z j - y k)/2, 1]].
    let q = work.frontal_slice(1)[(1, 0)];
    let g = Quaternion::new(R::zero(), R::zero(), q.z * R::real(0.5), -q.y * R::real(0.5));
    let gm = HMatrix::from_rows(vec![
        vec![Quaternion::one(), Quaternion::zero()],
        vec![g, Quaternion::one()],
    ]);
    let gm_inv = HMatrix::from_rows(vec![
        vec![Quaternion::one(), Quaternion::zero()],
        vec![-g, Quaternion::one()],
    ]);
    work = apply_op(&work, Op::LeftMode1(gm), &mut log)?;
    work = apply_op(&work, Op::RightMode3(gm_inv), &mut log)?;
    let c_coupling = work.frontal_slice(1)[(1, 0)];
    if c_coupling.norm() <= R::real(1e-8) * scale {
        // The slice became diagonal, so it now diagonalizes: restart.
        return branch_spectral(orig, work, log, depth + 1);
    }
    // Scale the coupling to exactly 1: conjugate by diag(1, c^{-1}).
    let d_left = HMatrix::diagonal(&[Quaternion::one(), c_coupling.inv()?]);
    let d_right = HMatrix::diagonal(&[Quaternion::one(), c_coupling]);
    work = apply_op(&work, Op::LeftMode1(d_left), &mut log)?;
    work = apply_op(&work, Op::RightMode3(d_right), &mut log)?;

    // The second slice is now [[i, 0], [1, i']]. Turn to the third slice.
    let s2 = work.frontal_slice(2);
    if s2.diagonalize().is_ok() {
        let swapped = apply_op(&work, Op::RealMode2(perm_real(&[0, 2, 1])), &mut log)?;
        return branch_diagonalizable(orig, swapped, log);
    }
    let pairs = s2.right_eigen_pairs()?;
    let (v0, lambda) = pairs
        .into_iter()
        .next()
        .ok_or(Error::ConvergenceFailure)?;
    if lambda.im.abs() <= R::real(1e-8) * scale {
        // Real eigenvalue: subtracting it leaves a singular slice.
        let f = vec![
            vec![R::one(), R::zero(), R::zero()],
            vec![R::zero(), R::one(), R::zero()],
            vec![-lambda.re, R::zero(), R::one()],
        ];
        work = apply_op(&work, Op::RealMode2(f), &mut log)?;
        work = apply_op(&work, Op::RealMode2(perm_real(&[2, 1, 0])), &mut log)?;
        return branch_singular(orig, work, log);
    }
    // Normalize the eigenvalue of the third slice to i.
    let f = vec![
        vec![R::one(), R::zero(), R::zero()],
        vec![R::zero(), R::one(), R::zero()],
        vec![-lambda.re / lambda.im, R::zero(), lambda.im.recip()],
    ];
    work = apply_op(&work, Op::RealMode2(f), &mut log)?;
    let s2 = work.frontal_slice(2);
    let _ = v0;
    let pairs = s2.right_eigen_pairs()?;
    let (v, lam) = pairs
        .into_iter()
        .min_by(|a, b| {
            let da = (a.1.re * a.1.re + (a.1.im - R::one()) * (a.1.im - R::one())).sqrt();
            let db = (b.1.re * b.1.re + (b.1.im - R::one()) * (b.1.im - R::one())).sqrt();
            da.partial_cmp(&db).unwrap()
        })
        .ok_or(Error::ConvergenceFailure)?;
    let _ = lam;
    let (va, vc) = (v[0], v[1]);
    if va.norm() <= R::real(1e-6) * vec_norm(&v) {
        // The eigenvector is e1, so the third slice is lower triangular and
        // so are the other two: split off the triangular tail.
        let s0 = work.frontal_slice(0);
        let s1 = work.frontal_slice(1);
        let s2 = work.frontal_slice(2);
        let mut d = super::matrix_rank_decomp_capped(&work.lateral_slice(0), 3, 0, work.dims, 2);
        d.push(SimpleTensor::new(
            unit_q(2, 1),
            vec![s0[(1, 1)], s1[(1, 1)], s2[(1, 1)]],
            unit_q(2, 1),
        ));
        let pulled = pullback(&d, &log)?;
        return finish(orig, pulled, 3, Path::Schur232);
    }
    // Send the eigenvector to e0: the third slice becomes upper triangular
    // while the second keeps its lower-triangular shape (up to the coupling).
    let m = -(vc * va.inv()?);
    let p1 = HMatrix::from_rows(vec![
        vec![Quaternion::one(), Quaternion::zero()],
        vec![m, Quaternion::one()],
    ]);
    let p1_inv = HMatrix::from_rows(vec![
        vec![Quaternion::one(), Quaternion::zero()],
        vec![-m, Quaternion::one()],
    ]);
    work = apply_op(&work, Op::LeftMode1(p1), &mut log)?;
    work = apply_op(&work, Op::RightMode3(p1_inv), &mut log)?;
    let c1 = work.frontal_slice(1)[(1, 0)];
    if c1.norm() <= R::real(1e-8) * scale {
        return branch_spectral(orig, work, log, depth + 1);
    }
    let p3_left = HMatrix::diagonal(&[Quaternion::one(), c1.inv()?]);
    let p3_right = HMatrix::diagonal(&[Quaternion::one(), c1]);
    work = apply_op(&work, Op::LeftMode1(p3_left), &mut log)?;
    work = apply_op(&work, Op::RightMode3(p3_right), &mut log)?;

    // Slice patterns: s1 = [[p, 0], [1, q]], s2 = [[r, g], [0, s]].
    let s1 = work.frontal_slice(1);
    let s2 = work.frontal_slice(2);
    let (p_d, q_d) = (s1[(0, 0)], s1[(1, 1)]);
    let (r_d, g_d, s_d) = (s2[(0, 0)], s2[(0, 1)], s2[(1, 1)]);
    for t_coef in [1.0f64, -1.0, 0.5, 2.0, 0.25, 4.0, 0.125, 8.0] {
        let tr = R::real(t_coef);
        // Combined slice s1 + t s2 = [[p + t r, t g], [1, q + t s]]; the
        // conjugation [[1, -x], [0, 1]] ( . ) [[1, x], [0, 1]] zeroes its
        // upper-right entry exactly when x^2 + alpha x + x beta - gamma = 0.
        let alpha = -(p_d + r_d.scale(tr));
        let beta = q_d + s_d.scale(tr);
        let gamma = g_d.scale(tr);
        let qs = R::one() + alpha.norm().max(beta.norm()).max(gamma.norm());
        if (alpha - beta).norm() < R::real(1e-6) * qs {
            continue;
        }
        let x = match solve_quadratic(alpha, beta, gamma) {
            Ok(x) => x,
            Err(_) => continue,
        };
        if x.re().abs() <= R::real(1e-6) * qs {
            continue;
        }
        let f = vec![
            vec![R::one(), R::zero(), R::zero()],
            vec![R::zero(), R::one(), R::zero()],
            vec![R::zero(), R::one(), tr],
        ];
        work = apply_op(&work, Op::RealMode2(f), &mut log)?;
        let sh = HMatrix::from_rows(vec![
            vec![Quaternion::one(), -x],
            vec![Quaternion::zero(), Quaternion::one()],
        ]);
        let sh_inv = HMatrix::from_rows(vec![
            vec![Quaternion::one(), x],
            vec![Quaternion::zero(), Quaternion::one()],
        ]);
        work = apply_op(&work, Op::LeftMode1(sh), &mut log)?;
        work = apply_op(&work, Op::RightMode3(sh_inv), &mut log)?;
        // The third slice is now lower triangular with diagonal entries of
        // distinct real parts, hence diagonalizable.
        return branch_spectral(orig, work, log, depth + 1);
    }
    Err(Error::AlgorithmFailure(
        "no admissible real combination for the quadratic conjugation".into(),
    ))
}
