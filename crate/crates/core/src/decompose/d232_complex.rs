//! Closed-form three-term decomposition of a 2x3x2 tensor whose entries are
//! all complex (no j or k components).
//!
//! With the three frontal slices written as 2x2 blocks
//! `X = [[X1, X2], [X3, X4]]` for `X` in `{A, B, C}`, four degree-3 scalars
//! govern the construction. They satisfy, for every slice `X`, the identity
//! `X2*T1 - X1*S1 + X4*T2 - X3*S2 = 0`, and whenever `S1` and `S2` are both
//! nonzero three simple tensors reproduce the input exactly.

use super::{finish, DecomposeOutcome, Path};
use crate::error::{Error, Result};
use crate::scalar::{Quaternion, Real};
use crate::tensor::{Decomposition, SimpleTensor, Tensor3};
use num_complex::Complex;

/// The four degree-3 scalars of the complex 2x3x2 construction.
#[derive(Debug, Clone, Copy)]
pub struct CrossScalars<R: Real = f64> {
    pub s1: Complex<R>,
    pub s2: Complex<R>,
    pub t1: Complex<R>,
    pub t2: Complex<R>,
}

/// Determinant of a 3x3 complex matrix given by rows.
pub fn det3_complex<R: Real>(m: &[[Complex<R>; 3]; 3]) -> Complex<R> {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Frontal slices of a complex 2x3x2 tensor as 2x2 complex blocks,
/// indexed `blocks[j] = [X1, X2, X3, X4]` in row-major order.
fn complex_blocks<R: Real>(t: &Tensor3<R>) -> Result<[[Complex<R>; 4]; 3]> {
    let scale = R::one() + t.max_norm();
    let tol = R::real(1e-10) * scale;
    let mut blocks = [[Complex::new(R::zero(), R::zero()); 4]; 3];
    for (j, block) in blocks.iter_mut().enumerate() {
        for i in 0..2 {
            for k in 0..2 {
                let q = t[(i, j, k)];
                if !q.is_complex_within(tol) {
                    return Err(Error::PreconditionViolated(
                        "entries must be complex (zero j and k components)".into(),
                    ));
                }
                block[2 * i + k] = q.complex_part();
            }
        }
    }
    Ok(blocks)
}

/// The scalars `S1, S2, T1, T2` of a complex 2x3x2 tensor.
pub fn cross_scalars<R: Real>(t: &Tensor3<R>) -> Result<CrossScalars<R>> {
    if t.dims != (2, 3, 2) {
        return Err(Error::DimensionMismatch(format!(
            "cross_scalars needs shape (2, 3, 2), got {:?}",
            t.dims
        )));
    }
    let b = complex_blocks(t)?;
    let (a, bb, c) = (b[0], b[1], b[2]);
    // S1 drops column 1 of [X1 X2 X3 X4], S2 drops column 3, T1 drops
    // column 2, T2 drops column 4; each is the determinant of the
    // remaining 3x3 block with rows A, B, C.
    let pick = |cols: [usize; 3]| {
        det3_complex(&[
            [a[cols[0]], a[cols[1]], a[cols[2]]],
            [bb[cols[0]], bb[cols[1]], bb[cols[2]]],
            [c[cols[0]], c[cols[1]], c[cols[2]]],
        ])
    };
    Ok(CrossScalars {
        s1: pick([1, 2, 3]),
        s2: pick([0, 1, 3]),
        t1: pick([0, 2, 3]),
        t2: pick([0, 1, 2]),
    })
}

pub fn decompose_232_complex<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    if t.dims != (2, 3, 2) {
        return Err(Error::DimensionMismatch(format!(
            "decompose_232_complex needs shape (2, 3, 2), got {:?}",
            t.dims
        )));
    }
    let bound = 3;
    if t.max_norm() <= R::zero() {
        return finish(t, Decomposition::empty(t.dims), bound, Path::Zero);
    }
    let blocks = complex_blocks(t)?;
    let cs = cross_scalars(t)?;
    let scale = R::one() + t.max_norm();
    let floor = R::real(1e-12) * scale * scale * scale;
    if cs.s1.norm() <= floor || cs.s2.norm() <= floor {
        return Err(Error::PreconditionViolated(
            "cross scalars S1, S2 must be nonzero".into(),
        ));
    }

    let qc = Quaternion::from_complex;
    let one = Complex::new(R::one(), R::zero());
    let s1_inv = one / cs.s1;
    let s2_inv = one / cs.s2;
    let x = |j: usize, idx: usize| blocks[j][idx - 1];

    let mut d = Decomposition::empty(t.dims);
    d.push(SimpleTensor::new(
        vec![Quaternion::one(), Quaternion::zero()],
        vec![qc(x(0, 2)), qc(x(1, 2)), qc(x(2, 2))],
        vec![qc(cs.t1 * s1_inv), Quaternion::one()],
    ));
    d.push(SimpleTensor::new(
        vec![Quaternion::zero(), Quaternion::one()],
        vec![qc(x(0, 4)), qc(x(1, 4)), qc(x(2, 4))],
        vec![qc(cs.t2 * s2_inv), Quaternion::one()],
    ));
    d.push(SimpleTensor::new(
        vec![qc(s1_inv), qc(-s2_inv)],
        vec![
            qc(x(0, 1) * cs.s1 - x(0, 2) * cs.t1),
            qc(x(1, 1) * cs.s1 - x(1, 2) * cs.t1),
            qc(x(2, 1) * cs.s1 - x(2, 2) * cs.t1),
        ],
        vec![Quaternion::one(), Quaternion::zero()],
    ));
    finish(t, d, bound, Path::Complex232)
}
