//! Five-term closed form for a structured complex 3x3x3 tensor.
//!
//! The frontal slices must match the pattern (entries complex, stars free)
//!
//! ```text
//! [[a11, 0, 1],    [[b11, 0, 0],    [[c11, c12, 0],
//!  [0, a22, 0],     [0, b22, 1],     [c21, c22, 0],
//!  [1,   0, 0]]     [0,   1, 0]]     [0,    0, 0]]
//! ```
//!
//! with `a11, b22, c22` nonzero and `R = a11 c12 + b11 c22` nonzero. Then
//! five simple tensors reproduce the input exactly.

use super::{finish, DecomposeOutcome, Path};
use crate::error::{Error, Result};
use crate::scalar::{Quaternion, Real};
use crate::tensor::{Decomposition, SimpleTensor, Tensor3};
use num_complex::Complex;

pub fn decompose_333_complex_subcase<R: Real>(t: &Tensor3<R>) -> Result<DecomposeOutcome<R>> {
    if t.dims != (3, 3, 3) {
        return Err(Error::DimensionMismatch(format!(
            "decompose_333_complex_subcase needs shape (3, 3, 3), got {:?}",
            t.dims
        )));
    }
    let scale = R::one() + t.max_norm();
    let tol = R::real(1e-10) * scale;
    // All entries must be complex.
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                if !t[(i, j, k)].is_complex_within(tol) {
                    return Err(Error::PreconditionViolated(
                        "entries must be complex (zero j and k components)".into(),
                    ));
                }
            }
        }
    }
    let e = |i: usize, j: usize, k: usize| t[(i, j, k)].complex_part();
    let zero_at = |i: usize, j: usize, k: usize| t[(i, j, k)].norm() <= tol;
    let one_at = |i: usize, j: usize, k: usize| (t[(i, j, k)] - Quaternion::one()).norm() <= tol;
    // Frontal slice patterns, (i, k) positions per slice j.
    let zeros = [
        (0, 0, 1), (1, 0, 0), (1, 0, 2), (2, 0, 1), (2, 0, 2),
        (0, 1, 1), (0, 1, 2), (1, 1, 0), (2, 1, 0), (2, 1, 2),
        (0, 2, 2), (1, 2, 2), (2, 2, 0), (2, 2, 1), (2, 2, 2),
    ];
    let ones = [(0, 0, 2), (2, 0, 0), (1, 1, 2), (2, 1, 1)];
    if !zeros.iter().all(|&(i, j, k)| zero_at(i, j, k))
        || !ones.iter().all(|&(i, j, k)| one_at(i, j, k))
    {
        return Err(Error::PreconditionViolated(
            "tensor does not match the structured slice pattern".into(),
        ));
    }
    let (a11, a22) = (e(0, 0, 0), e(1, 0, 1));
    let (b11, b22) = (e(0, 1, 0), e(1, 1, 1));
    let (c11, c12, c21, c22) = (e(0, 2, 0), e(0, 2, 1), e(1, 2, 0), e(1, 2, 1));
    let floor = R::real(1e-12) * scale;
    let r_s = a11 * c12 + b11 * c22;
    if a11.norm() <= floor || b22.norm() <= floor || c22.norm() <= floor {
        return Err(Error::PreconditionViolated(
            "pivots a11, b22, c22 must be nonzero".into(),
        ));
    }
    if r_s.norm() <= floor * scale {
        return Err(Error::PreconditionViolated(
            "coupling scalar a11*c12 + b11*c22 must be nonzero".into(),
        ));
    }
    let s_s = c11 * c22 - c12 * c21;
    let one = Complex::new(R::one(), R::zero());
    let qc = Quaternion::from_complex;
    let q0 = Quaternion::zero();
    let q1 = Quaternion::one();

    let mut d = Decomposition::empty(t.dims);
    d.push(SimpleTensor::new(
        vec![q0, q0, q1],
        vec![q1, q0, q0],
        vec![q1, qc(-a22 / b22), q0],
    ));
    d.push(SimpleTensor::new(
        vec![qc(c12 / c22), q1, q0],
        vec![q0, q0, q1],
        vec![qc(c21), qc(c22), qc(-s_s / r_s)],
    ));
    d.push(SimpleTensor::new(
        vec![q0, qc(b22), q1],
        vec![qc(a22 / b22), q1, q0],
        vec![q0, q1, q0],
    ));
    d.push(SimpleTensor::new(
        vec![q1, q0, q0],
        vec![qc(a11), qc(b11), qc(s_s / c22)],
        vec![q1, q0, qc(one / a11)],
    ));
    d.push(SimpleTensor::new(
        vec![qc(-b11 / a11), q1, q0],
        vec![q0, q1, qc(s_s / r_s)],
        vec![q0, q0, q1],
    ));
    finish(t, d, 5, Path::ComplexSubcase333)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::replay_residual;
    use crate::util::case_seed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Q = Quaternion<f64>;

    fn structured(seed: u64) -> Tensor3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = || Q::from_f64s(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0, 0.0);
        let mut t = Tensor3::zeros((3, 3, 3));
        // slice j = 0
        t[(0, 0, 0)] = c();
        t[(1, 0, 1)] = c();
        t[(0, 0, 2)] = Q::one();
        t[(2, 0, 0)] = Q::one();
        // slice j = 1
        t[(0, 1, 0)] = c();
        t[(1, 1, 1)] = c();
        t[(1, 1, 2)] = Q::one();
        t[(2, 1, 1)] = Q::one();
        // slice j = 2
        t[(0, 2, 0)] = c();
        t[(0, 2, 1)] = c();
        t[(1, 2, 0)] = c();
        t[(1, 2, 1)] = c();
        t
    }

    #[test]
    fn batch_structured_five_terms() {
        let mut decomposed = 0usize;
        for idx in 0..500u64 {
            let t = structured(case_seed(0x333c, idx));
            match decompose_333_complex_subcase(&t) {
                Ok(out) => {
                    assert_eq!(out.path, Path::ComplexSubcase333);
                    assert!(out.decomposition.terms.len() <= 5);
                    let r = replay_residual(&t, &out.decomposition);
                    assert!(r <= 1e-10, "case {idx}: residual {r}");
                    decomposed += 1;
                }
                Err(Error::PreconditionViolated(_)) => {}
                Err(e) => panic!("case {idx}: {e}"),
            }
        }
        assert!(decomposed >= 450, "only {decomposed}/500 decomposed");
    }

    #[test]
    fn rejects_pattern_violations() {
        let mut t = structured(1);
        t[(2, 2, 2)] = Q::one();
        assert!(matches!(
            decompose_333_complex_subcase(&t),
            Err(Error::PreconditionViolated(_))
        ));
        let mut t = structured(2);
        t[(0, 0, 0)] = Q::j();
        assert!(matches!(
            decompose_333_complex_subcase(&t),
            Err(Error::PreconditionViolated(_))
        ));
    }
}
