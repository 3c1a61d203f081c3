//! Independent verification and evidence generation: residual checking,
//! an alternating least-squares cross-check, seeded random tensors, and
//! deterministic batch suites.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decompose::{bound_for, dispatch};
use crate::error::{Error, Result};
use crate::scalar::{left_mul_matrix, right_mul_matrix, Quaternion, Real};
use crate::tensor::{Decomposition, SimpleTensor, Tensor3};
use crate::util::{case_seed, solve_real};

/// Scale-free residual of a claimed decomposition together with a pass
/// flag at the given tolerance.
pub fn verify<R: Real>(t: &Tensor3<R>, d: &Decomposition<R>, tol: R) -> Result<(R, bool)> {
    if d.dims() != t.dims {
        return Err(Error::DimensionMismatch(format!(
            "tensor is {:?} but decomposition is {:?}",
            t.dims,
            d.dims()
        )));
    }
    let residual = t.sub(&d.densify_sum()).max_norm() / (R::one() + t.max_norm());
    Ok((residual, residual <= tol))
}

/// Entry distribution for seeded random tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dist {
    /// all four components uniform in [-1, 1]
    Uniform,
    /// unit-norm quaternions
    Unit,
    /// complex entries only (zero j, k components)
    Complex,
    /// real entries only
    Real,
}

impl FromStr for Dist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Dist::Uniform),
            "unit" => Ok(Dist::Unit),
            "complex" => Ok(Dist::Complex),
            "real" => Ok(Dist::Real),
            other => Err(Error::PreconditionViolated(format!(
                "unknown distribution {other:?} (expected uniform|unit|complex|real)"
            ))),
        }
    }
}

/// Deterministic random tensor for a fixed (shape, seed, dist) triple.
pub fn random_tensor<R: Real>(
    dims: (usize, usize, usize),
    seed: u64,
    dist: Dist,
) -> Tensor3<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tensor3::zeros(dims);
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            for k in 0..dims.2 {
                t[(i, j, k)] = random_quaternion(&mut rng, dist);
            }
        }
    }
    t
}

fn random_quaternion<R: Real>(rng: &mut ChaCha8Rng, dist: Dist) -> Quaternion<R> {
    let mut draw = |on: bool| {
        if on {
            R::real(rng.gen_range(-1.0f64..1.0))
        } else {
            R::zero()
        }
    };
    match dist {
        Dist::Uniform => {
            Quaternion::new(draw(true), draw(true), draw(true), draw(true))
        }
        Dist::Complex => Quaternion::new(draw(true), draw(true), R::zero(), R::zero()),
        Dist::Real => Quaternion::new(draw(true), R::zero(), R::zero(), R::zero()),
        Dist::Unit => loop {
            let q = Quaternion::new(draw(true), draw(true), draw(true), draw(true));
            let n = q.norm();
            if n > R::real(1e-3) {
                break q.scale(n.recip());
            }
        },
    }
}

/// Result of an alternating least-squares fit.
#[derive(Debug, Clone)]
pub struct AlsFit<R: Real = f64> {
    /// Best relative Frobenius residual reached.
    pub residual: R,
    /// The factors that achieved it.
    pub decomposition: Decomposition<R>,
}

fn fro_norm<R: Real>(t: &Tensor3<R>) -> R {
    let mut s = R::zero();
    for i in 0..t.dims.0 {
        for j in 0..t.dims.1 {
            for k in 0..t.dims.2 {
                s = s + t[(i, j, k)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn relative_fro<R: Real>(t: &Tensor3<R>, d: &Decomposition<R>) -> R {
    fro_norm(&t.sub(&d.densify_sum())) / (R::one() + fro_norm(t))
}

/// Alternating least-squares fit of `r` simple tensors, solved blockwise
/// in the real embedding with a tiny ridge. Any block update that fails to
/// improve the objective is reverted, so the objective is monotone
/// nonincreasing across iterations. Numerical evidence only: the certified
/// results come from the constructive decompositions.
pub fn als_fit<R: Real>(t: &Tensor3<R>, r: usize, iters: usize, seed: u64) -> Result<AlsFit<R>> {
    if r == 0 {
        return Err(Error::PreconditionViolated("need at least one term".into()));
    }
    let (n1, n2, n3) = t.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rand_vec = |len: usize| -> Vec<Quaternion<R>> {
        (0..len).map(|_| random_quaternion(&mut rng, Dist::Uniform)).collect()
    };
    let mut d = Decomposition::empty(t.dims);
    for _ in 0..r {
        d.push(SimpleTensor::new(rand_vec(n1), rand_vec(n2), rand_vec(n3)));
    }
    let mut best = relative_fro(t, &d);

    // One block update: for every index along the chosen mode, solve the
    // r-quaternion least-squares problem in the 4r-dimensional embedding.
    let update = |d: &mut Decomposition<R>, t: &Tensor3<R>, mode: usize| -> Result<()> {
        let r = d.terms.len();
        let dim = 4 * r;
        let (n1, n2, n3) = t.dims;
        let slots = [n1, n2, n3][mode];
        for s in 0..slots {
            // Normal equations G x = h over all entries touching slot s.
            let mut g = vec![vec![R::zero(); dim]; dim];
            let mut h = vec![R::zero(); dim];
            let mut blocks: Vec<[[R; 4]; 4]> = vec![[[R::zero(); 4]; 4]; r];
            let others: Vec<(usize, usize)> = match mode {
                0 => (0..n2).flat_map(|j| (0..n3).map(move |k| (j, k))).collect(),
                1 => (0..n1).flat_map(|i| (0..n3).map(move |k| (i, k))).collect(),
                _ => (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).collect(),
            };
            for &(p, q) in &others {
                let target = match mode {
                    0 => t[(s, p, q)],
                    1 => t[(p, s, q)],
                    _ => t[(p, q, s)],
                };
                for (l, term) in d.terms.iter().enumerate() {
                    // entry = a * b * c with the unknown in the middle of
                    // the ordered product for mode 1, on the left for
                    // mode 0, on the right for mode 2.
                    blocks[l] = match mode {
                        0 => right_mul_matrix(term.b[p] * term.c[q]),
                        1 => {
                            let la = left_mul_matrix(term.a[p]);
                            let rc = right_mul_matrix(term.c[q]);
                            let mut m = [[R::zero(); 4]; 4];
                            for x in 0..4 {
                                for y in 0..4 {
                                    let mut acc = R::zero();
                                    for z in 0..4 {
                                        acc = acc + la[x][z] * rc[z][y];
                                    }
                                    m[x][y] = acc;
                                }
                            }
                            m
                        }
                        _ => left_mul_matrix(term.a[p] * term.b[q]),
                    };
                }
                let target_c = target.components();
                for l in 0..r {
                    for m in 0..r {
                        for x in 0..4 {
                            for y in 0..4 {
                                let mut acc = R::zero();
                                for row in 0..4 {
                                    acc = acc + blocks[l][row][x] * blocks[m][row][y];
                                }
                                g[4 * l + x][4 * m + y] = g[4 * l + x][4 * m + y] + acc;
                            }
                        }
                    }
                    for x in 0..4 {
                        let mut acc = R::zero();
                        for row in 0..4 {
                            acc = acc + blocks[l][row][x] * target_c[row];
                        }
                        h[4 * l + x] = h[4 * l + x] + acc;
                    }
                }
            }
            for x in 0..dim {
                g[x][x] = g[x][x] + R::real(1e-12);
            }
            solve_real(&mut g, &mut h)?;
            for l in 0..r {
                let q = Quaternion::new(h[4 * l], h[4 * l + 1], h[4 * l + 2], h[4 * l + 3]);
                match mode {
                    0 => d.terms[l].a[s] = q,
                    1 => d.terms[l].b[s] = q,
                    _ => d.terms[l].c[s] = q,
                }
            }
        }
        Ok(())
    };

    for _ in 0..iters {
        for mode in 0..3 {
            let saved = d.clone();
            if update(&mut d, t, mode).is_err() {
                d = saved;
                continue;
            }
            let now = relative_fro(t, &d);
            if now <= best {
                best = now;
            } else {
                d = saved;
            }
        }
    }
    d.residual = Some(best);
    Ok(AlsFit {
        residual: best,
        decomposition: d,
    })
}

/// Aggregate report for a seeded batch of decompositions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub shape: [usize; 3],
    pub cases_run: usize,
    pub max_residual: f64,
    pub max_terms: usize,
    /// hits per proof branch, keyed by branch name
    pub branch_counts: BTreeMap<String, usize>,
    /// per-case seeds of the cases that missed the bound or tolerance
    pub failures: Vec<u64>,
}

/// Decompose `n_cases` seeded uniform tensors of the given shape and
/// aggregate residuals, term counts and branch hits. Per-case seeds derive
/// from `(master_seed, index)`, so the report is deterministic regardless
/// of execution order.
pub fn run_suite<R: Real>(
    dims: (usize, usize, usize),
    n_cases: usize,
    master_seed: u64,
    tol: R,
) -> Result<SuiteReport> {
    let bound = bound_for(dims).ok_or(Error::UnsupportedShape(dims.0, dims.1, dims.2))?;
    let mut report = SuiteReport {
        shape: [dims.0, dims.1, dims.2],
        cases_run: n_cases,
        max_residual: 0.0,
        max_terms: 0,
        branch_counts: BTreeMap::new(),
        failures: Vec::new(),
    };
    for idx in 0..n_cases as u64 {
        let seed = case_seed(master_seed, idx);
        let t: Tensor3<R> = random_tensor(dims, seed, Dist::Uniform);
        match dispatch(&t) {
            Ok(out) => {
                let (residual, ok) = verify(&t, &out.decomposition, tol)?;
                let terms = out.decomposition.terms.len();
                report.max_residual = report.max_residual.max(residual.to_f64_lossy());
                report.max_terms = report.max_terms.max(terms);
                *report
                    .branch_counts
                    .entry(format!("{:?}", out.path))
                    .or_insert(0) += 1;
                if !ok || terms > bound {
                    report.failures.push(seed);
                }
            }
            Err(_) => report.failures.push(seed),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::HMatrix;

    type Q = Quaternion<f64>;

    #[test]
    fn verify_exact_and_perturbed() {
        let term = SimpleTensor::new(
            vec![Q::one(), Q::i()],
            vec![Q::j(), Q::k()],
            vec![Q::one(), Q::from_f64s(0.5, 0.5, 0.0, 0.0)],
        );
        let mut d = Decomposition::empty((2, 2, 2));
        d.push(term);
        let t = d.densify_sum();
        let (r, ok) = verify(&t, &d, 1e-12).unwrap();
        assert_eq!(r, 0.0);
        assert!(ok);

        let mut t2 = t.clone();
        t2[(0, 0, 0)] += Q::from_f64s(1e-3, 0.0, 0.0, 0.0);
        let (_, ok) = verify(&t2, &d, 1e-6).unwrap();
        assert!(!ok);

        let bad = Decomposition::<f64>::empty((2, 2, 3));
        assert!(verify(&t, &bad, 1e-6).is_err());
    }

    #[test]
    fn verify_simple_tensor_factors() {
        // (1,4) x (1,-1,2) x (2,3) entrywise products
        let a = vec![Q::from_f64s(1.0, 0.0, 0.0, 0.0), Q::from_f64s(4.0, 0.0, 0.0, 0.0)];
        let b = vec![
            Q::from_f64s(1.0, 0.0, 0.0, 0.0),
            Q::from_f64s(-1.0, 0.0, 0.0, 0.0),
            Q::from_f64s(2.0, 0.0, 0.0, 0.0),
        ];
        let c = vec![Q::from_f64s(2.0, 0.0, 0.0, 0.0), Q::from_f64s(3.0, 0.0, 0.0, 0.0)];
        let mut d = Decomposition::empty((2, 3, 2));
        d.push(SimpleTensor::new(a, b, c));
        let t = d.densify_sum();
        assert_eq!(t[(1, 2, 1)], Q::from_f64s(24.0, 0.0, 0.0, 0.0));
        let (r, ok) = verify(&t, &d, 0.0).unwrap();
        assert_eq!(r, 0.0);
        assert!(ok);
    }

    #[test]
    fn als_recovers_simple_tensor() {
        let t = {
            let mut d = Decomposition::empty((2, 3, 2));
            d.push(SimpleTensor::new(
                vec![Q::one(), Q::i()],
                vec![Q::j(), Q::one(), Q::k()],
                vec![Q::from_f64s(0.3, 0.1, 0.0, 0.7), Q::one()],
            ));
            d.densify_sum()
        };
        let fit = als_fit(&t, 1, 50, 1).unwrap();
        assert!(fit.residual <= 1e-6, "residual {}", fit.residual);
    }

    #[test]
    fn als_is_monotone_and_bounded_away_for_rank3_witness() {
        let a = HMatrix::identity(2);
        let b = HMatrix::from_rows(vec![
            vec![Q::zero(), Q::one()],
            vec![Q::zero(), Q::zero()],
        ]);
        let t = Tensor3::from_frontal_slices(&[a, b]);
        // (2,2,2) built from frontal slices has dims (2,2,2)
        let mut best_overall = f64::INFINITY;
        for seed in 0..32u64 {
            let fit = als_fit(&t, 2, 40, seed).unwrap();
            best_overall = best_overall.min(fit.residual);
        }
        assert!(
            best_overall > 1e-3,
            "rank-2 fit of a rank-3 tensor got residual {best_overall}"
        );
    }

    #[test]
    fn als_monotone_iterates() {
        let t: Tensor3<f64> = random_tensor((2, 3, 2), 99, Dist::Uniform);
        let mut last = f64::INFINITY;
        for iters in [1usize, 2, 4, 8, 16] {
            let fit = als_fit(&t, 3, iters, 5).unwrap();
            assert!(fit.residual <= last + 1e-12);
            last = fit.residual;
        }
    }

    #[test]
    fn als_reaches_six_term_fit_on_random_333() {
        let t: Tensor3<f64> = random_tensor((3, 3, 3), 7, Dist::Uniform);
        let mut best = f64::INFINITY;
        for seed in 0..4u64 {
            let fit = als_fit(&t, 6, 120, seed).unwrap();
            best = best.min(fit.residual);
            if best <= 1e-5 {
                break;
            }
        }
        assert!(best <= 1e-5, "six-term fit stalled at {best}");
    }

    #[test]
    fn random_tensor_determinism_and_dists() {
        let a: Tensor3<f64> = random_tensor((2, 3, 3), 11, Dist::Uniform);
        let b: Tensor3<f64> = random_tensor((2, 3, 3), 11, Dist::Uniform);
        assert_eq!(a, b);
        let all = |t: &Tensor3<f64>, f: &dyn Fn(Q) -> bool| {
            (0..t.dims.0).all(|i| {
                (0..t.dims.1).all(|j| (0..t.dims.2).all(|k| f(t[(i, j, k)])))
            })
        };
        let r: Tensor3<f64> = random_tensor((2, 2, 2), 3, Dist::Real);
        assert!(all(&r, &|q| q.x == 0.0 && q.y == 0.0 && q.z == 0.0));
        let c: Tensor3<f64> = random_tensor((2, 2, 2), 3, Dist::Complex);
        assert!(all(&c, &|q| q.y == 0.0 && q.z == 0.0));
        let u: Tensor3<f64> = random_tensor((2, 2, 2), 3, Dist::Unit);
        assert!(all(&u, &|q| (q.norm() - 1.0).abs() <= 1e-12));
        assert_eq!("unit".parse::<Dist>().unwrap(), Dist::Unit);
        assert!("banana".parse::<Dist>().is_err());
    }

    #[test]
    fn suite_small_shapes() {
        let rep = run_suite::<f64>((2, 2, 2), 100, 7, 1e-7).unwrap();
        assert!(rep.failures.is_empty(), "failures: {:?}", rep.failures);
        assert!(rep.max_terms <= 3);
        let rep = run_suite::<f64>((3, 3, 3), 100, 7, 1e-7).unwrap();
        assert!(rep.failures.is_empty(), "failures: {:?}", rep.failures);
        assert!(rep.max_terms <= 6);
        let empty = run_suite::<f64>((2, 2, 2), 0, 7, 1e-7).unwrap();
        assert_eq!(empty.cases_run, 0);
        assert!(empty.failures.is_empty());
        assert_eq!(empty.max_terms, 0);
    }

    #[test]
    fn suite_reports_are_reproducible() {
        let a = run_suite::<f64>((2, 3, 2), 50, 123, 1e-7).unwrap();
        let b = run_suite::<f64>((2, 3, 2), 50, 123, 1e-7).unwrap();
        assert_eq!(a, b);
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }
}
