//! End-to-end acceptance gate. Each test prints one pass/fail line for its
//! criterion before asserting, so a full run yields a nine-line scorecard.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtrank_core::cmatrix::poly_eval;
use qtrank_core::decompose::d232_complex::{cross_scalars, det3_complex, decompose_232_complex};
use qtrank_core::decompose::dispatch;
use qtrank_core::oracle::{random_tensor, run_suite, verify, Dist, SuiteReport};
use qtrank_core::scalar::{quadratic_residual, solve_quadratic};
use qtrank_core::tensor::{
    apply_op, decomposition_from_pdq, densify, pdq_factor, pullback, rank_certificate_square,
    Op, OpLog, RankCertificate,
};
use qtrank_core::util::case_seed;
use qtrank_core::{Decomposition, HMatrix, Quat, SimpleTensor, Tensor3};

fn report(criterion: usize, name: &str, outcome: Result<(), String>) {
    let verdict = if outcome.is_ok() { "pass" } else { "fail" };
    println!("[acceptance] criterion {criterion} ({name}): {verdict}");
    if let Err(msg) = outcome {
        panic!("criterion {criterion} ({name}) failed: {msg}");
    }
}

fn qr(w: f64) -> Quat {
    Quat::from_f64s(w, 0.0, 0.0, 0.0)
}

fn q(w: f64, x: f64, y: f64, z: f64) -> Quat {
    Quat::from_f64s(w, x, y, z)
}

fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
    q(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> HMatrix<f64> {
    let entries: Vec<Vec<Quat>> = (0..n)
        .map(|_| (0..n).map(|_| random_quat(rng)).collect())
        .collect();
    HMatrix::from_rows(entries)
}

const SHAPES: [((usize, usize, usize), usize); 8] = [
    ((2, 2, 2), 3),
    ((2, 2, 3), 3),
    ((3, 2, 2), 3),
    ((2, 3, 2), 3),
    ((2, 3, 3), 4),
    ((3, 3, 2), 4),
    ((3, 2, 3), 4),
    ((3, 3, 3), 6),
];

#[test]
fn criterion_1_bound_table() {
    let started = Instant::now();
    let run = || -> Result<(), String> {
        for (dims, bound) in SHAPES {
            let rep = run_suite::<f64>(dims, 1000, 42, 1e-7).map_err(|e| e.to_string())?;
            if !rep.failures.is_empty() {
                return Err(format!("{dims:?}: failing seeds {:?}", rep.failures));
            }
            if rep.max_terms > bound {
                return Err(format!("{dims:?}: {} terms > bound {bound}", rep.max_terms));
            }
            if rep.max_residual > 1e-7 {
                return Err(format!("{dims:?}: residual {}", rep.max_residual));
            }
        }
        let elapsed = started.elapsed().as_secs_f64();
        if elapsed > 60.0 {
            return Err(format!("suite took {elapsed:.1} s > 60 s"));
        }
        Ok(())
    };
    report(1, "term bounds over 8000 seeded cases", run());
}

#[test]
fn criterion_2_exact_rank_witnesses() {
    let run = || -> Result<(), String> {
        // 2x2x2 witness with frontal slices I and the nilpotent shift.
        let ident = HMatrix::identity(2);
        let mut shift = HMatrix::zeros(2, 2);
        shift[(0, 1)] = Quat::one();
        let t = Tensor3::from_frontal_slices(&[ident, shift]);
        let out = dispatch(&t).map_err(|e| e.to_string())?;
        if out.decomposition.terms.len() != 3 {
            return Err(format!("2x2x2 witness: {} terms", out.decomposition.terms.len()));
        }
        if !matches!(rank_certificate_square(&t), RankCertificate::MoreThanN) {
            return Err("2x2x2 witness not certified above rank 2".into());
        }
        // 3x2x3 witness with frontal slices I and E13 + E22.
        let mut b = HMatrix::zeros(3, 3);
        b[(0, 2)] = Quat::one();
        b[(1, 1)] = Quat::one();
        let t = Tensor3::from_frontal_slices(&[HMatrix::identity(3), b]);
        let out = dispatch(&t).map_err(|e| e.to_string())?;
        if out.decomposition.terms.len() != 4 {
            return Err(format!("3x2x3 witness: {} terms", out.decomposition.terms.len()));
        }
        if !matches!(rank_certificate_square(&t), RankCertificate::MoreThanN) {
            return Err("3x2x3 witness not certified above rank 3".into());
        }
        Ok(())
    };
    report(2, "exact-rank witnesses", run());
}

#[test]
fn criterion_3_worked_example_replay() {
    let run = || -> Result<(), String> {
        let slices = |rows: [[Quat; 3]; 2], rows2: [[Quat; 3]; 2]| {
            Tensor3::from_frontal_slices(&[
                HMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()),
                HMatrix::from_rows(rows2.iter().map(|r| r.to_vec()).collect()),
            ])
        };
        let z = Quat::zero();
        let t = slices(
            [[qr(1.0), Quat::i(), z], [z, -Quat::j(), q(1.0, 1.0, 0.0, 0.0)]],
            [[z, q(1.0, 0.0, 1.0, 0.0), z], [z, q(0.0, 1.0, 0.0, 1.0), q(1.0, 0.0, 1.0, 0.0)]],
        );
        let out = dispatch(&t).map_err(|e| e.to_string())?;
        if out.decomposition.terms.len() > 3 {
            return Err(format!("{} terms", out.decomposition.terms.len()));
        }
        let (residual, ok) = verify(&t, &out.decomposition, 1e-9).map_err(|e| e.to_string())?;
        if !ok {
            return Err(format!("decomposition residual {residual}"));
        }

        // Replay the three documented column operations and check each
        // intermediate tensor entrywise exactly.
        let mut log = OpLog::new();
        let s1 = apply_op(
            &t,
            Op::RightMode3(HMatrix::diagonal(&[qr(1.0), Quat::j(), qr(1.0)])),
            &mut log,
        )
        .map_err(|e| e.to_string())?;
        let want1 = slices(
            [[qr(1.0), Quat::k(), z], [z, qr(1.0), q(1.0, 1.0, 0.0, 0.0)]],
            [[z, q(-1.0, 0.0, 1.0, 0.0), z], [z, q(0.0, -1.0, 0.0, 1.0), q(1.0, 0.0, 1.0, 0.0)]],
        );
        if s1.sub(&want1).max_norm() != 0.0 {
            return Err("first column operation mismatch".into());
        }

        let mut r2 = HMatrix::identity(3);
        r2[(0, 2)] = q(0.0, 0.0, 1.0, 1.0);
        r2[(1, 2)] = q(-1.0, -1.0, 0.0, 0.0);
        let s2 = apply_op(&s1, Op::RightMode3(r2), &mut log).map_err(|e| e.to_string())?;
        let want2 = slices(
            [[qr(1.0), Quat::k(), z], [z, qr(1.0), z]],
            [
                [z, q(-1.0, 0.0, 1.0, 0.0), q(1.0, 1.0, -1.0, 1.0)],
                [z, q(0.0, -1.0, 0.0, 1.0), q(0.0, 1.0, 0.0, -1.0)],
            ],
        );
        if s2.sub(&want2).max_norm() != 0.0 {
            return Err("second column operation mismatch".into());
        }

        let mut r3 = HMatrix::identity(3);
        r3[(1, 1)] = qr(3.0);
        r3[(2, 1)] = q(2.0, -1.0, 0.0, 1.0);
        let s3 = apply_op(&s2, Op::RightMode3(r3), &mut log).map_err(|e| e.to_string())?;
        let want3 = slices(
            [[qr(1.0), q(0.0, 0.0, 0.0, 3.0), z], [z, qr(3.0), z]],
            [
                [z, q(-1.0, 0.0, -1.0, 2.0), q(1.0, 1.0, -1.0, 1.0)],
                [z, q(2.0, -1.0, 0.0, 1.0), q(0.0, 1.0, 0.0, -1.0)],
            ],
        );
        if s3.sub(&want3).max_norm() != 0.0 {
            return Err("third column operation mismatch".into());
        }
        Ok(())
    };
    report(3, "worked 2x2x3 example and exact op replay", run());
}

#[test]
fn criterion_4_simple_tensor_golden() {
    let run = || -> Result<(), String> {
        let s = SimpleTensor::new(
            vec![qr(1.0), qr(4.0)],
            vec![qr(1.0), qr(-1.0), qr(2.0)],
            vec![qr(2.0), qr(3.0)],
        );
        let t = densify(&s);
        let expect = [
            [[2.0, 3.0], [8.0, 12.0]],
            [[-2.0, -3.0], [-8.0, -12.0]],
            [[4.0, 6.0], [16.0, 24.0]],
        ];
        for j in 0..3 {
            for i in 0..2 {
                for k in 0..2 {
                    if t[(i, j, k)] != qr(expect[j][i][k]) {
                        return Err(format!("entry ({i},{j},{k}) differs"));
                    }
                }
            }
        }
        Ok(())
    };
    report(4, "simple-tensor golden array", run());
}

#[test]
fn criterion_5_complex_232_identities() {
    let run = || -> Result<(), String> {
        let mut skipped = 0usize;
        for idx in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed(0xacc5, idx));
            let mut t = Tensor3::zeros((2, 3, 2));
            for i in 0..2 {
                for j in 0..3 {
                    for k in 0..2 {
                        t[(i, j, k)] =
                            q(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0, 0.0);
                    }
                }
            }
            // Frontal slices as 2x2 complex blocks [X1, X2, X3, X4].
            let block = |j: usize| -> [Complex<f64>; 4] {
                [
                    t[(0, j, 0)].complex_part(),
                    t[(0, j, 1)].complex_part(),
                    t[(1, j, 0)].complex_part(),
                    t[(1, j, 1)].complex_part(),
                ]
            };
            let blocks = [block(0), block(1), block(2)];
            let cs = cross_scalars(&t).map_err(|e| e.to_string())?;
            for b in &blocks {
                let lhs = b[1] * cs.t1 - b[0] * cs.s1 + b[3] * cs.t2 - b[2] * cs.s2;
                if lhs.norm() > 1e-12 {
                    return Err(format!("case {idx}: slice identity residual {}", lhs.norm()));
                }
            }
            let m = [
                [blocks[0][1], blocks[0][2], blocks[0][3]],
                [blocks[1][1], blocks[1][2], blocks[1][3]],
                [blocks[2][1], blocks[2][2], blocks[2][3]],
            ];
            let n = [
                [blocks[0][0], blocks[0][1], blocks[0][3]],
                [blocks[1][0], blocks[1][1], blocks[1][3]],
                [blocks[2][0], blocks[2][1], blocks[2][3]],
            ];
            if (cs.s1 - det3_complex(&m)).norm() > 1e-12
                || (cs.s2 - det3_complex(&n)).norm() > 1e-12
            {
                return Err(format!("case {idx}: scalar determinant mismatch"));
            }
            match decompose_232_complex(&t) {
                Ok(out) => {
                    if out.decomposition.terms.len() > 3 {
                        return Err(format!("case {idx}: {} terms", out.decomposition.terms.len()));
                    }
                    let (residual, ok) =
                        verify(&t, &out.decomposition, 1e-10).map_err(|e| e.to_string())?;
                    if !ok {
                        return Err(format!("case {idx}: residual {residual}"));
                    }
                }
                // Near-degenerate scalars refuse rather than emit wrong data.
                Err(_) => skipped += 1,
            }
        }
        if skipped > 10 {
            return Err(format!("{skipped}/1000 cases refused"));
        }
        Ok(())
    };
    report(5, "complex 2x3x2 scalar identities and decompositions", run());
}

#[test]
fn criterion_6_spectral_normal_form() {
    let run = || -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xacc6);
        for case in 0..100 {
            let w = loop {
                let w = random_quat(&mut rng);
                if w.norm() > 1e-2 {
                    break w;
                }
            };
            let (a, b) = (w.w, w.x);
            // Choose x = u + vi with a u = b v, so the cubic coefficient of
            // the adjoint's characteristic polynomial vanishes.
            let hyp = (a * a + b * b).sqrt();
            let (u, v) = if hyp > 1e-9 {
                (b / hyp, a / hyp)
            } else {
                (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
            };
            let mut m = HMatrix::zeros(3, 3);
            m[(0, 2)] = w;
            m[(1, 0)] = q(u, v, 0.0, 0.0);
            m[(2, 1)] = Quat::one();
            let chi = m.chi_adjoint().map_err(|e| e.to_string())?;
            let coeffs = chi.char_poly().map_err(|e| e.to_string())?;
            // Expected: x^6 - 2(au - bv) x^3 + (u^2 + v^2) |w|^2.
            let big_c = (u * u + v * v) * w.norm_sqr();
            let mut expect = vec![Complex::new(0.0, 0.0); 7];
            expect[6] = Complex::new(1.0, 0.0);
            expect[3] = Complex::new(-2.0 * (a * u - b * v), 0.0);
            expect[0] = Complex::new(big_c, 0.0);
            for (got, want) in coeffs.iter().zip(&expect) {
                if (got - want).norm() > 1e-9 {
                    return Err(format!("case {case}: coefficient error {}", (got - want).norm()));
                }
            }
            // With the cubic term gone the six roots are the sixth roots of
            // -C; check their pairwise separation against the radius.
            let radius = big_c.powf(1.0 / 6.0);
            let roots: Vec<Complex<f64>> = (0..6)
                .map(|k| {
                    let angle = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / 6.0;
                    Complex::from_polar(radius, angle)
                })
                .collect();
            for r in &roots {
                if poly_eval(&expect, *r).norm() > 1e-9 * (1.0 + big_c) {
                    return Err(format!("case {case}: claimed root misses polynomial"));
                }
            }
            for p in 0..6 {
                for qi in (p + 1)..6 {
                    if (roots[p] - roots[qi]).norm() < 1e-6 * radius {
                        return Err(format!("case {case}: roots {p} and {qi} collide"));
                    }
                }
            }
            let (diag, _) = m.is_diagonalizable().map_err(|e| e.to_string())?;
            if !diag {
                return Err(format!("case {case}: normal form not diagonalizable"));
            }
        }
        Ok(())
    };
    report(6, "3x2x3 spectral normal form", run());
}

#[test]
fn criterion_7_structural_identities() {
    let run = || -> Result<(), String> {
        // Adjoint homomorphism over 10^4 random 3x3 pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(0xacc7);
        for case in 0..10_000 {
            let a = random_matrix(&mut rng, 3);
            let b = random_matrix(&mut rng, 3);
            let lhs = a.mul(&b).chi_adjoint().map_err(|e| e.to_string())?;
            let rhs = a
                .chi_adjoint()
                .map_err(|e| e.to_string())?
                .mul(&b.chi_adjoint().map_err(|e| e.to_string())?);
            if lhs.sub(&rhs).max_norm() > 1e-12 {
                return Err(format!("case {case}: adjoint homomorphism violated"));
            }
        }

        // PDQ factorization round trip reproduces the term data exactly.
        let mut d = Decomposition::empty((3, 3, 3));
        for _ in 0..4 {
            d.push(SimpleTensor::new(
                (0..3).map(|_| random_quat(&mut rng)).collect(),
                (0..3).map(|_| random_quat(&mut rng)).collect(),
                (0..3).map(|_| random_quat(&mut rng)).collect(),
            ));
        }
        let (p, dks, qm) = pdq_factor(&d);
        let back = decomposition_from_pdq(&p, &dks, &qm).map_err(|e| e.to_string())?;
        if back.terms != d.terms {
            return Err("factorization round trip altered term data".into());
        }

        // Pulling a decomposition back through an invertible op log keeps
        // the term count and reproduces the untransformed tensor.
        for &(dims, _) in &SHAPES {
            let mut d = Decomposition::empty(dims);
            for _ in 0..3 {
                d.push(SimpleTensor::new(
                    (0..dims.0).map(|_| random_quat(&mut rng)).collect(),
                    (0..dims.1).map(|_| random_quat(&mut rng)).collect(),
                    (0..dims.2).map(|_| random_quat(&mut rng)).collect(),
                ));
            }
            let t2 = d.densify_sum();
            let stiffen = |mut m: HMatrix<f64>| {
                for i in 0..m.rows {
                    m[(i, i)] += qr(3.0);
                }
                m
            };
            let l = stiffen(random_matrix(&mut rng, dims.0));
            let r = stiffen(random_matrix(&mut rng, dims.2));
            let mut f = vec![vec![0.0; dims.1]; dims.1];
            for (j, row) in f.iter_mut().enumerate() {
                row[j] = 1.0;
            }
            f[0][dims.1 - 1] += 0.7;
            let f_inv = qtrank_core::util::invert_real(&f).map_err(|e| e.to_string())?;
            // Reconstruct the untransformed tensor by inverse ops in
            // reverse order, then pull the decomposition back over the log.
            let mut scratch = OpLog::new();
            let mut t = t2.clone();
            t = apply_op(&t, Op::RealMode2(f_inv), &mut scratch).map_err(|e| e.to_string())?;
            t = apply_op(
                &t,
                Op::RightMode3(r.h_inverse().map_err(|e| e.to_string())?),
                &mut scratch,
            )
            .map_err(|e| e.to_string())?;
            t = apply_op(
                &t,
                Op::LeftMode1(l.h_inverse().map_err(|e| e.to_string())?),
                &mut scratch,
            )
            .map_err(|e| e.to_string())?;
            let log = OpLog {
                ops: vec![Op::LeftMode1(l), Op::RightMode3(r), Op::RealMode2(f)],
            };
            let pulled = pullback(&d, &log).map_err(|e| e.to_string())?;
            if pulled.terms.len() != d.terms.len() {
                return Err(format!("{dims:?}: pullback changed term count"));
            }
            let (residual, ok) = verify(&t, &pulled, 1e-9).map_err(|e| e.to_string())?;
            if !ok {
                return Err(format!("{dims:?}: pullback residual {residual}"));
            }
        }

        // Left-shear singularization on 500 random 3x3 slice pairs.
        for case in 0..500 {
            let a = stiff3(&mut rng);
            let b = random_matrix(&mut rng, 3);
            let x0 = b
                .mul(&a.h_inverse().map_err(|e| e.to_string())?)
                .left_eigen_search()
                .map_err(|e| format!("case {case}: {e}"))?;
            let sheared = HMatrix::from_fn(3, 3, |i, j| x0 * a[(i, j)] + b[(i, j)]);
            let sigma = sheared
                .chi_adjoint()
                .map_err(|e| e.to_string())?
                .sigma_min();
            let scale = 1.0 + sheared.max_norm();
            if sigma > 1e-8 * scale {
                return Err(format!("case {case}: sheared slice kept sigma_min {sigma}"));
            }
        }
        Ok(())
    };
    report(7, "adjoint, factorization, pullback and shear identities", run());
}

fn stiff3(rng: &mut ChaCha8Rng) -> HMatrix<f64> {
    let mut m = random_matrix(rng, 3);
    for i in 0..3 {
        m[(i, i)] += qr(2.0);
    }
    m
}

#[test]
fn criterion_8_two_sided_quadratic() {
    let run = || -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xacc8);
        let mut failures = 0usize;
        for case in 0..1000 {
            // Pure imaginary alpha != beta, arbitrary gamma.
            let (alpha, beta) = loop {
                let alpha = q(0.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let beta = q(0.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if (alpha - beta).norm() > 1e-3 {
                    break (alpha, beta);
                }
            };
            let gamma = random_quat(&mut rng);
            match solve_quadratic(alpha, beta, gamma) {
                Ok(x) => {
                    let scale = 1.0 + alpha.norm().max(beta.norm()).max(gamma.norm());
                    let res = quadratic_residual(x, alpha, beta, gamma).norm();
                    if res > 1e-10 * scale {
                        return Err(format!("case {case}: residual {res}"));
                    }
                    if x.w.abs() <= 1e-8 {
                        return Err(format!("case {case}: root has real part {}", x.w));
                    }
                }
                // An explicit failure is acceptable; wrong output is not.
                Err(_) => failures += 1,
            }
        }
        if failures > 10 {
            return Err(format!("{failures}/1000 solves failed"));
        }
        Ok(())
    };
    report(8, "two-sided quadratic solver", run());
}

#[test]
fn criterion_9_deterministic_reports() {
    let run = || -> Result<(), String> {
        let dims = (2, 3, 3);
        let cases = 200usize;
        let master = 9u64;
        let tol = 1e-7f64;
        let baseline = run_suite::<f64>(dims, cases, master, tol).map_err(|e| e.to_string())?;
        let baseline_json = serde_json::to_string(&baseline).map_err(|e| e.to_string())?;
        let again = run_suite::<f64>(dims, cases, master, tol).map_err(|e| e.to_string())?;
        if serde_json::to_string(&again).map_err(|e| e.to_string())? != baseline_json {
            return Err("repeated sequential runs differ".into());
        }

        // Recompute the same report with the cases split across worker
        // threads and merged in index order.
        for workers in [2usize, 4] {
            let mut per_case: Vec<Option<(u64, String, f64, usize, bool)>> = vec![None; cases];
            let chunks: Vec<Vec<usize>> = (0..workers)
                .map(|w| (0..cases).filter(|i| i % workers == w).collect())
                .collect();
            let results: Vec<Vec<(usize, (u64, String, f64, usize, bool))>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = chunks
                        .iter()
                        .map(|chunk| {
                            scope.spawn(move || {
                                chunk
                                    .iter()
                                    .map(|&i| {
                                        let seed = case_seed(master, i as u64);
                                        let t: Tensor3<f64> =
                                            random_tensor(dims, seed, Dist::Uniform);
                                        let out = dispatch(&t).expect("dispatch");
                                        let (residual, ok) =
                                            verify(&t, &out.decomposition, tol).expect("verify");
                                        (
                                            i,
                                            (
                                                seed,
                                                format!("{:?}", out.path),
                                                residual,
                                                out.decomposition.terms.len(),
                                                ok && out.decomposition.terms.len() <= out.bound,
                                            ),
                                        )
                                    })
                                    .collect()
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap()).collect()
                });
            for chunk in results {
                for (i, row) in chunk {
                    per_case[i] = Some(row);
                }
            }
            let mut merged = SuiteReport {
                shape: [dims.0, dims.1, dims.2],
                cases_run: cases,
                max_residual: 0.0,
                max_terms: 0,
                branch_counts: Default::default(),
                failures: Vec::new(),
            };
            for row in per_case.into_iter().map(|r| r.unwrap()) {
                let (seed, path, residual, terms, ok) = row;
                merged.max_residual = merged.max_residual.max(residual);
                merged.max_terms = merged.max_terms.max(terms);
                *merged.branch_counts.entry(path).or_insert(0) += 1;
                if !ok {
                    merged.failures.push(seed);
                }
            }
            let merged_json = serde_json::to_string(&merged).map_err(|e| e.to_string())?;
            if merged_json != baseline_json {
                return Err(format!("{workers}-thread report differs from sequential"));
            }
        }
        Ok(())
    };
    report(9, "byte-identical suite reports", run());
}
