//! Quaternion matrices over the division ring: one-sided elimination, the
//! complex adjoint bridge, diagonalizability, Schur triangularization,
//! simultaneous diagonalization, and left-eigenvalue search.
//!
//! Row operations always multiply by quaternions on the left and column
//! operations on the right; mixing sides does not preserve rank.

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cmatrix::{CMatrix, EigenReport};
use crate::error::{Error, Result};
use crate::scalar::{left_mul_matrix, right_mul_matrix, Quaternion, Real};
use crate::util::solve_real;

/// Relative pivot threshold for elimination.
const EPS_PIVOT: f64 = 1e-10;
/// Relative residual threshold for certified eigenpairs.
const TOL_EIG: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix<R = f64> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Quaternion<R>>,
}

impl<R: Real> HMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Quaternion::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Quaternion::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Quaternion<R>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Quaternion<R>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(entries: &[Quaternion<R>]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &q) in entries.iter().enumerate() {
            m[(i, i)] = q;
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> Vec<Quaternion<R>> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn col(&self, j: usize) -> Vec<Quaternion<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == R::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= *b;
        }
        out
    }

    /// Real scalar multiple (reals are central, so side does not matter).
    pub fn scale(&self, s: R) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = a.scale(s);
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn max_norm(&self) -> R {
        self.data
            .iter()
            .map(|q| q.norm())
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// Matrix-vector product `A v` (vector entries multiply from the right).
    pub fn mul_vec(&self, v: &[Quaternion<R>]) -> Vec<Quaternion<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Quaternion::zero(), |s, j| s + self[(i, j)] * v[j])
            })
            .collect()
    }

    /// Complex adjoint: the 2n x 2n block matrix [[A1, A2], [-conj A2,
    /// conj A1]] where A = A1 + A2 j entrywise.
    pub fn chi_adjoint(&self) -> Result<CMatrix<R>> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut c = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let q = self[(i, j)];
                let c1 = Complex::new(q.w, q.x);
                let c2 = Complex::new(q.y, q.z);
                c[(i, j)] = c1;
                c[(i, n + j)] = c2;
                c[(n + i, j)] = -c2.conj();
                c[(n + i, n + j)] = c1.conj();
            }
        }
        Ok(c)
    }

    /// Rank-revealing outer-product elimination: returns (p_l, q_l) pairs
    /// with `A = sum_l p_l q_l^T` entrywise as ordered products
    /// `p_{l,i} * q_{l,j}`, one pair per pivot. The pivot is always the
    /// remaining entry of largest norm.
    pub fn rank_outer(&self) -> Vec<(Vec<Quaternion<R>>, Vec<Quaternion<R>>)> {
        let mut w = self.clone();
        let cut = R::real(EPS_PIVOT) * (R::one() + self.max_norm());
        let mut terms = Vec::new();
        for _ in 0..self.rows.min(self.cols) {
            let mut best = (0, 0);
            let mut best_norm = R::zero();
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let n = w[(i, j)].norm();
                    if n > best_norm {
                        best_norm = n;
                        best = (i, j);
                    }
                }
            }
            if best_norm <= cut {
                break;
            }
            let (r, c) = best;
            let pivot_inv = w[(r, c)].inv().expect("pivot above threshold");
            let p: Vec<Quaternion<R>> = (0..self.rows).map(|i| w[(i, c)] * pivot_inv).collect();
            let q: Vec<Quaternion<R>> = (0..self.cols).map(|j| w[(r, j)]).collect();
            for i in 0..self.rows {
                for j in 0..self.cols {
                    let d = p[i] * q[j];
                    w[(i, j)] -= d;
                }
            }
            terms.push((p, q));
        }
        terms
    }

    /// Rank under left-multiplication row reduction with largest-norm
    /// pivoting.
    pub fn h_rank(&self) -> usize {
        self.rank_outer().len()
    }

    /// Inverse by Gauss-Jordan with left row operations.
    pub fn h_inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let x = self.h_solve(&Self::identity(self.rows))?;
        Ok(x)
    }

    /// Solve `A X = B` by left row operations on the augmented matrix.
    pub fn h_solve(&self, b: &Self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if b.rows != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "solve: {} rows vs rhs {} rows",
                self.rows, b.rows
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        let cut = R::real(EPS_PIVOT) * (R::one() + self.max_norm());
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[(r, col)].norm() > a[(piv, col)].norm() {
                    piv = r;
                }
            }
            if a[(piv, col)].norm() <= cut {
                return Err(Error::Singular);
            }
            a.swap_rows(col, piv);
            x.swap_rows(col, piv);
            let inv = a[(col, col)].inv().map_err(|_| Error::Singular)?;
            for j in 0..n {
                a[(col, j)] = inv * a[(col, j)];
            }
            for j in 0..x.cols {
                x[(col, j)] = inv * x[(col, j)];
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f.norm() == R::zero() {
                    continue;
                }
                for j in 0..n {
                    let v = f * a[(col, j)];
                    a[(r, j)] -= v;
                }
                for j in 0..x.cols {
                    let v = f * x[(col, j)];
                    x[(r, j)] -= v;
                }
            }
        }
        Ok(x)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let t = self[(a, j)];
            self[(a, j)] = self[(b, j)];
            self[(b, j)] = t;
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            let t = self[(i, a)];
            self[(i, a)] = self[(i, b)];
            self[(i, b)] = t;
        }
    }

    /// Right null vector of a square singular matrix, recovered from the
    /// nullspace of the complex adjoint.
    pub fn null_vector(&self) -> Result<Vec<Quaternion<R>>> {
        let chi = self.chi_adjoint()?;
        let basis = chi.nullspace(R::real(TOL_EIG));
        let scale = R::one() + self.max_norm();
        for v in basis {
            let x = quaternion_vector_from_adjoint(&v);
            let norm = vec_norm(&x);
            if norm <= R::real(1e-12) {
                continue;
            }
            let x: Vec<_> = x.iter().map(|q| q.scale(norm.recip())).collect();
            let ax = self.mul_vec(&x);
            if vec_norm(&ax) <= R::real(TOL_EIG) * scale {
                return Ok(x);
            }
        }
        Err(Error::AlgorithmFailure(
            "no certified null vector found".into(),
        ))
    }

    /// Certified right eigenpairs `A x = x lambda` with complex lambda of
    /// nonnegative imaginary part, recovered from eigenvectors of the
    /// complex adjoint.
    pub fn right_eigen_pairs(&self) -> Result<Vec<(Vec<Quaternion<R>>, Complex<R>)>> {
        let chi = self.chi_adjoint()?;
        let report = chi.eigen_report()?;
        let scale = R::one() + self.max_norm();
        let tol = R::real(TOL_EIG) * scale;
        let mut out = Vec::new();
        for cl in &report.clusters {
            if cl.lambda.im < -tol {
                continue;
            }
            let lambda = Complex::new(cl.lambda.re, cl.lambda.im.max(R::zero()));
            for v in &cl.vectors {
                let x = quaternion_vector_from_adjoint(v);
                let norm = vec_norm(&x);
                if norm <= R::real(1e-8) {
                    continue;
                }
                let x: Vec<_> = x.iter().map(|q| q.scale(norm.recip())).collect();
                let lam_q = Quaternion::from_complex(lambda);
                let ax = self.mul_vec(&x);
                let resid: Vec<_> = ax
                    .iter()
                    .zip(&x)
                    .map(|(&a, &xi)| a - xi * lam_q)
                    .collect();
                if vec_norm(&resid) <= tol {
                    out.push((x, lambda));
                }
            }
        }
        Ok(out)
    }

    /// Diagonalizability of `A`, decided through the complex adjoint.
    pub fn is_diagonalizable(&self) -> Result<(bool, EigenReport<R>)> {
        let report = self.chi_adjoint()?.eigen_report()?;
        Ok((report.diagonalizable, report))
    }

    /// Eigenbasis `P` and complex eigenvalues with `A P = P diag(lambda)`
    /// certified by residual; fails when no independent eigenbasis exists.
    pub fn diagonalize(&self) -> Result<(Self, Vec<Complex<R>>)> {
        let n = self.rows;
        let pairs = self.right_eigen_pairs()?;
        let mut chosen: Vec<(Vec<Quaternion<R>>, Complex<R>)> = Vec::new();
        for (x, lambda) in pairs {
            if chosen.len() == n {
                break;
            }
            let mut cand = chosen.clone();
            cand.push((x, lambda));
            let m = Self::from_fn(n, cand.len(), |i, j| cand[j].0[i]);
            if m.h_rank() == cand.len() {
                chosen = cand;
            }
        }
        if chosen.len() < n {
            return Err(Error::AlgorithmFailure(
                "matrix has no full right eigenbasis".into(),
            ));
        }
        let p = Self::from_fn(n, n, |i, j| chosen[j].0[i]);
        let lambdas: Vec<Complex<R>> = chosen.iter().map(|(_, l)| *l).collect();
        // certify A P = P D
        let d = Self::diagonal(
            &lambdas
                .iter()
                .map(|&l| Quaternion::from_complex(l))
                .collect::<Vec<_>>(),
        );
        let resid = self.mul(&p).sub(&p.mul(&d)).max_norm();
        let scale = R::one() + self.max_norm();
        if resid > R::real(1e-7) * scale {
            return Err(Error::AlgorithmFailure(format!(
                "eigenbasis residual {resid} too large"
            )));
        }
        Ok((p, lambdas))
    }

    /// Unitary triangularization `A = U T U*` with complex diagonal of
    /// nonnegative imaginary part, by eigenpair deflation.
    pub fn schur_triangularize(&self) -> Result<(Self, Self)> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok((Self::zeros(0, 0), Self::zeros(0, 0)));
        }
        let pairs = self.right_eigen_pairs()?;
        let (v, lambda) = pairs
            .into_iter()
            .next()
            .ok_or(Error::ConvergenceFailure)?;
        let u1 = unitary_completion(&v)?;
        let b = u1.conj_transpose().mul(self).mul(&u1);
        if n == 1 {
            let mut t = Self::zeros(1, 1);
            t[(0, 0)] = Quaternion::from_complex(lambda);
            return Ok((u1, t));
        }
        let sub = Self::from_fn(n - 1, n - 1, |i, j| b[(i + 1, j + 1)]);
        let (u2, t2) = sub.schur_triangularize()?;
        let mut embed = Self::identity(n);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                embed[(i + 1, j + 1)] = u2[(i, j)];
            }
        }
        let u = u1.mul(&embed);
        let t = u.conj_transpose().mul(self).mul(&u);
        // Snap to exact triangular form; residuals are certified by callers.
        let mut t_clean = t.clone();
        for i in 1..n {
            for j in 0..i {
                t_clean[(i, j)] = Quaternion::zero();
            }
        }
        let _ = t2;
        Ok((u, t_clean))
    }

    /// Find a quaternion `x0` making `x0 I + M` singular (the negative of a
    /// left eigenvalue), certified through the smallest singular value of
    /// the complex adjoint. Complex inputs take an eigenvalue shortcut;
    /// general inputs run a seeded multi-start Newton iteration on the
    /// bordered system `(x0 I + M) v = 0`, `v_p = 1`.
    pub fn left_eigen_search(&self) -> Result<Quaternion<R>> {
        if !self.is_square() {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let scale = R::one() + self.max_norm();
        let tol_sing = R::real(TOL_EIG) * scale;
        let accept = |x0: Quaternion<R>| -> Option<Quaternion<R>> {
            let mut shifted = self.clone();
            for i in 0..n {
                shifted[(i, i)] += x0;
            }
            let chi = shifted.chi_adjoint().ok()?;
            if chi.sigma_min() <= tol_sing {
                Some(x0)
            } else {
                None
            }
        };

        // Complex shortcut: left and right eigenvalues coincide with the
        // eigenvalues of the complex matrix.
        let complex_cut = R::real(1e-12) * scale;
        let all_complex = (0..n).all(|i| (0..n).all(|j| self[(i, j)].is_complex_within(complex_cut)));
        let mut warm: Vec<Quaternion<R>> = Vec::new();
        {
            let cm = CMatrix::from_rows(
                (0..n)
                    .map(|i| (0..n).map(|j| self[(i, j)].complex_part()).collect())
                    .collect(),
            );
            if let Ok(rep) = cm.eigen_report() {
                for cl in &rep.clusters {
                    warm.push(-Quaternion::from_complex(cl.lambda));
                    warm.push(-Quaternion::from_complex(cl.lambda.conj()));
                }
            }
        }
        if all_complex {
            for &x0 in &warm {
                if let Some(x0) = accept(x0) {
                    return Ok(x0);
                }
            }
        }
        // Cheap candidates first.
        for i in 0..n {
            if let Some(x0) = accept(-self[(i, i)]) {
                return Ok(x0);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x6c65_6674_6569_6765);
        let mut starts: Vec<(Quaternion<R>, Vec<Quaternion<R>>, usize)> = Vec::new();
        for (idx, &x0) in warm.iter().enumerate() {
            let pivot = idx % n;
            let v = random_unit_vec(&mut rng, n, pivot);
            starts.push((x0, v, pivot));
        }
        while starts.len() < 64 {
            let pivot = starts.len() % n;
            let x0 = random_quat(&mut rng).scale(scale);
            let v = random_unit_vec(&mut rng, n, pivot);
            starts.push((x0, v, pivot));
        }
        for (x0, v, pivot) in starts {
            if let Some(x0) = newton_left_eigen(self, x0, v, pivot) {
                if let Some(x0) = accept(x0) {
                    return Ok(x0);
                }
            }
        }
        Err(Error::SearchBudgetExceeded)
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for HMatrix<R> {
    type Output = Quaternion<R>;
    fn index(&self, (i, j): (usize, usize)) -> &Quaternion<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for HMatrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Quaternion<R> {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> fmt::Display for HMatrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<R: Real + Serialize> Serialize for HMatrix<R> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            seq.serialize_element(&self.row(i))?;
        }
        seq.end()
    }
}

impl<'de, R: Real + Deserialize<'de>> Deserialize<'de> for HMatrix<R> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct MVisitor<R>(std::marker::PhantomData<R>);
        impl<'de, R: Real + Deserialize<'de>> Visitor<'de> for MVisitor<R> {
            type Value = HMatrix<R>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rectangular nested array of quaternions")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut rows: Vec<Vec<Quaternion<R>>> = Vec::new();
                while let Some(row) = seq.next_element::<Vec<Quaternion<R>>>()? {
                    if let Some(first) = rows.first() {
                        if row.len() != first.len() {
                            return Err(de::Error::custom("ragged matrix rows"));
                        }
                    }
                    rows.push(row);
                }
                Ok(HMatrix::from_rows(rows))
            }
        }
        d.deserialize_seq(MVisitor(std::marker::PhantomData))
    }
}

/// Map an adjoint eigen/null vector `(u; w)` back to the quaternion vector
/// `x_m = u_m - conj(w_m) j`.
fn quaternion_vector_from_adjoint<R: Real>(v: &[Complex<R>]) -> Vec<Quaternion<R>> {
    let n = v.len() / 2;
    (0..n)
        .map(|m| {
            let u = v[m];
            let c2 = -v[n + m].conj();
            Quaternion::new(u.re, u.im, c2.re, c2.im)
        })
        .collect()
}

pub fn vec_norm<R: Real>(v: &[Quaternion<R>]) -> R {
    v.iter()
        .map(|q| q.norm_sqr())
        .fold(R::zero(), |a, b| a + b)
        .sqrt()
}

/// Right-linear inner product `sum conj(u_i) v_i`.
pub fn inner<R: Real>(u: &[Quaternion<R>], v: &[Quaternion<R>]) -> Quaternion<R> {
    u.iter()
        .zip(v)
        .fold(Quaternion::zero(), |s, (&a, &b)| s + a.conj() * b)
}

/// Unitary matrix whose first column is `v / |v|`, completed by
/// Gram-Schmidt against standard basis vectors.
pub fn unitary_completion<R: Real>(v: &[Quaternion<R>]) -> Result<HMatrix<R>> {
    let n = v.len();
    let norm = vec_norm(v);
    if norm <= R::real(1e-12) {
        return Err(Error::AlgorithmFailure("zero vector".into()));
    }
    let mut cols: Vec<Vec<Quaternion<R>>> = vec![v.iter().map(|q| q.scale(norm.recip())).collect()];
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut cand: Vec<Quaternion<R>> = vec![Quaternion::zero(); n];
        cand[e] = Quaternion::one();
        for c in &cols {
            let coef = inner(c, &cand);
            for i in 0..n {
                cand[i] -= c[i] * coef;
            }
        }
        let cn = vec_norm(&cand);
        if cn > R::real(1e-6) {
            cols.push(cand.iter().map(|q| q.scale(cn.recip())).collect());
        }
    }
    if cols.len() < n {
        return Err(Error::AlgorithmFailure(
            "unitary completion degenerate".into(),
        ));
    }
    Ok(HMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

/// Solve `A u - u lambda = rhs` for the quaternion vector `u` through the
/// real embedding.
pub fn sylvester_solve_vec<R: Real>(
    a: &HMatrix<R>,
    lambda: Quaternion<R>,
    rhs: &[Quaternion<R>],
) -> Result<Vec<Quaternion<R>>> {
    let n = a.rows;
    assert!(a.is_square() && rhs.len() == n);
    let dim = 4 * n;
    let mut sys = vec![vec![R::zero(); dim]; dim];
    let rl = right_mul_matrix(lambda);
    for i in 0..n {
        for m in 0..n {
            let mut block = left_mul_matrix(a[(i, m)]);
            if i == m {
                for r in 0..4 {
                    for c in 0..4 {
                        block[r][c] = block[r][c] - rl[r][c];
                    }
                }
            }
            for r in 0..4 {
                for c in 0..4 {
                    sys[4 * i + r][4 * m + c] = block[r][c];
                }
            }
        }
    }
    let mut b = vec![R::zero(); dim];
    for i in 0..n {
        let comp = rhs[i].components();
        for r in 0..4 {
            b[4 * i + r] = comp[r];
        }
    }
    solve_real(&mut sys, &mut b)?;
    Ok((0..n)
        .map(|i| Quaternion::new(b[4 * i], b[4 * i + 1], b[4 * i + 2], b[4 * i + 3]))
        .collect())
}

/// Simultaneous diagonalization of a family: random real combinations are
/// diagonalized and their eigenbasis tested against every member. Retries
/// are seeded, so the result is deterministic.
pub fn simultaneous_diagonalize<R: Real>(ms: &[HMatrix<R>]) -> Result<HMatrix<R>> {
    let n = match ms.first() {
        Some(m) => m.rows,
        None => return Ok(HMatrix::identity(0)),
    };
    if ms.iter().any(|m| !m.is_square() || m.rows != n) {
        return Err(Error::DimensionMismatch(
            "family members must be square of equal size".into(),
        ));
    }
    for m in ms {
        let (flag, _) = m.is_diagonalizable()?;
        if !flag {
            return Err(Error::NotSimultaneouslyDiagonalizable);
        }
    }
    let scale = R::one()
        + ms.iter()
            .map(|m| m.max_norm())
            .fold(R::zero(), |a, b| a.max(b));
    let tol_diag = R::real(1e-7) * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7369_6d64_6961_6730);
    for attempt in 0..8 {
        let mut combo = HMatrix::zeros(n, n);
        for m in ms {
            let c: f64 = rng.gen_range(-1.0..1.0);
            combo = combo.add(&m.scale(R::real(c)));
        }
        if attempt == 0 && ms.len() == 1 {
            combo = ms[0].clone();
        }
        let (p, _) = match combo.diagonalize() {
            Ok(x) => x,
            Err(_) => continue,
        };
        let p_inv = match p.h_inverse() {
            Ok(x) => x,
            Err(_) => continue,
        };
        let mut ok = true;
        for m in ms {
            let g = p_inv.mul(m).mul(&p);
            let mut off = R::zero();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off = off.max(g[(i, j)].norm());
                    }
                }
            }
            if off > tol_diag {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(p);
        }
    }
    Err(Error::NotSimultaneouslyDiagonalizable)
}

fn random_quat<R: Real>(rng: &mut ChaCha8Rng) -> Quaternion<R> {
    Quaternion::from_f64s(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    )
}

fn random_unit_vec<R: Real>(rng: &mut ChaCha8Rng, n: usize, pivot: usize) -> Vec<Quaternion<R>> {
    (0..n)
        .map(|m| {
            if m == pivot {
                Quaternion::one()
            } else {
                random_quat(rng)
            }
        })
        .collect()
}

/// Newton iteration on `(x0 I + M) v = 0` with `v_pivot = 1` fixed: 4n real
/// unknowns against 4n real equations.
fn newton_left_eigen<R: Real>(
    m: &HMatrix<R>,
    mut x0: Quaternion<R>,
    mut v: Vec<Quaternion<R>>,
    pivot: usize,
) -> Option<Quaternion<R>> {
    let n = m.rows;
    let dim = 4 * n;
    let scale = R::one() + m.max_norm();
    let target = R::real(1e-11) * scale;
    let residual = |x0: Quaternion<R>, v: &[Quaternion<R>]| -> Vec<Quaternion<R>> {
        (0..n)
            .map(|i| {
                let mut s = x0 * v[i];
                for mm in 0..n {
                    s += m[(i, mm)] * v[mm];
                }
                s
            })
            .collect()
    };
    let mut f = residual(x0, &v);
    let mut fnorm = vec_norm(&f);
    for _ in 0..80 {
        if fnorm <= target {
            return Some(x0);
        }
        let mut jac = vec![vec![R::zero(); dim]; dim];
        for i in 0..n {
            // d/dx0 of x0*v_i is right multiplication by v_i
            let rb = right_mul_matrix(v[i]);
            for r in 0..4 {
                for c in 0..4 {
                    jac[4 * i + r][c] = rb[r][c];
                }
            }
            let mut col = 4;
            for mm in 0..n {
                if mm == pivot {
                    continue;
                }
                let mut entry = m[(i, mm)];
                if i == mm {
                    entry += x0;
                }
                let lb = left_mul_matrix(entry);
                for r in 0..4 {
                    for c in 0..4 {
                        jac[4 * i + r][col + c] = lb[r][c];
                    }
                }
                col += 4;
            }
        }
        let mut rhs = vec![R::zero(); dim];
        for i in 0..n {
            let comp = f[i].components();
            for r in 0..4 {
                rhs[4 * i + r] = comp[r];
            }
        }
        if solve_real(&mut jac, &mut rhs).is_err() {
            return None;
        }
        let dx = Quaternion::new(rhs[0], rhs[1], rhs[2], rhs[3]);
        let mut dv = vec![Quaternion::zero(); n];
        let mut col = 4;
        for mm in 0..n {
            if mm == pivot {
                continue;
            }
            dv[mm] = Quaternion::new(rhs[col], rhs[col + 1], rhs[col + 2], rhs[col + 3]);
            col += 4;
        }
        let mut t = R::one();
        let mut accepted = false;
        for _ in 0..25 {
            let cx = x0 - dx.scale(t);
            let cv: Vec<_> = v
                .iter()
                .zip(&dv)
                .map(|(&vi, &di)| vi - di.scale(t))
                .collect();
            let cf = residual(cx, &cv);
            let cn = vec_norm(&cf);
            if cn < fnorm {
                x0 = cx;
                v = cv;
                f = cf;
                fnorm = cn;
                accepted = true;
                break;
            }
            t = t * R::real(0.5);
        }
        if !accepted {
            break;
        }
    }
    if fnorm <= target {
        Some(x0)
    } else {
        None
    }
}
