//! Dense complex linear algebra on the small matrices this crate needs
//! (n <= 8). Rank, nullspace and smallest singular value come from a
//! column-pivoted Householder QR; eigenvalues come from the characteristic
//! polynomial and a simultaneous root iteration.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type C<R> = Complex<R>;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<R = f64> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(R::zero(), R::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(R::one(), R::zero());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex<R>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
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
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = *a - *b;
        }
        out
    }

    pub fn scale(&self, s: Complex<R>) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = *a * s;
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex<R> {
        (0..self.rows.min(self.cols)).fold(Complex::new(R::zero(), R::zero()), |s, i| {
            s + self[(i, i)]
        })
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> R {
        self.data
            .iter()
            .map(|c| c.norm())
            .fold(R::zero(), |a, b| a.max(b))
    }

    pub fn frobenius_norm(&self) -> R {
        self.data
            .iter()
            .map(|c| c.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn mul_vec(&self, v: &[Complex<R>]) -> Vec<Complex<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Complex::new(R::zero(), R::zero()), |s, j| {
                    s + self[(i, j)] * v[j]
                })
            })
            .collect()
    }

    /// Column-pivoted Householder QR; only `R` and the permutation are kept.
    pub fn pivoted_qr(&self) -> PivotedQr<R> {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let steps = m.min(n);
        for k in 0..steps {
            // pivot: remaining column with the largest norm
            let mut best = k;
            let mut best_norm = R::zero();
            for j in k..n {
                let nj = (k..m)
                    .map(|i| a[(i, j)].norm_sqr())
                    .fold(R::zero(), |s, v| s + v);
                if nj > best_norm {
                    best_norm = nj;
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    let t = a[(i, k)];
                    a[(i, k)] = a[(i, best)];
                    a[(i, best)] = t;
                }
                perm.swap(k, best);
            }
            let col_norm = best_norm.sqrt();
            if !(col_norm > R::zero()) {
                continue;
            }
            // Householder vector v making column k real nonnegative on the
            // diagonal and zero below it.
            let akk = a[(k, k)];
            let phase = if akk.norm() > R::zero() {
                akk / Complex::new(akk.norm(), R::zero())
            } else {
                Complex::new(R::one(), R::zero())
            };
            let alpha = -phase * col_norm;
            let mut v: Vec<Complex<R>> = (k..m).map(|i| a[(i, k)]).collect();
            v[0] = v[0] - alpha;
            let vnorm2 = v.iter().map(|c| c.norm_sqr()).fold(R::zero(), |s, x| s + x);
            if vnorm2 > R::zero() {
                for j in k..n {
                    let dot = (k..m).fold(Complex::new(R::zero(), R::zero()), |s, i| {
                        s + v[i - k].conj() * a[(i, j)]
                    });
                    let f = dot * (R::real(2.0) / vnorm2);
                    for i in k..m {
                        let adj = v[i - k] * f;
                        a[(i, j)] = a[(i, j)] - adj;
                    }
                }
            }
            a[(k, k)] = alpha;
            for i in k + 1..m {
                a[(i, k)] = Complex::new(R::zero(), R::zero());
            }
        }
        let mut r = CMatrix::zeros(steps, n);
        for i in 0..steps {
            for j in i..n {
                r[(i, j)] = a[(i, j)];
            }
        }
        PivotedQr { r, perm }
    }

    /// Numerical rank at relative threshold `tol` on the QR diagonal.
    pub fn rank(&self, tol: R) -> usize {
        self.pivoted_qr().rank(tol)
    }

    /// Orthonormal-ish basis of the right nullspace at relative tolerance
    /// `tol` (each vector has unit norm; the basis is linearly independent
    /// but not orthogonalized).
    pub fn nullspace(&self, tol: R) -> Vec<Vec<Complex<R>>> {
        let qr = self.pivoted_qr();
        let rank = qr.rank(tol);
        let n = self.cols;
        let mut basis = Vec::new();
        for f in rank..n {
            let mut x = vec![Complex::new(R::zero(), R::zero()); rank];
            // back substitution on R[0..rank, 0..rank] x = -R[0..rank, f]
            for i in (0..rank).rev() {
                let mut s = -qr.r[(i, f)];
                for j in i + 1..rank {
                    s = s - qr.r[(i, j)] * x[j];
                }
                x[i] = s / qr.r[(i, i)];
            }
            let mut v = vec![Complex::new(R::zero(), R::zero()); n];
            for i in 0..rank {
                v[qr.perm[i]] = x[i];
            }
            v[qr.perm[f]] = Complex::new(R::one(), R::zero());
            let norm = v.iter().map(|c| c.norm_sqr()).fold(R::zero(), |s, q| s + q).sqrt();
            for c in v.iter_mut() {
                *c = *c / Complex::new(norm, R::zero());
            }
            basis.push(v);
        }
        basis
    }

    /// Smallest singular value, via inverse iteration on `R^H R` using the
    /// triangular factor directly (no Gram matrix is formed).
    pub fn sigma_min(&self) -> R {
        assert!(self.rows >= self.cols, "sigma_min needs rows >= cols");
        let n = self.cols;
        if n == 0 {
            return R::zero();
        }
        let qr = self.pivoted_qr();
        let tiny = R::real(1e-300);
        for i in 0..n {
            if qr.r[(i, i)].norm() < tiny {
                return R::zero();
            }
        }
        let mut u: Vec<Complex<R>> = (0..n)
            .map(|i| Complex::new(R::one() + R::real(0.01) * R::real(i as f64), R::real(0.3)))
            .collect();
        normalize(&mut u);
        for _ in 0..50 {
            // w solves R^H w = u, z solves R z = w
            let mut w = vec![Complex::new(R::zero(), R::zero()); n];
            for i in 0..n {
                let mut s = u[i];
                for j in 0..i {
                    s = s - qr.r[(j, i)].conj() * w[j];
                }
                w[i] = s / qr.r[(i, i)].conj();
            }
            let mut z = vec![Complex::new(R::zero(), R::zero()); n];
            for i in (0..n).rev() {
                let mut s = w[i];
                for j in i + 1..n {
                    s = s - qr.r[(i, j)] * z[j];
                }
                z[i] = s / qr.r[(i, i)];
            }
            let znorm = z.iter().map(|c| c.norm_sqr()).fold(R::zero(), |s, q| s + q).sqrt();
            if !znorm.is_finite() || znorm == R::zero() {
                break;
            }
            for c in z.iter_mut() {
                *c = *c / Complex::new(znorm, R::zero());
            }
            u = z;
        }
        // sigma_min = |R u| for the converged unit vector u
        let ru: Vec<Complex<R>> = (0..n)
            .map(|i| {
                (i..n).fold(Complex::new(R::zero(), R::zero()), |s, j| {
                    s + qr.r[(i, j)] * u[j]
                })
            })
            .collect();
        ru.iter().map(|c| c.norm_sqr()).fold(R::zero(), |s, q| s + q).sqrt()
    }

    /// Characteristic polynomial coefficients `c[0] + c[1] x + ... + x^n`
    /// (monic, `c.len() == n + 1`, `c[n] == 1`), by the Faddeev-LeVerrier
    /// recurrence.
    pub fn char_poly(&self) -> Result<Vec<Complex<R>>> {
        if self.rows != self.cols {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut c = vec![Complex::new(R::zero(), R::zero()); n + 1];
        c[n] = Complex::new(R::one(), R::zero());
        let mut m = CMatrix::identity(n);
        for k in 1..=n {
            let am = self.mul(&m);
            let ck = -am.trace() / Complex::new(R::real(k as f64), R::zero());
            c[n - k] = ck;
            m = am;
            for i in 0..n {
                m[(i, i)] = m[(i, i)] + ck;
            }
        }
        Ok(c)
    }

    /// Eigenvalue analysis: clustered eigenvalues with algebraic and
    /// geometric multiplicities, plus eigenvector bases.
    pub fn eigen_report(&self) -> Result<EigenReport<R>> {
        let n = self.rows;
        if self.rows != self.cols {
            return Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if n == 0 {
            return Ok(EigenReport {
                clusters: Vec::new(),
                diagonalizable: true,
            });
        }
        let poly = self.char_poly()?;
        let mut roots = durand_kerner(&poly)?;
        for r in roots.iter_mut() {
            *r = polish_root(&poly, *r);
        }
        let scale = R::one() + roots.iter().map(|r| r.norm()).fold(R::zero(), |a, b| a.max(b));
        let gap = R::real(1e-7) * scale;
        roots.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut clusters: Vec<(Complex<R>, usize)> = Vec::new();
        for r in roots {
            match clusters
                .iter_mut()
                .find(|(c, _)| (*c - r).norm() <= gap)
            {
                Some((c, count)) => {
                    // running mean keeps the representative centered
                    let k = R::real(*count as f64);
                    *c = (*c * k + r) / (k + R::one());
                    *count += 1;
                }
                None => clusters.push((r, 1)),
            }
        }
        let vec_tol = R::real(1e-8);
        let mut out = Vec::new();
        let mut diagonalizable = true;
        for (lambda, alg) in clusters {
            let mut shifted = self.clone();
            for i in 0..n {
                shifted[(i, i)] = shifted[(i, i)] - lambda;
            }
            let basis = shifted.nullspace(vec_tol);
            let geo = basis.len();
            if geo < alg {
                diagonalizable = false;
            }
            out.push(EigenCluster {
                lambda,
                algebraic: alg,
                geometric: geo,
                vectors: basis,
            });
        }
        Ok(EigenReport {
            clusters: out,
            diagonalizable,
        })
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for CMatrix<R> {
    type Output = Complex<R>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<R> {
        &mut self.data[i * self.cols + j]
    }
}

pub struct PivotedQr<R: Real> {
    pub r: CMatrix<R>,
    pub perm: Vec<usize>,
}

impl<R: Real> PivotedQr<R> {
    /// Rank at relative diagonal threshold `tol`.
    pub fn rank(&self, tol: R) -> usize {
        let steps = self.r.rows;
        let lead = self.r[(0, 0)].norm();
        if !(lead > R::zero()) {
            return 0;
        }
        let cut = tol * lead;
        (0..steps)
            .take_while(|&i| self.r[(i, i)].norm() > cut)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct EigenCluster<R: Real> {
    pub lambda: Complex<R>,
    pub algebraic: usize,
    pub geometric: usize,
    pub vectors: Vec<Vec<Complex<R>>>,
}

#[derive(Debug, Clone)]
pub struct EigenReport<R: Real> {
    pub clusters: Vec<EigenCluster<R>>,
    pub diagonalizable: bool,
}

fn normalize<R: Real>(v: &mut [Complex<R>]) {
    let n = v.iter().map(|c| c.norm_sqr()).fold(R::zero(), |s, q| s + q).sqrt();
    if n > R::zero() {
        for c in v.iter_mut() {
            *c = *c / Complex::new(n, R::zero());
        }
    }
}

pub fn poly_eval<R: Real>(coeffs: &[Complex<R>], x: Complex<R>) -> Complex<R> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(R::zero(), R::zero()), |acc, &c| acc * x + c)
}

fn poly_deriv_eval<R: Real>(coeffs: &[Complex<R>], x: Complex<R>) -> Complex<R> {
    let mut acc = Complex::new(R::zero(), R::zero());
    for k in (1..coeffs.len()).rev() {
        acc = acc * x + coeffs[k] * Complex::new(R::real(k as f64), R::zero());
    }
    acc
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
pub fn durand_kerner<R: Real>(coeffs: &[Complex<R>]) -> Result<Vec<Complex<R>>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let radius = R::one()
        + coeffs[..n]
            .iter()
            .map(|c| c.norm())
            .fold(R::zero(), |a, b| a.max(b));
    let seed = Complex::new(R::real(0.4), R::real(0.9));
    let mut roots: Vec<Complex<R>> = Vec::with_capacity(n);
    let mut p = Complex::new(R::one(), R::zero());
    for _ in 0..n {
        p = p * seed;
        roots.push(p * radius);
    }
    let tol = R::real(1e-14) * radius;
    for _ in 0..600 {
        let mut max_step = R::zero();
        for i in 0..n {
            let xi = roots[i];
            let mut denom = Complex::new(R::one(), R::zero());
            for j in 0..n {
                if j != i {
                    denom = denom * (xi - roots[j]);
                }
            }
            if denom.norm() == R::zero() {
                // nudge coincident iterates apart
                roots[i] = xi + Complex::new(tol + R::real(1e-8), R::zero());
                max_step = radius;
                continue;
            }
            let step = poly_eval(coeffs, xi) / denom;
            roots[i] = xi - step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= tol {
            return Ok(roots);
        }
    }
    // Accept if the residuals are small even without step convergence.
    let resid = roots
        .iter()
        .map(|&r| poly_eval(coeffs, r).norm())
        .fold(R::zero(), |a, b| a.max(b));
    if resid <= R::real(1e-8) * radius.powi(n as i32) {
        Ok(roots)
    } else {
        Err(Error::ConvergenceFailure)
    }
}

fn polish_root<R: Real>(coeffs: &[Complex<R>], mut x: Complex<R>) -> Complex<R> {
    for _ in 0..4 {
        let d = poly_deriv_eval(coeffs, x);
        if d.norm() == R::zero() {
            break;
        }
        let step = poly_eval(coeffs, x) / d;
        if !step.norm().is_finite() {
            break;
        }
        x = x - step;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    type CM = CMatrix<f64>;
    type C64 = Complex<f64>;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    fn mat(rows: &[&[(f64, f64)]]) -> CM {
        CM::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&(a, b)| c(a, b)).collect())
                .collect(),
        )
    }

    #[test]
    fn rank_and_nullspace() {
        let a = mat(&[
            &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)],
            &[(2.0, 0.0), (4.0, 0.0), (6.0, 0.0)],
            &[(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)],
        ]);
        assert_eq!(a.rank(1e-10), 1);
        let ns = a.nullspace(1e-10);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let av = a.mul_vec(v);
            let r: f64 = av.iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(r < 1e-12, "nullspace residual {r}");
        }
    }

    #[test]
    fn sigma_min_known() {
        // diag(3, 1e-5) has smallest singular value 1e-5
        let a = mat(&[&[(3.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (1e-5, 0.0)]]);
        let s = a.sigma_min();
        assert!((s - 1e-5).abs() < 1e-12, "sigma {s}");
        // rotate by a unitary-ish complex mix and check invariance
        let u = mat(&[
            &[(0.6, 0.0), (0.0, 0.8)],
            &[(0.0, 0.8), (0.6, 0.0)],
        ]);
        let b = u.mul(&a);
        let s2 = b.sigma_min();
        assert!((s2 - 1e-5).abs() < 1e-10, "sigma {s2}");
    }

    #[test]
    fn char_poly_companion() {
        // companion matrix of x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = mat(&[
            &[(0.0, 0.0), (0.0, 0.0), (6.0, 0.0)],
            &[(1.0, 0.0), (0.0, 0.0), (-11.0, 0.0)],
            &[(0.0, 0.0), (1.0, 0.0), (6.0, 0.0)],
        ]);
        let p = a.char_poly().unwrap();
        let expect = [c(-6.0, 0.0), c(11.0, 0.0), c(-6.0, 0.0), c(1.0, 0.0)];
        for (got, want) in p.iter().zip(expect.iter()) {
            assert!((got - want).norm() < 1e-12);
        }
        let mut roots = durand_kerner(&p).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (r, want) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((r - c(want, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn eigen_diagonalizable_and_not() {
        let d = mat(&[
            &[(2.0, 1.0), (0.0, 0.0)],
            &[(0.0, 0.0), (-1.0, 0.5)],
        ]);
        let rep = d.eigen_report().unwrap();
        assert!(rep.diagonalizable);
        assert_eq!(rep.clusters.len(), 2);
        for cl in &rep.clusters {
            assert_eq!(cl.algebraic, 1);
            assert_eq!(cl.geometric, 1);
            let v = &cl.vectors[0];
            let av = d.mul_vec(v);
            let r: f64 = av
                .iter()
                .zip(v)
                .map(|(a, x)| (a - cl.lambda * x).norm())
                .fold(0.0, f64::max);
            assert!(r < 1e-10);
        }

        let jordan = mat(&[
            &[(2.0, 0.0), (1.0, 0.0)],
            &[(0.0, 0.0), (2.0, 0.0)],
        ]);
        let rep = jordan.eigen_report().unwrap();
        assert!(!rep.diagonalizable);
        assert_eq!(rep.clusters.len(), 1);
        assert_eq!(rep.clusters[0].algebraic, 2);
        assert_eq!(rep.clusters[0].geometric, 1);
    }

    #[test]
    fn sigma_min_of_singular_matrix_is_tiny() {
        let a = mat(&[
            &[(1.0, 0.0), (2.0, 0.0)],
            &[(2.0, 0.0), (4.0, 0.0)],
        ]);
        assert!(a.sigma_min() < 1e-12);
    }
}
