//! Order-3 quaternion tensors, simple tensors with the noncommutative
//! entry order, rank-preserving operations with a replayable log, and the
//! PDQ / simultaneous-diagonalization rank machinery.
//!
//! Slice convention: mode 2 counts frontal slices, so a tensor of shape
//! (n1, n2, n3) consists of n2 frontal slices of size n1 x n3. Horizontal
//! slice i is the n2 x n3 matrix (j, k) -> T[i][j][k]; lateral slice k is
//! the n1 x n2 matrix (i, j) -> T[i][j][k]. Some authors count frontal
//! slices along mode 1 instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{simultaneous_diagonalize, HMatrix};
use crate::scalar::{Quaternion, Real};
use crate::util::invert_real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "TensorRepr<R>",
    into = "TensorRepr<R>",
    bound(
        serialize = "R: Real + Serialize",
        deserialize = "R: Real + Deserialize<'de>"
    )
)]
pub struct Tensor3<R: Real = f64> {
    pub dims: (usize, usize, usize),
    entries: Vec<Quaternion<R>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(
    serialize = "R: Real + Serialize",
    deserialize = "R: Real + Deserialize<'de>"
))]
struct TensorRepr<R: Real> {
    shape: [usize; 3],
    entries: Vec<Vec<Vec<Quaternion<R>>>>,
}

impl<R: Real> From<Tensor3<R>> for TensorRepr<R> {
    fn from(t: Tensor3<R>) -> Self {
        let (n1, n2, n3) = t.dims;
        TensorRepr {
            shape: [n1, n2, n3],
            entries: (0..n1)
                .map(|i| {
                    (0..n2)
                        .map(|j| (0..n3).map(|k| t[(i, j, k)]).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

impl<R: Real> TryFrom<TensorRepr<R>> for Tensor3<R> {
    type Error = String;
    fn try_from(r: TensorRepr<R>) -> std::result::Result<Self, String> {
        let [n1, n2, n3] = r.shape;
        if r.entries.len() != n1 {
            return Err("entry grid does not match shape".into());
        }
        let mut t = Tensor3::zeros((n1, n2, n3));
        for (i, plane) in r.entries.iter().enumerate() {
            if plane.len() != n2 {
                return Err("entry grid does not match shape".into());
            }
            for (j, row) in plane.iter().enumerate() {
                if row.len() != n3 {
                    return Err("entry grid does not match shape".into());
                }
                for (k, &q) in row.iter().enumerate() {
                    t[(i, j, k)] = q;
                }
            }
        }
        Ok(t)
    }
}

impl<R: Real> Tensor3<R> {
    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        Self {
            dims,
            entries: vec![Quaternion::zero(); dims.0 * dims.1 * dims.2],
        }
    }

    /// Build from frontal slices (each n1 x n3, one per mode-2 index).
    pub fn from_frontal_slices(slices: &[HMatrix<R>]) -> Self {
        let n2 = slices.len();
        let (n1, n3) = (slices[0].rows, slices[0].cols);
        assert!(slices.iter().all(|s| s.rows == n1 && s.cols == n3));
        let mut t = Self::zeros((n1, n2, n3));
        for (j, s) in slices.iter().enumerate() {
            for i in 0..n1 {
                for k in 0..n3 {
                    t[(i, j, k)] = s[(i, k)];
                }
            }
        }
        t
    }

    pub fn frontal_slice(&self, j: usize) -> HMatrix<R> {
        HMatrix::from_fn(self.dims.0, self.dims.2, |i, k| self[(i, j, k)])
    }

    /// Horizontal slice i as the n2 x n3 matrix indexed (frontal j, col k).
    pub fn horizontal_slice(&self, i: usize) -> HMatrix<R> {
        HMatrix::from_fn(self.dims.1, self.dims.2, |j, k| self[(i, j, k)])
    }

    /// Lateral slice k as the n1 x n2 matrix indexed (row i, frontal j).
    pub fn lateral_slice(&self, k: usize) -> HMatrix<R> {
        HMatrix::from_fn(self.dims.0, self.dims.1, |i, j| self[(i, j, k)])
    }

    pub fn max_norm(&self) -> R {
        self.entries
            .iter()
            .map(|q| q.norm())
            .fold(R::zero(), |a, b| a.max(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a -= *b;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&other.entries) {
            *a += *b;
        }
        out
    }

    /// Rank-preserving mode 1 <-> 3 exchange: entries are conjugated and
    /// the index order reversed. A plain transpose without conjugation
    /// would not preserve rank over the quaternions.
    pub fn conj_rotate_13(&self) -> Self {
        let (n1, n2, n3) = self.dims;
        let mut out = Self::zeros((n3, n2, n1));
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    out[(k, j, i)] = self[(i, j, k)].conj();
                }
            }
        }
        out
    }
}

impl<R: Real> std::ops::Index<(usize, usize, usize)> for Tensor3<R> {
    type Output = Quaternion<R>;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &Quaternion<R> {
        &self.entries[(i * self.dims.1 + j) * self.dims.2 + k]
    }
}

impl<R: Real> std::ops::IndexMut<(usize, usize, usize)> for Tensor3<R> {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut Quaternion<R> {
        &mut self.entries[(i * self.dims.1 + j) * self.dims.2 + k]
    }
}

/// Rank-1 building block; densified entry (i,j,k) is the ordered product
/// `a_i * b_j * c_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "R: Real + Serialize",
    deserialize = "R: Real + Deserialize<'de>"
))]
pub struct SimpleTensor<R: Real = f64> {
    pub a: Vec<Quaternion<R>>,
    pub b: Vec<Quaternion<R>>,
    pub c: Vec<Quaternion<R>>,
}

impl<R: Real> SimpleTensor<R> {
    pub fn new(a: Vec<Quaternion<R>>, b: Vec<Quaternion<R>>, c: Vec<Quaternion<R>>) -> Self {
        Self { a, b, c }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.a.len(), self.b.len(), self.c.len())
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|q| q.norm_sqr() == R::zero())
            || self.b.iter().all(|q| q.norm_sqr() == R::zero())
            || self.c.iter().all(|q| q.norm_sqr() == R::zero())
    }

    pub fn conj_rotate_13(&self) -> Self {
        Self {
            a: self.c.iter().map(|q| q.conj()).collect(),
            b: self.b.iter().map(|q| q.conj()).collect(),
            c: self.a.iter().map(|q| q.conj()).collect(),
        }
    }
}

/// Densify one simple tensor with the ordered product `a_i * b_j * c_k`.
pub fn densify<R: Real>(s: &SimpleTensor<R>) -> Tensor3<R> {
    let dims = s.dims();
    let mut t = Tensor3::zeros(dims);
    for i in 0..dims.0 {
        for j in 0..dims.1 {
            for k in 0..dims.2 {
                t[(i, j, k)] = s.a[i] * s.b[j] * s.c[k];
            }
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "R: Real + Serialize",
    deserialize = "R: Real + Deserialize<'de>"
))]
pub struct Decomposition<R: Real = f64> {
    pub shape: [usize; 3],
    pub terms: Vec<SimpleTensor<R>>,
    #[serde(skip)]
    pub residual: Option<R>,
}

impl<R: Real> Decomposition<R> {
    pub fn empty(dims: (usize, usize, usize)) -> Self {
        Self {
            shape: [dims.0, dims.1, dims.2],
            terms: Vec::new(),
            residual: None,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.shape[0], self.shape[1], self.shape[2])
    }

    pub fn push(&mut self, term: SimpleTensor<R>) {
        assert_eq!(term.dims(), self.dims());
        if !term.is_zero() {
            self.terms.push(term);
        }
    }

    pub fn extend(&mut self, other: Decomposition<R>) {
        assert_eq!(other.shape, self.shape);
        for t in other.terms {
            self.push(t);
        }
    }

    pub fn densify_sum(&self) -> Tensor3<R> {
        let mut t = Tensor3::zeros(self.dims());
        for term in &self.terms {
            t = t.add(&densify(term));
        }
        t
    }

    pub fn conj_rotate_13(&self) -> Self {
        Self {
            shape: [self.shape[2], self.shape[1], self.shape[0]],
            terms: self.terms.iter().map(|t| t.conj_rotate_13()).collect(),
            residual: None,
        }
    }
}

/// One rank-preserving operation.
#[derive(Debug, Clone)]
pub enum Op<R: Real = f64> {
    /// Left multiplication on mode 1: T'[i][j][k] = sum_m L[i][m] T[m][j][k].
    LeftMode1(HMatrix<R>),
    /// Right multiplication on mode 3: T'[i][j][k] = sum_m T[i][j][m] R[m][k].
    RightMode3(HMatrix<R>),
    /// Real frontal-slice combination: T'[i][j][k] = sum_m F[j][m] T[i][m][k].
    /// Only real coefficients are rank-preserving here.
    RealMode2(Vec<Vec<R>>),
}

#[derive(Debug, Clone, Default)]
pub struct OpLog<R: Real = f64> {
    pub ops: Vec<Op<R>>,
}

impl<R: Real> OpLog<R> {
    pub fn new() -> Self {
        Self { ops: Vec::new() }
    }
}

/// Apply one rank-preserving operation, appending it to the log. The op
/// matrix is checked for invertibility at push time.
pub fn apply_op<R: Real>(t: &Tensor3<R>, op: Op<R>, log: &mut OpLog<R>) -> Result<Tensor3<R>> {
    let (n1, n2, n3) = t.dims;
    let out = match &op {
        Op::LeftMode1(l) => {
            if l.rows != n1 || l.cols != n1 {
                return Err(Error::DimensionMismatch(format!(
                    "mode-1 op is {}x{}, need {n1}x{n1}",
                    l.rows, l.cols
                )));
            }
            if l.h_rank() != n1 {
                return Err(Error::SingularOp);
            }
            let mut out = Tensor3::zeros(t.dims);
            for i in 0..n1 {
                for m in 0..n1 {
                    let f = l[(i, m)];
                    if f.norm_sqr() == R::zero() {
                        continue;
                    }
                    for j in 0..n2 {
                        for k in 0..n3 {
                            let v = f * t[(m, j, k)];
                            out[(i, j, k)] += v;
                        }
                    }
                }
            }
            out
        }
        Op::RightMode3(r) => {
            if r.rows != n3 || r.cols != n3 {
                return Err(Error::DimensionMismatch(format!(
                    "mode-3 op is {}x{}, need {n3}x{n3}",
                    r.rows, r.cols
                )));
            }
            if r.h_rank() != n3 {
                return Err(Error::SingularOp);
            }
            let mut out = Tensor3::zeros(t.dims);
            for k in 0..n3 {
                for m in 0..n3 {
                    let f = r[(m, k)];
                    if f.norm_sqr() == R::zero() {
                        continue;
                    }
                    for i in 0..n1 {
                        for j in 0..n2 {
                            let v = t[(i, j, m)] * f;
                            out[(i, j, k)] += v;
                        }
                    }
                }
            }
            out
        }
        Op::RealMode2(f) => {
            if f.len() != n2 || f.iter().any(|row| row.len() != n2) {
                return Err(Error::DimensionMismatch(format!(
                    "mode-2 op must be {n2}x{n2}"
                )));
            }
            if invert_real(f).is_err() {
                return Err(Error::SingularOp);
            }
            let mut out = Tensor3::zeros(t.dims);
            for j in 0..n2 {
                for m in 0..n2 {
                    let c = f[j][m];
                    if c == R::zero() {
                        continue;
                    }
                    for i in 0..n1 {
                        for k in 0..n3 {
                            let v = t[(i, m, k)].scale(c);
                            out[(i, j, k)] += v;
                        }
                    }
                }
            }
            out
        }
    };
    log.ops.push(op);
    Ok(out)
}

/// Map a decomposition of the transformed tensor back to a decomposition
/// of the original by replaying inverse operations in reverse order.
pub fn pullback<R: Real>(d: &Decomposition<R>, log: &OpLog<R>) -> Result<Decomposition<R>> {
    let mut terms = d.terms.clone();
    for op in log.ops.iter().rev() {
        match op {
            Op::LeftMode1(l) => {
                let inv = l.h_inverse()?;
                for t in terms.iter_mut() {
                    t.a = inv.mul_vec(&t.a);
                }
            }
            Op::RightMode3(r) => {
                let inv = r.h_inverse()?;
                for t in terms.iter_mut() {
                    // row vector times R^-1
                    t.c = (0..inv.cols)
                        .map(|k| {
                            (0..inv.rows)
                                .fold(Quaternion::zero(), |s, m| s + t.c[m] * inv[(m, k)])
                        })
                        .collect();
                }
            }
            Op::RealMode2(f) => {
                let inv = invert_real(f)?;
                for t in terms.iter_mut() {
                    t.b = (0..inv.len())
                        .map(|j| {
                            (0..inv.len()).fold(Quaternion::zero(), |s, m| {
                                s + t.b[m].scale(inv[j][m])
                            })
                        })
                        .collect();
                }
            }
        }
    }
    Ok(Decomposition {
        shape: d.shape,
        terms,
        residual: None,
    })
}

/// Factor a decomposition into `A_k = P D_k Q`: P has the a-vectors as
/// columns, Q the c-vectors as rows, and D_k collects the k-th b entries.
pub fn pdq_factor<R: Real>(
    d: &Decomposition<R>,
) -> (HMatrix<R>, Vec<HMatrix<R>>, HMatrix<R>) {
    let (n1, n2, n3) = d.dims();
    let r = d.terms.len();
    let p = HMatrix::from_fn(n1, r, |i, l| d.terms[l].a[i]);
    let q = HMatrix::from_fn(r, n3, |l, k| d.terms[l].c[k]);
    let dks = (0..n2)
        .map(|k| HMatrix::from_fn(r, r, |i, j| {
            if i == j {
                d.terms[i].b[k]
            } else {
                Quaternion::zero()
            }
        }))
        .collect();
    (p, dks, q)
}

/// Rebuild the decomposition from PDQ data.
pub fn decomposition_from_pdq<R: Real>(
    p: &HMatrix<R>,
    dks: &[HMatrix<R>],
    q: &HMatrix<R>,
) -> Result<Decomposition<R>> {
    let r = p.cols;
    if q.rows != r || dks.iter().any(|d| d.rows != r || d.cols != r) {
        return Err(Error::DimensionMismatch(
            "inconsistent PDQ factor shapes".into(),
        ));
    }
    let dims = (p.rows, dks.len(), q.cols);
    let mut out = Decomposition::empty(dims);
    for l in 0..r {
        out.push(SimpleTensor::new(
            p.col(l),
            dks.iter().map(|d| d[(l, l)]).collect(),
            q.row(l),
        ));
    }
    Ok(out)
}

/// Decompose a matrix supported on one slice of the tensor into rank many
/// simple tensors via outer-product elimination. `mode_axis` names the mode
/// whose `slot` index carries the slice; the matrix is indexed by the two
/// remaining modes in increasing order.
pub fn matrix_rank_decomp<R: Real>(
    a: &HMatrix<R>,
    mode_axis: usize,
    slot: usize,
    dims: (usize, usize, usize),
) -> Decomposition<R> {
    let mut out = Decomposition::empty(dims);
    let unit = |len: usize, at: usize| -> Vec<Quaternion<R>> {
        let mut v = vec![Quaternion::zero(); len];
        v[at] = Quaternion::one();
        v
    };
    for (p, q) in a.rank_outer() {
        let term = match mode_axis {
            1 => SimpleTensor::new(unit(dims.0, slot), p, q),
            2 => SimpleTensor::new(p, unit(dims.1, slot), q),
            3 => SimpleTensor::new(p, q, unit(dims.2, slot)),
            _ => unreachable!("mode_axis must be 1, 2 or 3"),
        };
        out.push(term);
    }
    out
}

/// Outcome of the exact-rank test for n x p x n tensors with nonsingular
/// first frontal slice.
#[derive(Debug, Clone)]
pub enum RankCertificate<R: Real = f64> {
    /// rank is exactly n; carries an n-term decomposition.
    ExactlyN(Decomposition<R>),
    /// rank is at least n + 1 (simultaneous diagonalization certifiably
    /// fails).
    MoreThanN,
    /// the test does not apply (singular first slice) or a solver failed.
    Inconclusive,
}

/// Exact-rank certificate: an n x p x n tensor with nonsingular first
/// frontal slice has rank n iff the family {A_j A_1^-1} is simultaneously
/// diagonalizable.
pub fn rank_certificate_square<R: Real>(t: &Tensor3<R>) -> RankCertificate<R> {
    let (n1, n2, n3) = t.dims;
    if n1 != n3 {
        return RankCertificate::Inconclusive;
    }
    let n = n1;
    let a1 = t.frontal_slice(0);
    let a1_inv = match a1.h_inverse() {
        Ok(inv) => inv,
        Err(_) => return RankCertificate::Inconclusive,
    };
    let family: Vec<HMatrix<R>> = (1..n2)
        .map(|j| t.frontal_slice(j).mul(&a1_inv))
        .collect();
    let p = match simultaneous_diagonalize(&family) {
        Ok(p) => p,
        Err(Error::NotSimultaneouslyDiagonalizable) => return RankCertificate::MoreThanN,
        Err(_) => return RankCertificate::Inconclusive,
    };
    let p_inv = match p.h_inverse() {
        Ok(inv) => inv,
        Err(_) => return RankCertificate::Inconclusive,
    };
    // T' = P^-1 T A_1^-1 P = (I; D_2; ...; D_p)
    let mut log = OpLog::new();
    let reduced = apply_op(t, Op::LeftMode1(p_inv), &mut log)
        .and_then(|t| apply_op(&t, Op::RightMode3(a1_inv.mul(&p)), &mut log));
    let reduced = match reduced {
        Ok(r) => r,
        Err(_) => return RankCertificate::Inconclusive,
    };
    let mut diag = Decomposition::empty(t.dims);
    for i in 0..n {
        let mut a = vec![Quaternion::zero(); n];
        a[i] = Quaternion::one();
        let b: Vec<Quaternion<R>> = (0..n2).map(|j| reduced[(i, j, i)]).collect();
        let mut c = vec![Quaternion::zero(); n];
        c[i] = Quaternion::one();
        diag.push(SimpleTensor::new(a, b, c));
    }
    let pulled = match pullback(&diag, &log) {
        Ok(d) => d,
        Err(_) => return RankCertificate::Inconclusive,
    };
    let resid = t.sub(&pulled.densify_sum()).max_norm();
    let scale = R::one() + t.max_norm();
    if resid > R::real(1e-7) * scale {
        return RankCertificate::Inconclusive;
    }
    RankCertificate::ExactlyN(pulled)
}
