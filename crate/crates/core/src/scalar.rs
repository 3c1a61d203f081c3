//! Quaternion scalar arithmetic over a generic real field.
//!
//! Quaternions are stored as `w + x*i + y*j + z*k` with `i^2 = j^2 = k^2 =
//! ijk = -1`. Multiplication is noncommutative; everything downstream is
//! careful about operand order.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive};
use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::util::solve_real;

/// Real scalar backing all arithmetic: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    /// Lift an `f64` literal into the scalar type.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    fn to_f64_lossy(self) -> f64;
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

/// A quaternion `w + x*i + y*j + z*k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion<R = f64> {
    pub w: R,
    pub x: R,
    pub y: R,
    pub z: R,
}

impl<R: Real> Quaternion<R> {
    pub fn new(w: R, x: R, y: R, z: R) -> Self {
        Self { w, x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero(), R::zero(), R::zero())
    }

    pub fn one() -> Self {
        Self::from_real(R::one())
    }

    pub fn from_real(w: R) -> Self {
        Self::new(w, R::zero(), R::zero(), R::zero())
    }

    pub fn from_f64s(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::new(R::real(w), R::real(x), R::real(y), R::real(z))
    }

    pub fn i() -> Self {
        Self::new(R::zero(), R::one(), R::zero(), R::zero())
    }

    pub fn j() -> Self {
        Self::new(R::zero(), R::zero(), R::one(), R::zero())
    }

    pub fn k() -> Self {
        Self::new(R::zero(), R::zero(), R::zero(), R::one())
    }

    pub fn from_complex(c: Complex<R>) -> Self {
        Self::new(c.re, c.im, R::zero(), R::zero())
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> R {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> R {
        self.norm_sqr().sqrt()
    }

    /// Real part.
    pub fn re(self) -> R {
        self.w
    }

    /// Norm of the imaginary part.
    pub fn im_norm(self) -> R {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_zero_within(self, tol: R) -> bool {
        self.norm() <= tol
    }

    /// True when the j and k parts vanish within `tol`.
    pub fn is_complex_within(self, tol: R) -> bool {
        (self.y * self.y + self.z * self.z).sqrt() <= tol
    }

    /// The complex slice `w + x*i`, discarding j and k parts.
    pub fn complex_part(self) -> Complex<R> {
        Complex::new(self.w, self.x)
    }

    pub fn scale(self, s: R) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Multiplicative inverse `conj(q) / |q|^2`.
    pub fn inv(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > R::zero()) || !n2.is_finite() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.conj().scale(n2.recip()))
    }

    /// Similarity invariant `(Re q, |Im q|)`; two quaternions are similar
    /// (equivalent) exactly when these agree.
    pub fn similarity_class(self) -> (R, R) {
        (self.re(), self.im_norm())
    }

    /// Whether `self` and `other` belong to the same similarity class,
    /// comparing both invariants with an absolute-plus-relative tolerance.
    pub fn similar_to(self, other: Self, tol: R) -> bool {
        let (r1, m1) = self.similarity_class();
        let (r2, m2) = other.similarity_class();
        let scale = R::one() + self.norm().max(other.norm());
        (r1 - r2).abs() <= tol * scale && (m1 - m2).abs() <= tol * scale
    }

    pub fn components(self) -> [R; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_components(c: [R; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }
}

impl<R: Real> Add for Quaternion<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<R: Real> AddAssign for Quaternion<R> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<R: Real> Sub for Quaternion<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<R: Real> SubAssign for Quaternion<R> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<R: Real> Neg for Quaternion<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Hamilton product.
impl<R: Real> Mul for Quaternion<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

/// Right division `self * o^-1`; panics on a zero divisor. Algorithms that
/// must stay total call `inv` explicitly instead.
impl<R: Real> Div for Quaternion<R> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.inv().expect("division by zero quaternion")
    }
}

impl<R: Real> fmt::Display for Quaternion<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i{:+}j{:+}k", self.w, self.x, self.y, self.z)
    }
}

impl<R: Real + Serialize> Serialize for Quaternion<R> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(4))?;
        seq.serialize_element(&self.w)?;
        seq.serialize_element(&self.x)?;
        seq.serialize_element(&self.y)?;
        seq.serialize_element(&self.z)?;
        seq.end()
    }
}

impl<'de, R: Real + Deserialize<'de>> Deserialize<'de> for Quaternion<R> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct QVisitor<R>(std::marker::PhantomData<R>);
        impl<'de, R: Real + Deserialize<'de>> Visitor<'de> for QVisitor<R> {
            type Value = Quaternion<R>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a [w, x, y, z] array of four finite numbers")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let w: R = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let x: R = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let y: R = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(2, &self))?;
                let z: R = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(3, &self))?;
                if seq.next_element::<R>()?.is_some() {
                    return Err(de::Error::invalid_length(5, &self));
                }
                let q = Quaternion::new(w, x, y, z);
                if !(q.w.is_finite() && q.x.is_finite() && q.y.is_finite() && q.z.is_finite()) {
                    return Err(de::Error::custom("non-finite quaternion component"));
                }
                Ok(q)
            }
        }
        d.deserialize_seq(QVisitor(std::marker::PhantomData))
    }
}

/// The unique splitting `q = c1 + c2 * j` with complex `c1`, `c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPair<R = f64> {
    pub c1: Complex<R>,
    pub c2: Complex<R>,
}

impl<R: Real> ComplexPair<R> {
    pub fn from_quaternion(q: Quaternion<R>) -> Self {
        Self {
            c1: Complex::new(q.w, q.x),
            c2: Complex::new(q.y, q.z),
        }
    }

    pub fn to_quaternion(self) -> Quaternion<R> {
        Quaternion::new(self.c1.re, self.c1.im, self.c2.re, self.c2.im)
    }

    /// Cayley-Dickson product: `(a1 + a2 j)(b1 + b2 j) =
    /// (a1 b1 - a2 conj(b2)) + (a1 b2 + a2 conj(b1)) j`.
    pub fn mul(self, o: Self) -> Self {
        Self {
            c1: self.c1 * o.c1 - self.c2 * o.c2.conj(),
            c2: self.c1 * o.c2 + self.c2 * o.c1.conj(),
        }
    }
}

/// 4x4 real matrix of left multiplication: `vec(q * p) = L(q) * vec(p)`.
pub fn left_mul_matrix<R: Real>(q: Quaternion<R>) -> [[R; 4]; 4] {
    let (a, b, c, d) = (q.w, q.x, q.y, q.z);
    [
        [a, -b, -c, -d],
        [b, a, -d, c],
        [c, d, a, -b],
        [d, -c, b, a],
    ]
}

/// 4x4 real matrix of right multiplication: `vec(p * q) = R(q) * vec(p)`.
pub fn right_mul_matrix<R: Real>(q: Quaternion<R>) -> [[R; 4]; 4] {
    let (a, b, c, d) = (q.w, q.x, q.y, q.z);
    [
        [a, -b, -c, -d],
        [b, a, d, -c],
        [c, -d, a, b],
        [d, c, -b, a],
    ]
}

/// Residual of the two-sided quadratic `x^2 + alpha x + x beta - gamma`.
pub fn quadratic_residual<R: Real>(
    x: Quaternion<R>,
    alpha: Quaternion<R>,
    beta: Quaternion<R>,
    gamma: Quaternion<R>,
) -> Quaternion<R> {
    x * x + alpha * x + x * beta - gamma
}

/// Solve `x^2 + alpha x + x beta - gamma = 0` by damped Newton iteration on
/// the four real components, restarting from a deterministic set of seeds.
/// Among converged roots the one with the largest `|Re(x)|` wins, matching
/// the diagonalization step that consumes it.
pub fn solve_quadratic<R: Real>(
    alpha: Quaternion<R>,
    beta: Quaternion<R>,
    gamma: Quaternion<R>,
) -> Result<Quaternion<R>> {
    let scale = R::one() + alpha.norm().max(beta.norm()).max(gamma.norm());
    let tol = R::real(1e-10) * scale;

    let mut starts: Vec<Quaternion<R>> = Vec::new();
    // Complex-slice warm starts: with all data restricted to the complex
    // slice the equation collapses to x^2 + (alpha + beta) x - gamma = 0.
    let p = alpha.complex_part() + beta.complex_part();
    let g = gamma.complex_part();
    let half = Complex::new(R::real(0.5), R::zero());
    let disc = (p * p + g * (R::real(4.0))).sqrt();
    starts.push(Quaternion::from_complex((-p + disc) * half));
    starts.push(Quaternion::from_complex((-p - disc) * half));
    starts.push(Quaternion::one());
    starts.push(-Quaternion::<R>::one());
    starts.push(gamma.scale((R::one() + gamma.norm()).recip()));
    // Deterministic pseudo-random starts spread over a ball of radius ~ scale.
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    while starts.len() < 48 {
        let mut comp = [R::zero(); 4];
        for c in comp.iter_mut() {
            state = crate::util::splitmix64(state);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            *c = R::real(2.0 * u - 1.0) * scale;
        }
        starts.push(Quaternion::from_components(comp));
    }

    let mut best: Option<Quaternion<R>> = None;
    for &start in &starts {
        if let Some(root) = newton_quadratic(start, alpha, beta, gamma, tol) {
            let better = match best {
                None => true,
                Some(b) => root.re().abs() > b.re().abs(),
            };
            if better {
                best = Some(root);
            }
            // A root with a solidly nonzero real part is all callers need.
            if root.re().abs() > R::real(1e-4) * scale {
                break;
            }
        }
    }
    best.ok_or(Error::SolveBudgetExceeded)
}

fn newton_quadratic<R: Real>(
    start: Quaternion<R>,
    alpha: Quaternion<R>,
    beta: Quaternion<R>,
    gamma: Quaternion<R>,
    tol: R,
) -> Option<Quaternion<R>> {
    let mut x = start;
    let mut r = quadratic_residual(x, alpha, beta, gamma);
    // Iterate well past `tol`; Newton is quadratic near a simple root, so
    // the extra steps polish the residual toward machine precision.
    let polish = tol * R::real(1e-4);
    for _ in 0..80 {
        if r.norm() <= polish {
            return Some(x);
        }
        // d/dx (x^2 + alpha x + x beta) = L(x) + R(x) + L(alpha) + R(beta).
        let lx = left_mul_matrix(x);
        let rx = right_mul_matrix(x);
        let la = left_mul_matrix(alpha);
        let rb = right_mul_matrix(beta);
        let mut jac = [[R::zero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                jac[i][j] = lx[i][j] + rx[i][j] + la[i][j] + rb[i][j];
            }
        }
        let mut a: Vec<Vec<R>> = jac.iter().map(|row| row.to_vec()).collect();
        let mut rhs: Vec<R> = r.components().to_vec();
        if solve_real(&mut a, &mut rhs).is_err() {
            return None;
        }
        let step = Quaternion::new(rhs[0], rhs[1], rhs[2], rhs[3]);
        // Backtracking line search on the residual norm.
        let mut t = R::one();
        let mut accepted = false;
        for _ in 0..30 {
            let cand = x - step.scale(t);
            let rc = quadratic_residual(cand, alpha, beta, gamma);
            if rc.norm() < r.norm() {
                x = cand;
                r = rc;
                accepted = true;
                break;
            }
            t = t * R::real(0.5);
        }
        if !accepted {
            break;
        }
    }
    if r.norm() <= tol {
        Some(x)
    } else {
        None
    }
}
