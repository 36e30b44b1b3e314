//! Scalar abstraction and the deterministic summation/quadrature primitives
//! shared by every solver.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Real or complex sample type carried by trajectories and convolutions.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn real(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn real(self) -> f64 {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn real(self) -> f64 {
        self.re
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

const PAIRWISE_BLOCK: usize = 64;

/// Sums `term(lo..hi)` by recursive halving with a fixed split rule.
///
/// The reduction tree depends only on `hi - lo`, so the result is
/// bit-reproducible no matter which thread evaluates it.
pub fn pairwise_sum<T, F>(lo: usize, hi: usize, term: &F) -> T
where
    T: Scalar,
    F: Fn(usize) -> T,
{
    if hi <= lo {
        return T::zero();
    }
    if hi - lo <= PAIRWISE_BLOCK {
        let mut acc = T::zero();
        for j in lo..hi {
            acc += term(j);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term)
}

/// Composite trapezoidal rule for samples on a uniform grid of step `h`.
pub fn trapezoid<T: Scalar>(samples: &[T], h: f64) -> T {
    match samples.len() {
        0 | 1 => T::zero(),
        len => {
            let interior = pairwise_sum(1, len - 1, &|j| samples[j]);
            (interior + (samples[0] + samples[len - 1]) * 0.5) * h
        }
    }
}

/// `∫₀ᵀ f(T − r) g(r) dr` by the trapezoidal rule, with both factors sampled on
/// the same uniform grid.
pub fn reversed_inner<A, B>(f: &[A], g: &[B], h: f64) -> B
where
    A: Copy + Sync,
    B: Scalar + Mul<A, Output = B>,
{
    let len = g.len();
    debug_assert_eq!(f.len(), len);
    if len < 2 {
        return B::zero();
    }
    let last = len - 1;
    let interior = pairwise_sum(1, last, &|k| g[k] * f[last - k]);
    (interior + (g[0] * f[last] + g[last] * f[0]) * 0.5) * h
}

/// Squared L² norm of a sampled function (trapezoidal rule).
pub fn l2_norm_sq<T: Scalar>(samples: &[T], h: f64) -> f64 {
    let moduli: Vec<f64> = samples.iter().map(|v| v.modulus().powi(2)).collect();
    trapezoid(&moduli, h)
}

pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).modulus())
        .fold(0.0, f64::max)
}
