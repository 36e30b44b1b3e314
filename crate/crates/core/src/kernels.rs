//! Memory kernels and the derived relaxation/stress kernels.
//!
//! With `N(t) = 1 + ∫₀ᵗ M` and `α = −M(0)/2`:
//!
//! ```text
//! N_α = e^{2αt} N          M_α = e^{2αt} M
//! H   = N_α' − 2α N_α      K   = N_α + F,   F = N_α ∗ M_α
//! N_0 = N_α'' − α N_α'     N_1 = α N_0 − N_0'
//! L   = −N_α' ∗ L − N_α'   (resolvent of −N_α')
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volterra::{convolve, solve_volterra_second_kind, TimeGrid};

/// Highest supported polynomial degree.
pub const MAX_POLYNOMIAL_DEGREE: usize = 4;

/// One term `a e^{−b t}` of an exponential-sum kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amplitude: f64,
    pub rate: f64,
}

/// Analytic memory kernel `M(t)`; `M`, `M'`, `M''` and `∫M` are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "coefficients", rename_all = "snake_case")]
pub enum MemoryKernel {
    Zero,
    /// `M(t) = Σ a_i e^{−b_i t}`, every `b_i > 0`.
    ExponentialSum(Vec<ExpTerm>),
    /// `M(t) = Σ c_k t^k`, degree at most 4.
    Polynomial(Vec<f64>),
}

impl MemoryKernel {
    pub fn exponential_sum(pairs: &[(f64, f64)]) -> Result<Self> {
        let kernel = MemoryKernel::ExponentialSum(
            pairs.iter().map(|&(amplitude, rate)| ExpTerm { amplitude, rate }).collect(),
        );
        kernel.validate()?;
        Ok(kernel)
    }

    pub fn polynomial(coefficients: &[f64]) -> Result<Self> {
        let kernel = MemoryKernel::Polynomial(coefficients.to_vec());
        kernel.validate()?;
        Ok(kernel)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MemoryKernel::Zero => Ok(()),
            MemoryKernel::ExponentialSum(terms) => {
                for t in terms {
                    if !(t.amplitude.is_finite() && t.rate.is_finite()) {
                        return Err(Error::InvalidKernel("non-finite exponential coefficient".into()));
                    }
                    if t.rate <= 0.0 {
                        return Err(Error::InvalidKernel(format!(
                            "exponential rate must be positive, got {}",
                            t.rate
                        )));
                    }
                }
                Ok(())
            }
            MemoryKernel::Polynomial(c) => {
                if c.len() > MAX_POLYNOMIAL_DEGREE + 1 {
                    return Err(Error::InvalidKernel(format!(
                        "polynomial degree {} exceeds {MAX_POLYNOMIAL_DEGREE}",
                        c.len() - 1
                    )));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidKernel("non-finite polynomial coefficient".into()));
                }
                Ok(())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            MemoryKernel::Zero => "zero",
            MemoryKernel::ExponentialSum(_) => "exponential_sum",
            MemoryKernel::Polynomial(_) => "polynomial",
        }
    }

    /// Flat coefficient list: `(a_1, b_1, a_2, b_2, …)` or `(c_0, …, c_d)`.
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            MemoryKernel::Zero => Vec::new(),
            MemoryKernel::ExponentialSum(terms) => {
                terms.iter().flat_map(|t| [t.amplitude, t.rate]).collect()
            }
            MemoryKernel::Polynomial(c) => c.clone(),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            MemoryKernel::Zero => true,
            MemoryKernel::ExponentialSum(terms) => terms.iter().all(|t| t.amplitude == 0.0),
            MemoryKernel::Polynomial(c) => c.iter().all(|&v| v == 0.0),
        }
    }

    /// `d^order M / dt^order` at `t`, for `order ≤ 2`.
    pub fn derivative(&self, order: u32, t: f64) -> f64 {
        match self {
            MemoryKernel::Zero => 0.0,
            MemoryKernel::ExponentialSum(terms) => terms
                .iter()
                .map(|e| e.amplitude * (-e.rate).powi(order as i32) * (-e.rate * t).exp())
                .sum(),
            MemoryKernel::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(order as usize)
                .map(|(k, &ck)| {
                    let falling: f64 = (0..order).map(|i| (k as u32 - i) as f64).product();
                    ck * falling * t.powi(k as i32 - order as i32)
                })
                .sum(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `∫₀ᵗ M(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            MemoryKernel::Zero => 0.0,
            MemoryKernel::ExponentialSum(terms) => terms
                .iter()
                .map(|e| -(e.amplitude / e.rate) * (-e.rate * t).exp_m1())
                .sum(),
            MemoryKernel::Polynomial(c) => c
                .iter()
                .enumerate()
                .map(|(k, &ck)| ck * t.powi(k as i32 + 1) / (k as f64 + 1.0))
                .sum(),
        }
    }

    /// `α = −N'(0)/2 = −M(0)/2`.
    pub fn alpha(&self) -> f64 {
        -0.5 * self.value(0.0)
    }

    /// `N(t) = 1 + ∫₀ᵗ M`.
    pub fn relaxation(&self, t: f64) -> f64 {
        1.0 + self.integral(t)
    }

    /// Derivatives of `N_α` up to order 3, in closed form.
    pub fn relaxation_alpha_derivatives(&self, t: f64) -> [f64; 4] {
        let a = self.alpha();
        let e = (2.0 * a * t).exp();
        let n = self.relaxation(t);
        let m0 = self.value(t);
        let m1 = self.derivative(1, t);
        let m2 = self.derivative(2, t);
        [
            e * n,
            e * (2.0 * a * n + m0),
            e * (4.0 * a * a * n + 4.0 * a * m0 + m1),
            e * (8.0 * a * a * a * n + 12.0 * a * a * m0 + 6.0 * a * m1 + m2),
        ]
    }

    /// `N_α(t) = Σ c_i e^{−λ_i t}` as `(c_i, λ_i)` pairs, when the kernel is an
    /// exponential sum (or zero).
    pub fn relaxation_alpha_exponentials(&self) -> Option<Vec<(f64, f64)>> {
        let a = self.alpha();
        match self {
            MemoryKernel::Zero => Some(vec![(1.0, -2.0 * a)]),
            MemoryKernel::ExponentialSum(terms) => {
                let plateau = 1.0 + terms.iter().map(|e| e.amplitude / e.rate).sum::<f64>();
                let mut out = vec![(plateau, -2.0 * a)];
                out.extend(terms.iter().map(|e| (-e.amplitude / e.rate, e.rate - 2.0 * a)));
                Some(out)
            }
            MemoryKernel::Polynomial(_) => None,
        }
    }
}

/// Result of the exceptional-index scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexCheck {
    /// Some `β_n` with `n ≤ n_max` is purely imaginary (`α² > 1`).
    pub complex_frequencies: bool,
}

fn is_exceptional(alpha: f64, n: i64) -> bool {
    let n2 = (n as f64).powi(2);
    (alpha * alpha - n2).abs() <= 1e-12 * n2
}

/// Fails with `ExceptionalIndex(n)` when `α² = n²` for some `1 ≤ n ≤ n_max`.
pub fn exceptional_index_check(kernel: &MemoryKernel, n_max: u64) -> Result<IndexCheck> {
    let alpha = kernel.alpha();
    for n in 1..=n_max as i64 {
        if is_exceptional(alpha, n) {
            return Err(Error::ExceptionalIndex(n));
        }
    }
    Ok(IndexCheck { complex_frequencies: alpha * alpha > 1.0 })
}

pub(crate) fn exceptional(alpha: f64, n: i64) -> bool {
    is_exceptional(alpha, n)
}

/// All derived kernels sampled on one grid. Immutable once built.
#[derive(Debug, Clone)]
pub struct DerivedKernelSet {
    kernel: MemoryKernel,
    grid: TimeGrid,
    alpha: f64,
    relaxation: Vec<f64>,
    relaxation_alpha: Vec<f64>,
    relaxation_alpha_rate: Vec<f64>,
    memory_alpha: Vec<f64>,
    velocity_kernel: Vec<f64>,
    stress_kernel: Vec<f64>,
    stress_excess: Vec<f64>,
    n0: Vec<f64>,
    n0_at_zero: f64,
    n1: Vec<f64>,
    resolvent: Vec<f64>,
}

impl DerivedKernelSet {
    pub fn derive(kernel: &MemoryKernel, grid: &TimeGrid) -> Result<Self> {
        kernel.validate()?;
        if grid.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        let alpha = kernel.alpha();
        let derivs: Vec<[f64; 4]> = grid.sample(|t| kernel.relaxation_alpha_derivatives(t));
        let relaxation = grid.sample(|t| kernel.relaxation(t));
        let relaxation_alpha: Vec<f64> = derivs.iter().map(|d| d[0]).collect();
        let relaxation_alpha_rate: Vec<f64> = derivs.iter().map(|d| d[1]).collect();
        let memory_alpha = grid.sample(|t| (2.0 * alpha * t).exp() * kernel.value(t));
        let velocity_kernel: Vec<f64> = derivs.iter().map(|d| d[1] - 2.0 * alpha * d[0]).collect();
        let stress_excess = convolve(&relaxation_alpha, &memory_alpha, grid)?;
        let stress_kernel = relaxation_alpha.iter().zip(&stress_excess).map(|(a, b)| a + b).collect();
        let n0: Vec<f64> = derivs.iter().map(|d| d[2] - alpha * d[1]).collect();
        let n1 = derivs
            .iter()
            .zip(&n0)
            .map(|(d, &n0t)| alpha * n0t - (d[3] - alpha * d[2]))
            .collect();
        let negated_rate: Vec<f64> = relaxation_alpha_rate.iter().map(|v| -v).collect();
        let resolvent = solve_volterra_second_kind(&negated_rate, &negated_rate, grid)?;
        Ok(DerivedKernelSet {
            kernel: kernel.clone(),
            grid: *grid,
            alpha,
            relaxation,
            relaxation_alpha,
            relaxation_alpha_rate,
            memory_alpha,
            velocity_kernel,
            stress_kernel,
            stress_excess,
            n0_at_zero: n0[0],
            n0,
            n1,
            resolvent,
        })
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// `N`.
    pub fn relaxation(&self) -> &[f64] {
        &self.relaxation
    }
    /// `N_α`.
    pub fn relaxation_alpha(&self) -> &[f64] {
        &self.relaxation_alpha
    }
    /// `N_α'`.
    pub fn relaxation_alpha_rate(&self) -> &[f64] {
        &self.relaxation_alpha_rate
    }
    /// `M_α`.
    pub fn memory_alpha(&self) -> &[f64] {
        &self.memory_alpha
    }
    /// `H = N_α' − 2α N_α`, the kernel of the velocity series.
    pub fn velocity_kernel(&self) -> &[f64] {
        &self.velocity_kernel
    }
    /// `K = N_α + N_α ∗ M_α`, the kernel of the stress series.
    pub fn stress_kernel(&self) -> &[f64] {
        &self.stress_kernel
    }
    /// `F = N_α ∗ M_α = K − N_α`.
    pub fn stress_excess(&self) -> &[f64] {
        &self.stress_excess
    }
    pub fn n0(&self) -> &[f64] {
        &self.n0
    }
    pub fn n0_at_zero(&self) -> f64 {
        self.n0_at_zero
    }
    pub fn n1(&self) -> &[f64] {
        &self.n1
    }
    /// Resolvent `L` of `−N_α'`.
    pub fn resolvent(&self) -> &[f64] {
        &self.resolvent
    }
}
