//! Moment problems over the family `Z_n`.
//!
//! Steering the velocity/stress pair to `(ξ_n, η_n)` at time `T` amounts to
//!
//! ```text
//! ∫₀ᵀ Z_n(s) f̃(T−s) ds = γ_n = ξ_n + i η_n,   n ∈ {±1, …, ±n_max},
//! ```
//!
//! with `Z_{−n} = conj(Z_n)` and `γ_{−n} = conj(γ_n)`. The minimal-norm
//! solution lives in the span of `conj(Z_m)`, which turns the problem into a
//! Hermitian Gram system.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::DerivedKernelSet;
use crate::linalg::{hermitian_eigenvalues, Cholesky, Matrix};
use crate::numeric::{l2_norm_sq, max_abs_diff, pairwise_sum, reversed_inner};
use crate::spectral::{simulate_coefficients, ControlSignal, ModeParams};
use crate::volterra::{
    assemble_big_z, convolve_unchecked, solve_mode_big_z_ode, solve_mode_zn, ModeTrajectory,
};

/// Horizon above which the family is known to be a Riesz sequence.
pub const CRITICAL_HORIZON: f64 = 2.0 * std::f64::consts::PI;

/// Cross-check tolerance of [`build_family`], in units of `h²`.
pub const CROSS_CHECK_FACTOR: f64 = 100.0;

/// `λ_min ≤ NEAR_SINGULAR_FACTOR · ε · λ_max` flags loss of the Riesz property.
pub const NEAR_SINGULAR_FACTOR: f64 = 1e3;

/// Condition number above which the pair problem warns about large controls.
pub const ILL_CONDITIONED: f64 = 1e8;

/// Velocity/stress targets for modes `1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTarget {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl MomentTarget {
    /// Pads the shorter list with zeros so both cover `1..=n_max`.
    pub fn new(xi: &[f64], eta: &[f64]) -> Result<Self> {
        let n_max = xi.len().max(eta.len());
        let pad = |v: &[f64]| {
            let mut out = v.to_vec();
            out.resize(n_max, 0.0);
            out
        };
        let target = MomentTarget { xi: pad(xi), eta: pad(eta) };
        if target.xi.iter().chain(&target.eta).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("moment target"));
        }
        Ok(target)
    }

    pub fn zero(n_max: usize) -> Self {
        MomentTarget { xi: vec![0.0; n_max], eta: vec![0.0; n_max] }
    }

    pub fn n_max(&self) -> usize {
        self.xi.len()
    }

    /// `γ_n` for `n ≠ 0`, `|n| ≤ n_max`, with `γ_{−n} = conj(γ_n)`.
    pub fn gamma(&self, n: i64) -> Complex64 {
        let idx = n.unsigned_abs() as usize - 1;
        let g = Complex64::new(self.xi[idx], self.eta[idx]);
        if n > 0 {
            g
        } else {
            g.conj()
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.xi.iter().chain(&self.eta).map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `z_n` and `Z_n` for `n = 1..=n_max`, with the dual-construction check.
#[derive(Debug, Clone)]
pub struct ModeFamily {
    pub little: Vec<ModeTrajectory>,
    pub big: Vec<ModeTrajectory>,
    /// `max_n max_t |Z_n^{ode} − Z_n^{assembled}|`.
    pub cross_check_deviation: f64,
}

impl ModeFamily {
    pub fn n_max(&self) -> usize {
        self.big.len()
    }
}

/// Builds `Z_1..Z_{n_max}` by the ODE route and cross-checks every member
/// against the assembly `z_n + H ∗ z_n + i n K ∗ z_n`.
pub fn build_family(kernels: &DerivedKernelSet, n_max: usize) -> Result<ModeFamily> {
    kernels.grid().check_resolution(n_max as u64)?;
    let h = kernels.grid().step();
    let bound = CROSS_CHECK_FACTOR * h * h;
    let members = (1..=n_max as i64)
        .into_par_iter()
        .map(|n| {
            let little = solve_mode_zn(n, kernels)?;
            let big = solve_mode_big_z_ode(n, kernels)?;
            let assembled = assemble_big_z(&little, kernels)?;
            let deviation = max_abs_diff(&big.samples, &assembled.samples);
            if deviation > bound {
                return Err(Error::CrossCheck { n, deviation, bound });
            }
            Ok((little, big, deviation))
        })
        .collect::<Result<Vec<_>>>()?;
    let cross_check_deviation = members.iter().map(|m| m.2).fold(0.0, f64::max);
    let (little, big) = members.into_iter().map(|(l, b, _)| (l, b)).unzip();
    Ok(ModeFamily { little, big, cross_check_deviation })
}

/// Hermitian Gram matrix of `{Z_n}_{0<|n|≤n_max}` in `L²(0, T)`.
#[derive(Debug, Clone)]
pub struct GramSystem {
    /// Row/column labels: `1..=n_max` followed by `−1..=−n_max`.
    pub indices: Vec<i64>,
    pub matrix: Matrix<Complex64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    pub alpha: f64,
    pub grid: crate::volterra::TimeGrid,
    functions: Vec<Vec<Complex64>>,
}

impl GramSystem {
    pub fn hermitian_defect(&self) -> f64 {
        self.matrix.hermitian_defect()
    }

    pub fn is_near_singular(&self) -> bool {
        self.lambda_min <= NEAR_SINGULAR_FACTOR * f64::EPSILON * self.lambda_max
    }

    /// Sampled `Z_n` for the row labelled `n`.
    pub fn function(&self, n: i64) -> Option<&[Complex64]> {
        self.indices.iter().position(|&m| m == n).map(|i| self.functions[i].as_slice())
    }
}

fn signed_family(big: &[ModeTrajectory]) -> (Vec<i64>, Vec<Vec<Complex64>>) {
    let mut indices: Vec<i64> = big.iter().map(|t| t.n).collect();
    let mut functions: Vec<Vec<Complex64>> = big.iter().map(|t| t.samples.clone()).collect();
    for t in big {
        let m = t.mirrored();
        indices.push(m.n);
        functions.push(m.samples);
    }
    (indices, functions)
}

fn inner(a: &[Complex64], b: &[Complex64], h: f64) -> Complex64 {
    let n = a.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let term = |k: usize| a[k] * b[k].conj();
    (pairwise_sum(1, n - 1, &term) + (term(0) + term(n - 1)) * 0.5) * h
}

fn gram_matrix(functions: &[Vec<Complex64>], h: f64) -> Matrix<Complex64> {
    let dim = functions.len();
    let upper: Vec<(usize, usize, Complex64)> = (0..dim)
        .flat_map(|i| (i..dim).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| (i, j, inner(&functions[i], &functions[j], h)))
        .collect();
    let mut g = Matrix::zeros(dim);
    for (i, j, v) in upper {
        if i == j {
            g.set(i, i, Complex64::new(v.re, 0.0));
        } else {
            g.set(i, j, v);
            g.set(j, i, v.conj());
        }
    }
    g
}

/// `G_{mn} = ∫₀ᵀ Z_m conj(Z_n) dt` over `m, n ∈ {±1..±n_max}`, with its
/// extreme eigenvalues.
pub fn gram(family: &ModeFamily, kernels: &DerivedKernelSet) -> GramSystem {
    let (indices, functions) = signed_family(&family.big);
    let matrix = gram_matrix(&functions, kernels.grid().step());
    let eig = hermitian_eigenvalues(&matrix);
    let lambda_min = eig.first().copied().unwrap_or(0.0);
    let lambda_max = eig.last().copied().unwrap_or(0.0);
    GramSystem {
        indices,
        matrix,
        lambda_min,
        lambda_max,
        condition: lambda_max / lambda_min,
        alpha: kernels.alpha(),
        grid: *kernels.grid(),
        functions,
    }
}

/// Outcome of a steering computation.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesisReport {
    /// Physical boundary input `f`.
    pub control: ControlSignal,
    /// Rescaled input `f̃ = e^{2αt} f` seen by the moment problem.
    pub rescaled_control: Vec<f64>,
    pub mode_indices: Vec<i64>,
    pub targets: Vec<Complex64>,
    pub achieved: Vec<Complex64>,
    pub residuals: Vec<Complex64>,
    pub max_relative_residual: f64,
    /// `‖f̃‖_{L²(0,T)}`.
    pub control_norm: f64,
    /// `‖f‖_{L²(0,T)}`.
    pub physical_control_norm: f64,
    /// `aᴴ G a`, which equals `‖f̃‖²` for the minimal-norm ansatz.
    pub gram_energy: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    /// Largest `|Im f̃|` relative to `‖f̃‖` before the imaginary part is dropped.
    pub imaginary_leak: f64,
    pub warnings: Vec<String>,
}

fn relative_residual(residuals: &[Complex64], targets: &[Complex64]) -> f64 {
    let scale = targets.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt();
    let worst = residuals.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// `∫₀ᵀ Z(s) f̃(T−s) ds`.
pub fn moment(function: &[Complex64], rescaled_control: &[f64], h: f64) -> Complex64 {
    reversed_inner(rescaled_control, function, h)
}

/// Minimal-norm control with `∫₀ᵀ Z_n(s) f̃(T−s) ds = γ_n` for `0 < |n| ≤ n_max`.
///
/// `f̃(T−s) = Σ_m a_m conj(Z_m(s))` with `G a = γ` solved by Cholesky.
pub fn synthesize_control(gram: &GramSystem, target: &MomentTarget) -> Result<SynthesisReport> {
    let n_max = gram.indices.len() / 2;
    if target.n_max() > n_max {
        return Err(Error::Config(format!(
            "target covers {} modes but the family only {n_max}",
            target.n_max()
        )));
    }
    if gram.is_near_singular() {
        return Err(Error::NearSingularGram { lambda_min: gram.lambda_min, lambda_max: gram.lambda_max });
    }
    let mut warnings = Vec::new();
    if gram.grid.horizon() < CRITICAL_HORIZON * (1.0 - 1e-12) {
        warnings.push(format!(
            "horizon {:.6} is below 2*pi; the family need not be a Riesz sequence",
            gram.grid.horizon()
        ));
    }
    let padded = MomentTarget::new(&target.xi, &target.eta)?;
    let gamma: Vec<Complex64> = gram
        .indices
        .iter()
        .map(|&n| if (n.unsigned_abs() as usize) <= padded.n_max() { padded.gamma(n) } else { Complex64::new(0.0, 0.0) })
        .collect();
    let coeffs = Cholesky::factor(&gram.matrix)
        .map_err(|_| Error::NearSingularGram { lambda_min: gram.lambda_min, lambda_max: gram.lambda_max })?
        .solve(&gamma);
    let gram_energy = coeffs
        .iter()
        .zip(gram.matrix.mul_vec(&coeffs))
        .map(|(a, ga)| (a.conj() * ga).re)
        .sum::<f64>();

    let grid = gram.grid;
    let len = grid.len();
    let reversed: Vec<Complex64> = (0..len)
        .into_par_iter()
        .map(|k| {
            // f̃(t_k) = Σ_m a_m conj(Z_m(T − t_k))
            let s = len - 1 - k;
            let term = |m: usize| coeffs[m] * gram.functions[m][s].conj();
            pairwise_sum(0, coeffs.len(), &term)
        })
        .collect();
    let h = grid.step();
    let rescaled: Vec<f64> = reversed.iter().map(|v| v.re).collect();
    let control_norm = l2_norm_sq(&rescaled, h).sqrt();
    let imaginary_leak = if control_norm > 0.0 {
        reversed.iter().map(|v| v.im.abs()).fold(0.0, f64::max) / control_norm
    } else {
        0.0
    };

    let positive: Vec<usize> = (0..gram.indices.len()).filter(|&i| gram.indices[i] > 0).collect();
    let mode_indices: Vec<i64> = positive.iter().map(|&i| gram.indices[i]).collect();
    let targets: Vec<Complex64> = positive.iter().map(|&i| gamma[i]).collect();
    let achieved: Vec<Complex64> =
        positive.iter().map(|&i| moment(&gram.functions[i], &rescaled, h)).collect();
    let residuals: Vec<Complex64> = achieved.iter().zip(&targets).map(|(a, t)| a - t).collect();
    let control = ControlSignal::from_rescaled(grid, &rescaled, gram.alpha)?;
    Ok(SynthesisReport {
        physical_control_norm: control.l2_norm(),
        control,
        rescaled_control: rescaled,
        mode_indices,
        max_relative_residual: relative_residual(&residuals, &targets),
        targets,
        achieved,
        residuals,
        control_norm,
        gram_energy,
        lambda_min: gram.lambda_min,
        lambda_max: gram.lambda_max,
        condition: gram.condition,
        imaginary_leak,
        warnings,
    })
}

/// Minimal-norm real `u` with `∫₀ᵀ φ_m(s) u(T − s) ds = b_m` under the
/// trapezoid rule, returned as samples of `u` in time order.
///
/// With weights `w_k` and `A_{km} = √w_k φ_m(t_k)` the constraints read
/// `Aᵀ v = b` for `v_k = √w_k u(T − t_k)`, solved by the SVD of `A`. The
/// Gram matrix `AᵀA` is never formed, so its eigenvalues `s²` stay accurate
/// far below `ε · λ_max`. Rejects `s_min ≤ 10³ ε s_max`.
fn minimal_norm_real(functions: &[Vec<f64>], rhs: &[f64], grid: &crate::volterra::TimeGrid) -> Result<(Vec<f64>, f64, f64)> {
    let len = grid.len();
    let h = grid.step();
    let weight = |k: usize| if k == 0 || k == len - 1 { 0.5 * h } else { h };
    let a = DMatrix::from_fn(len, functions.len(), |k, m| weight(k).sqrt() * functions[m][k]);
    let svd = a.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let (lambda_min, lambda_max) = (s_min * s_min, s_max * s_max);
    if !(s_min > NEAR_SINGULAR_FACTOR * f64::EPSILON * s_max) {
        return Err(Error::NearSingularGram { lambda_min, lambda_max });
    }
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::NonFinite("singular vectors"));
    };
    let b = DVector::from_column_slice(rhs);
    let coeffs = (&v_t * b).component_div(&svd.singular_values);
    let v = u * coeffs;
    let rescaled = (0..len).map(|k| v[len - 1 - k] / weight(len - 1 - k).sqrt()).collect();
    Ok((rescaled, lambda_min, lambda_max))
}

/// Deformation/stress pair problem for modes `1..=N_f` on any horizon.
///
/// `w_n = c_n` and `σ_n − w_n = d_n − c_n` are `2 N_f` real moment equations
/// against `n (N_α ∗ z_n)` and `n (F ∗ z_n)`; the minimal-norm real `f̃`
/// comes from [`minimal_norm_real`]. The report's targets are `c_n + i d_n`
/// and the achieved values `w_n + i σ_n` from a round trip through
/// [`simulate_coefficients`].
pub fn finite_pair_control(kernels: &DerivedKernelSet, c: &[f64], d: &[f64]) -> Result<SynthesisReport> {
    if c.len() != d.len() {
        return Err(Error::LengthMismatch { expected: c.len(), found: d.len() });
    }
    if c.iter().chain(d).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pair targets"));
    }
    let n_f = c.len();
    let elastic = kernels.kernel().is_identically_zero();
    if elastic && c != d {
        return Err(Error::ElasticDegeneracy);
    }
    let grid = *kernels.grid();
    grid.check_resolution(n_f as u64)?;
    let h = grid.step();
    let little: Vec<ModeTrajectory> = (1..=n_f as i64)
        .into_par_iter()
        .map(|n| solve_mode_zn(n, kernels))
        .collect::<Result<_>>()?;

    let mut functions: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for traj in &little {
        let z = traj.real_parts();
        let nf = traj.n as f64;
        let deformation: Vec<f64> =
            convolve_unchecked(kernels.relaxation_alpha(), &z, h).iter().map(|v| nf * v).collect();
        functions.push(deformation);
        rhs.push(c[traj.n as usize - 1]);
    }
    if !elastic {
        for traj in &little {
            let z = traj.real_parts();
            let nf = traj.n as f64;
            let excess: Vec<f64> =
                convolve_unchecked(kernels.stress_excess(), &z, h).iter().map(|v| nf * v).collect();
            functions.push(excess);
            let i = traj.n as usize - 1;
            rhs.push(d[i] - c[i]);
        }
    }

    let (rescaled, lambda_min, lambda_max) = minimal_norm_real(&functions, &rhs, &grid)?;
    let gram_energy = l2_norm_sq(&rescaled, h);
    let control = ControlSignal::from_rescaled(grid, &rescaled, kernels.alpha())?;
    let state = simulate_coefficients(&control, &little, kernels)?;
    let targets: Vec<Complex64> = c.iter().zip(d).map(|(&a, &b)| Complex64::new(a, b)).collect();
    let achieved: Vec<Complex64> =
        state.modes.iter().map(|m| Complex64::new(m.deformation, m.stress)).collect();
    let residuals: Vec<Complex64> = achieved.iter().zip(&targets).map(|(a, t)| a - t).collect();
    let mut warnings = Vec::new();
    if n_f > 16 {
        warnings.push(format!("N_f = {n_f} is above the recommended 16"));
    }
    if lambda_max / lambda_min > ILL_CONDITIONED {
        warnings.push(format!(
            "moment Gram condition {:.2e}; the control norm is {:.2e}",
            lambda_max / lambda_min,
            control.l2_norm()
        ));
    }
    Ok(SynthesisReport {
        physical_control_norm: control.l2_norm(),
        control_norm: l2_norm_sq(&rescaled, h).sqrt(),
        control,
        rescaled_control: rescaled,
        mode_indices: (1..=n_f as i64).collect(),
        max_relative_residual: relative_residual(&residuals, &targets),
        targets,
        achieved,
        residuals,
        gram_energy,
        lambda_min,
        lambda_max,
        condition: lambda_max / lambda_min,
        imaginary_leak: 0.0,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub n_max: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Extreme eigenvalues of the Gram matrix of `{Z_n / ‖Z_n‖}_{0<|n|≤n_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub horizon: f64,
    pub rows: Vec<FrameRow>,
}

impl FrameBounds {
    pub fn row(&self, n_max: usize) -> Option<&FrameRow> {
        self.rows.iter().find(|r| r.n_max == n_max)
    }
}

pub const FRAME_TREND_SIZES: [usize; 4] = [4, 8, 16, 32];

/// Normalised-Gram eigen-extremes for each truncation in `sizes`.
pub fn frame_bounds(kernels: &DerivedKernelSet, sizes: &[usize]) -> Result<FrameBounds> {
    let largest = sizes.iter().copied().max().unwrap_or(0);
    let family = build_family(kernels, largest)?;
    frame_bounds_of(&family, kernels, sizes)
}

pub fn frame_bounds_of(family: &ModeFamily, kernels: &DerivedKernelSet, sizes: &[usize]) -> Result<FrameBounds> {
    let h = kernels.grid().step();
    let (indices, functions) = signed_family(&family.big);
    let normalized: Vec<Vec<Complex64>> = functions
        .iter()
        .map(|f| {
            let norm = l2_norm_sq(f, h).sqrt();
            f.iter().map(|v| v / norm).collect()
        })
        .collect();
    let full = gram_matrix(&normalized, h);
    let rows = sizes
        .iter()
        .map(|&size| {
            if size > family.n_max() {
                return Err(Error::Config(format!("frame size {size} exceeds family size {}", family.n_max())));
            }
            let rows: Vec<usize> =
                (0..indices.len()).filter(|&i| indices[i].unsigned_abs() as usize <= size).collect();
            let eig = hermitian_eigenvalues(&full.principal(&rows));
            Ok(FrameRow {
                n_max: size,
                lambda_min: eig.first().copied().unwrap_or(0.0),
                lambda_max: eig.last().copied().unwrap_or(0.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameBounds { horizon: kernels.grid().horizon(), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessRow {
    pub n: i64,
    /// `‖Z_n − e^{(α + iβ_n) t}‖²_{L²(0,T)}`.
    pub distance_sq: f64,
    pub scaled: f64,
    /// `Σ_{m ≥ n} d_m` over the computed range.
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub rows: Vec<ClosenessRow>,
    pub partial_sums: Vec<f64>,
}

/// Squared distances of `Z_n` from the exponentials `e^{(α + iβ_n) t}`.
///
/// Negative indices in `big` are handled through `β_{−n} = β_n` and
/// `e^{(α − iβ_n)t}`.
pub fn quadratic_closeness(big: &[ModeTrajectory], kernels: &DerivedKernelSet) -> Result<ClosenessReport> {
    let grid = kernels.grid();
    let h = grid.step();
    let alpha = kernels.alpha();
    let distances = big
        .par_iter()
        .map(|traj| {
            let params = ModeParams::new(traj.n, alpha)?;
            let beta = params.real_beta()? * (traj.n.signum() as f64);
            let diff: Vec<Complex64> = grid
                .times()
                .zip(&traj.samples)
                .map(|(t, z)| z - Complex64::new(alpha * t, beta * t).exp())
                .collect();
            Ok(l2_norm_sq(&diff, h))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut partial_sums = Vec::with_capacity(distances.len());
    let mut acc = 0.0;
    for d in &distances {
        acc += d;
        partial_sums.push(acc);
    }
    let total = acc;
    let rows = big
        .iter()
        .zip(&distances)
        .zip(&partial_sums)
        .map(|((traj, &d), &p)| ClosenessRow {
            n: traj.n,
            distance_sq: d,
            scaled: d * (traj.n as f64).powi(2),
            tail: total - p + d,
        })
        .collect();
    Ok(ClosenessReport { rows, partial_sums })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::MemoryKernel;
    use crate::volterra::TimeGrid;
    use std::f64::consts::PI;

    fn kernels(kernel: MemoryKernel, horizon: f64, steps: usize) -> DerivedKernelSet {
        DerivedKernelSet::derive(&kernel, &TimeGrid::new(horizon, steps).unwrap()).unwrap()
    }

    fn viscous() -> MemoryKernel {
        MemoryKernel::exponential_sum(&[(0.4, 1.0)]).unwrap()
    }

    #[test]
    fn elastic_family_is_exponential() {
        let k = kernels(MemoryKernel::Zero, 2.0 * PI, 4096);
        let fam = build_family(&k, 4).unwrap();
        for z in &fam.big {
            assert_eq!(z.samples[0], Complex64::new(1.0, 0.0));
            let dev = k
                .grid()
                .times()
                .zip(&z.samples)
                .map(|(t, v)| (v - Complex64::new(0.0, z.n as f64 * t).exp()).norm())
                .fold(0.0, f64::max);
            assert!(dev < 5e-4, "n = {} deviation {dev:e}", z.n);
        }
    }

    #[test]
    fn elastic_gram_is_scaled_identity() {
        let k = kernels(MemoryKernel::Zero, 2.0 * PI, 2048);
        let g = gram(&build_family(&k, 3).unwrap(), &k);
        assert_eq!(g.matrix.dim(), 6);
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { 2.0 * PI } else { 0.0 };
                assert!((g.matrix.get(i, j) - expected).norm() < 1e-3);
            }
        }
        assert!(g.hermitian_defect() <= 1e-12);
    }

    #[test]
    fn elastic_half_period_gram_pair() {
        let k = kernels(MemoryKernel::Zero, PI, 2048);
        let g = gram(&build_family(&k, 1).unwrap(), &k);
        assert_eq!(g.indices, vec![1, -1]);
        assert!((g.matrix.get(0, 0).re - PI).abs() < 1e-3);
        assert!(g.matrix.get(0, 1).norm() < 1e-3);
    }

    #[test]
    fn viscous_gram_is_hermitian() {
        let k = kernels(viscous(), 2.0 * PI, 1024);
        let g = gram(&build_family(&k, 6).unwrap(), &k);
        assert!(g.hermitian_defect() <= 1e-12);
        assert!(g.lambda_min > 0.0);
    }

    #[test]
    fn elastic_single_mode_steering() {
        let k = kernels(MemoryKernel::Zero, 2.0 * PI, 4096);
        let g = gram(&build_family(&k, 3).unwrap(), &k);
        let target = MomentTarget::new(&[1.0], &[]).unwrap();
        let r = synthesize_control(&g, &target).unwrap();
        let dev = k
            .grid()
            .times()
            .zip(&r.control.samples)
            .map(|(t, f)| (f - t.cos() / PI).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-3, "control deviation {dev:e}");
        assert!(r.max_relative_residual <= 1e-3);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn zero_target_gives_zero_control() {
        let k = kernels(viscous(), 2.0 * PI, 1024);
        let g = gram(&build_family(&k, 4).unwrap(), &k);
        let r = synthesize_control(&g, &MomentTarget::zero(4)).unwrap();
        assert!(r.control.samples.iter().all(|&v| v == 0.0));
        assert!(r.residuals.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn short_horizon_warns() {
        let k = kernels(viscous(), 4.0, 1024);
        let g = gram(&build_family(&k, 2).unwrap(), &k);
        let r = synthesize_control(&g, &MomentTarget::new(&[0.5], &[0.1]).unwrap()).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn near_singular_gram_is_rejected() {
        let k = kernels(MemoryKernel::Zero, 0.5, 2048);
        let g = gram(&build_family(&k, 16).unwrap(), &k);
        let target = MomentTarget::new(&[1.0], &[]).unwrap();
        assert!(matches!(synthesize_control(&g, &target), Err(Error::NearSingularGram { .. })));
    }

    #[test]
    fn pair_problem_elastic_cases() {
        let k = kernels(MemoryKernel::Zero, 1.0, 1024);
        assert!(matches!(finite_pair_control(&k, &[0.0], &[1.0]), Err(Error::ElasticDegeneracy)));
        let r = finite_pair_control(&k, &[0.3, -0.2], &[0.3, -0.2]).unwrap();
        for (a, t) in r.achieved.iter().zip(&r.targets) {
            assert!((a - t).norm() < 1e-2);
        }
    }

    #[test]
    fn frame_bounds_elastic_full_period() {
        let k = kernels(MemoryKernel::Zero, 2.0 * PI, 16384);
        let fb = frame_bounds(&k, &FRAME_TREND_SIZES).unwrap();
        for row in &fb.rows {
            assert!((row.lambda_min - 1.0).abs() < 1e-3 && (row.lambda_max - 1.0).abs() < 1e-3, "{row:?}");
        }
    }

    #[test]
    fn closeness_elastic_is_zero_and_symmetric() {
        let k = kernels(MemoryKernel::Zero, 2.0 * PI, 4096);
        let fam = build_family(&k, 8).unwrap();
        let rep = quadratic_closeness(&fam.big, &k).unwrap();
        assert!(rep.rows.iter().all(|r| r.distance_sq <= 1e-6));
        let k = kernels(viscous(), 2.0 * PI, 1024);
        let fam = build_family(&k, 3).unwrap();
        let mut both = fam.big.clone();
        both.extend(fam.big.iter().map(|t| t.mirrored()));
        let rep = quadratic_closeness(&both, &k).unwrap();
        for i in 0..3 {
            assert!((rep.rows[i].distance_sq - rep.rows[i + 3].distance_sq).abs() <= 1e-15);
        }
    }
}
