//! Numerical checks of the asymptotic estimates for `z_n` and of the
//! closed-loop steering round trip.
//!
//! The constants in the estimates are never quantified, so each check reports
//! the deviations `e_n` together with `n · e_n` and a growth verdict: the
//! trend is [`Verdict::Bounded`] when the largest `n · e_n` over the upper half
//! of the index range is at most twice the largest over the lower half.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernels::{DerivedKernelSet, MemoryKernel};
use crate::moments::{build_family, gram, synthesize_control, MomentTarget};
use crate::numeric::max_abs_diff;
use crate::spectral::{simulate_coefficients, ModeParams, SpectralState};
use crate::volterra::{convolve_unchecked, mode_zn_derivative, solve_mode_zn, TimeGrid};

/// Allowed ratio between upper-half and lower-half maxima of `n · e_n`.
pub const GROWTH_RATIO_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Bounded,
    Growing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub label: String,
    pub modes: Vec<i64>,
    pub deviations: Vec<f64>,
    pub scaled: Vec<f64>,
    /// Upper-half max over lower-half max of the scaled sequence.
    pub growth_ratio: f64,
    pub verdict: Verdict,
    pub horizon: f64,
    pub steps: usize,
}

impl AsymptoticReport {
    pub fn new(label: &str, modes: Vec<i64>, deviations: Vec<f64>, grid: &TimeGrid) -> Self {
        let scaled: Vec<f64> = modes.iter().zip(&deviations).map(|(&n, &e)| n.unsigned_abs() as f64 * e).collect();
        let (growth_ratio, verdict) = trend(&modes, &scaled);
        AsymptoticReport {
            label: label.to_string(),
            modes,
            deviations,
            scaled,
            growth_ratio,
            verdict,
            horizon: grid.horizon(),
            steps: grid.steps(),
        }
    }

    pub fn deviation(&self, n: i64) -> Option<f64> {
        self.modes.iter().position(|&m| m == n).map(|i| self.deviations[i])
    }
}

/// Splits the modes by `|n|` into lower and upper halves and compares the
/// maxima of `scaled` on each.
pub fn trend(modes: &[i64], scaled: &[f64]) -> (f64, Verdict) {
    let mut order: Vec<usize> = (0..modes.len()).collect();
    order.sort_by_key(|&i| (modes[i].unsigned_abs(), modes[i]));
    let half = order.len() / 2;
    let max_of = |idx: &[usize]| idx.iter().map(|&i| scaled[i]).fold(0.0, f64::max);
    let lower = max_of(&order[..half]);
    let upper = max_of(&order[half..]);
    let ratio = if upper == 0.0 {
        0.0
    } else if lower == 0.0 {
        f64::INFINITY
    } else {
        upper / lower
    };
    let verdict = if upper <= GROWTH_RATIO_LIMIT * lower { Verdict::Bounded } else { Verdict::Growing };
    (ratio, verdict)
}

fn real_params(n: i64, alpha: f64) -> Result<(ModeParams, f64)> {
    let p = ModeParams::new(n, alpha)?;
    let beta = p.real_beta()?;
    Ok((p, beta))
}

fn sup_over_grid(grid: &TimeGrid, values: &[f64], reference: impl Fn(f64) -> f64) -> f64 {
    grid.times().zip(values).map(|(t, v)| (v - reference(t)).abs()).fold(0.0, f64::max)
}

/// `e_n = sup_t |z_n(t) − e^{αt} cos β_n t|`.
pub fn check_zn_asymptotics(kernels: &DerivedKernelSet, modes: &[i64]) -> Result<AsymptoticReport> {
    let alpha = kernels.alpha();
    let grid = *kernels.grid();
    let deviations = modes
        .par_iter()
        .map(|&n| {
            let (_, beta) = real_params(n, alpha)?;
            let z = solve_mode_zn(n, kernels)?.real_parts();
            Ok(sup_over_grid(&grid, &z, |t| (alpha * t).exp() * (beta * t).cos()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport::new("z_n", modes.to_vec(), deviations, &grid))
}

/// `e_n = sup_t |z_n'(t)/β_n + e^{αt} sin β_n t|`.
pub fn check_zn_derivative_asymptotics(kernels: &DerivedKernelSet, modes: &[i64]) -> Result<AsymptoticReport> {
    let alpha = kernels.alpha();
    let grid = *kernels.grid();
    let deviations = modes
        .par_iter()
        .map(|&n| {
            let (_, beta) = real_params(n, alpha)?;
            let z = solve_mode_zn(n, kernels)?;
            let dz: Vec<f64> = mode_zn_derivative(&z, kernels)?.iter().map(|v| v / beta).collect();
            Ok(sup_over_grid(&grid, &dz, |t| -(alpha * t).exp() * (beta * t).sin()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport::new("z_n'", modes.to_vec(), deviations, &grid))
}

/// Convolution kernel used by [`check_convolution_lemma`].
#[derive(Debug, Clone, PartialEq)]
pub enum LemmaProbe {
    /// An analytic function given in memory-kernel form, `F(t) = M(t)`.
    Analytic(MemoryKernel),
    /// The stress kernel `K` of the kernel set itself (`K(0) = 1`).
    StressKernel,
}

impl LemmaProbe {
    fn sample(&self, kernels: &DerivedKernelSet) -> (Vec<f64>, f64) {
        match self {
            LemmaProbe::Analytic(f) => (kernels.grid().sample(|t| f.value(t)), f.value(0.0)),
            LemmaProbe::StressKernel => (kernels.stress_kernel().to_vec(), 1.0),
        }
    }
}

/// `e_n = sup_t |n ∫₀ᵗ F(t−s) z_n(s) ds − F(0) e^{αt} sin β_n t|`.
///
/// For `n < 0` the sine carries the sign of `n`, matching `z_{−n} = z_n`.
pub fn check_convolution_lemma(
    kernels: &DerivedKernelSet,
    probe: &LemmaProbe,
    modes: &[i64],
) -> Result<AsymptoticReport> {
    let alpha = kernels.alpha();
    let grid = *kernels.grid();
    let (f, f0) = probe.sample(kernels);
    let deviations = modes
        .par_iter()
        .map(|&n| {
            let (_, beta) = real_params(n, alpha)?;
            let z = solve_mode_zn(n, kernels)?.real_parts();
            let nf = n as f64;
            let conv: Vec<f64> = convolve_unchecked(&f, &z, grid.step()).iter().map(|v| nf * v).collect();
            let sign = n.signum() as f64;
            Ok(sup_over_grid(&grid, &conv, |t| f0 * (alpha * t).exp() * sign * (beta * t).sin()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticReport::new("convolution", modes.to_vec(), deviations, &grid))
}

/// `G_n` assembled from the solved `z_n`:
///
/// ```text
/// G_n = e^{αt} cos β_n t + (α/β_n) e^{αt} sin β_n t + (1 − μ_n) (N_α' ∗ z_n)
///     + N_0(0) (μ_n/β_n) (e^{α·} sin β_n· ∗ z_n)
///     − (μ_n/β_n) ((e^{α·} sin β_n· ∗ N_1) ∗ z_n)
/// ```
pub fn resolvent_representation(kernels: &DerivedKernelSet, n: i64) -> Result<(Vec<f64>, Vec<f64>)> {
    let alpha = kernels.alpha();
    let grid = *kernels.grid();
    let h = grid.step();
    let (params, beta) = real_params(n, alpha)?;
    let mu = params.mu.re;
    let z = solve_mode_zn(n, kernels)?.real_parts();
    let damped_sine = grid.sample(|t| (alpha * t).exp() * (beta * t).sin());
    let rate_z = convolve_unchecked(kernels.relaxation_alpha_rate(), &z, h);
    let sine_z = convolve_unchecked(&damped_sine, &z, h);
    let inner = convolve_unchecked(kernels.n1(), &damped_sine, h);
    let double_z = convolve_unchecked(&inner, &z, h);
    let g: Vec<f64> = grid
        .times()
        .enumerate()
        .map(|(k, t)| {
            let e = (alpha * t).exp();
            e * (beta * t).cos() + alpha / beta * e * (beta * t).sin() + (1.0 - mu) * rate_z[k]
                + kernels.n0_at_zero() * mu / beta * sine_z[k]
                - mu / beta * double_z[k]
        })
        .collect();
    Ok((z, g))
}

/// `max_t |z_n − (G_n + L ∗ G_n)|`.
pub fn check_resolvent_identity(kernels: &DerivedKernelSet, n: i64) -> Result<f64> {
    let (z, g) = resolvent_representation(kernels, n)?;
    let lg = convolve_unchecked(kernels.resolvent(), &g, kernels.grid().step());
    let rebuilt: Vec<f64> = g.iter().zip(&lg).map(|(a, b)| a + b).collect();
    Ok(max_abs_diff(&z, &rebuilt))
}

/// `e_n = |σ_n − w_n|` from a simulated state.
pub fn check_stress_deformation_gap(state: &SpectralState) -> AsymptoticReport {
    let modes = state.modes.iter().map(|m| m.n).collect();
    let deviations = state.modes.iter().map(|m| (m.stress - m.deformation).abs()).collect();
    let grid = TimeGrid::new(state.horizon, state.steps.max(1)).expect("state horizon is positive");
    AsymptoticReport::new("stress-deformation gap", modes, deviations, &grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub target: Vec<Complex64>,
    pub achieved: Vec<Complex64>,
    pub relative_error: f64,
    pub lambda_min: f64,
    pub control_norm: f64,
}

/// Synthesises a control for `target`, simulates it and compares the achieved
/// `(v_n, σ_n)` with `(ξ_n, η_n)` in ℓ².
pub fn closed_loop_roundtrip(kernels: &DerivedKernelSet, target: &MomentTarget) -> Result<RoundTrip> {
    let family = build_family(kernels, target.n_max())?;
    let system = gram(&family, kernels);
    let report = synthesize_control(&system, target)?;
    let state = simulate_coefficients(&report.control, &family.little, kernels)?;
    let goal: Vec<Complex64> = target.xi.iter().zip(&target.eta).map(|(&x, &e)| Complex64::new(x, e)).collect();
    let achieved: Vec<Complex64> = state.modes.iter().map(|m| Complex64::new(m.velocity, m.stress)).collect();
    let err = achieved.iter().zip(&goal).map(|(a, g)| (a - g).norm_sqr()).sum::<f64>().sqrt();
    let scale = target.l2_norm();
    Ok(RoundTrip {
        relative_error: if scale == 0.0 { err } else { err / scale },
        target: goal,
        achieved,
        lambda_min: report.lambda_min,
        control_norm: report.control_norm,
    })
}

/// Rejects kernels whose `β_n` are not all real on `modes`.
pub fn require_real_frequencies(kernels: &DerivedKernelSet, modes: &[i64]) -> Result<()> {
    for &n in modes {
        real_params(n, kernels.alpha())?;
    }
    Ok(())
}
