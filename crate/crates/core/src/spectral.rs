//! Mode functionals of the controlled string at the final time.
//!
//! Up to the physical factor `(2/π) e^{−2αT}` the fields at time `T` are
//!
//! ```text
//! w(x, T)   ∝ Σ w_n sin nx        w_n = ∫₀ᵀ f̃(T−r) n (N_α ∗ z_n)(r) dr
//! w_t(x, T) ∝ Σ v_n n sin nx      v_n = ∫₀ᵀ f̃(T−r) (z_n + H ∗ z_n)(r) dr
//! σ(x, T)   ∝ Σ σ_n n cos nx      σ_n = ∫₀ᵀ f̃(T−r) n (K ∗ z_n)(r) dr
//! ```
//!
//! where `f̃(t) = e^{2αt} f(t)` is the rescaled boundary input. A
//! [`ControlSignal`] always stores the physical `f`; the rescaling is applied
//! inside the quadratures.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{exceptional, DerivedKernelSet};
use crate::numeric::{reversed_inner, trapezoid};
use crate::volterra::{convolve_unchecked, ModeTrajectory, TimeGrid, TrajectoryKind};

/// `β_n = √(n² − α²)` and `μ_n = n²/β_n²` for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    pub n: i64,
    pub alpha: f64,
    pub beta: Complex64,
    pub mu: Complex64,
}

impl ModeParams {
    pub fn new(n: i64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroMode);
        }
        if exceptional(alpha, n) {
            return Err(Error::ExceptionalIndex(n));
        }
        let n2 = (n as f64).powi(2);
        let beta = Complex64::new(n2 - alpha * alpha, 0.0).sqrt();
        let mu = Complex64::new(n2, 0.0) / (beta * beta);
        Ok(ModeParams { n, alpha, beta, mu })
    }

    /// `β_n` when it is real.
    pub fn real_beta(&self) -> Result<f64> {
        if self.beta.im != 0.0 {
            return Err(Error::ComplexFrequency { n: self.n, alpha_sq: self.alpha * self.alpha });
        }
        Ok(self.beta.re)
    }

    /// `g_n(t) = e^{αt} (cos β_n t + (α/β_n) sin β_n t)`.
    pub fn reference_profile(&self, grid: &TimeGrid) -> Vec<Complex64> {
        let a = self.alpha;
        let b = self.beta;
        grid.sample(|t| {
            let bt = b * t;
            (bt.cos() + bt.sin() * (a / b)) * (a * t).exp()
        })
    }
}

/// Physical boundary input `f` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub grid: TimeGrid,
    pub samples: Vec<f64>,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), found: samples.len() });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control samples"));
        }
        Ok(ControlSignal { grid, samples })
    }

    pub fn zero(grid: TimeGrid) -> Self {
        ControlSignal { samples: vec![0.0; grid.len()], grid }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    /// Builds the physical control from the rescaled input `f̃ = e^{2αt} f`.
    pub fn from_rescaled(grid: TimeGrid, rescaled: &[f64], alpha: f64) -> Result<Self> {
        let samples = grid.times().zip(rescaled).map(|(t, &v)| (-2.0 * alpha * t).exp() * v).collect();
        Self::new(grid, samples)
    }

    /// `f̃(t) = e^{2αt} f(t)`.
    pub fn rescaled(&self, alpha: f64) -> Vec<f64> {
        self.grid.times().zip(&self.samples).map(|(t, &v)| (2.0 * alpha * t).exp() * v).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        crate::numeric::l2_norm_sq(&self.samples, self.grid.step()).sqrt()
    }
}

/// Raw functionals of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFunctionals {
    pub n: i64,
    pub deformation: f64,
    pub velocity: f64,
    pub stress: f64,
    /// `∫₀ᵀ e^{2α(T−τ)} σ_n(τ) dτ`, the rescaled time integral of the stress.
    pub integrated_stress: f64,
}

/// Mode functionals of the controlled solution at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralState {
    pub horizon: f64,
    pub steps: usize,
    pub alpha: f64,
    pub modes: Vec<ModeFunctionals>,
}

impl SpectralState {
    /// `(2/π) e^{−2αT}`: raw functionals times this are the series coefficients.
    pub fn physical_scale(&self) -> f64 {
        FRAC_2_PI * (-2.0 * self.alpha * self.horizon).exp()
    }

    /// `√(2/π) e^{−2αT}`: converts raw functionals to coefficients against the
    /// orthonormalised bases `√(2/π) sin nx`, `√(2/π) n sin nx`, `√(2/π) n cos nx`.
    pub fn basis_scale(&self) -> f64 {
        FRAC_2_PI.sqrt() * (-2.0 * self.alpha * self.horizon).exp()
    }

    pub fn mode(&self, n: i64) -> Option<&ModeFunctionals> {
        self.modes.iter().find(|m| m.n == n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Deformation,
    Velocity,
    Stress,
}

/// Mode functionals of `f` for every `z_n` in `z_family`.
pub fn simulate_coefficients(
    f: &ControlSignal,
    z_family: &[ModeTrajectory],
    kernels: &DerivedKernelSet,
) -> Result<SpectralState> {
    let grid = kernels.grid();
    if f.grid != *grid {
        return Err(Error::GridMismatch);
    }
    let h = grid.step();
    let alpha = kernels.alpha();
    let rescaled = f.rescaled(alpha);
    let modes = z_family
        .par_iter()
        .map(|traj| {
            if traj.kind != TrajectoryKind::LittleZ {
                return Err(Error::WrongKind { expected: "z_n", found: traj.kind.name() });
            }
            if traj.grid != *grid {
                return Err(Error::GridMismatch);
            }
            let nf = traj.n as f64;
            let z = traj.real_parts();
            let relax_z = convolve_unchecked(kernels.relaxation_alpha(), &z, h);
            let vel_z = convolve_unchecked(kernels.velocity_kernel(), &z, h);
            let stress_z = convolve_unchecked(kernels.stress_kernel(), &z, h);
            let velocity_integrand: Vec<f64> = z.iter().zip(&vel_z).map(|(a, b)| a + b).collect();
            let stress_profile: Vec<f64> = stress_z.iter().map(|v| nf * v).collect();
            let relax_profile: Vec<f64> = relax_z.iter().map(|v| nf * v).collect();
            // σ_n(τ) for every τ is the convolution f̃ ∗ (n K ∗ z_n).
            let stress_history = convolve_unchecked(&rescaled, &stress_profile, h);
            let weighted: Vec<f64> = grid
                .times()
                .zip(&stress_history)
                .map(|(tau, &s)| (2.0 * alpha * (grid.horizon() - tau)).exp() * s)
                .collect();
            Ok(ModeFunctionals {
                n: traj.n,
                deformation: reversed_inner(&rescaled, &relax_profile, h),
                velocity: reversed_inner(&rescaled, &velocity_integrand, h),
                stress: reversed_inner(&rescaled, &stress_profile, h),
                integrated_stress: trapezoid(&weighted, h),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralState { horizon: grid.horizon(), steps: grid.steps(), alpha, modes })
}

/// Partial sum of the chosen field at the points `x_grid ⊂ [0, π]`.
pub fn reconstruct_field(state: &SpectralState, which: FieldKind, x_grid: &[f64]) -> Result<Vec<f64>> {
    if let Some(&x) = x_grid.iter().find(|&&x| !(0.0..=PI).contains(&x)) {
        return Err(Error::OutOfRange(x));
    }
    let scale = state.physical_scale();
    Ok(x_grid
        .iter()
        .map(|&x| {
            let sum: f64 = state
                .modes
                .iter()
                .map(|m| {
                    let nf = m.n as f64;
                    match which {
                        FieldKind::Deformation => m.deformation * (nf * x).sin(),
                        FieldKind::Velocity => m.velocity * nf * (nf * x).sin(),
                        FieldKind::Stress => m.stress * nf * (nf * x).cos(),
                    }
                })
                .sum();
            scale * sum
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientNorms {
    pub l2_deformation: f64,
    pub hminus1_velocity: f64,
    pub hminus1_stress: f64,
}

/// ℓ² norms of the basis-normalised coefficients.
///
/// The velocity norm is exactly the `H^{-1}(0, π)` norm (orthonormal basis);
/// the stress norm is an equivalent norm (Riesz basis `n cos nx`).
pub fn coefficient_norms(state: &SpectralState) -> CoefficientNorms {
    let s = state.basis_scale();
    let norm = |f: fn(&ModeFunctionals) -> f64| {
        s * state.modes.iter().map(|m| f(m).powi(2)).sum::<f64>().sqrt()
    };
    CoefficientNorms {
        l2_deformation: norm(|m| m.deformation),
        hminus1_velocity: norm(|m| m.velocity),
        hminus1_stress: norm(|m| m.stress),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::MemoryKernel;
    use crate::volterra::solve_zn_family;

    fn setup(kernel: MemoryKernel, horizon: f64, steps: usize, n_max: i64) -> (DerivedKernelSet, Vec<ModeTrajectory>) {
        let grid = TimeGrid::new(horizon, steps).unwrap();
        let k = DerivedKernelSet::derive(&kernel, &grid).unwrap();
        let modes: Vec<i64> = (1..=n_max).collect();
        let z = solve_zn_family(&modes, &k).unwrap();
        (k, z)
    }

    #[test]
    fn mode_params_examples() {
        let p = ModeParams::new(5, 0.0).unwrap();
        assert_eq!(p.beta, Complex64::new(5.0, 0.0));
        assert_eq!(p.mu, Complex64::new(1.0, 0.0));
        let p = ModeParams::new(1, -0.2).unwrap();
        assert!((p.beta.re - 0.96f64.sqrt()).abs() < 1e-15);
        assert!((p.beta.re - 0.979796).abs() < 1e-6);
        assert!((p.mu.re - 1.041667).abs() < 1e-6);
        assert!(matches!(ModeParams::new(1, -1.0), Err(Error::ExceptionalIndex(1))));
        let p = ModeParams::new(1, 2.0).unwrap();
        assert!(p.beta.re >= 0.0 && p.beta.im > 0.0);
        assert!(p.real_beta().is_err());
        assert_eq!(ModeParams::new(-3, 0.4).unwrap().beta, ModeParams::new(3, 0.4).unwrap().beta);
    }

    #[test]
    fn zero_control_gives_zero_functionals() {
        let (k, z) = setup(MemoryKernel::exponential_sum(&[(0.4, 1.0)]).unwrap(), 2.0 * PI, 512, 4);
        let state = simulate_coefficients(&ControlSignal::zero(*k.grid()), &z, &k).unwrap();
        assert!(state.modes.iter().all(|m| m.deformation == 0.0
            && m.velocity == 0.0
            && m.stress == 0.0
            && m.integrated_stress == 0.0));
        let norms = coefficient_norms(&state);
        assert_eq!(norms.l2_deformation, 0.0);
        assert_eq!(reconstruct_field(&state, FieldKind::Stress, &[0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn elastic_cosine_control_hits_first_velocity_mode() {
        let (k, z) = setup(MemoryKernel::Zero, 2.0 * PI, 4096, 2);
        let f = ControlSignal::from_fn(*k.grid(), |t| t.cos() / PI).unwrap();
        let state = simulate_coefficients(&f, &z, &k).unwrap();
        let m1 = state.mode(1).unwrap();
        assert!((m1.velocity - 1.0).abs() < 1e-3, "v_1 = {}", m1.velocity);
        assert!(m1.stress.abs() < 1e-3, "sigma_1 = {}", m1.stress);
    }

    #[test]
    fn elastic_stress_equals_deformation() {
        let (k, z) = setup(MemoryKernel::Zero, 3.0, 600, 8);
        let f = ControlSignal::from_fn(*k.grid(), |t| (1.3 * t).sin() + 0.2 * t).unwrap();
        let state = simulate_coefficients(&f, &z, &k).unwrap();
        for m in &state.modes {
            assert_eq!(m.stress, m.deformation);
        }
    }

    #[test]
    fn simulate_rejects_grid_mismatch() {
        let (k, z) = setup(MemoryKernel::Zero, 3.0, 600, 2);
        let other = ControlSignal::zero(TimeGrid::new(3.0, 300).unwrap());
        assert!(matches!(simulate_coefficients(&other, &z, &k), Err(Error::GridMismatch)));
    }

    #[test]
    fn field_reconstruction_examples() {
        let state = SpectralState {
            horizon: 1.0,
            steps: 10,
            alpha: 0.0,
            modes: vec![ModeFunctionals { n: 1, deformation: 1.0, velocity: 0.7, stress: -0.3, integrated_stress: 0.0 }],
        };
        let w = reconstruct_field(&state, FieldKind::Deformation, &[PI / 2.0]).unwrap();
        assert!((w[0] - 2.0 / PI).abs() < 1e-15);
        let v = reconstruct_field(&state, FieldKind::Velocity, &[0.0, PI]).unwrap();
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        assert!(matches!(
            reconstruct_field(&state, FieldKind::Velocity, &[4.0]),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn norms_use_orthonormal_basis() {
        let horizon = 2.0;
        let alpha = -0.2;
        let mut state = SpectralState { horizon, steps: 10, alpha, modes: Vec::new() };
        let s = state.basis_scale();
        state.modes.push(ModeFunctionals { n: 7, deformation: 0.0, velocity: 3.0 / s, stress: 0.0, integrated_stress: 0.0 });
        assert!((coefficient_norms(&state).hminus1_velocity - 3.0).abs() < 1e-14);
        state.modes = vec![
            ModeFunctionals { n: 1, deformation: 0.0, velocity: 0.0, stress: 1.0 / s, integrated_stress: 0.0 },
            ModeFunctionals { n: 2, deformation: 0.0, velocity: 0.0, stress: 1.0 / s, integrated_stress: 0.0 },
        ];
        assert!((coefficient_norms(&state).hminus1_stress - 2f64.sqrt()).abs() < 1e-14);
    }
}
