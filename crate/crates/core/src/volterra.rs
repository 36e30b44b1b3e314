//! Product-trapezoidal Volterra machinery: the uniform time grid, discrete
//! convolutions, the implicit solvers for the mode equations
//!
//! ```text
//! z'(t) = 2α z(t) − n² ∫₀ᵗ N_α(t−s) z(s) ds + g(t),   z(0) = 1,
//! ```
//!
//! (with `g ≡ 0` for `z_n` and `g = H + i n K` for `Z_n`), and an independent
//! Runge–Kutta oracle for exponential-sum kernels.

use std::ops::Mul;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{DerivedKernelSet, MemoryKernel};
use crate::numeric::{pairwise_sum, Scalar};

/// Largest admissible `h · n_max`.
pub const RESOLUTION_LIMIT: f64 = 0.1;

/// Uniform grid `t_k = k h`, `k = 0..=steps`, on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("grid has no steps".into()));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Number of samples, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Samples `f` on the grid.
    pub fn sample<T, F: Fn(f64) -> T>(&self, f: F) -> Vec<T> {
        self.times().map(f).collect()
    }

    /// Grid with the same horizon and `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        TimeGrid { horizon: self.horizon, steps: self.steps * factor }
    }

    /// Enforces `h · n_max ≤ 0.1`.
    pub fn check_resolution(&self, n_max: u64) -> Result<()> {
        let product = self.step() * n_max as f64;
        if product > RESOLUTION_LIMIT * (1.0 + 1e-12) {
            return Err(Error::ResolutionRule { step: self.step(), n_max, product });
        }
        Ok(())
    }

    /// Index of the grid point nearest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.step()).round() as usize).min(self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryKind {
    LittleZ,
    BigZ,
    Derivative,
}

impl TrajectoryKind {
    pub fn name(self) -> &'static str {
        match self {
            TrajectoryKind::LittleZ => "z_n",
            TrajectoryKind::BigZ => "Z_n",
            TrajectoryKind::Derivative => "z_n'",
        }
    }
}

/// Sampled mode function for one index on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrajectory {
    pub n: i64,
    pub kind: TrajectoryKind,
    pub grid: TimeGrid,
    pub samples: Vec<Complex64>,
}

impl ModeTrajectory {
    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn at(&self, t: f64) -> Complex64 {
        self.samples[self.grid.index_of(t)]
    }

    /// Trajectory of the mirrored index `−n`.
    pub fn mirrored(&self) -> ModeTrajectory {
        ModeTrajectory {
            n: -self.n,
            kind: self.kind,
            grid: self.grid,
            samples: self.samples.iter().map(|z| z.conj()).collect(),
        }
    }

    fn expect_kind(&self, kind: TrajectoryKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::WrongKind { expected: kind.name(), found: self.kind.name() });
        }
        Ok(())
    }
}

/// Product-trapezoidal convolution `(a ∗ b)(t_k) = ∫₀^{t_k} a(t_k − s) b(s) ds`.
///
/// `result[0] = 0`. Each entry is an independent pairwise sum, so the
/// parallel evaluation is deterministic.
pub fn convolve<A, B>(a: &[A], b: &[B], grid: &TimeGrid) -> Result<Vec<B>>
where
    A: Copy + Send + Sync,
    B: Scalar + Mul<A, Output = B>,
{
    if a.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: a.len() });
    }
    if b.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), found: b.len() });
    }
    Ok(convolve_unchecked(a, b, grid.step()))
}

pub(crate) fn convolve_unchecked<A, B>(a: &[A], b: &[B], h: f64) -> Vec<B>
where
    A: Copy + Send + Sync,
    B: Scalar + Mul<A, Output = B>,
{
    (0..b.len())
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return B::zero();
            }
            let interior = pairwise_sum(1, k, &|j| b[j] * a[k - j]);
            (interior + (b[0] * a[k] + b[k] * a[0]) * 0.5) * h
        })
        .collect()
}

/// Solves the second-kind equation `x = kernel ∗ x + forcing` by product
/// trapezoidal quadrature.
pub fn solve_volterra_second_kind(kernel: &[f64], forcing: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    if kernel.len() != grid.len() || forcing.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: kernel.len().min(forcing.len()),
        });
    }
    let h = grid.step();
    let denom = 1.0 - 0.5 * h * kernel[0];
    let mut x = vec![0.0; grid.len()];
    x[0] = forcing[0];
    for k in 1..grid.len() {
        let history = pairwise_sum(1, k, &|j| kernel[k - j] * x[j]) + 0.5 * kernel[k] * x[0];
        x[k] = (forcing[k] + h * history) / denom;
    }
    Ok(x)
}

/// Implicit trapezoidal stepping for `y' = 2α y − n² (N_α ∗ y) + g`, `y(0) = 1`.
///
/// The newest sample enters both the local term and the last quadrature
/// weight; the resulting scalar linear equation is solved in closed form.
fn integrate_mode<T: Scalar>(n: i64, kernels: &DerivedKernelSet, forcing: Option<&[T]>) -> Vec<T> {
    let grid = kernels.grid();
    let h = grid.step();
    let alpha = kernels.alpha();
    let relax = kernels.relaxation_alpha();
    let n2 = (n as f64) * (n as f64);
    let len = grid.len();
    let force = |k: usize| forcing.map_or(T::zero(), |g| g[k]);

    let mut y: Vec<T> = Vec::with_capacity(len);
    y.push(T::from_real(1.0));
    let mut rate_prev = y[0] * (2.0 * alpha) + force(0);
    let lhs = 1.0 - h * alpha + 0.25 * h * h * n2 * relax[0];
    for k in 1..len {
        let history = (pairwise_sum(1, k, &|j| y[j] * relax[k - j]) + y[0] * (0.5 * relax[k])) * h;
        let rhs = y[k - 1] + (rate_prev + force(k) - history * n2) * (0.5 * h);
        let next = rhs / lhs;
        y.push(next);
        let memory = history + next * (0.5 * h * relax[0]);
        rate_prev = next * (2.0 * alpha) - memory * n2 + force(k);
    }
    y
}

/// `z_n` from `z' = 2α z − n² (N_α ∗ z)`, `z(0) = 1`.
pub fn solve_mode_zn(n: i64, kernels: &DerivedKernelSet) -> Result<ModeTrajectory> {
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    kernels.grid().check_resolution(n.unsigned_abs())?;
    let samples = integrate_mode::<f64>(n, kernels, None)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    Ok(ModeTrajectory { n, kind: TrajectoryKind::LittleZ, grid: *kernels.grid(), samples })
}

/// `z_n'` reconstructed from the right-hand side `2α z − n² (N_α ∗ z)`.
pub fn mode_zn_derivative(traj: &ModeTrajectory, kernels: &DerivedKernelSet) -> Result<Vec<f64>> {
    traj.expect_kind(TrajectoryKind::LittleZ)?;
    if traj.grid != *kernels.grid() {
        return Err(Error::GridMismatch);
    }
    let z = traj.real_parts();
    let memory = convolve(kernels.relaxation_alpha(), &z, kernels.grid())?;
    let n2 = (traj.n as f64).powi(2);
    Ok(z.iter().zip(&memory).map(|(&zk, &mk)| 2.0 * kernels.alpha() * zk - n2 * mk).collect())
}

/// `Z_n` from `Z' = 2α Z − n² (N_α ∗ Z) + H + i n K`, `Z(0) = 1`.
pub fn solve_mode_big_z_ode(n: i64, kernels: &DerivedKernelSet) -> Result<ModeTrajectory> {
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    kernels.grid().check_resolution(n.unsigned_abs())?;
    let nf = n as f64;
    let forcing: Vec<Complex64> = kernels
        .velocity_kernel()
        .iter()
        .zip(kernels.stress_kernel())
        .map(|(&h, &k)| Complex64::new(h, nf * k))
        .collect();
    let samples = integrate_mode(n, kernels, Some(&forcing));
    Ok(ModeTrajectory { n, kind: TrajectoryKind::BigZ, grid: *kernels.grid(), samples })
}

/// `Z_n = z_n + H ∗ z_n + i n K ∗ z_n` by direct quadrature.
pub fn assemble_big_z(zn: &ModeTrajectory, kernels: &DerivedKernelSet) -> Result<ModeTrajectory> {
    zn.expect_kind(TrajectoryKind::LittleZ)?;
    if zn.grid != *kernels.grid() {
        return Err(Error::GridMismatch);
    }
    let z = zn.real_parts();
    let hz = convolve(kernels.velocity_kernel(), &z, kernels.grid())?;
    let kz = convolve(kernels.stress_kernel(), &z, kernels.grid())?;
    let nf = zn.n as f64;
    let samples = (0..z.len()).map(|k| Complex64::new(z[k] + hz[k], nf * kz[k])).collect();
    Ok(ModeTrajectory { n: zn.n, kind: TrajectoryKind::BigZ, grid: zn.grid, samples })
}

/// Number of RK4 substeps per grid step used by the oracle.
pub const ORACLE_SUBSTEPS: usize = 8;

/// Reference `z_n` for exponential-sum kernels.
///
/// `N_α(t) = Σ c_i e^{−λ_i t}` exactly, so with `u_i = ∫₀ᵗ e^{−λ_i(t−s)} z(s) ds`
/// the mode equation becomes the linear system
/// `z' = 2α z − n² Σ c_i u_i`, `u_i' = −λ_i u_i + z`, integrated by classical
/// RK4 at step `h / substeps`.
pub fn oracle_exponential_mode(
    n: i64,
    kernel: &MemoryKernel,
    grid: &TimeGrid,
    substeps: usize,
) -> Result<ModeTrajectory> {
    if n == 0 {
        return Err(Error::ZeroMode);
    }
    let terms = kernel.relaxation_alpha_exponentials().ok_or(Error::NonExponentialKernel)?;
    let alpha = kernel.alpha();
    let n2 = (n as f64).powi(2);
    let dim = terms.len() + 1;
    let rhs = |state: &[f64], out: &mut [f64]| {
        let z = state[0];
        let mut memory = 0.0;
        for (i, &(c, lambda)) in terms.iter().enumerate() {
            memory += c * state[i + 1];
            out[i + 1] = -lambda * state[i + 1] + z;
        }
        out[0] = 2.0 * alpha * z - n2 * memory;
    };

    let dt = grid.step() / substeps.max(1) as f64;
    let mut state = vec![0.0; dim];
    state[0] = 1.0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut samples = Vec::with_capacity(grid.len());
    samples.push(Complex64::new(1.0, 0.0));
    for _ in 0..grid.steps() {
        for _ in 0..substeps.max(1) {
            rhs(&state, &mut k1);
            for i in 0..dim {
                tmp[i] = state[i] + 0.5 * dt * k1[i];
            }
            rhs(&tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = state[i] + 0.5 * dt * k2[i];
            }
            rhs(&tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = state[i] + dt * k3[i];
            }
            rhs(&tmp, &mut k4);
            for i in 0..dim {
                state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        samples.push(Complex64::new(state[0], 0.0));
    }
    Ok(ModeTrajectory { n, kind: TrajectoryKind::LittleZ, grid: *grid, samples })
}

/// `z_n` for every `n` in `modes`, as a parallel map.
pub fn solve_zn_family(modes: &[i64], kernels: &DerivedKernelSet) -> Result<Vec<ModeTrajectory>> {
    modes.par_iter().map(|&n| solve_mode_zn(n, kernels)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn elastic(horizon: f64, steps: usize) -> DerivedKernelSet {
        DerivedKernelSet::derive(&MemoryKernel::Zero, &TimeGrid::new(horizon, steps).unwrap()).unwrap()
    }

    fn viscous(horizon: f64, steps: usize) -> DerivedKernelSet {
        let kernel = MemoryKernel::exponential_sum(&[(0.4, 1.0)]).unwrap();
        DerivedKernelSet::derive(&kernel, &TimeGrid::new(horizon, steps).unwrap()).unwrap()
    }

    #[test]
    fn grid_rejects_degenerate_input() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        let g = TimeGrid::new(2.0 * PI, 4096).unwrap();
        assert!(g.check_resolution(32).is_ok());
        assert!(matches!(g.check_resolution(80), Err(Error::ResolutionRule { .. })));
    }

    #[test]
    fn convolve_constant_with_cosine_gives_sine() {
        let grid = TimeGrid::new(2.0 * PI, 4096).unwrap();
        let ones = vec![1.0; grid.len()];
        let cos = grid.sample(f64::cos);
        let c = convolve(&ones, &cos, &grid).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[grid.index_of(PI / 2.0)] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn convolve_zero_kernel_is_zero() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let zeros = vec![0.0; grid.len()];
        let b = grid.sample(|t| (3.0 * t).sin() + 2.0);
        assert!(convolve(&zeros, &b, &grid).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn convolve_exponentials_matches_closed_form() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let e = grid.sample(|t| (-t).exp());
        let c = convolve(&e, &e, &grid).unwrap();
        assert!((c[grid.steps()] - (-1.0f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn convolve_rejects_length_mismatch() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let err = convolve(&[1.0; 5], &[1.0; 11], &grid).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { expected: 11, found: 5 }));
    }

    #[test]
    fn elastic_zn_is_cosine() {
        let k = elastic(2.0 * PI, 4096);
        let z2 = solve_mode_zn(2, &k).unwrap();
        assert!((z2.at(PI / 2.0).re + 1.0).abs() < 5e-4);
        let z1 = solve_mode_zn(1, &k).unwrap();
        assert!((z1.at(2.0 * PI).re - 1.0).abs() < 5e-4);
        assert_eq!(z1.samples[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zn_matches_oracle_for_exponential_kernel() {
        let k = viscous(2.0 * PI, 4096);
        let z = solve_mode_zn(1, &k).unwrap();
        let oracle = oracle_exponential_mode(1, k.kernel(), k.grid(), ORACLE_SUBSTEPS).unwrap();
        let dev = (z.at(2.0 * PI) - oracle.at(2.0 * PI)).norm();
        assert!(dev < 1e-5, "deviation {dev:e}");
    }

    #[test]
    fn solver_rejects_underresolved_modes() {
        let k = viscous(2.0 * PI, 512);
        assert!(matches!(solve_mode_zn(20, &k), Err(Error::ResolutionRule { .. })));
        assert!(matches!(solve_mode_big_z_ode(-20, &k), Err(Error::ResolutionRule { .. })));
    }

    #[test]
    fn elastic_derivative_is_minus_sine() {
        let k = elastic(2.0 * PI, 4096);
        let z = solve_mode_zn(1, &k).unwrap();
        let d = mode_zn_derivative(&z, &k).unwrap();
        assert_eq!(d[0], 0.0);
        let dev = k.grid().times().zip(&d).map(|(t, v)| (v + t.sin()).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-4, "deviation {dev:e}");
    }

    #[test]
    fn derivative_starts_at_two_alpha() {
        let k = viscous(2.0 * PI, 1024);
        let z = solve_mode_zn(3, &k).unwrap();
        let d = mode_zn_derivative(&z, &k).unwrap();
        assert_eq!(d[0], 2.0 * k.alpha());
    }

    #[test]
    fn derivative_rejects_wrong_kind() {
        let k = viscous(1.0, 256);
        let big = solve_mode_big_z_ode(1, &k).unwrap();
        assert!(matches!(mode_zn_derivative(&big, &k), Err(Error::WrongKind { .. })));
        assert!(matches!(assemble_big_z(&big, &k), Err(Error::WrongKind { .. })));
    }

    #[test]
    fn elastic_big_z_is_exponential() {
        let k = elastic(2.0 * PI, 4096);
        let z1 = solve_mode_big_z_ode(1, &k).unwrap();
        assert!((z1.at(PI) - Complex64::new(-1.0, 0.0)).norm() < 5e-4);
        let zm1 = solve_mode_big_z_ode(-1, &k).unwrap();
        assert_eq!(zm1.samples, z1.mirrored().samples);
        let zn = solve_mode_zn(1, &k).unwrap();
        let assembled = assemble_big_z(&zn, &k).unwrap();
        let dev = k
            .grid()
            .times()
            .zip(&assembled.samples)
            .map(|(t, v)| (v - Complex64::new(t.cos(), t.sin())).norm())
            .fold(0.0, f64::max);
        assert!(dev < 5e-4);
    }

    #[test]
    fn assembled_big_z_starts_at_one() {
        let k = viscous(2.0 * PI, 1024);
        let zn = solve_mode_zn(5, &k).unwrap();
        assert_eq!(assemble_big_z(&zn, &k).unwrap().samples[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn oracle_elastic_is_cosine_and_rejects_polynomials() {
        let grid = TimeGrid::new(2.0 * PI, 512).unwrap();
        let o = oracle_exponential_mode(3, &MemoryKernel::Zero, &grid, ORACLE_SUBSTEPS).unwrap();
        let dev = grid
            .times()
            .zip(&o.samples)
            .map(|(t, v)| (v.re - (3.0 * t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9);
        let poly = MemoryKernel::polynomial(&[0.1, 0.2]).unwrap();
        assert!(matches!(
            oracle_exponential_mode(1, &poly, &grid, 8),
            Err(Error::NonExponentialKernel)
        ));
    }

    #[test]
    fn second_kind_solver_reproduces_exponential() {
        // x = 1 + ∫ x  ⇒  x = e^t
        let grid = TimeGrid::new(1.0, 2000).unwrap();
        let x = solve_volterra_second_kind(&vec![1.0; grid.len()], &vec![1.0; grid.len()], &grid).unwrap();
        assert!((x[grid.steps()] - 1f64.exp()).abs() < 1e-6);
    }
}
