#![allow(dead_code)]

use std::f64::consts::PI;

use viscostring::{DerivedKernelSet, MemoryKernel, TimeGrid};

pub const TWO_PI: f64 = 2.0 * PI;

pub fn viscous() -> MemoryKernel {
    MemoryKernel::exponential_sum(&[(0.4, 1.0)]).unwrap()
}

pub fn kernels(kernel: &MemoryKernel, horizon: f64, steps: usize) -> DerivedKernelSet {
    DerivedKernelSet::derive(kernel, &TimeGrid::new(horizon, steps).unwrap()).unwrap()
}

/// `N_α(t)` for `M = 0.4 e^{−t}`.
pub fn viscous_relaxation_alpha(t: f64) -> f64 {
    1.4 * (-0.4 * t).exp() - 0.4 * (-1.4 * t).exp()
}

/// `M_α(t)` for `M = 0.4 e^{−t}`.
pub fn viscous_memory_alpha(t: f64) -> f64 {
    0.4 * (-1.4 * t).exp()
}

pub fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}
