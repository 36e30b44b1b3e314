mod common;

use common::*;
use num_complex::Complex64;
use viscostring::numeric::max_abs_diff;
use viscostring::volterra::{
    assemble_big_z, mode_zn_derivative, oracle_exponential_mode, solve_mode_big_z_ode, solve_mode_zn, ORACLE_SUBSTEPS,
};
use viscostring::{MemoryKernel, TimeGrid};

#[test]
fn zn_matches_oracle_at_horizon() {
    let k = kernels(&viscous(), TWO_PI, 4096);
    let z = solve_mode_zn(1, &k).unwrap();
    let o = oracle_exponential_mode(1, &viscous(), k.grid(), ORACLE_SUBSTEPS).unwrap();
    let (a, b) = (z.samples.last().unwrap(), o.samples.last().unwrap());
    assert!((a - b).norm() <= 1e-5, "{a} vs {b}");
}

#[test]
fn oracle_self_converges() {
    let grid = TimeGrid::new(TWO_PI, 4096).unwrap();
    let a = oracle_exponential_mode(1, &viscous(), &grid, 8).unwrap();
    let b = oracle_exponential_mode(1, &viscous(), &grid, 16).unwrap();
    assert!((a.samples.last().unwrap() - b.samples.last().unwrap()).norm() <= 1e-9);
}

// |z_16(t)| ≤ 1.1 e^{αt} pointwise; z(0) = 1 rules out the constant bound 1.1 e^{αT}.
#[test]
fn oracle_high_mode_stays_under_damped_envelope() {
    let grid = TimeGrid::new(TWO_PI, 4096).unwrap();
    let o = oracle_exponential_mode(16, &viscous(), &grid, ORACLE_SUBSTEPS).unwrap();
    for (t, v) in grid.times().zip(&o.samples) {
        assert!(v.norm() <= 1.1 * (-0.2 * t).exp(), "t = {t}: {v}");
    }
}

#[test]
fn zn_error_is_second_order() {
    for n in [1, 4] {
        let errs: Vec<f64> = [1024, 2048]
            .iter()
            .map(|&s| {
                let k = kernels(&viscous(), TWO_PI, s);
                let o = oracle_exponential_mode(n, &viscous(), k.grid(), ORACLE_SUBSTEPS).unwrap();
                max_abs_diff(&solve_mode_zn(n, &k).unwrap().samples, &o.samples)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((3.5..=4.5).contains(&ratio), "n = {n}: ratio {ratio}");
    }
}

// The centred difference of a second-order z has truncation error
// h²/6·|z'''| plus the trapezoid defect, together about (n³/4)·h² for mode n.
#[test]
fn derivative_matches_centred_differences() {
    for steps in [1024, 4096] {
        let k = kernels(&viscous(), TWO_PI, steps);
        let h = k.grid().step();
        let z = solve_mode_zn(4, &k).unwrap();
        let dz = mode_zn_derivative(&z, &k).unwrap();
        let r = z.real_parts();
        let worst = (1..r.len() - 1)
            .map(|i| ((r[i + 1] - r[i - 1]) / (2.0 * h) - dz[i]).abs())
            .fold(0.0, f64::max);
        let c = worst / (h * h);
        assert!(c <= 64.0 / 4.0 + 1.0, "steps = {steps}: {c}·h²");
        assert!(c > 10.0, "steps = {steps}: {c}·h²");
    }
}

#[test]
fn ode_and_assembly_agree() {
    let k = kernels(&viscous(), TWO_PI, 4096);
    let h = k.grid().step();
    for n in [3, 8] {
        let ode = solve_mode_big_z_ode(n, &k).unwrap();
        let assembled = assemble_big_z(&solve_mode_zn(n, &k).unwrap(), &k).unwrap();
        let dev = max_abs_diff(&ode.samples, &assembled.samples);
        assert!(dev <= 5.0 * h * h, "n = {n}: {dev}");
    }
}

#[test]
fn cross_construction_constant_is_stable() {
    let consts: Vec<f64> = [1024, 2048]
        .iter()
        .map(|&s| {
            let k = kernels(&viscous(), TWO_PI, s);
            let h = k.grid().step();
            (1..=8)
                .map(|n| {
                    let ode = solve_mode_big_z_ode(n, &k).unwrap();
                    let asm = assemble_big_z(&solve_mode_zn(n, &k).unwrap(), &k).unwrap();
                    max_abs_diff(&ode.samples, &asm.samples) / (h * h)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!((consts[0] / consts[1] - 1.0).abs() < 0.05, "{consts:?}");
}

#[test]
fn conjugate_symmetry_of_both_constructions() {
    let k = kernels(&viscous(), TWO_PI, 1024);
    for n in [1, 5, 9] {
        let plus = solve_mode_big_z_ode(n, &k).unwrap();
        let minus = solve_mode_big_z_ode(-n, &k).unwrap();
        for (a, b) in plus.samples.iter().zip(&minus.samples) {
            assert!((a.conj() - b).norm() <= 1e-13);
        }
        let ap = assemble_big_z(&solve_mode_zn(n, &k).unwrap(), &k).unwrap();
        let am = assemble_big_z(&solve_mode_zn(-n, &k).unwrap(), &k).unwrap();
        for (a, b) in ap.samples.iter().zip(&am.samples) {
            assert!((a.conj() - b).norm() <= 1e-13);
        }
    }
}

#[test]
fn elastic_error_scales_with_step_squared() {
    for n in [2, 6] {
        let cs: Vec<f64> = [1024, 2048]
            .iter()
            .map(|&s| {
                let k = kernels(&MemoryKernel::Zero, TWO_PI, s);
                let h = k.grid().step();
                let big = solve_mode_big_z_ode(n, &k).unwrap();
                let zn = solve_mode_zn(n, &k).unwrap();
                let dev_big = k
                    .grid()
                    .times()
                    .zip(&big.samples)
                    .map(|(t, v)| (v - Complex64::new(0.0, n as f64 * t).exp()).norm())
                    .fold(0.0, f64::max);
                let dev_small = k
                    .grid()
                    .times()
                    .zip(&zn.samples)
                    .map(|(t, v)| (v.re - (n as f64 * t).cos()).abs())
                    .fold(0.0, f64::max);
                dev_big.max(dev_small) / (h * h * (n * n) as f64)
            })
            .collect();
        assert!((cs[0] / cs[1] - 1.0).abs() < 0.05, "n = {n}: {cs:?}");
    }
}
