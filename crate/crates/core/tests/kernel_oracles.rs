mod common;

use common::*;
use proptest::prelude::*;
use viscostring::kernels::exceptional_index_check;
use viscostring::volterra::convolve;
use viscostring::{Error, MemoryKernel, TimeGrid};

fn midpoint_convolution(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, t: f64, cells: usize) -> f64 {
    let dh = t / cells as f64;
    (0..cells)
        .map(|i| {
            let s = (i as f64 + 0.5) * dh;
            f(t - s) * g(s)
        })
        .sum::<f64>()
        * dh
}

#[test]
fn stress_excess_matches_refined_riemann_sum() {
    let steps = 4096;
    let k = kernels(&viscous(), TWO_PI, steps);
    let reference = midpoint_convolution(viscous_relaxation_alpha, viscous_memory_alpha, TWO_PI, steps * 64);
    let f_end = *k.stress_excess().last().unwrap();
    assert!((f_end - reference).abs() <= 1e-6, "{f_end} vs {reference}");
}

#[test]
fn relaxation_alpha_closed_form_on_grid() {
    let k = kernels(&viscous(), TWO_PI, 512);
    for (t, v) in k.grid().times().zip(k.relaxation_alpha()) {
        assert!((v - viscous_relaxation_alpha(t)).abs() < 1e-14);
    }
}

#[test]
fn stress_excess_is_second_order() {
    let ends: Vec<f64> =
        [256, 512, 1024].iter().map(|&s| *kernels(&viscous(), TWO_PI, s).stress_excess().last().unwrap()).collect();
    let p = order((ends[0] - ends[1]).abs(), (ends[1] - ends[2]).abs());
    assert!(p >= 1.9, "observed order {p}");
    assert_eq!(kernels(&viscous(), TWO_PI, 256).stress_excess()[0], 0.0);
}

#[test]
fn resolvent_satisfies_its_equation() {
    for steps in [512, 1024] {
        let k = kernels(&viscous(), TWO_PI, steps);
        let rate = k.relaxation_alpha_rate();
        let l = k.resolvent();
        let conv = convolve(rate, l, k.grid()).unwrap();
        let residual = (0..l.len()).map(|i| (l[i] + conv[i] + rate[i]).abs()).fold(0.0, f64::max);
        assert!(residual < 1e-13, "{residual}");
        assert_eq!(l[0], 0.0);
    }
}

#[test]
fn resolvent_converges_at_second_order() {
    let ends: Vec<f64> =
        [256, 512, 1024].iter().map(|&s| *kernels(&viscous(), TWO_PI, s).resolvent().last().unwrap()).collect();
    let p = order((ends[0] - ends[1]).abs(), (ends[1] - ends[2]).abs());
    assert!((1.8..=2.2).contains(&p), "observed order {p}");
}

#[test]
fn exceptional_index_examples() {
    assert!(exceptional_index_check(&MemoryKernel::Zero, 32).is_ok());
    let critical = MemoryKernel::exponential_sum(&[(2.0, 1.0)]).unwrap();
    assert!(matches!(exceptional_index_check(&critical, 32), Err(Error::ExceptionalIndex(1))));
    let check = exceptional_index_check(&viscous(), 64).unwrap();
    assert!(!check.complex_frequencies);
}

fn exp_kernel() -> impl Strategy<Value = MemoryKernel> {
    prop::collection::vec((-2.0f64..2.0, 0.1f64..5.0), 1..4)
        .prop_map(|pairs| MemoryKernel::exponential_sum(&pairs).unwrap())
}

fn poly_kernel() -> impl Strategy<Value = MemoryKernel> {
    prop::collection::vec(-1.0f64..1.0, 1..=5).prop_map(|c| MemoryKernel::polynomial(&c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derived_values_at_origin(kernel in prop_oneof![exp_kernel(), poly_kernel()]) {
        let k = viscostring::DerivedKernelSet::derive(&kernel, &TimeGrid::new(1.0, 64).unwrap()).unwrap();
        prop_assert_eq!(k.relaxation()[0], 1.0);
        prop_assert!((k.relaxation_alpha()[0] - 1.0).abs() <= 1e-15);
        prop_assert!(k.relaxation_alpha_rate()[0].abs() <= 1e-12);
        prop_assert!((k.stress_kernel()[0] - 1.0).abs() <= 1e-15);
        prop_assert!((k.velocity_kernel()[0] - kernel.value(0.0)).abs() <= 1e-12);
        prop_assert_eq!(k.stress_excess()[0], 0.0);
        prop_assert_eq!(k.resolvent()[0], 0.0);
        prop_assert!((k.alpha() + kernel.value(0.0) / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn velocity_kernel_equals_memory_alpha(kernel in prop_oneof![exp_kernel(), poly_kernel()]) {
        let k = viscostring::DerivedKernelSet::derive(&kernel, &TimeGrid::new(2.0, 128).unwrap()).unwrap();
        for (h, m) in k.velocity_kernel().iter().zip(k.memory_alpha()) {
            prop_assert!((h - m).abs() <= 1e-12 * (1.0 + m.abs()));
        }
    }

    #[test]
    fn stress_kernel_is_relaxation_plus_excess(kernel in exp_kernel()) {
        let k = viscostring::DerivedKernelSet::derive(&kernel, &TimeGrid::new(2.0, 128).unwrap()).unwrap();
        for i in 0..k.grid().len() {
            let sum = k.relaxation_alpha()[i] + k.stress_excess()[i];
            prop_assert!((k.stress_kernel()[i] - sum).abs() <= 1e-14 * (1.0 + sum.abs()));
        }
    }
}
