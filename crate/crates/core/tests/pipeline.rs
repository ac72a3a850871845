use num_complex::Complex64 as C64;

use paraqsim::evolve::{
    evolve_generator, propagate_nonunitary, solve_parabolic_spectral, EvolutionConfig,
};
use paraqsim::experiments::{run_recovery, RecoveryConfig, RecoveryFlavor};
use paraqsim::grid::make_grid;
use paraqsim::relaxation::{build_black_scholes_1d, build_heat_1d, ParabolicPDE};
use paraqsim::schrod::assemble_generators;
use paraqsim::state::{HybridState, RegisterLayout};

fn gaussian(n: usize, s2: f64) -> HybridState {
    let layout = RegisterLayout::new(1, vec![make_grid(n, -10.0, 10.0).unwrap()], None).unwrap();
    HybridState::from_fn(layout, |_, x| {
        C64::new((-x[0] * x[0] / (2.0 * s2)).exp(), 0.0)
    })
}

#[test]
fn spectral_heat_matches_closed_form() {
    let (k, t, s2) = (0.7, 0.4, 0.3);
    let u = solve_parabolic_spectral(&ParabolicPDE::heat(&[k]).unwrap(), &gaussian(256, s2), t)
        .unwrap();
    let var = s2 + 2.0 * k * t;
    let amp = (s2 / var).sqrt();
    let exact = HybridState::from_fn(u.layout().clone(), |_, x| {
        C64::new(amp * (-x[0] * x[0] / (2.0 * var)).exp(), 0.0)
    });
    assert!(u.distance(&exact).unwrap() < 1e-10);
}

#[test]
fn relaxation_approaches_heat() {
    let u0 = gaussian(128, 0.5);
    let exact = solve_parabolic_spectral(&ParabolicPDE::heat(&[1.0]).unwrap(), &u0, 0.5).unwrap();
    let mut errs = Vec::new();
    for eps in [0.1, 0.05] {
        let gs = assemble_generators(&build_heat_1d(1.0, eps).unwrap()).unwrap();
        let w = evolve_generator(&gs, &u0.embed_level(2, 0).unwrap(), 0.5).unwrap();
        errs.push(
            w.level(0)
                .unwrap()
                .normalized()
                .distance(&exact.normalized())
                .unwrap(),
        );
    }
    assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
}

#[test]
fn nonunitary_stepper_agrees_with_exponential() {
    let u0 = gaussian(64, 0.5).embed_level(2, 0).unwrap();
    let gs = assemble_generators(&build_black_scholes_1d(0.05, 0.3, 0.2).unwrap()).unwrap();
    let cfg = EvolutionConfig::new(1e-3, 0.2, Default::default()).unwrap();
    let a = propagate_nonunitary(&gs, &u0, &cfg).unwrap();
    let b = evolve_generator(&gs, &u0, 0.2).unwrap();
    assert!(a.distance(&b).unwrap() < 1e-8 * b.norm());
}

#[test]
fn black_scholes_recovery_converges() {
    let cfg = RecoveryConfig {
        flavor: RecoveryFlavor::BlackScholes1D,
        epsilon: 0.3,
        sigma: 1.0,
        r: 0.05,
        grid: paraqsim::experiments::GridConfig::with_n(64),
        ancilla_points: vec![128, 256],
        gaussian_s: None,
        ..Default::default()
    };
    let r = run_recovery(&cfg).unwrap();
    assert!(r.summary.monotone_decreasing);
    assert!(r.summary.finest_error < 1e-2, "{:?}", r.rows);
    assert!(r.summary.ancilla_travel < r.summary.ancilla_half_width);
    assert!(
        r.summary.max_probability_deviation < 0.05,
        "{:?}",
        r.summary
    );
}
