//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paraqsim::evolve::{propagate_unitary, propagate_unitary_observed, EvolutionConfig, Scheme};
use paraqsim::experiments::{
    run_dimension_scaling, run_epsilon_convergence, run_fidelity_scan, run_initial_layer,
    run_recovery, DimScalingConfig, EpsConvergenceConfig, FidelityScanConfig, InitialLayerConfig,
    RecoveryConfig,
};
use paraqsim::grid::{make_grid, Centering, Grid1D};
use paraqsim::measure::{postselect, project_qudit};
use paraqsim::operator::OperatorTermList;
use paraqsim::relaxation::{
    build_black_scholes_1d, build_black_scholes_dd, build_fokker_planck, build_general_parabolic,
    build_heat_1d, build_heat_dd, solve_alpha, ParabolicPDE, RelaxationSystem,
};
use paraqsim::schrod::{
    ancilla_xi, assemble_generators, dense_deviation_small, generator_block, schrodingerise,
    GeneratorSplit,
};
use paraqsim::state::{HybridState, RegisterLayout};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> paraqsim::Result<Outcome>;

fn outcome(pass: bool, detail: String) -> paraqsim::Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn fidelity() -> paraqsim::Result<Outcome> {
    let r = run_fidelity_scan(&FidelityScanConfig::default())?;
    let s = &r.summary;
    outcome(
        (0.90..=0.95).contains(&s.argmax_s)
            && (0.980..=0.992).contains(&s.max_fidelity)
            && s.max_abs_diff <= 1e-4,
        format!(
            "argmax s = {:.3}, max F = {:.4}, |closed - quadrature| = {:.1e}",
            s.argmax_s, s.max_fidelity, s.max_abs_diff
        ),
    )
}

fn eps_convergence() -> paraqsim::Result<Outcome> {
    let r = run_epsilon_convergence(&EpsConvergenceConfig::default())?;
    let slope = r.summary.fitted_slope.unwrap_or(f64::NAN);
    outcome(
        (1.8..=2.2).contains(&slope),
        format!(
            "log-log slope {slope:.3} over {} points",
            r.summary.points_in_fit
        ),
    )
}

fn initial_layer() -> paraqsim::Result<Outcome> {
    let r = run_initial_layer(&InitialLayerConfig::default())?;
    let s = &r.summary;
    let rel = s.relative_rate_error.unwrap_or(f64::INFINITY);
    outcome(
        rel <= 0.15 && s.equilibrium_max_over_final <= 3.0,
        format!(
            "rate {:.1} vs {:.1} ({:.1}%), equilibrium max/final {:.3}",
            s.fitted_rate.unwrap_or(f64::NAN),
            s.expected_rate,
            100.0 * rel,
            s.equilibrium_max_over_final
        ),
    )
}

fn dimension_scaling() -> paraqsim::Result<Outcome> {
    let cfg = DimScalingConfig {
        dims: vec![1, 2],
        ..Default::default()
    };
    let r = run_dimension_scaling(&cfg)?;
    let ratio = r.summary.ratio_d2_d1.unwrap_or(f64::NAN);
    outcome(
        (1.4..=2.6).contains(&ratio),
        format!("error(d=2)/error(d=1) = {ratio:.3} at n = {}", r.summary.n),
    )
}

fn recovery() -> paraqsim::Result<Outcome> {
    let r = run_recovery(&RecoveryConfig::default())?;
    let s = &r.summary;
    let errs: Vec<String> = r
        .rows
        .iter()
        .filter(|row| row.ancilla == "xi_exact")
        .map(|row| format!("{:.1e}", row.recovery_error))
        .collect();
    outcome(
        s.finest_error <= 1e-3 && s.monotone_decreasing,
        format!("errors over n_eta: [{}]", errs.join(", ")),
    )
}

fn six_flavors() -> paraqsim::Result<Vec<RelaxationSystem>> {
    let general = ParabolicPDE::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]),
        vec![0.1, -0.2],
        0.05,
    )?;
    Ok(vec![
        build_heat_1d(1.0, 0.1)?,
        build_heat_dd(&[1.0, 0.5], &[0.1, 0.2])?,
        build_black_scholes_1d(0.05, 0.2, 0.1)?,
        build_black_scholes_dd(0.05, &[0.2, 0.3], &[0.4], &[0.06, 0.08], &[0.1, 0.1])?,
        build_fokker_planck(&[0.5, -0.3], &[1.0, 0.5], &[0.1, 0.1])?,
        build_general_parabolic(&general, &[0.1, 0.15])?,
    ])
}

fn generator_residual(
    sys: &RelaxationSystem,
    gs: &GeneratorSplit,
    p: &[f64],
) -> paraqsim::Result<f64> {
    let i = C64::new(0.0, 1.0);
    let block = generator_block(gs, p)? * (-i);
    let mut g = sys.source_matrix().map(|x| C64::new(x, 0.0));
    for (j, pj) in p.iter().enumerate() {
        g += sys.coupling_matrix(j).map(|x| C64::new(0.0, x * pj));
    }
    Ok((block - g).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn alpha_residual(d: &DMatrix<f64>, eps: &[f64]) -> paraqsim::Result<f64> {
    let a = solve_alpha(d, eps)?;
    let n = d.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let s: f64 = (0..n)
                .map(|i| a[(i, j)] * a[(i, k)] * eps[i] * eps[i] / (eps[j] * eps[k]))
                .sum();
            worst = worst.max((s - d[(j, k)]).abs());
        }
    }
    Ok(worst)
}

fn structural() -> paraqsim::Result<Outcome> {
    let mut herm: f64 = 0.0;
    let mut recon: f64 = 0.0;
    let mut roundtrip: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for sys in six_flavors()? {
        let gs = assemble_generators(&sys)?;
        herm = herm.max(dense_deviation_small(&schrodingerise(&gs)?)?);
        for _ in 0..8 {
            let p: Vec<f64> = (0..sys.dimension())
                .map(|_| rng.gen_range(-20.0..20.0))
                .collect();
            recon = recon.max(generator_residual(&sys, &gs, &p)?);
        }
        roundtrip = roundtrip.max(sys.effective_pde().max_coefficient_difference(sys.target()));
    }

    let sys = build_heat_1d(1.0, 0.1)?;
    let h = schrodingerise(&assemble_generators(&sys)?)?;
    let x = make_grid(64, -8.0, 8.0)?;
    let u0 = HybridState::from_fn(RegisterLayout::new(1, vec![x], None)?, |_, x| {
        C64::new((-x[0] * x[0]).exp(), 0.0)
    });
    let anc = ancilla_xi(&Grid1D::symmetric(128, 16.0, Centering::Cell)?);
    let psi0 = anc.attach(&u0.normalized().embed_level(2, 0)?)?;
    let n0 = psi0.norm();
    let mut drift: f64 = 0.0;
    let cfg = EvolutionConfig::new(1e-3, 1.0, Scheme::Strang)?;
    propagate_unitary_observed(&h, &psi0, &cfg, 1, |_, s| {
        drift = drift.max((s.norm() - n0).abs())
    })?;

    let mut alpha: f64 = 0.0;
    for trial in 0..100 {
        let d = 1 + trial % 4;
        let rank = 1 + rng.gen_range(0..d);
        let g = DMatrix::from_fn(if trial % 5 == 0 { rank } else { d }, d, |_, _| {
            rng.gen_range(-1.0..1.0)
        });
        let eps: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..0.5)).collect();
        alpha = alpha.max(alpha_residual(&(g.transpose() * &g), &eps)?);
    }

    outcome(
        herm <= 1e-12 && drift <= 1e-8 && recon <= 1e-10 && roundtrip <= 1e-10 && alpha <= 1e-10,
        format!(
            "H-H^+ {herm:.1e}, norm drift {drift:.1e} over {} steps, generator {recon:.1e}, \
             effective PDE {roundtrip:.1e}, solve_alpha {alpha:.1e}",
            cfg.steps()
        ),
    )
}

fn black_scholes_jacobian() -> paraqsim::Result<Outcome> {
    let eps = 0.1;
    let mut worst: f64 = 0.0;
    let mut real = true;
    for r in [0.01, 0.05, 0.1] {
        for sigma in [0.1, 0.2, 0.4] {
            let sys = build_black_scholes_1d(r, sigma, eps)?;
            let mut num = sys.jacobian_eigenvalues(0);
            num.sort_by(f64::total_cmp);
            let c = r - 0.5 * sigma * sigma;
            let disc = c * c + 4.0 / (eps * eps);
            real &= disc > 0.0 && num.iter().all(|l| l.is_finite());
            let root = disc.sqrt();
            let exact = [0.5 * (-c - root), 0.5 * (-c + root)];
            for (a, b) in num.iter().zip(exact) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(
        worst <= 1e-10 && real,
        format!("max eigenvalue error {worst:.1e}, all real: {real}"),
    )
}

fn postselection() -> paraqsim::Result<Outcome> {
    // Hermitian-only dynamics: drop the dissipative part of the heat generator.
    let sys = build_heat_1d(1.0, 0.2)?;
    let mut gs = assemble_generators(&sys)?;
    gs.a2 = OperatorTermList::new(gs.a1.levels(), gs.a1.modes());
    let h = schrodingerise(&gs)?;
    let x = make_grid(64, -8.0, 8.0)?;
    let u0 = HybridState::from_fn(RegisterLayout::new(1, vec![x], None)?, |_, x| {
        C64::new((-x[0] * x[0] / 0.5).exp(), 0.0)
    });
    let anc = ancilla_xi(&Grid1D::symmetric(256, 16.0, Centering::Cell)?);
    let psi0 = anc.attach(&u0.normalized().embed_level(2, 0)?)?;
    let psi = propagate_unitary(&h, &psi0, &EvolutionConfig::new(1e-3, 0.5, Scheme::Strang)?)?;
    let p_half = postselect(&psi, None)?.outcome.probability;

    let full = run_recovery(&RecoveryConfig::default())?;
    let ps = postselect(&psi, None)?;
    let levels: f64 = (0..2)
        .map(|l| project_qudit(&ps.outcome.state, l).map(|o| o.probability))
        .sum::<paraqsim::Result<f64>>()?;
    let slice = full.summary.slice_check;
    outcome(
        (p_half - 0.5).abs() <= 1e-10
            && (levels - 1.0).abs() <= 1e-12
            && slice.relative_error <= 1e-3,
        format!(
            "|P - 1/2| = {:.1e}, |sum P_level - 1| = {:.1e}, slice ratio error {:.1e}",
            (p_half - 0.5).abs(),
            (levels - 1.0).abs(),
            slice.relative_error
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check, Duration); 8] = [
        (
            "gaussian ancilla fidelity",
            fidelity,
            Duration::from_secs(1),
        ),
        (
            "epsilon^2 convergence",
            eps_convergence,
            Duration::from_secs(60),
        ),
        (
            "initial layer decay",
            initial_layer,
            Duration::from_secs(60),
        ),
        (
            "linear dimension scaling",
            dimension_scaling,
            Duration::from_secs(300),
        ),
        ("end-to-end recovery", recovery, Duration::from_secs(300)),
        ("structural invariants", structural, Duration::from_secs(60)),
        (
            "black-scholes jacobian",
            black_scholes_jacobian,
            Duration::from_secs(1),
        ),
        (
            "post-selection probabilities",
            postselection,
            Duration::from_secs(60),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {detail}; {:.2}s (limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
