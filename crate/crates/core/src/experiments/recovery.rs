use std::path::{Path, PathBuf};

use log::{info, warn};
use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::{
    check_budget, check_eps, check_positive, config_error, gaussian_datum, normalized_distance,
    write_table, ExperimentConfig, ExperimentKind, GridConfig, DEFAULT_AMPLITUDE_BUDGET,
};
use crate::error::Result;
use crate::evolve::{evolve_generator, propagate_unitary, EvolutionConfig, Scheme};
use crate::grid::{Centering, Grid1D};
use crate::measure::{recover_u, slice_ratio};
use crate::relaxation::{build_black_scholes_1d, build_heat_1d, RelaxationSystem};
use crate::schrod::{
    ancilla_gaussian, ancilla_xi, assemble_generators, schrodingerise, AncillaState, GeneratorSplit,
};
use crate::state::HybridState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RecoveryFlavor {
    #[default]
    #[serde(rename = "heat1d")]
    Heat1D,
    #[serde(rename = "black_scholes_1d")]
    BlackScholes1D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub experiment: Option<ExperimentKind>,
    pub output_dir: Option<PathBuf>,
    pub flavor: RecoveryFlavor,
    pub epsilon: f64,
    pub k: f64,
    pub r: f64,
    pub sigma: f64,
    pub t: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub grid: GridConfig,
    pub sigma0: f64,
    pub ancilla_points: Vec<usize>,
    pub ancilla_half_width: f64,
    /// Squeezing of the Gaussian-ancilla comparison run; `null` skips it.
    pub gaussian_s: Option<f64>,
    pub amplitude_budget: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            output_dir: None,
            flavor: RecoveryFlavor::Heat1D,
            epsilon: 0.2,
            k: 1.0,
            r: 0.05,
            sigma: 1.0,
            t: 0.5,
            dt: 1e-3,
            scheme: Scheme::Strang,
            grid: GridConfig::default(),
            sigma0: 0.5,
            ancilla_points: vec![64, 128, 256, 512],
            ancilla_half_width: 16.0,
            gaussian_s: Some(0.925),
            amplitude_budget: DEFAULT_AMPLITUDE_BUDGET,
        }
    }
}

impl RecoveryConfig {
    fn system(&self) -> Result<RelaxationSystem> {
        match self.flavor {
            RecoveryFlavor::Heat1D => build_heat_1d(self.k, self.epsilon),
            RecoveryFlavor::BlackScholes1D => {
                build_black_scholes_1d(self.r, self.sigma, self.epsilon)
            }
        }
    }

    fn ancilla_grid(&self, n: usize) -> Result<Grid1D> {
        Grid1D::symmetric(n, self.ancilla_half_width, Centering::Cell)
    }
}

impl ExperimentConfig for RecoveryConfig {
    const KIND: ExperimentKind = ExperimentKind::Recovery;

    fn declared_kind(&self) -> Option<ExperimentKind> {
        self.experiment
    }

    fn output_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }

    fn validate(&self) -> Result<()> {
        check_eps("epsilon", self.epsilon)?;
        check_positive("k", self.k)?;
        check_positive("sigma", self.sigma)?;
        check_positive("t", self.t)?;
        check_positive("dt", self.dt)?;
        check_positive("sigma0", self.sigma0)?;
        check_positive("ancilla_half_width", self.ancilla_half_width)?;
        if !self.r.is_finite() {
            return Err(config_error("`r` must be finite"));
        }
        if let Some(s) = self.gaussian_s {
            check_positive("gaussian_s", s)?;
        }
        if self.ancilla_points.is_empty() || self.ancilla_points.iter().any(|n| *n < 2) {
            return Err(config_error("`ancilla_points` must list resolutions >= 2"));
        }
        self.grid.build()?;
        let widest = *self.ancilla_points.iter().max().expect("non-empty");
        check_budget(
            2usize.saturating_mul(self.grid.n).saturating_mul(widest),
            self.amplitude_budget,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub ancilla: String,
    pub n_eta: usize,
    pub recovery_error: f64,
    pub probability: f64,
    pub predicted_probability: f64,
    pub norm_ratio: f64,
    pub level_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub flavor: RecoveryFlavor,
    pub epsilon: f64,
    pub t: f64,
    pub monotone_decreasing: bool,
    pub finest_error: f64,
    pub gaussian_error: Option<f64>,
    /// `max |P / (||w(t)||^2 / (2 ||w(0)||^2)) - 1|` over exact-ancilla rows.
    pub max_probability_deviation: f64,
    /// Fastest ancilla transport distance `lambda_max t`.
    pub ancilla_travel: f64,
    pub ancilla_half_width: f64,
    pub slice_check: SliceCheck,
}

/// Proportionality of two accepted ancilla slices on the finest exact run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceCheck {
    pub xi1: f64,
    pub xi2: f64,
    pub ratio: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub parallel_defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    pub rows: Vec<RecoveryRow>,
    pub summary: RecoverySummary,
}

impl RecoveryResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_table(dir, "recovery", &self.rows, &self.summary)
    }
}

fn max_a2_eigenvalue(gs: &GeneratorSplit, d: usize) -> Result<f64> {
    let b = gs.a2.momentum_symbol()?.block(&vec![0.0; d], 0.0);
    let real = b.map(|z| z.re);
    Ok(SymmetricEigen::new(real)
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max))
}

struct Pipeline {
    h: crate::operator::OperatorTermList,
    w0: HybridState,
    u_true: HybridState,
    norm_ratio: f64,
    evo: EvolutionConfig,
}

impl Pipeline {
    fn run(&self, anc: &AncillaState, label: &str) -> Result<(RecoveryRow, HybridState)> {
        let psi0 = anc.attach(&self.w0)?;
        let psi = propagate_unitary(&self.h, &psi0, &self.evo)?;
        let rec = recover_u(&psi)?;
        let row = RecoveryRow {
            ancilla: label.to_string(),
            n_eta: anc.grid.n(),
            recovery_error: normalized_distance(&rec.u, &self.u_true)?,
            probability: rec.postselection_probability,
            predicted_probability: 0.5 * self.norm_ratio,
            norm_ratio: self.norm_ratio,
            level_probability: rec.level_probability,
        };
        info!(
            "{label} n_eta = {}: error {:.3e}",
            row.n_eta, row.recovery_error
        );
        Ok((row, psi))
    }
}

pub fn run_recovery(cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let gs = assemble_generators(&sys)?;
    let h = schrodingerise(&gs)?;
    let u0 = gaussian_datum(vec![cfg.grid.build()?], cfg.sigma0)?.normalized();
    let w0 = u0.embed_level(2, 0)?;
    let w_t = evolve_generator(&gs, &w0, cfg.t)?;
    let travel = max_a2_eigenvalue(&gs, 1)? * cfg.t;
    if travel > cfg.ancilla_half_width {
        warn!(
            "fast ancilla mode travels {travel:.1} > half width {}; recovery will suffer from wrap-around",
            cfg.ancilla_half_width
        );
    }
    let pipeline = Pipeline {
        h,
        norm_ratio: w_t.norm_sqr() / w0.norm_sqr(),
        u_true: w_t.level(0)?,
        w0,
        evo: EvolutionConfig::new(cfg.dt, cfg.t, cfg.scheme)?,
    };

    let mut points = cfg.ancilla_points.clone();
    points.sort_unstable();
    points.dedup();
    let mut rows = Vec::new();
    let mut finest = None;
    for &n in &points {
        let (row, psi) = pipeline.run(&ancilla_xi(&cfg.ancilla_grid(n)?), "xi_exact")?;
        rows.push(row);
        finest = Some(psi);
    }
    let finest = finest.expect("non-empty");
    let anc_grid = finest
        .layout()
        .ancilla_grid()
        .expect("ancilla attached")
        .clone();
    let sr = slice_ratio(
        &finest,
        anc_grid.nearest_index(-1.0),
        anc_grid.nearest_index(-2.0),
    )?;
    let slice_check = SliceCheck {
        xi1: sr.xi1,
        xi2: sr.xi2,
        ratio: sr.ratio,
        expected: sr.expected,
        relative_error: (sr.ratio / sr.expected - 1.0).abs(),
        parallel_defect: sr.parallel_defect,
    };
    let mut gaussian_error = None;
    if let Some(s) = cfg.gaussian_s {
        let n = *points.last().expect("non-empty");
        let (row, _) = pipeline.run(&ancilla_gaussian(&cfg.ancilla_grid(n)?, s)?, "gaussian")?;
        gaussian_error = Some(row.recovery_error);
        rows.push(row);
    }

    let exact: Vec<&RecoveryRow> = rows.iter().filter(|r| r.ancilla == "xi_exact").collect();
    let summary = RecoverySummary {
        flavor: cfg.flavor,
        epsilon: cfg.epsilon,
        t: cfg.t,
        monotone_decreasing: exact
            .windows(2)
            .all(|w| w[1].recovery_error < w[0].recovery_error),
        finest_error: exact.last().map_or(f64::NAN, |r| r.recovery_error),
        gaussian_error,
        max_probability_deviation: exact
            .iter()
            .map(|r| (r.probability / r.predicted_probability - 1.0).abs())
            .fold(0.0, f64::max),
        ancilla_travel: travel,
        ancilla_half_width: cfg.ancilla_half_width,
        slice_check,
    };
    Ok(RecoveryResult { rows, summary })
}
