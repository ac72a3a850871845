use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{
    check_budget, check_eps, check_positive, config_error, gaussian_datum, normalized_distance,
    write_table, ExperimentConfig, ExperimentKind, GridConfig, DEFAULT_AMPLITUDE_BUDGET,
};
use crate::error::{Error, Result};
use crate::evolve::{evolve_generator, solve_parabolic_spectral};
use crate::fit::log_log_slope;
use crate::grid::Grid1D;
use crate::relaxation::{
    build_black_scholes_1d, build_fokker_planck, build_heat_1d, build_heat_dd, RelaxationSystem,
};
use crate::schrod::assemble_generators;
use crate::state::HybridState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ConvergenceFlavor {
    #[default]
    #[serde(rename = "heat1d")]
    Heat1D,
    #[serde(rename = "black_scholes_1d")]
    BlackScholes1D,
    #[serde(rename = "fokker_planck")]
    FokkerPlanck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsConvergenceConfig {
    pub experiment: Option<ExperimentKind>,
    pub output_dir: Option<PathBuf>,
    pub flavor: ConvergenceFlavor,
    pub epsilons: Vec<f64>,
    pub t: f64,
    /// Conductivity (heat) or diffusivity (Fokker-Planck).
    pub k: f64,
    pub r: f64,
    pub sigma: f64,
    /// Fokker-Planck drift velocity.
    pub mu: f64,
    pub grid: GridConfig,
    pub sigma0: f64,
    /// Also run every eps on a grid with twice the points.
    pub refine: bool,
    pub floor_factor: f64,
    pub amplitude_budget: usize,
}

impl Default for EpsConvergenceConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            output_dir: None,
            flavor: ConvergenceFlavor::Heat1D,
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            t: 0.5,
            k: 1.0,
            r: 0.05,
            sigma: 0.2,
            mu: 0.5,
            grid: GridConfig::default(),
            sigma0: 0.5,
            refine: true,
            floor_factor: 10.0,
            amplitude_budget: DEFAULT_AMPLITUDE_BUDGET,
        }
    }
}

/// Initial-layer duration `eps^2 ln(1/eps)`.
pub fn layer_time(eps: f64) -> f64 {
    eps * eps * (1.0 / eps).ln()
}

impl EpsConvergenceConfig {
    fn system(&self, eps: f64) -> Result<RelaxationSystem> {
        match self.flavor {
            ConvergenceFlavor::Heat1D => build_heat_1d(self.k, eps),
            ConvergenceFlavor::BlackScholes1D => build_black_scholes_1d(self.r, self.sigma, eps),
            ConvergenceFlavor::FokkerPlanck => build_fokker_planck(&[self.mu], &[self.k], &[eps]),
        }
    }
}

impl ExperimentConfig for EpsConvergenceConfig {
    const KIND: ExperimentKind = ExperimentKind::EpsilonConvergence;

    fn declared_kind(&self) -> Option<ExperimentKind> {
        self.experiment
    }

    fn output_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }

    fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(config_error("`epsilons` is empty"));
        }
        for &e in &self.epsilons {
            check_eps("epsilons", e)?;
        }
        check_positive("t", self.t)?;
        check_positive("k", self.k)?;
        check_positive("sigma", self.sigma)?;
        check_positive("sigma0", self.sigma0)?;
        check_positive("floor_factor", self.floor_factor)?;
        if !(self.r.is_finite() && self.mu.is_finite()) {
            return Err(config_error("`r` and `mu` must be finite"));
        }
        self.grid.build()?;
        let layer = self
            .epsilons
            .iter()
            .map(|e| layer_time(*e))
            .fold(0.0, f64::max);
        if self.t <= layer {
            return Err(Error::InsideInitialLayer { t: self.t, layer });
        }
        if self.t < 10.0 * layer {
            warn!(
                "t = {} is only {:.1}x the initial layer {layer:.4}",
                self.t,
                self.t / layer
            );
        }
        let n = if self.refine {
            2 * self.grid.n
        } else {
            self.grid.n
        };
        check_budget(2 * n, self.amplitude_budget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRow {
    pub eps: f64,
    pub error: f64,
    pub error_refined: Option<f64>,
    pub layer_time: f64,
    pub included_in_fit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsSummary {
    pub flavor: ConvergenceFlavor,
    pub t: f64,
    pub n: usize,
    pub fitted_slope: Option<f64>,
    pub spatial_floor: f64,
    pub points_in_fit: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsConvergenceResult {
    pub rows: Vec<EpsRow>,
    pub summary: EpsSummary,
}

impl EpsConvergenceResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_table(dir, "eps_convergence", &self.rows, &self.summary)
    }
}

/// Normalised-state error of the relaxation u against the exact parabolic solution.
pub fn relaxation_error(sys: &RelaxationSystem, u0: &HybridState, t: f64) -> Result<f64> {
    let gs = assemble_generators(sys)?;
    let w0 = u0.embed_level(sys.levels(), 0)?;
    let u = evolve_generator(&gs, &w0, t)?.level(0)?;
    let exact = solve_parabolic_spectral(sys.target(), u0, t)?;
    normalized_distance(&u, &exact)
}

fn refined(g: &GridConfig) -> GridConfig {
    GridConfig {
        n: 2 * g.n,
        ..g.clone()
    }
}

/// Difference between the exact solutions on `n` and `2n` points, sampled on
/// the coarse grid.
fn spatial_floor(cfg: &EpsConvergenceConfig, sys: &RelaxationSystem) -> Result<f64> {
    let coarse = gaussian_datum(vec![cfg.grid.build()?], cfg.sigma0)?;
    let fine = gaussian_datum(vec![refined(&cfg.grid).build()?], cfg.sigma0)?;
    let uc = solve_parabolic_spectral(sys.target(), &coarse, cfg.t)?;
    let uf = solve_parabolic_spectral(sys.target(), &fine, cfg.t)?;
    let sampled: Vec<_> = uf.amplitudes().iter().step_by(2).cloned().collect();
    let uf = HybridState::from_amplitudes(uc.layout().clone(), sampled)?;
    Ok(normalized_distance(&uc, &uf)?.max(1e-14))
}

pub fn run_epsilon_convergence(cfg: &EpsConvergenceConfig) -> Result<EpsConvergenceResult> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let u0 = gaussian_datum(vec![grid], cfg.sigma0)?;
    let u0_fine = gaussian_datum(vec![refined(&cfg.grid).build()?], cfg.sigma0)?;
    let floor = spatial_floor(cfg, &cfg.system(cfg.epsilons[0])?)?;

    let mut eps = cfg.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut rows = Vec::with_capacity(eps.len());
    for e in eps {
        let sys = cfg.system(e)?;
        let error = relaxation_error(&sys, &u0, cfg.t)?;
        let error_refined = if cfg.refine {
            Some(relaxation_error(&sys, &u0_fine, cfg.t)?)
        } else {
            None
        };
        info!("eps = {e}: error {error:.3e}");
        rows.push(EpsRow {
            eps: e,
            error,
            error_refined,
            layer_time: layer_time(e),
            included_in_fit: error > cfg.floor_factor * floor,
        });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.included_in_fit)
        .map(|r| (r.eps, r.error))
        .unzip();
    let summary = EpsSummary {
        flavor: cfg.flavor,
        t: cfg.t,
        n: cfg.grid.n,
        fitted_slope: log_log_slope(&x, &y),
        spatial_floor: floor,
        points_in_fit: x.len(),
    };
    if let Some(s) = summary.fitted_slope {
        info!("fitted slope {s:.3}");
    }
    Ok(EpsConvergenceResult { rows, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimScalingConfig {
    pub experiment: Option<ExperimentKind>,
    pub output_dir: Option<PathBuf>,
    pub dims: Vec<usize>,
    pub epsilon: f64,
    pub t: f64,
    pub k: f64,
    pub grid: GridConfig,
    pub sigma0: f64,
    pub amplitude_budget: usize,
}

impl Default for DimScalingConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            output_dir: None,
            dims: vec![1, 2, 3],
            epsilon: 0.1,
            t: 0.5,
            k: 1.0,
            grid: GridConfig::with_n(64),
            sigma0: 0.5,
            amplitude_budget: DEFAULT_AMPLITUDE_BUDGET,
        }
    }
}

/// `(d + 1) n^d`, saturating.
pub fn heat_amplitudes(d: usize, n: usize) -> usize {
    (0..d).fold(d + 1, |acc, _| acc.saturating_mul(n))
}

impl ExperimentConfig for DimScalingConfig {
    const KIND: ExperimentKind = ExperimentKind::DimensionScaling;

    fn declared_kind(&self) -> Option<ExperimentKind> {
        self.experiment
    }

    fn output_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }

    fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(config_error("`dims` must list positive dimensions"));
        }
        check_eps("epsilon", self.epsilon)?;
        check_positive("t", self.t)?;
        check_positive("k", self.k)?;
        check_positive("sigma0", self.sigma0)?;
        self.grid.build()?;
        let layer = layer_time(self.epsilon);
        if self.t <= layer {
            return Err(Error::InsideInitialLayer { t: self.t, layer });
        }
        for &d in &self.dims {
            check_budget(heat_amplitudes(d, self.grid.n), self.amplitude_budget)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimRow {
    pub d: usize,
    pub amplitudes: usize,
    pub error: f64,
    pub ratio_to_d1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimSummary {
    pub epsilon: f64,
    pub t: f64,
    pub n: usize,
    pub ratio_d2_d1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimScalingResult {
    pub rows: Vec<DimRow>,
    pub summary: DimSummary,
}

impl DimScalingResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_table(dir, "dim_scaling", &self.rows, &self.summary)
    }
}

pub fn run_dimension_scaling(cfg: &DimScalingConfig) -> Result<DimScalingResult> {
    cfg.validate()?;
    let mut dims = cfg.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let grid: Grid1D = cfg.grid.build()?;
    let mut rows: Vec<DimRow> = Vec::new();
    for d in dims {
        let sys = build_heat_dd(&vec![cfg.k; d], &vec![cfg.epsilon; d])?;
        let u0 = gaussian_datum(vec![grid.clone(); d], cfg.sigma0)?;
        let error = relaxation_error(&sys, &u0, cfg.t)?;
        info!("d = {d}: error {error:.3e}");
        rows.push(DimRow {
            d,
            amplitudes: heat_amplitudes(d, grid.n()),
            error,
            ratio_to_d1: None,
        });
    }
    let e1 = rows.iter().find(|r| r.d == 1).map(|r| r.error);
    if let Some(e1) = e1 {
        for r in &mut rows {
            r.ratio_to_d1 = Some(r.error / e1);
        }
    }
    let summary = DimSummary {
        epsilon: cfg.epsilon,
        t: cfg.t,
        n: cfg.grid.n,
        ratio_d2_d1: rows.iter().find(|r| r.d == 2).and_then(|r| r.ratio_to_d1),
    };
    Ok(DimScalingResult { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inside_layer_refused() {
        let cfg = EpsConvergenceConfig {
            t: 0.01,
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::InsideInitialLayer { .. })
        ));
    }

    #[test]
    fn budget_refusal() {
        let cfg = DimScalingConfig {
            dims: vec![4],
            grid: GridConfig::with_n(128),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::ResourceGuard { .. })));
        let ok = DimScalingConfig {
            dims: vec![3],
            grid: GridConfig::with_n(32),
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn small_heat_run() {
        let cfg = EpsConvergenceConfig {
            epsilons: vec![0.1, 0.05],
            grid: GridConfig::with_n(64),
            ..Default::default()
        };
        let r = run_epsilon_convergence(&cfg).unwrap();
        assert_eq!(r.rows[0].eps, 0.05);
        assert!(r.rows[0].error < r.rows[1].error);
    }
}
