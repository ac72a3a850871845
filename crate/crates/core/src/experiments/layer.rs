use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::{
    check_budget, check_eps, check_positive, config_error, gaussian_datum, write_table,
    ExperimentConfig, ExperimentKind, GridConfig, DEFAULT_AMPLITUDE_BUDGET,
};
use crate::error::Result;
use crate::evolve::{fitted_decay_rate, initial_layer_profile, FluxInit};
use crate::relaxation::build_heat_1d;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialLayerConfig {
    pub experiment: Option<ExperimentKind>,
    pub output_dir: Option<PathBuf>,
    pub epsilon: f64,
    pub k: f64,
    pub samples: usize,
    /// Sampling window is `[0, t_max_factor * eps^2 k]`.
    pub t_max_factor: f64,
    pub grid: GridConfig,
    pub sigma0: f64,
    pub amplitude_budget: usize,
}

impl Default for InitialLayerConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            output_dir: None,
            epsilon: 0.05,
            k: 1.0,
            samples: 21,
            t_max_factor: 5.0,
            grid: GridConfig::default(),
            sigma0: 0.5,
            amplitude_budget: DEFAULT_AMPLITUDE_BUDGET,
        }
    }
}

impl InitialLayerConfig {
    pub fn times(&self) -> Vec<f64> {
        let t_max = self.t_max_factor * self.epsilon * self.epsilon * self.k;
        let m = self.samples - 1;
        (0..self.samples)
            .map(|i| t_max * i as f64 / m as f64)
            .collect()
    }
}

impl ExperimentConfig for InitialLayerConfig {
    const KIND: ExperimentKind = ExperimentKind::InitialLayer;

    fn declared_kind(&self) -> Option<ExperimentKind> {
        self.experiment
    }

    fn output_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }

    fn validate(&self) -> Result<()> {
        check_eps("epsilon", self.epsilon)?;
        check_positive("k", self.k)?;
        check_positive("t_max_factor", self.t_max_factor)?;
        check_positive("sigma0", self.sigma0)?;
        if self.samples < 2 {
            return Err(config_error("`samples` must be at least 2"));
        }
        self.grid.build()?;
        check_budget(2 * self.grid.n, self.amplitude_budget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub t: f64,
    pub residual_zero_flux: f64,
    pub residual_equilibrium: f64,
    pub u_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub epsilon: f64,
    pub k: f64,
    pub fitted_rate: Option<f64>,
    pub expected_rate: f64,
    pub relative_rate_error: Option<f64>,
    /// `max_t r_eq(t) / r_eq(t_final)` for equilibrium-prepared flux.
    pub equilibrium_max_over_final: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialLayerResult {
    pub rows: Vec<LayerRow>,
    pub summary: LayerSummary,
}

impl InitialLayerResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_table(dir, "initial_layer", &self.rows, &self.summary)
    }
}

pub fn run_initial_layer(cfg: &InitialLayerConfig) -> Result<InitialLayerResult> {
    cfg.validate()?;
    let sys = build_heat_1d(cfg.k, cfg.epsilon)?;
    let u0 = gaussian_datum(vec![cfg.grid.build()?], cfg.sigma0)?;
    let times = cfg.times();
    let zero = initial_layer_profile(&sys, &u0, &times, FluxInit::Zero)?;
    let equi = initial_layer_profile(&sys, &u0, &times, FluxInit::Equilibrium)?;
    let rows: Vec<LayerRow> = zero
        .iter()
        .zip(&equi)
        .map(|(z, e)| LayerRow {
            t: z.t,
            residual_zero_flux: z.residual,
            residual_equilibrium: e.residual,
            u_norm: z.u_norm,
        })
        .collect();
    let expected = -1.0 / (cfg.epsilon * cfg.epsilon * cfg.k);
    let fitted = fitted_decay_rate(&zero);
    let last = equi.last().map_or(0.0, |s| s.residual);
    let peak = equi.iter().map(|s| s.residual).fold(0.0, f64::max);
    let summary = LayerSummary {
        epsilon: cfg.epsilon,
        k: cfg.k,
        fitted_rate: fitted,
        expected_rate: expected,
        relative_rate_error: fitted.map(|f| ((f - expected) / expected).abs()),
        equilibrium_max_over_final: if last > 0.0 {
            peak / last
        } else {
            f64::INFINITY
        },
    };
    info!(
        "initial layer: fitted rate {:?} vs {expected}",
        summary.fitted_rate
    );
    Ok(InitialLayerResult { rows, summary })
}
