//! Canned studies with strict JSON configuration and CSV / JSON output.

mod convergence;
mod fidelity;
mod layer;
mod recovery;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_grid, Grid1D};
use crate::state::{HybridState, RegisterLayout};

pub use convergence::{
    run_dimension_scaling, run_epsilon_convergence, ConvergenceFlavor, DimRow, DimScalingConfig,
    DimScalingResult, DimSummary, EpsConvergenceConfig, EpsConvergenceResult, EpsRow, EpsSummary,
};
pub use fidelity::{
    run_fidelity_scan, FidelityRow, FidelityScanConfig, FidelityScanResult, FidelitySummary,
};
pub use layer::{
    run_initial_layer, InitialLayerConfig, InitialLayerResult, LayerRow, LayerSummary,
};
pub use recovery::{
    run_recovery, RecoveryConfig, RecoveryFlavor, RecoveryResult, RecoveryRow, RecoverySummary,
    SliceCheck,
};
pub use report::{run_hamiltonian_report, HamReportConfig, HamReportResult, SystemSpec};

/// Default cap on complex amplitudes held by one state.
pub const DEFAULT_AMPLITUDE_BUDGET: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    FidelityScan,
    EpsilonConvergence,
    DimensionScaling,
    InitialLayer,
    Recovery,
    HamiltonianReport,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FidelityScan => "fidelity_scan",
            ExperimentKind::EpsilonConvergence => "epsilon_convergence",
            ExperimentKind::DimensionScaling => "dimension_scaling",
            ExperimentKind::InitialLayer => "initial_layer",
            ExperimentKind::Recovery => "recovery",
            ExperimentKind::HamiltonianReport => "hamiltonian_report",
        }
    }
}

/// Common behaviour of experiment configurations.
pub trait ExperimentConfig: DeserializeOwned + Default {
    const KIND: ExperimentKind;

    /// Value of the optional `experiment` key.
    fn declared_kind(&self) -> Option<ExperimentKind>;

    /// Value of the optional `output_dir` key.
    fn output_dir(&self) -> Option<&Path>;

    /// Parameter and resource checks run before any computation.
    fn validate(&self) -> Result<()>;
}

/// Parses a strict JSON configuration and validates it.
pub fn parse_config<C: ExperimentConfig>(text: &str) -> Result<C> {
    let cfg: C = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(k) = cfg.declared_kind() {
        if k != C::KIND {
            return Err(Error::Config(format!(
                "config declares experiment `{}` but `{}` was requested",
                k.name(),
                C::KIND.name()
            )));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config<C: ExperimentConfig>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 256,
            x_min: -8.0,
            x_max: 8.0,
        }
    }
}

impl GridConfig {
    pub fn with_n(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<Grid1D> {
        make_grid(self.n, self.x_min, self.x_max).map_err(|e| Error::Config(e.to_string()))
    }
}

pub(crate) fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Converts parameter errors raised during validation into config errors,
/// leaving resource-guard refusals intact.
pub(crate) fn as_config(e: Error) -> Error {
    match e {
        Error::ResourceGuard { .. } | Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

pub fn check_budget(requested: usize, budget: usize) -> Result<()> {
    if requested > budget {
        Err(Error::ResourceGuard { requested, budget })
    } else {
        Ok(())
    }
}

/// Product Gaussian `exp(-|x|^2 / (2 sigma0^2))` on a single-level register.
pub fn gaussian_datum(grids: Vec<Grid1D>, sigma0: f64) -> Result<HybridState> {
    let layout = RegisterLayout::new(1, grids, None)?;
    Ok(HybridState::from_fn(layout, |_, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        C64::new((-r2 / (2.0 * sigma0 * sigma0)).exp(), 0.0)
    }))
}

/// `|| a / ||a|| - b / ||b|| ||`
pub fn normalized_distance(a: &HybridState, b: &HybridState) -> Result<f64> {
    a.normalized().distance(&b.normalized())
}

pub(crate) fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>_summary.json` into `dir`.
pub(crate) fn write_table<R: Serialize, S: Serialize>(
    dir: &Path,
    stem: &str,
    rows: &[R],
    summary: &S,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}_summary.json"));
    write_csv(&csv_path, rows)?;
    write_json(&json_path, summary)?;
    Ok(vec![csv_path, json_path])
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(format!("`{name}` must be positive, got {v}")))
    }
}

pub(crate) fn check_eps(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(config_error(format!(
            "`{name}` must lie in (0, 1), got {v}"
        )))
    }
}
