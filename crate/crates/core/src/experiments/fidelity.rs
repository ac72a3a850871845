use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::{config_error, write_table, ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::schrod::{gaussian_fidelity, quadrature_fidelity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityScanConfig {
    pub experiment: Option<ExperimentKind>,
    pub output_dir: Option<PathBuf>,
    /// Explicit squeezing values; overrides the range below.
    pub s_values: Option<Vec<f64>>,
    pub s_min: f64,
    pub s_max: f64,
    pub s_step: f64,
    pub quadrature_points: usize,
    pub quadrature_half_width: f64,
}

impl Default for FidelityScanConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            output_dir: None,
            s_values: None,
            s_min: 0.1,
            s_max: 3.0,
            s_step: 0.005,
            quadrature_points: 4096,
            quadrature_half_width: 20.0,
        }
    }
}

impl FidelityScanConfig {
    pub fn s_grid(&self) -> Vec<f64> {
        if let Some(v) = &self.s_values {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            return v;
        }
        let count = ((self.s_max - self.s_min) / self.s_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.s_min + i as f64 * self.s_step)
            .collect()
    }
}

impl ExperimentConfig for FidelityScanConfig {
    const KIND: ExperimentKind = ExperimentKind::FidelityScan;

    fn declared_kind(&self) -> Option<ExperimentKind> {
        self.experiment
    }

    fn output_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }

    fn validate(&self) -> Result<()> {
        match &self.s_values {
            Some(v) if v.is_empty() => return Err(config_error("`s_values` is empty")),
            Some(v) => {
                if let Some(s) = v.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                    return Err(config_error(format!(
                        "squeezing values must be positive, got {s}"
                    )));
                }
            }
            None => {
                if !(self.s_min > 0.0 && self.s_max >= self.s_min && self.s_step > 0.0) {
                    return Err(config_error("need 0 < s_min <= s_max and s_step > 0"));
                }
            }
        }
        if self.quadrature_points < 2
            || self.quadrature_half_width.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        {
            return Err(config_error(
                "quadrature grid needs >= 2 points and a positive half width",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub s: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub argmax_s: f64,
    pub max_fidelity: f64,
    pub max_abs_diff: f64,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityScanResult {
    pub rows: Vec<FidelityRow>,
    pub summary: FidelitySummary,
}

impl FidelityScanResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        write_table(dir, "fidelity_scan", &self.rows, &self.summary)
    }
}

pub fn run_fidelity_scan(cfg: &FidelityScanConfig) -> Result<FidelityScanResult> {
    cfg.validate()?;
    let rows = cfg
        .s_grid()
        .into_iter()
        .map(|s| {
            let closed_form = gaussian_fidelity(s)?;
            let quadrature =
                quadrature_fidelity(s, cfg.quadrature_points, cfg.quadrature_half_width)?;
            Ok(FidelityRow {
                s,
                closed_form,
                quadrature,
                abs_diff: (closed_form - quadrature).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = rows
        .iter()
        .max_by(|a, b| a.closed_form.total_cmp(&b.closed_form))
        .expect("non-empty scan");
    let summary = FidelitySummary {
        argmax_s: best.s,
        max_fidelity: best.closed_form,
        max_abs_diff: rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max),
        rows: rows.len(),
    };
    info!(
        "fidelity scan: max {:.6} at s = {:.3}",
        summary.max_fidelity, summary.argmax_s
    );
    Ok(FidelityScanResult { rows, summary })
}
