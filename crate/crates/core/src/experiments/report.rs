use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{as_config, write_json, ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::relaxation::{
    build_black_scholes_1d, build_black_scholes_dd, build_fokker_planck, build_general_parabolic,
    build_heat_1d, build_heat_dd, ParabolicPDE, RelaxationSystem,
};
use crate::schrod::{hamiltonian_report, HamiltonianReport};

/// Relaxation system selected by its `flavor` tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    #[serde(rename = "heat1d")]
    Heat1D {
        k: f64,
        eps: f64,
    },
    HeatDd {
        ks: Vec<f64>,
        eps: Vec<f64>,
    },
    #[serde(rename = "black_scholes_1d")]
    BlackScholes1D {
        r: f64,
        sigma: f64,
        eps: f64,
    },
    BlackScholesDd {
        r: f64,
        sigmas: Vec<f64>,
        /// Neighbour correlations `rho_{j,j+1}`, length `d - 1`.
        correlations: Vec<f64>,
        mus: Vec<f64>,
        eps: Vec<f64>,
    },
    FokkerPlanck {
        mu: Vec<f64>,
        ds: Vec<f64>,
        eps: Vec<f64>,
    },
    General {
        pde: ParabolicPDE,
        eps: Vec<f64>,
    },
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec::Heat1D { k: 1.0, eps: 0.1 }
    }
}

impl SystemSpec {
    pub fn build(&self) -> Result<RelaxationSystem> {
        match self {
            SystemSpec::Heat1D { k, eps } => build_heat_1d(*k, *eps),
            SystemSpec::HeatDd { ks, eps } => build_heat_dd(ks, eps),
            SystemSpec::BlackScholes1D { r, sigma, eps } => {
                build_black_scholes_1d(*r, *sigma, *eps)
            }
            SystemSpec::BlackScholesDd {
                r,
                sigmas,
                correlations,
                mus,
                eps,
            } => build_black_scholes_dd(*r, sigmas, correlations, mus, eps),
            SystemSpec::FokkerPlanck { mu, ds, eps } => build_fokker_planck(mu, ds, eps),
            SystemSpec::General { pde, eps } => build_general_parabolic(pde, eps),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamReportConfig {
    pub experiment: Option<ExperimentKind>,
    pub output_dir: Option<PathBuf>,
    pub system: SystemSpec,
}

impl ExperimentConfig for HamReportConfig {
    const KIND: ExperimentKind = ExperimentKind::HamiltonianReport;

    fn declared_kind(&self) -> Option<ExperimentKind> {
        self.experiment
    }

    fn output_dir(&self) -> Option<&Path> {
        self.output_dir.as_deref()
    }

    fn validate(&self) -> Result<()> {
        self.system.build().map(|_| ()).map_err(as_config)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamReportResult {
    pub report: HamiltonianReport,
}

impl HamReportResult {
    /// Writes `ham_report.json` and the bare system as `system.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let report = dir.join("ham_report.json");
        let system = dir.join("system.json");
        write_json(&report, &self.report)?;
        write_json(&system, &self.report.system)?;
        Ok(vec![report, system])
    }
}

pub fn run_hamiltonian_report(cfg: &HamReportConfig) -> Result<HamReportResult> {
    cfg.validate()?;
    let sys = cfg.system.build()?;
    Ok(HamReportResult {
        report: hamiltonian_report(&sys)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::experiments::parse_config;

    #[test]
    fn tagged_specs_parse() {
        let cfg: HamReportConfig = parse_config(
            r#"{"system": {"flavor": "fokker_planck", "mu": [0.5], "ds": [1.0], "eps": [0.1]}}"#,
        )
        .unwrap();
        let r = run_hamiltonian_report(&cfg).unwrap();
        assert_eq!(r.report.qudit_levels, 2);
        assert_eq!(r.report.qumodes, 2);
    }

    #[test]
    fn unknown_spec_field_rejected() {
        let r = parse_config::<HamReportConfig>(
            r#"{"system": {"flavor": "heat1d", "k": 1, "eps": 0.1, "x": 2}}"#,
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn bad_parameters_are_config_errors() {
        let r = parse_config::<HamReportConfig>(
            r#"{"system": {"flavor": "heat1d", "k": 1, "eps": 1.5}}"#,
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn general_spec_roundtrip() {
        let text = r#"{"system": {"flavor": "general", "eps": [0.1, 0.1],
            "pde": {"d": 2, "diffusion": [[1.0, 0.3], [0.3, 0.5]], "drift": [0.1, -0.2], "decay": 0.0}}}"#;
        let cfg: HamReportConfig = parse_config(text).unwrap();
        let r = run_hamiltonian_report(&cfg).unwrap();
        assert_eq!(r.report.qudit_levels, 3);
        assert!(r.report.hermitian_deviation < 1e-12);
    }
}
