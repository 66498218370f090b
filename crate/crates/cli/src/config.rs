//! TOML run configuration.
//!
//! Sections `[atom]`, `[pump]`, `[probe]`, `[medium]`, `[grid]`,
//! `[protocol]` and `[output]`. Every key is optional and falls back to the
//! figure-3/figure-5 defaults; unknown keys are rejected.

use std::path::Path;

use kapitza_core::measurement::ExperimentProtocol;
use kapitza_core::params::{q_prime, AtomSpec, MediumSpec, ProbeFieldSpec, ProbeLevel, PumpFieldSpec, SimGrid, SpecBundle};
use kapitza_core::spectroscopy::Formula;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub atom: Option<AtomSpec>,
    pub pump: PumpFieldSpec,
    pub probe: ProbeSection,
    pub medium: MediumSection,
    pub grid: SimGrid,
    pub protocol: ExperimentProtocol,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub omega_p: f64,
    pub k_p: f64,
    pub omega_r: f64,
    pub gamma_relax: f64,
    pub level: ProbeLevel,
    pub formula: Formula,
    /// Explicit scan; overrides the aligned-scan keys below.
    pub detuning_scan: Option<Vec<f64>>,
    pub scan_m_lo: i64,
    pub scan_m_hi: i64,
    pub scan_points_per_spacing: usize,
    /// Shift of the aligned scan, in scan steps. A nonzero shift keeps the
    /// full form away from its poles.
    pub scan_offset: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let p = ProbeFieldSpec::default();
        ProbeSection {
            omega_p: p.omega_p,
            k_p: p.k_p,
            omega_r: p.omega_r,
            gamma_relax: p.gamma_relax,
            level: p.level,
            formula: Formula::Diagonal,
            detuning_scan: None,
            scan_m_lo: -30,
            scan_m_hi: 30,
            scan_points_per_spacing: 100,
            scan_offset: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSection {
    pub concentration_n: Option<f64>,
    pub thickness_l: f64,
    /// Derived from the atom and `concentration_n` when absent.
    pub q_prime: Option<f64>,
    pub response_scale: f64,
}

impl Default for MediumSection {
    fn default() -> Self {
        let m = MediumSpec::default();
        MediumSection {
            concentration_n: m.concentration_n,
            thickness_l: m.thickness_l,
            q_prime: None,
            response_scale: m.response_scale,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: Format,
    pub svg: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn probe_spec(&self) -> ProbeFieldSpec {
        let s = &self.probe;
        let mut p = ProbeFieldSpec {
            omega_p: s.omega_p,
            k_p: s.k_p,
            omega_r: s.omega_r,
            gamma_relax: s.gamma_relax,
            level: s.level,
            detuning_scan: Vec::new(),
        };
        p.detuning_scan = match &s.detuning_scan {
            Some(scan) => scan.clone(),
            None => {
                let step = p.resonance_spacing() / s.scan_points_per_spacing.max(1) as f64;
                p.aligned_scan(s.scan_m_lo, s.scan_m_hi, s.scan_points_per_spacing.max(1))
                    .into_iter()
                    .map(|d| d + s.scan_offset * step)
                    .collect()
            }
        };
        p
    }

    pub fn medium_spec(&self) -> Result<MediumSpec, CliError> {
        let m = &self.medium;
        let q = match (m.q_prime, m.concentration_n) {
            (Some(q), _) => q,
            (None, Some(n)) => {
                let atom = self.atom.clone().unwrap_or_default();
                q_prime(n, atom.dipole_probe, atom.hyperfine_splitting_delta, 1.0)
            }
            (None, None) => {
                return Err(CliError::Validation(
                    "medium: set q_prime or concentration_n".to_string(),
                ))
            }
        };
        Ok(MediumSpec {
            concentration_n: m.concentration_n,
            thickness_l: m.thickness_l,
            q_prime: q,
            response_scale: m.response_scale,
        })
    }

    /// Validated core parameters.
    pub fn bundle(&self) -> Result<SpecBundle, CliError> {
        if self.probe.scan_points_per_spacing == 0 {
            return Err(CliError::Validation("probe.scan_points_per_spacing must be positive".into()));
        }
        if self.probe.detuning_scan.is_none() && self.probe.scan_m_hi <= self.probe.scan_m_lo {
            return Err(CliError::Validation("probe.scan_m_hi must exceed probe.scan_m_lo".into()));
        }
        let bundle = SpecBundle {
            atom: self.atom.clone(),
            pump: self.pump.clone(),
            probe: self.probe_spec(),
            medium: self.medium_spec()?,
            grid: self.grid,
        };
        Ok(bundle.validated()?)
    }
}
