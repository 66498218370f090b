//! Maps a set of unlabeled realizations back onto the hypothesis cells.
//!
//! Features per probe point: number of resonances, how far line depths sit
//! from whole multiples of one atom's line depth, spectral distance between
//! realizations, and the signed momentum carried by the resolved lines.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::hypothesis::Hypothesis;
use super::realize::{ExperimentProtocol, Stages};
use crate::error::{Error, Result};
use crate::params::ProbeFieldSpec;
use crate::spectroscopy::{find_resonances, AbsorptionSpectrum};

pub const MIN_REALIZATIONS: usize = 10;
/// Depths within this fraction of a whole atom count are "quantized".
pub const QUANTIZATION_TOLERANCE: f64 = 0.05;
/// Spectra closer than this fraction of the peak absorbance are identical.
pub const IDENTICAL_TOLERANCE: f64 = 1e-9;
/// False-alarm rate of the symmetry test.
pub const ASYMMETRY_ALPHA: f64 = 1e-3;

/// What the classifier knows besides the spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierContext {
    pub protocol: ExperimentProtocol,
    pub populated_count: usize,
    pub probe: ProbeFieldSpec,
}

/// Features of one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationFeatures {
    /// Resonances per probe point.
    pub counts: Vec<usize>,
    /// Worst `|depth/u − round(depth/u)|` per probe point, `u` being one
    /// atom's line depth.
    pub residuals: Vec<f64>,
    /// `Σ m · round(depth/u) / n_atoms` per probe point.
    pub signed_momentum: Vec<f64>,
}

impl RealizationFeatures {
    pub fn mean_count(&self) -> f64 {
        self.counts.iter().sum::<usize>() as f64 / self.counts.len() as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn realization_features(
    spectra: &[&AbsorptionSpectrum],
    n_atoms: usize,
    probe: &ProbeFieldSpec,
) -> Result<RealizationFeatures> {
    let mut out = RealizationFeatures {
        counts: Vec::new(),
        residuals: Vec::new(),
        signed_momentum: Vec::new(),
    };
    for s in spectra {
        let peaks = find_resonances(s, probe)?;
        let u = s.metadata.unit_depth() / n_atoms as f64;
        let mut residual = 0.0f64;
        let mut signed = 0.0;
        for p in &peaks.peaks {
            let atoms = if u > 0.0 { p.depth / u } else { 0.0 };
            residual = residual.max((atoms - atoms.round()).abs());
            signed += p.m as f64 * atoms.round();
        }
        out.counts.push(peaks.len());
        out.residuals.push(residual);
        out.signed_momentum.push(signed / n_atoms as f64);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFeatures {
    pub mean_resonance_count: f64,
    pub max_resonance_count: usize,
    /// Largest depth residual over all realizations and probe points.
    pub depth_dispersion: f64,
    /// Largest distance from the first realization, relative to the peak
    /// absorbance.
    pub inter_realization_distance: f64,
    /// Largest `|z|` of the mean signed momentum over the probe points.
    pub asymmetry_score: f64,
    pub asymmetry_threshold: f64,
    /// Mean depth residual per probe point.
    pub depth_oscillation: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierVerdict {
    pub candidate_cells: Vec<Hypothesis>,
    pub features: ClassifierFeatures,
    pub stages: Stages,
    pub few_atom: bool,
}

impl ClassifierVerdict {
    pub fn unique(&self) -> Option<Hypothesis> {
        match self.candidate_cells.as_slice() {
            [h] => Some(*h),
            _ => None,
        }
    }
}

/// The three cells a standing-only run cannot tell apart.
pub fn degenerate_cells() -> Vec<Hypothesis> {
    vec![
        Hypothesis::SUP_COLLAPSE,
        Hypothesis::NONSUP_COLLAPSE,
        Hypothesis::NONSUP_NON_COLLAPSE,
    ]
}

/// Two-sided z of the mean; infinite for a nonzero mean without spread.
fn mean_z(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var > 0.0 {
        mean / (var / n).sqrt()
    } else if mean == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn classify(realizations: &[Vec<&AbsorptionSpectrum>], ctx: &ClassifierContext) -> Result<ClassifierVerdict> {
    let protocol = &ctx.protocol;
    if realizations.len() < MIN_REALIZATIONS {
        return Err(Error::TooFewRealizations {
            required: MIN_REALIZATIONS,
            got: realizations.len(),
        });
    }
    let points = protocol.probe_points().len();
    if let Some(r) = realizations.iter().find(|r| r.len() != points) {
        return Err(Error::invalid(
            "realizations",
            format!("expected {points} spectra per realization, got {}", r.len()),
        ));
    }

    let per: Vec<RealizationFeatures> = realizations
        .iter()
        .map(|r| realization_features(r, protocol.n_atoms, &ctx.probe))
        .collect::<Result<_>>()?;

    let mean_resonance_count = per.iter().map(|f| f.mean_count()).sum::<f64>() / per.len() as f64;
    let max_resonance_count = per.iter().flat_map(|f| f.counts.iter().copied()).max().unwrap_or(0);
    let depth_dispersion = per.iter().map(|f| f.max_residual()).fold(0.0, f64::max);
    let depth_oscillation: Vec<f64> = (0..points)
        .map(|k| per.iter().map(|f| f.residuals[k]).sum::<f64>() / per.len() as f64)
        .collect();

    let scale = realizations
        .iter()
        .flatten()
        .map(|s| s.max_absorbance())
        .fold(0.0, f64::max);
    let mut distance = 0.0f64;
    for r in &realizations[1..] {
        for (a, b) in realizations[0].iter().zip(r) {
            distance = distance.max(a.distance(b));
        }
    }
    let inter_realization_distance = if scale > 0.0 { distance / scale } else { distance };

    let asymmetry_score = (0..points)
        .map(|k| {
            let x: Vec<f64> = per.iter().map(|f| f.signed_momentum[k]).collect();
            mean_z(&x).abs()
        })
        .fold(0.0, f64::max);
    let normal = Normal::standard();
    let asymmetry_threshold = normal.inverse_cdf(1.0 - ASYMMETRY_ALPHA / (2.0 * points as f64));

    let identical = inter_realization_distance <= IDENTICAL_TOLERANCE;
    let quantized = depth_dispersion <= QUANTIZATION_TOLERANCE;
    let graded = max_resonance_count > protocol.n_atoms || !quantized;
    let few_atom = protocol.few_atom(ctx.populated_count);

    let candidate_cells = if !few_atom {
        Hypothesis::ALL.to_vec()
    } else if identical && graded {
        vec![Hypothesis::SUP_NON_COLLAPSE]
    } else {
        match protocol.stages {
            Stages::StandingOnly => degenerate_cells(),
            Stages::StandingThenTraveling if !quantized => vec![Hypothesis::NONSUP_NON_COLLAPSE],
            Stages::StandingThenTraveling if asymmetry_score > asymmetry_threshold => {
                vec![Hypothesis::SUP_COLLAPSE]
            }
            Stages::StandingThenTraveling => vec![Hypothesis::NONSUP_COLLAPSE],
        }
    };

    Ok(ClassifierVerdict {
        candidate_cells,
        features: ClassifierFeatures {
            mean_resonance_count,
            max_resonance_count,
            depth_dispersion,
            inter_realization_distance,
            asymmetry_score,
            asymmetry_threshold,
            depth_oscillation,
        },
        stages: protocol.stages,
        few_atom,
    })
}
