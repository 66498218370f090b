//! Probe transmission through the diffracted gas.
//!
//! Two forms are provided. The full coherent exit-face solution keeps every
//! `(m, n)` pair of momentum coefficients:
//!
//! `E(l)/E(0) = exp[−q′ Σ_{m,n} g(m) g*(n) (e^{i(n−m)l} − 1)/(n − m) / D_m]`
//!
//! with `D_m = Δ − 2mω_r k_p − ω_r k_p²` and the `n = m` term equal to `i l`.
//! The diagonal form keeps only `n = m` and adds the relaxation `γ`:
//!
//! `E(l)/E(0) = exp[−i q′ l Σ_m w_m / (D_m + iγ)]`.
//!
//! Absorbance is `−ln|E(l)/E(0)|² = −2 Re(exponent)`, computed from the
//! exponent so that optically thick points stay finite.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::momentum::{Level, MomentumDistribution, MomentumSpectrum, EPSILON_POP};
use crate::params::{MediumSpec, ProbeFieldSpec, ProbeLevel};

/// Denominators below this magnitude are treated as poles.
pub const POLE_LIMIT: f64 = 1e-12;

/// Coefficients below this magnitude are dropped from the full double sum.
const NEGLIGIBLE_AMPLITUDE: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Full,
    Diagonal,
}

fn probed_levels(level: ProbeLevel) -> &'static [Level] {
    match level {
        ProbeLevel::One => &[Level::G1],
        ProbeLevel::Two => &[Level::G2],
        ProbeLevel::Both => &[Level::G1, Level::G2],
    }
}

/// Transmission at one detuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionResult {
    pub detuning: f64,
    pub amplitude_ratio: C64,
    pub absorbance: f64,
}

impl TransmissionResult {
    fn from_exponent(detuning: f64, exponent: C64) -> Self {
        TransmissionResult {
            detuning,
            amplitude_ratio: exponent.exp(),
            absorbance: -2.0 * exponent.re,
        }
    }

    /// `|E(l)/E(0)|`.
    pub fn abs_ratio(&self) -> f64 {
        self.amplitude_ratio.norm()
    }

    /// `|E(l)/E(0)|²`.
    pub fn intensity_ratio(&self) -> f64 {
        self.amplitude_ratio.norm_sqr()
    }
}

/// Precomputed full-form kernel: `exponent(Δ) = −q′ Σ_m a_m / D_m(Δ)` with
/// `a_m = g(m) Σ_n g*(n) K(n − m)`.
#[derive(Clone, Debug)]
pub struct FullForm {
    /// `(m, diagonal part, off-diagonal part)` of `a_m`.
    terms: Vec<(i64, C64, C64)>,
    q: f64,
    probe: ProbeFieldSpec,
}

fn kernel(k: i64, l: f64) -> C64 {
    if k == 0 {
        C64::new(0.0, l)
    } else {
        (C64::from_polar(1.0, k as f64 * l) - 1.0) / k as f64
    }
}

impl FullForm {
    pub fn new(spec: &MomentumSpectrum, medium: &MediumSpec, probe: &ProbeFieldSpec) -> Self {
        Self::with_thickness(spec, medium.effective_q(), medium.thickness_l, probe)
    }

    pub fn with_thickness(spec: &MomentumSpectrum, q: f64, l: f64, probe: &ProbeFieldSpec) -> Self {
        let mut terms: Vec<(i64, C64, C64)> = Vec::new();
        for &level in probed_levels(probe.level) {
            let nonzero: Vec<(i64, C64)> = spec
                .m_values()
                .map(|m| (m, spec.coefficient(level, m)))
                .filter(|(_, c)| c.norm() > NEGLIGIBLE_AMPLITUDE)
                .collect();
            for &(m, gm) in &nonzero {
                let mut off = C64::new(0.0, 0.0);
                for &(n, gn) in &nonzero {
                    if n != m {
                        off += gn.conj() * kernel(n - m, l);
                    }
                }
                let diag = gm * gm.conj() * kernel(0, l);
                match terms.iter_mut().find(|t| t.0 == m) {
                    Some(t) => {
                        t.1 += diag;
                        t.2 += gm * off;
                    }
                    None => terms.push((m, diag, gm * off)),
                }
            }
        }
        FullForm {
            terms,
            q,
            probe: probe.clone(),
        }
    }

    fn sum(&self, detuning: f64, pick: impl Fn(&(i64, C64, C64)) -> C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.terms {
            let d = detuning - self.probe.resonance_center(t.0);
            if d.abs() < POLE_LIMIT {
                return Err(Error::Pole {
                    detuning,
                    m: t.0,
                    magnitude: d.abs(),
                });
            }
            acc += pick(t) / d;
        }
        Ok(acc * -self.q)
    }

    /// Full exponent.
    pub fn exponent(&self, detuning: f64) -> Result<C64> {
        self.sum(detuning, |t| t.1 + t.2)
    }

    /// `n = m` part only (the diagonal form at `γ → 0`).
    pub fn diagonal_exponent(&self, detuning: f64) -> Result<C64> {
        self.sum(detuning, |t| t.1)
    }

    /// `n ≠ m` part only.
    pub fn off_diagonal_exponent(&self, detuning: f64) -> Result<C64> {
        self.sum(detuning, |t| t.2)
    }

    pub fn transmit(&self, detuning: f64) -> Result<TransmissionResult> {
        Ok(TransmissionResult::from_exponent(detuning, self.exponent(detuning)?))
    }
}

/// Full coherent transmission at one detuning.
pub fn transmit_full(
    spec: &MomentumSpectrum,
    medium: &MediumSpec,
    probe: &ProbeFieldSpec,
    detuning: f64,
) -> Result<TransmissionResult> {
    FullForm::new(spec, medium, probe).transmit(detuning)
}

/// Diagonal-form kernel: summed weight per `m` over the probed levels.
#[derive(Clone, Debug)]
struct DiagonalForm {
    lines: Vec<(f64, f64)>,
    scale: f64,
    gamma: f64,
}

impl DiagonalForm {
    fn new(dist: &MomentumDistribution, medium: &MediumSpec, probe: &ProbeFieldSpec) -> Result<Self> {
        if probe.gamma_relax.is_nan() || probe.gamma_relax <= 0.0 {
            return Err(Error::invalid(
                "probe.gamma_relax",
                format!("diagonal form needs gamma > 0, got {}", probe.gamma_relax),
            ));
        }
        let lines = dist
            .m_values()
            .filter_map(|m| {
                let w: f64 = probed_levels(probe.level).iter().map(|&l| dist.weight(l, m)).sum();
                (w > 0.0).then(|| (probe.resonance_center(m), w))
            })
            .collect();
        Ok(DiagonalForm {
            lines,
            scale: medium.effective_q() * medium.thickness_l,
            gamma: probe.gamma_relax,
        })
    }

    fn exponent(&self, detuning: f64) -> C64 {
        let sum: C64 = self
            .lines
            .iter()
            .map(|&(center, w)| w / C64::new(detuning - center, self.gamma))
            .sum();
        C64::new(0.0, -self.scale) * sum
    }
}

/// Diagonal (large-sample) transmission at one detuning.
pub fn transmit_diagonal(
    dist: &MomentumDistribution,
    medium: &MediumSpec,
    probe: &ProbeFieldSpec,
    detuning: f64,
) -> Result<TransmissionResult> {
    let form = DiagonalForm::new(dist, medium, probe)?;
    Ok(TransmissionResult::from_exponent(detuning, form.exponent(detuning)))
}

/// Input to [`scan_spectrum`].
#[derive(Clone, Copy, Debug)]
pub enum SpectrumSource<'a> {
    Full(&'a MomentumSpectrum),
    Diagonal(&'a MomentumDistribution),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub formula: Formula,
    pub level: ProbeLevel,
    pub thickness_l: f64,
    pub gamma: f64,
    /// Effective `q′` (including the response scale).
    pub q_prime: f64,
    pub omega_r: f64,
    pub k_p: f64,
    pub tau1: Option<f64>,
    pub warnings: Vec<String>,
}

impl SpectrumMetadata {
    /// Peak absorbance of an isolated unit-weight line in the diagonal form.
    pub fn unit_depth(&self) -> f64 {
        2.0 * self.q_prime * self.thickness_l / self.gamma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionSpectrum {
    pub points: Vec<TransmissionResult>,
    pub metadata: SpectrumMetadata,
}

impl AbsorptionSpectrum {
    pub fn detunings(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.detuning).collect()
    }

    pub fn absorbances(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.absorbance).collect()
    }

    pub fn max_absorbance(&self) -> f64 {
        self.points.iter().map(|p| p.absorbance).fold(0.0, f64::max)
    }

    /// Maximum absolute absorbance difference over a shared scan grid.
    pub fn distance(&self, other: &AbsorptionSpectrum) -> f64 {
        assert_eq!(self.points.len(), other.points.len(), "scan grids differ");
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| (a.absorbance - b.absorbance).abs())
            .fold(0.0, f64::max)
    }
}

/// Momenta with weight above `epsilon_pop` on the probed levels.
fn populated_probed(dist: &MomentumDistribution, level: ProbeLevel) -> Vec<i64> {
    dist.m_values()
        .filter(|&m| {
            probed_levels(level)
                .iter()
                .any(|&l| dist.weight(l, m) > dist.epsilon_pop)
        })
        .collect()
}

/// Computes one transmission per scan point.
pub fn scan_spectrum(
    source: SpectrumSource<'_>,
    medium: &MediumSpec,
    probe: &ProbeFieldSpec,
) -> Result<AbsorptionSpectrum> {
    if probe.detuning_scan.is_empty() {
        return Err(Error::Empty("detuning scan"));
    }
    let scan = &probe.detuning_scan;
    let (formula, tau1, populated, points) = match source {
        SpectrumSource::Full(spec) => {
            let form = FullForm::new(spec, medium, probe);
            let points = exec::try_map_indexed(scan.len(), |i| form.transmit(scan[i]))?;
            let dist = crate::momentum::probabilities(spec);
            (Formula::Full, Some(spec.tau_snapshot), populated_probed(&dist, probe.level), points)
        }
        SpectrumSource::Diagonal(dist) => {
            let form = DiagonalForm::new(dist, medium, probe)?;
            let points = exec::map_indexed(scan.len(), |i| {
                TransmissionResult::from_exponent(scan[i], form.exponent(scan[i]))
            });
            (Formula::Diagonal, None, populated_probed(dist, probe.level), points)
        }
    };
    let (lo, hi) = (scan[0], scan[scan.len() - 1]);
    let warnings = populated
        .iter()
        .filter(|&&m| {
            let c = probe.resonance_center(m);
            c < lo || c > hi
        })
        .map(|m| format!("resonance window of m = {m} lies outside the scan"))
        .collect();
    Ok(AbsorptionSpectrum {
        points,
        metadata: SpectrumMetadata {
            formula,
            level: probe.level,
            thickness_l: medium.thickness_l,
            gamma: probe.gamma_relax,
            q_prime: medium.effective_q(),
            omega_r: probe.omega_r,
            k_p: probe.k_p,
            tau1,
            warnings,
        },
    })
}

/// One located absorption peak.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub m: i64,
    pub center: f64,
    pub expected_center: f64,
    /// Absorbance at the peak.
    pub depth: f64,
    pub prominence: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSet {
    pub peaks: Vec<Resonance>,
}

impl ResonanceSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}

/// Peak-acceptance threshold for [`find_resonances_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceOptions {
    /// Minimum prominence as a fraction of the unit-line depth.
    pub relative_floor: f64,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        ResonanceOptions {
            relative_floor: 0.5 * EPSILON_POP,
        }
    }
}

pub fn find_resonances(spectrum: &AbsorptionSpectrum, probe: &ProbeFieldSpec) -> Result<ResonanceSet> {
    find_resonances_with(spectrum, probe, ResonanceOptions::default())
}

/// Local absorbance maxima whose prominence clears the floor, each assigned
/// the nearest integer `m`.
pub fn find_resonances_with(
    spectrum: &AbsorptionSpectrum,
    probe: &ProbeFieldSpec,
    opts: ResonanceOptions,
) -> Result<ResonanceSet> {
    let gamma = spectrum.metadata.gamma;
    let spacing = probe.resonance_spacing();
    if spacing < 3.0 * gamma {
        return Err(Error::Unresolvable { spacing, gamma });
    }
    let a = spectrum.absorbances();
    let x = spectrum.detunings();
    let floor = opts.relative_floor * spectrum.metadata.unit_depth();
    let mut peaks = Vec::new();
    let n = a.len();
    let mut i = 1;
    while i + 1 < n {
        if a[i] > a[i - 1] {
            // Walk across a flat top, if any.
            let mut j = i;
            while j + 1 < n && a[j + 1] == a[i] {
                j += 1;
            }
            if j + 1 < n && a[j + 1] < a[i] {
                let prominence = a[i] - base(&a, i, j);
                if prominence > floor {
                    let k = (i + j) / 2;
                    let step = (x[k] - x[k - 1]).max(x[k + 1] - x[k]);
                    if step > gamma / 10.0 * (1.0 + 1e-9) {
                        return Err(Error::ScanResolution {
                            step,
                            limit: gamma / 10.0,
                        });
                    }
                    let m = probe.assign_m(x[k]);
                    peaks.push(Resonance {
                        m,
                        center: x[k],
                        expected_center: probe.resonance_center(m),
                        depth: a[k],
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok(ResonanceSet { peaks })
}

/// Higher of the two minima separating the plateau `[i, j]` from the
/// nearest strictly higher point on each side.
fn base(a: &[f64], i: usize, j: usize) -> f64 {
    let h = a[i];
    let mut left = h;
    for k in (0..i).rev() {
        if a[k] > h {
            break;
        }
        left = left.min(a[k]);
    }
    let mut right = h;
    for &v in &a[j + 1..] {
        if v > h {
            break;
        }
        right = right.min(v);
    }
    left.max(right)
}

/// Off-diagonal contribution of the full form relative to the diagonal one.
///
/// The `n ≠ m` part is `2π`-periodic in `l` and vanishes identically at
/// integer multiples of `2π`, so its size is measured by the maximum over one
/// period `[l, l + 2π)` (sampled at `l_samples` points) and divided by the
/// `n = m` magnitude at `l` itself. The worst ratio over `detunings` is
/// returned.
pub fn off_diagonal_ratio(
    spec: &MomentumSpectrum,
    q: f64,
    l: f64,
    probe: &ProbeFieldSpec,
    detunings: &[f64],
    l_samples: usize,
) -> Result<f64> {
    let at_l = FullForm::with_thickness(spec, q, l, probe);
    let mut envelope = vec![0.0f64; detunings.len()];
    for s in 0..l_samples {
        let lp = l + 2.0 * PI * s as f64 / l_samples as f64;
        let form = FullForm::with_thickness(spec, q, lp, probe);
        for (e, &d) in envelope.iter_mut().zip(detunings) {
            *e = e.max(form.off_diagonal_exponent(d)?.norm());
        }
    }
    let mut worst = 0.0f64;
    for (e, &d) in envelope.iter().zip(detunings) {
        let diag = at_l.diagonal_exponent(d)?.norm();
        if diag > 0.0 {
            worst = worst.max(e / diag);
        }
    }
    Ok(worst)
}
