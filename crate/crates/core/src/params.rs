//! Atom, field, medium and grid parameters.
//!
//! Everything downstream of this module works in dimensionless units: time
//! in units of the ground hyperfine splitting `δ`, coordinates in units of
//! the inverse pump wavenumber, frequencies divided by `δ`. Physical CGSE
//! inputs are accepted only by [`derive_dimensionless`].

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in erg·s.
pub const HBAR_CGS: f64 = 1.054_571_817e-27;

/// Physical description of the three-level atom (CGSE, angular frequencies).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSpec {
    /// Ground hyperfine splitting δ in rad/s; the unit of all frequencies.
    pub hyperfine_splitting_delta: f64,
    pub dipole_pump_1: f64,
    pub dipole_pump_2: f64,
    pub dipole_probe: f64,
    pub ground_energies: [f64; 2],
    pub excited_energy: f64,
    pub transition_frequency_omega0: f64,
    /// Inhomogeneous optical width, only used for the far-detuning check.
    pub linewidth_gamma_inhomogeneous: f64,
}

impl Default for AtomSpec {
    fn default() -> Self {
        AtomSpec::sodium()
    }
}

impl AtomSpec {
    /// Sodium D-line numbers used by the figure presets.
    pub fn sodium() -> Self {
        let delta = 2.0 * PI * 1.77e9;
        AtomSpec {
            hyperfine_splitting_delta: delta,
            dipole_pump_1: 2.0_f64.sqrt() * 1e-18,
            dipole_pump_2: 2.0_f64.sqrt() * 1e-18,
            dipole_probe: 2.0_f64.sqrt() * 1e-12,
            ground_energies: [HBAR_CGS * delta / 2.0, -HBAR_CGS * delta / 2.0],
            excited_energy: HBAR_CGS * 2.0 * PI * 5.09e14,
            transition_frequency_omega0: 2.0 * PI * 5.09e14,
            linewidth_gamma_inhomogeneous: 2.0 * PI * 1e7,
        }
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        let positive = [
            ("atom.hyperfine_splitting_delta", self.hyperfine_splitting_delta),
            ("atom.dipole_pump_1", self.dipole_pump_1),
            ("atom.dipole_pump_2", self.dipole_pump_2),
            ("atom.dipole_probe", self.dipole_probe),
            ("atom.transition_frequency_omega0", self.transition_frequency_omega0),
            (
                "atom.linewidth_gamma_inhomogeneous",
                self.linewidth_gamma_inhomogeneous,
            ),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(field, format!("must be positive, got {v}")));
            }
        }
        let energies = [
            self.ground_energies[0],
            self.ground_energies[1],
            self.excited_energy,
        ];
        if energies.iter().any(|e| !e.is_finite()) {
            out.push(Violation::new("atom.energies", "must be finite"));
        }
    }
}

/// Which pump stages are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpMode {
    /// Standing wave only.
    Standing,
    /// Standing wave for `duration_tau1`, then a traveling wave for
    /// `traveling_duration_tau2`. As a coupling geometry (see
    /// [`crate::dynamics::build_coupling`]) it selects the traveling wave.
    Traveling,
}

/// Dimensionless pump description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpFieldSpec {
    pub zeta_1: f64,
    pub zeta_2: f64,
    /// Detuning from the middle of the ground levels, in units of δ.
    pub detuning_delta: f64,
    pub duration_tau1: f64,
    pub mode: PumpMode,
    pub traveling_duration_tau2: f64,
}

impl Default for PumpFieldSpec {
    fn default() -> Self {
        PumpFieldSpec {
            zeta_1: 10.0,
            zeta_2: 10.0,
            detuning_delta: 0.0,
            duration_tau1: 0.6,
            mode: PumpMode::Standing,
            traveling_duration_tau2: 0.0,
        }
    }
}

impl PumpFieldSpec {
    fn violations(&self, out: &mut Vec<Violation>) {
        for (field, v) in [("pump.zeta_1", self.zeta_1), ("pump.zeta_2", self.zeta_2)] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(field, format!("must be >= 0, got {v}")));
            }
        }
        if !self.detuning_delta.is_finite() {
            out.push(Violation::new("pump.detuning_delta", "must be finite"));
        }
        for (field, v) in [
            ("pump.duration_tau1", self.duration_tau1),
            ("pump.traveling_duration_tau2", self.traveling_duration_tau2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(field, format!("must be >= 0, got {v}")));
            }
        }
        if self.mode == PumpMode::Standing && self.traveling_duration_tau2 > 0.0 {
            out.push(Violation::new(
                "pump.traveling_duration_tau2",
                "set but mode is `standing`; use mode = `traveling`",
            ));
        }
    }
}

/// Ground level(s) addressed by the probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeLevel {
    One,
    Two,
    /// Both lines summed on a common detuning axis, each measured from its
    /// own transition.
    Both,
}

/// Dimensionless probe description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeFieldSpec {
    /// Probe frequency in pump-photon units.
    pub omega_p: f64,
    /// Probe wavenumber in pump-photon units.
    pub k_p: f64,
    /// Recoil frequency in units of δ.
    pub omega_r: f64,
    /// Phenomenological relaxation of the diagonal form.
    pub gamma_relax: f64,
    pub level: ProbeLevel,
    pub detuning_scan: Vec<f64>,
}

impl Default for ProbeFieldSpec {
    fn default() -> Self {
        let mut p = ProbeFieldSpec {
            omega_p: 1.0,
            k_p: 1.0,
            omega_r: 1e-4,
            gamma_relax: 2e-5,
            level: ProbeLevel::One,
            detuning_scan: Vec::new(),
        };
        p.detuning_scan = p.aligned_scan(-30, 30, 100);
        p
    }
}

impl ProbeFieldSpec {
    /// Resonance centre of momentum component `m`: `2mω_r k_p + ω_r k_p²`.
    pub fn resonance_center(&self, m: i64) -> f64 {
        self.omega_r * self.k_p * (2.0 * m as f64 + self.k_p)
    }

    /// Spacing between centres of adjacent integer `m`.
    pub fn resonance_spacing(&self) -> f64 {
        2.0 * self.omega_r * self.k_p
    }

    /// Nearest integer momentum for a detuning.
    pub fn assign_m(&self, detuning: f64) -> i64 {
        ((detuning / (self.omega_r * self.k_p) - self.k_p) / 2.0).round() as i64
    }

    /// Uniform scan from the centre of `m_lo` to the centre of `m_hi` with
    /// `points_per_spacing` steps between adjacent centres, so that every
    /// centre is a grid point.
    pub fn aligned_scan(&self, m_lo: i64, m_hi: i64, points_per_spacing: usize) -> Vec<f64> {
        let step = self.resonance_spacing() / points_per_spacing as f64;
        let start = self.resonance_center(m_lo);
        let n = (m_hi - m_lo) as usize * points_per_spacing;
        (0..=n).map(|i| start + step * i as f64).collect()
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        for (field, v) in [
            ("probe.omega_p", self.omega_p),
            ("probe.k_p", self.k_p),
            ("probe.omega_r", self.omega_r),
            ("probe.gamma_relax", self.gamma_relax),
        ] {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(field, format!("must be positive, got {v}")));
            }
        }
        if self.detuning_scan.is_empty() {
            out.push(Violation::new("probe.detuning_scan", "must not be empty"));
        } else if self.detuning_scan.iter().any(|d| !d.is_finite()) {
            out.push(Violation::new("probe.detuning_scan", "must be finite"));
        } else if self.detuning_scan.windows(2).any(|w| w[1] <= w[0]) {
            out.push(Violation::new(
                "probe.detuning_scan",
                "must be strictly increasing",
            ));
        }
    }
}

/// Absorbing medium.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    /// Atoms per cm³, when known.
    pub concentration_n: Option<f64>,
    /// Thickness in units of the inverse pump wavenumber.
    pub thickness_l: f64,
    /// Dimensionless coupling `q′`.
    pub q_prime: f64,
    /// Multiplier on `q′` used for few-atom samples.
    pub response_scale: f64,
}

impl Default for MediumSpec {
    fn default() -> Self {
        let atom = AtomSpec::sodium();
        MediumSpec {
            concentration_n: Some(1e11),
            thickness_l: 6.0 * PI,
            q_prime: q_prime(1e11, atom.dipole_probe, atom.hyperfine_splitting_delta, 1.0),
            response_scale: 1.0,
        }
    }
}

impl MediumSpec {
    /// `q′` including the response scale.
    pub fn effective_q(&self) -> f64 {
        self.q_prime * self.response_scale
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        if !(self.thickness_l.is_finite() && self.thickness_l > 0.0) {
            out.push(Violation::new(
                "medium.thickness_l",
                format!("must be positive, got {}", self.thickness_l),
            ));
        }
        for (field, v) in [
            ("medium.q_prime", self.q_prime),
            ("medium.response_scale", self.response_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(field, format!("must be >= 0, got {v}")));
            }
        }
        if let Some(n) = self.concentration_n {
            if !(n.is_finite() && n > 0.0) {
                out.push(Violation::new(
                    "medium.concentration_n",
                    format!("must be positive, got {n}"),
                ));
            }
        }
    }
}

/// Spatial grid over one period and the momentum cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimGrid {
    pub n_eta: usize,
    pub m_max: usize,
}

impl Default for SimGrid {
    fn default() -> Self {
        SimGrid {
            n_eta: 2048,
            m_max: 256,
        }
    }
}

impl SimGrid {
    fn violations(&self, out: &mut Vec<Violation>) {
        if !self.n_eta.is_power_of_two() {
            out.push(Violation::new(
                "grid.n_eta",
                format!("must be a power of two, got {}", self.n_eta),
            ));
        }
        if self.m_max < 2 {
            out.push(Violation::new("grid.m_max", "must be at least 2"));
        }
        if self.n_eta < 4 * self.m_max {
            out.push(Violation::new(
                "grid.n_eta",
                format!("n_eta >= 4*m_max violated ({} < 4*{})", self.n_eta, self.m_max),
            ));
        }
    }
}

/// A single invariant violation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// All parameters of one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecBundle {
    pub atom: Option<AtomSpec>,
    pub pump: PumpFieldSpec,
    pub probe: ProbeFieldSpec,
    pub medium: MediumSpec,
    pub grid: SimGrid,
}

impl SpecBundle {
    pub fn validated(self) -> Result<Self> {
        validate(&self).map_err(Error::Violations)?;
        Ok(self)
    }
}

/// Checks every invariant and reports all violations, not just the first.
pub fn validate(bundle: &SpecBundle) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if let Some(atom) = &bundle.atom {
        atom.violations(&mut out);
    }
    bundle.pump.violations(&mut out);
    bundle.probe.violations(&mut out);
    bundle.medium.violations(&mut out);
    bundle.grid.violations(&mut out);
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// `q′ = 2πN|d′|²/(ħδ) · ω₁₂²/(ω ω_p)`; `frequency_ratio` is the last factor.
pub fn q_prime(concentration: f64, dipole_probe: f64, delta: f64, frequency_ratio: f64) -> f64 {
    2.0 * PI * concentration * dipole_probe * dipole_probe * frequency_ratio / (HBAR_CGS * delta)
}

/// Recoil frequency `ħk²/(2Mδ)` for mass in grams and `k` in cm⁻¹.
///
/// Convenience only; the spectroscopy reads the stored `omega_r`.
pub fn recoil_omega_r(mass_g: f64, k_per_cm: f64, delta: f64) -> f64 {
    HBAR_CGS * k_per_cm * k_per_cm / (2.0 * mass_g * delta)
}

/// Physical pump/probe/medium inputs, angular frequencies in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalInputs {
    /// Pump detuning from the middle of the ground levels; may be zero.
    pub pump_detuning: f64,
    pub standing_duration: f64,
    pub traveling_duration: f64,
    pub mode: PumpMode,
    pub pump_frequency: f64,
    pub probe_frequency: f64,
    pub probe_transition_frequency: f64,
    pub k_p: f64,
    /// Already dimensionless (see [`recoil_omega_r`]).
    pub omega_r: f64,
    pub gamma_relax: f64,
    pub detuning_scan: Vec<f64>,
    pub concentration: f64,
    pub thickness_l: f64,
    pub level: ProbeLevel,
}

/// Converts physical inputs to the dimensionless specs.
pub fn derive_dimensionless(
    atom: &AtomSpec,
    field_amplitude: f64,
    phys: &PhysicalInputs,
) -> Result<(PumpFieldSpec, ProbeFieldSpec, MediumSpec)> {
    let mut bad = Vec::new();
    atom.violations(&mut bad);
    let positive = [
        ("field_amplitude", field_amplitude),
        ("pump_frequency", phys.pump_frequency),
        ("probe_frequency", phys.probe_frequency),
        ("probe_transition_frequency", phys.probe_transition_frequency),
        ("k_p", phys.k_p),
        ("omega_r", phys.omega_r),
        ("gamma_relax", phys.gamma_relax),
        ("concentration", phys.concentration),
        ("thickness_l", phys.thickness_l),
    ];
    for (field, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            bad.push(Violation::new(field, format!("must be positive, got {v}")));
        }
    }
    for (field, v) in [
        ("standing_duration", phys.standing_duration),
        ("traveling_duration", phys.traveling_duration),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            bad.push(Violation::new(field, format!("must be >= 0, got {v}")));
        }
    }
    if !phys.pump_detuning.is_finite() {
        bad.push(Violation::new("pump_detuning", "must be finite"));
    }
    if !bad.is_empty() {
        return Err(Error::Violations(bad));
    }

    let delta = atom.hyperfine_splitting_delta;
    let pump = PumpFieldSpec {
        zeta_1: atom.dipole_pump_1 * field_amplitude / (HBAR_CGS * delta),
        zeta_2: atom.dipole_pump_2 * field_amplitude / (HBAR_CGS * delta),
        detuning_delta: phys.pump_detuning / delta,
        duration_tau1: phys.standing_duration * delta,
        mode: phys.mode,
        traveling_duration_tau2: phys.traveling_duration * delta,
    };
    let probe = ProbeFieldSpec {
        omega_p: phys.probe_frequency / phys.pump_frequency,
        k_p: phys.k_p,
        omega_r: phys.omega_r,
        gamma_relax: phys.gamma_relax / delta,
        level: phys.level,
        detuning_scan: phys.detuning_scan.iter().map(|d| d / delta).collect(),
    };
    let ratio = phys.probe_transition_frequency.powi(2)
        / (phys.pump_frequency * phys.probe_frequency);
    let medium = MediumSpec {
        concentration_n: Some(phys.concentration),
        thickness_l: phys.thickness_l,
        q_prime: q_prime(phys.concentration, atom.dipole_probe, delta, ratio),
        response_scale: 1.0,
    };
    Ok((pump, probe, medium))
}
