//! Three-level pump dynamics in the standing and traveling waves.
//!
//! At every grid point `η` the amplitudes `ψ = (g₁, g₂, e)` obey
//! `i ∂τ ψ = M(η) ψ` with a constant Hermitian `M`, so the propagator is
//! `V exp(−iΛτ) V†` from the eigen-decomposition of `M(η)`.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j;
use crate::error::{Error, Result};
use crate::exec;
use crate::params::{PumpFieldSpec, PumpMode};

/// Unitarity tolerance on the grid-mean population.
pub const NORM_TOLERANCE: f64 = 1e-9;

pub type State3 = Vector3<C64>;

/// Hermitian generator `M(η)` of `i ∂τ ψ = M ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix(Matrix3<C64>);

impl CouplingMatrix {
    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    /// Largest entry of `M − M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `dψ/dτ = −i M ψ`.
    fn derivative(&self, psi: &State3) -> State3 {
        (self.0 * psi) * C64::new(0.0, -1.0)
    }
}

/// Builds `M(η)`.
///
/// Standing wave:
/// `[[½, 0, −2ζ₁cos η], [0, −½, −2ζ₂cos η], [−2ζ₁cos η, −2ζ₂cos η, −Δ]]`.
/// Traveling wave: same diagonal, ground→excited couplings `−ζ e^{−iη}` above
/// the diagonal and `−ζ e^{iη}` below.
pub fn build_coupling(eta: f64, pump: &PumpFieldSpec, mode: PumpMode) -> CouplingMatrix {
    let (z1, z2) = (pump.zeta_1, pump.zeta_2);
    let zero = C64::new(0.0, 0.0);
    let (c1, c2) = match mode {
        PumpMode::Standing => {
            let c = eta.cos();
            (C64::new(-2.0 * z1 * c, 0.0), C64::new(-2.0 * z2 * c, 0.0))
        }
        PumpMode::Traveling => {
            let phase = C64::from_polar(1.0, -eta);
            (phase * -z1, phase * -z2)
        }
    };
    CouplingMatrix(Matrix3::new(
        C64::new(0.5, 0.0),
        zero,
        c1,
        zero,
        C64::new(-0.5, 0.0),
        c2,
        c1.conj(),
        c2.conj(),
        C64::new(-pump.detuning_delta, 0.0),
    ))
}

/// Eigenvalues and orthonormal eigenvectors of a [`CouplingMatrix`].
///
/// The projections `V†ψ₀` are the time-independent coefficients multiplying
/// each `exp(−iλτ)` in the general solution.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub eigenvalues: Vector3<f64>,
    pub eigenvectors: Matrix3<C64>,
}

impl EigenSystem {
    pub fn new(m: &CouplingMatrix, eta: f64) -> Result<Self> {
        let eig = SymmetricEigen::try_new(m.0, f64::EPSILON, 0).ok_or(Error::Eigen { eta })?;
        if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::Eigen { eta });
        }
        Ok(EigenSystem {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    /// Coefficients of `ψ` in the eigenbasis.
    pub fn project(&self, psi: &State3) -> State3 {
        self.eigenvectors.adjoint() * psi
    }

    pub fn propagator(&self, tau: f64) -> Matrix3<C64> {
        let phases = Matrix3::from_diagonal(&self.eigenvalues.map(|l| C64::from_polar(1.0, -l * tau)));
        self.eigenvectors * phases * self.eigenvectors.adjoint()
    }

    pub fn evolve(&self, psi: &State3, tau: f64) -> State3 {
        let coeffs = self.project(psi);
        let phased = Vector3::from_fn(|j, _| coeffs[j] * C64::from_polar(1.0, -self.eigenvalues[j] * tau));
        self.eigenvectors * phased
    }

    /// Largest entry of `V†V − I`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.eigenvectors.adjoint() * self.eigenvectors - Matrix3::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Amplitudes `g₁, g₂, e` on a uniform grid over `η ∈ [−π, π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeField {
    pub eta: Vec<f64>,
    pub g1: Vec<C64>,
    pub g2: Vec<C64>,
    pub e: Vec<C64>,
    pub tau: f64,
}

impl AmplitudeField {
    pub fn eta_grid(n_eta: usize) -> Vec<f64> {
        let step = 2.0 * std::f64::consts::PI / n_eta as f64;
        (0..n_eta).map(|j| -std::f64::consts::PI + step * j as f64).collect()
    }

    /// Spatially uniform amplitudes (an atom at rest).
    pub fn uniform(n_eta: usize, amps: [C64; 3]) -> Self {
        AmplitudeField {
            eta: Self::eta_grid(n_eta),
            g1: vec![amps[0]; n_eta],
            g2: vec![amps[1]; n_eta],
            e: vec![amps[2]; n_eta],
            tau: 0.0,
        }
    }

    /// Both ground levels equally populated, excited level empty.
    pub fn ground_equal(n_eta: usize) -> Self {
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::uniform(n_eta, [a, a, C64::new(0.0, 0.0)])
    }

    pub fn from_points(eta: Vec<f64>, points: &[State3], tau: f64) -> Self {
        AmplitudeField {
            eta,
            g1: points.iter().map(|p| p[0]).collect(),
            g2: points.iter().map(|p| p[1]).collect(),
            e: points.iter().map(|p| p[2]).collect(),
            tau,
        }
    }

    pub fn n_eta(&self) -> usize {
        self.eta.len()
    }

    pub fn at(&self, j: usize) -> State3 {
        Vector3::new(self.g1[j], self.g2[j], self.e[j])
    }

    pub fn level(&self, level: usize) -> &[C64] {
        match level {
            0 => &self.g1,
            1 => &self.g2,
            _ => &self.e,
        }
    }

    /// Grid mean of `|g₁|² + |g₂|² + |e|²`.
    pub fn norm(&self) -> f64 {
        let s: f64 = (0..self.n_eta())
            .map(|j| self.g1[j].norm_sqr() + self.g2[j].norm_sqr() + self.e[j].norm_sqr())
            .sum();
        s / self.n_eta() as f64
    }

    /// Largest pointwise amplitude difference over all levels.
    pub fn sup_distance(&self, other: &AmplitudeField) -> f64 {
        (0..self.n_eta())
            .map(|j| (self.at(j) - other.at(j)).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    fn check_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                norm,
                tolerance: NORM_TOLERANCE,
            });
        }
        Ok(())
    }
}

/// Exact evolution by per-point eigen-propagation.
pub fn evolve(
    state: &AmplitudeField,
    pump: &PumpFieldSpec,
    mode: PumpMode,
    duration: f64,
) -> Result<AmplitudeField> {
    Ok(evolve_series(state, pump, mode, &[duration])?.remove(0))
}

/// Evolves to several durations, decomposing each `M(η)` once.
pub fn evolve_series(
    state: &AmplitudeField,
    pump: &PumpFieldSpec,
    mode: PumpMode,
    durations: &[f64],
) -> Result<Vec<AmplitudeField>> {
    state.check_normalized()?;
    if let Some(d) = durations.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::invalid("duration", format!("must be >= 0, got {d}")));
    }
    let per_point: Vec<Vec<State3>> = exec::try_map_indexed(state.n_eta(), |j| {
        let eta = state.eta[j];
        let eig = EigenSystem::new(&build_coupling(eta, pump, mode), eta)?;
        let psi = state.at(j);
        Ok(durations
            .iter()
            .map(|&t| if t == 0.0 { psi } else { eig.evolve(&psi, t) })
            .collect())
    })?;
    Ok(durations
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let pts: Vec<State3> = per_point.iter().map(|p| p[k]).collect();
            AmplitudeField::from_points(state.eta.clone(), &pts, state.tau + t)
        })
        .collect())
}

/// Result of the standing stage and the optional traveling stage.
#[derive(Clone, Debug)]
pub struct PumpRun {
    pub after_standing: AmplitudeField,
    pub after_traveling: Option<AmplitudeField>,
}

impl PumpRun {
    /// State after the last applied stage.
    pub fn final_state(&self) -> &AmplitudeField {
        self.after_traveling.as_ref().unwrap_or(&self.after_standing)
    }
}

/// Runs the stages selected by `pump.mode` from `initial`.
pub fn run_pump(initial: &AmplitudeField, pump: &PumpFieldSpec) -> Result<PumpRun> {
    let after_standing = evolve(initial, pump, PumpMode::Standing, pump.duration_tau1)?;
    let after_traveling = match pump.mode {
        PumpMode::Standing => None,
        PumpMode::Traveling => Some(evolve(
            &after_standing,
            pump,
            PumpMode::Traveling,
            pump.traveling_duration_tau2,
        )?),
    };
    Ok(PumpRun {
        after_standing,
        after_traveling,
    })
}

/// Classical fourth-order Runge–Kutta integration of `i ∂τ ψ = M(η) ψ`.
///
/// Runs at `dt` and `dt/2` and fails unless the two agree to `1e-8` in
/// sup-norm. Independent of the eigen-propagator; used as a test oracle.
pub fn evolve_rk4_oracle(
    state: &AmplitudeField,
    pump: &PumpFieldSpec,
    mode: PumpMode,
    duration: f64,
    dt: f64,
) -> Result<AmplitudeField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::invalid("duration", format!("must be >= 0, got {duration}")));
    }
    if duration == 0.0 {
        return Ok(state.clone());
    }
    let coarse = (duration / dt).ceil() as usize;
    let results: Vec<(State3, f64)> = exec::map_indexed(state.n_eta(), |j| {
        let m = build_coupling(state.eta[j], pump, mode);
        let a = rk4(&m, state.at(j), duration, coarse);
        let b = rk4(&m, state.at(j), duration, 2 * coarse);
        let change = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        (b, change)
    });
    let change = results.iter().map(|r| r.1).fold(0.0, f64::max);
    if change >= 1e-8 {
        return Err(Error::NoConvergence { change });
    }
    let pts: Vec<State3> = results.into_iter().map(|r| r.0).collect();
    Ok(AmplitudeField::from_points(state.eta.clone(), &pts, state.tau + duration))
}

fn rk4(m: &CouplingMatrix, mut psi: State3, duration: f64, steps: usize) -> State3 {
    let h = C64::new(duration / steps as f64, 0.0);
    let half = h * 0.5;
    let two = C64::new(2.0, 0.0);
    for _ in 0..steps {
        let k1 = m.derivative(&psi);
        let k2 = m.derivative(&(psi + k1 * half));
        let k3 = m.derivative(&(psi + k2 * half));
        let k4 = m.derivative(&(psi + k3 * h));
        psi += (k1 + k2 * two + k3 * two + k4) * (h / 6.0);
    }
    psi
}

/// Two-level far-detuned amplitude `J_m(Ω²t/Δ)`.
pub fn bessel_far_detuned(m: i64, omega: f64, delta: f64, t: f64) -> Result<f64> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::invalid("delta", "far-detuned solution needs a finite nonzero detuning"));
    }
    Ok(bessel_j(m, omega * omega * t / delta))
}

/// Bessel argument reproducing the three-level run with `ζ₂ = 0`, `g₂ = 0`.
///
/// Eliminating `e` leaves `g₁` with the light shift `(2ζ₁cos η)²/(Δ + ½)`;
/// its `cos 2η` part gives `exp(−i x cos 2η)` with `x = 2ζ₁²τ/(Δ + ½)`, i.e.
/// `Ω = √2 ζ₁` and an effective detuning `Δ + ½` measured from level 1.
/// Fourier index `2n` carries `|J_n(x)|`.
pub fn far_detuned_argument(zeta_1: f64, detuning_delta: f64, tau: f64) -> f64 {
    2.0 * zeta_1 * zeta_1 * tau / (detuning_delta + 0.5)
}

/// Single-momentum family `{g₁(m), g₂(m), e(m+1)}` generator of the
/// traveling stage; it does not depend on `m`.
pub fn family_coupling(pump: &PumpFieldSpec) -> CouplingMatrix {
    build_coupling(0.0, pump, PumpMode::Traveling)
}

/// `P[to][from] = |U_{to,from}(τ₂)|²` within a closed family.
pub fn family_transfer(pump: &PumpFieldSpec, tau2: f64) -> Result<[[f64; 3]; 3]> {
    let eig = EigenSystem::new(&family_coupling(pump), 0.0)?;
    let u = eig.propagator(tau2);
    let mut p = [[0.0; 3]; 3];
    for (to, row) in p.iter_mut().enumerate() {
        for (from, v) in row.iter_mut().enumerate() {
            *v = u[(to, from)].norm_sqr();
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pump(z1: f64, z2: f64, delta: f64) -> PumpFieldSpec {
        PumpFieldSpec {
            zeta_1: z1,
            zeta_2: z2,
            detuning_delta: delta,
            ..PumpFieldSpec::default()
        }
    }

    fn diag(delta: f64) -> Matrix3<C64> {
        Matrix3::from_diagonal(&Vector3::new(
            C64::new(0.5, 0.0),
            C64::new(-0.5, 0.0),
            C64::new(-delta, 0.0),
        ))
    }

    #[test]
    fn standing_node_is_diagonal() {
        let m = build_coupling(PI / 2.0, &pump(3.0, 4.0, 1.5), PumpMode::Standing);
        assert!((m.matrix() - diag(1.5)).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn no_field_is_diagonal_everywhere() {
        for eta in AmplitudeField::eta_grid(16) {
            let m = build_coupling(eta, &pump(0.0, 0.0, 2.0), PumpMode::Standing);
            assert_eq!(*m.matrix(), diag(2.0));
        }
    }

    #[test]
    fn traveling_at_origin() {
        let m = build_coupling(0.0, &pump(1.0, 1.0, 0.0), PumpMode::Traveling);
        let mm = m.matrix();
        for (r, c) in [(0, 2), (1, 2), (2, 0), (2, 1)] {
            assert!((mm[(r, c)] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        }
        assert!(m.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn hermitian_on_grid_both_modes() {
        let p = pump(10.0, 7.0, 0.3);
        for eta in AmplitudeField::eta_grid(64) {
            for mode in [PumpMode::Standing, PumpMode::Traveling] {
                let m = build_coupling(eta, &p, mode);
                assert!(m.hermiticity_defect() < 1e-14);
                if mode == PumpMode::Standing {
                    assert!(m.matrix().iter().all(|z| z.im == 0.0));
                }
                let eig = EigenSystem::new(&m, eta).unwrap();
                assert!(eig.unitarity_defect() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_node_propagates() {
        // Δ = -½ makes the excited and level-1 energies collide at cos η = 0.
        let p = pump(2.0, 2.0, -0.5);
        let eig = EigenSystem::new(&build_coupling(PI / 2.0, &p, PumpMode::Standing), PI / 2.0).unwrap();
        assert!(eig.unitarity_defect() < 1e-12);
        let u = eig.propagator(0.7);
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.35)).norm() < 1e-12);
    }

    #[test]
    fn zero_duration_is_identity() {
        let s = AmplitudeField::ground_equal(32);
        let out = evolve(&s, &pump(10.0, 10.0, 0.0), PumpMode::Standing, 0.0).unwrap();
        assert_eq!(out, s);
        let out = evolve_rk4_oracle(&s, &pump(10.0, 10.0, 0.0), PumpMode::Standing, 0.0, 1e-3).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn free_evolution_phase() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let s = AmplitudeField::uniform(16, [one, zero, zero]);
        let tau = 1.3;
        let out = evolve(&s, &pump(0.0, 0.0, 0.4), PumpMode::Standing, tau).unwrap();
        let oracle = evolve_rk4_oracle(&s, &pump(0.0, 0.0, 0.4), PumpMode::Standing, tau, 1e-3).unwrap();
        let expected = C64::from_polar(1.0, -tau / 2.0);
        for j in 0..16 {
            assert!((out.g1[j].norm_sqr() - 1.0).abs() < 1e-14);
            assert!((out.g1[j] - expected).norm() < 1e-13);
            assert!((oracle.g1[j] - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let s = AmplitudeField::uniform(8, [C64::new(1.0, 0.0); 3]);
        assert!(matches!(
            evolve(&s, &pump(1.0, 1.0, 0.0), PumpMode::Standing, 0.1),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn eigen_matches_rk4_small_grid() {
        let s = AmplitudeField::ground_equal(64);
        for mode in [PumpMode::Standing, PumpMode::Traveling] {
            let p = pump(3.0, 2.0, 0.7);
            let a = evolve(&s, &p, mode, 0.5).unwrap();
            let b = evolve_rk4_oracle(&s, &p, mode, 0.5, 1e-4).unwrap();
            assert!(a.sup_distance(&b) < 1e-6);
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_detects_coarse_step() {
        let s = AmplitudeField::ground_equal(8);
        let r = evolve_rk4_oracle(&s, &pump(10.0, 10.0, 0.0), PumpMode::Standing, 0.6, 0.05);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn series_matches_single_calls() {
        let s = AmplitudeField::ground_equal(32);
        let p = pump(5.0, 5.0, 0.0);
        let series = evolve_series(&s, &p, PumpMode::Standing, &[0.1, 0.3]).unwrap();
        let single = evolve(&s, &p, PumpMode::Standing, 0.3).unwrap();
        assert_eq!(series[1], single);
        assert!((series[1].tau - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bessel_far_detuned_domain() {
        assert!(bessel_far_detuned(0, 1.0, 0.0, 1.0).is_err());
        assert_eq!(bessel_far_detuned(0, 1.0, 3.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_far_detuned(4, 1.0, 3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn family_transfer_is_doubly_stochastic() {
        let p = family_transfer(&pump(10.0, 10.0, 0.0), 0.37).unwrap();
        for (i, r) in p.iter().enumerate() {
            let row: f64 = r.iter().sum();
            let col: f64 = (0..3).map(|k| p[k][i]).sum();
            assert!((row - 1.0).abs() < 1e-12 && (col - 1.0).abs() < 1e-12);
        }
    }
}
