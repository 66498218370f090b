//! Momentum-space view of an [`AmplitudeField`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AmplitudeField, State3};
use crate::error::{Error, Result};

/// Mass allowed in the two outermost kept orders plus anything beyond.
pub const TAIL_LIMIT: f64 = 1e-8;

/// Default probability above which a `(level, m)` entry counts as populated.
pub const EPSILON_POP: f64 = 1e-4;

/// Internal level of the atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    G1,
    G2,
    E,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::G1, Level::G2, Level::E];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::G1 => "g1",
            Level::G2 => "g2",
            Level::E => "e",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g1" => Ok(Level::G1),
            "g2" => Ok(Level::G2),
            "e" => Ok(Level::E),
            _ => Err(Error::invalid("level", format!("unknown level `{s}`"))),
        }
    }
}

/// Fourier coefficients `c(m)`, `|m| ≤ m_max`, of each level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumSpectrum {
    pub m_max: usize,
    /// Indexed by level, then by `m + m_max`.
    pub coeffs: [Vec<C64>; 3],
    pub tau_snapshot: f64,
}

impl MomentumSpectrum {
    pub fn m_values(&self) -> impl Iterator<Item = i64> {
        let m = self.m_max as i64;
        -m..=m
    }

    pub fn coefficient(&self, level: Level, m: i64) -> C64 {
        match offset(self.m_max, m) {
            Some(i) => self.coeffs[level.index()][i],
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.coeffs.iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ_m c(m) e^{imη}` for all three levels.
    pub fn reconstruct_at(&self, eta: f64) -> State3 {
        let mut out = State3::zeros();
        for (k, m) in self.m_values().enumerate() {
            let phase = C64::from_polar(1.0, m as f64 * eta);
            for lvl in 0..3 {
                out[lvl] += self.coeffs[lvl][k] * phase;
            }
        }
        out
    }

    pub fn reconstruct(&self, n_eta: usize) -> AmplitudeField {
        let eta = AmplitudeField::eta_grid(n_eta);
        let pts: Vec<State3> = eta.iter().map(|&x| self.reconstruct_at(x)).collect();
        AmplitudeField::from_points(eta, &pts, self.tau_snapshot)
    }
}

fn offset(m_max: usize, m: i64) -> Option<usize> {
    let i = m + m_max as i64;
    (i >= 0 && i <= 2 * m_max as i64).then_some(i as usize)
}

/// `c(m) = (1/2π)∫ f(η) e^{−imη} dη` by the exact discrete sum on the grid.
pub fn fourier_coefficients(state: &AmplitudeField, m_max: usize) -> Result<MomentumSpectrum> {
    let n = state.n_eta();
    if n < 4 * m_max {
        return Err(Error::invalid(
            "grid.n_eta",
            format!("n_eta >= 4*m_max violated ({n} < 4*{m_max})"),
        ));
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = 1.0 / n as f64;
    let mut coeffs: [Vec<C64>; 3] = Default::default();
    for (lvl, out) in coeffs.iter_mut().enumerate() {
        let mut buf = state.level(lvl).to_vec();
        fft.process(&mut buf);
        // η_j = −π + 2πj/N, so e^{−imη_j} = (−1)^m e^{−2πi mj/N}.
        *out = (-(m_max as i64)..=m_max as i64)
            .map(|m| {
                let c = buf[m.rem_euclid(n as i64) as usize] * scale;
                if m % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .collect();
    }
    let spec = MomentumSpectrum {
        m_max,
        coeffs,
        tau_snapshot: state.tau,
    };
    let edge: f64 = [m_max as i64 - 1, m_max as i64]
        .iter()
        .flat_map(|&m| [m, -m])
        .map(|m| Level::ALL.iter().map(|&l| spec.coefficient(l, m).norm_sqr()).sum::<f64>())
        .sum();
    let beyond = (state.norm() - spec.total_mass()).max(0.0);
    let tail = edge + beyond;
    if tail > TAIL_LIMIT {
        return Err(Error::TailMass {
            mass: tail,
            limit: TAIL_LIMIT,
            m_max,
        });
    }
    Ok(spec)
}

/// Probabilities `w = |c|²` per `(level, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumDistribution {
    pub m_max: usize,
    pub w: [Vec<f64>; 3],
    pub epsilon_pop: f64,
}

impl MomentumDistribution {
    pub fn zeros(m_max: usize) -> Self {
        MomentumDistribution {
            m_max,
            w: [vec![0.0; 2 * m_max + 1], vec![0.0; 2 * m_max + 1], vec![0.0; 2 * m_max + 1]],
            epsilon_pop: EPSILON_POP,
        }
    }

    pub fn m_values(&self) -> impl Iterator<Item = i64> {
        let m = self.m_max as i64;
        -m..=m
    }

    pub fn weight(&self, level: Level, m: i64) -> f64 {
        offset(self.m_max, m).map_or(0.0, |i| self.w[level.index()][i])
    }

    /// Adds `weight` at `(level, m)`; `m` outside the cutoff is an error.
    pub fn add(&mut self, level: Level, m: i64, weight: f64) -> Result<()> {
        let i = offset(self.m_max, m)
            .ok_or_else(|| Error::invalid("m", format!("|{m}| exceeds m_max = {}", self.m_max)))?;
        self.w[level.index()][i] += weight;
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.w.iter().flatten().sum()
    }

    pub fn level_total(&self, level: Level) -> f64 {
        self.w[level.index()].iter().sum()
    }

    /// Entries with `w > epsilon_pop`.
    pub fn populated(&self) -> Vec<(Level, i64, f64)> {
        let mut out = Vec::new();
        for level in Level::ALL {
            for (m, &w) in self.m_values().zip(&self.w[level.index()]) {
                if w > self.epsilon_pop {
                    out.push((level, m, w));
                }
            }
        }
        out
    }

    pub fn populated_count(&self) -> usize {
        self.w.iter().flatten().filter(|&&w| w > self.epsilon_pop).count()
    }

    /// Every entry with nonzero weight, in `(level, m)` order.
    pub fn support(&self) -> Vec<(Level, i64, f64)> {
        let mut out = Vec::new();
        for level in Level::ALL {
            for (m, &w) in self.m_values().zip(&self.w[level.index()]) {
                if w > 0.0 {
                    out.push((level, m, w));
                }
            }
        }
        out
    }
}

pub fn probabilities(spec: &MomentumSpectrum) -> MomentumDistribution {
    MomentumDistribution {
        m_max: spec.m_max,
        w: spec.coeffs.clone().map(|c| c.iter().map(|z| z.norm_sqr()).collect()),
        epsilon_pop: EPSILON_POP,
    }
}

/// Summary of a distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    /// `Σ m w(m) / Σ w` per level; zero for an empty level.
    pub mean_m: [f64; 3],
    /// Number of populated `(level, m)` entries.
    pub support: usize,
    /// `Σ_m (w(m) − w(−m))²` summed over both ground levels.
    pub asymmetry: f64,
}

pub fn distribution_stats(dist: &MomentumDistribution) -> Result<DistributionStats> {
    if dist.total() <= 0.0 {
        return Err(Error::Empty("momentum distribution"));
    }
    let mut mean_m = [0.0; 3];
    for level in Level::ALL {
        let w = &dist.w[level.index()];
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            mean_m[level.index()] =
                dist.m_values().zip(w).map(|(m, &x)| m as f64 * x).sum::<f64>() / total;
        }
    }
    let asymmetry = [Level::G1, Level::G2]
        .iter()
        .map(|&l| {
            dist.m_values()
                .map(|m| (dist.weight(l, m) - dist.weight(l, -m)).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok(DistributionStats {
        mean_m,
        support: dist.populated_count(),
        asymmetry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field_from(n: usize, f: impl Fn(f64) -> [C64; 3]) -> AmplitudeField {
        let eta = AmplitudeField::eta_grid(n);
        let pts: Vec<State3> = eta.iter().map(|&x| State3::from(f(x))).collect();
        AmplitudeField::from_points(eta, &pts, 0.0)
    }

    /// Direct quadrature at the grid points, no FFT.
    fn direct(field: &AmplitudeField, lvl: usize, m: i64) -> C64 {
        let n = field.n_eta() as f64;
        field
            .eta
            .iter()
            .zip(field.level(lvl))
            .map(|(&x, &f)| f * C64::from_polar(1.0, -(m as f64) * x))
            .sum::<C64>()
            / n
    }

    #[test]
    fn constant_field() {
        let z = C64::new(0.0, 0.0);
        let f = field_from(64, |_| [C64::new(1.0, 0.0), z, z]);
        let s = fourier_coefficients(&f, 8).unwrap();
        for m in -8..=8 {
            let want = if m == 0 { 1.0 } else { 0.0 };
            assert!((s.coefficient(Level::G1, m) - want).norm() < 1e-15);
        }
        let d = probabilities(&s);
        assert_eq!(d.populated(), vec![(Level::G1, 0, 1.0)]);
    }

    #[test]
    fn cosine_field() {
        let z = C64::new(0.0, 0.0);
        let f = field_from(64, |x| [C64::new(x.cos(), 0.0), z, z]);
        let s = fourier_coefficients(&f, 8).unwrap();
        for m in -8i64..=8 {
            let want = if m.abs() == 1 { 0.5 } else { 0.0 };
            assert!((s.coefficient(Level::G1, m) - want).norm() < 1e-15);
        }
    }

    #[test]
    fn odd_harmonic_sign() {
        let z = C64::new(0.0, 0.0);
        let f = field_from(32, |x| [z, C64::from_polar(1.0, 3.0 * x), z]);
        let s = fourier_coefficients(&f, 6).unwrap();
        assert!((s.coefficient(Level::G2, 3) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn tail_violation_reported() {
        let z = C64::new(0.0, 0.0);
        let f = field_from(64, |x| [C64::from_polar(1.0, 8.0 * x), z, z]);
        assert!(matches!(fourier_coefficients(&f, 8), Err(Error::TailMass { .. })));
        assert!(matches!(fourier_coefficients(&f, 9), Err(Error::TailMass { .. })));
        assert!(fourier_coefficients(&f, 10).is_ok());
    }

    #[test]
    fn grid_ratio_enforced() {
        let f = AmplitudeField::ground_equal(16);
        assert!(fourier_coefficients(&f, 5).is_err());
    }

    #[test]
    fn symmetric_stats() {
        let mut d = MomentumDistribution::zeros(4);
        d.add(Level::G1, 2, 0.25).unwrap();
        d.add(Level::G1, -2, 0.25).unwrap();
        d.add(Level::G2, 0, 0.5).unwrap();
        let s = distribution_stats(&d).unwrap();
        assert_eq!(s.asymmetry, 0.0);
        assert_eq!(s.mean_m, [0.0; 3]);
        assert_eq!(s.support, 3);
        d.add(Level::G1, 1, 0.1).unwrap();
        let s = distribution_stats(&d).unwrap();
        assert!((s.asymmetry - 2.0 * 0.01).abs() < 1e-15);
        assert!(s.mean_m[0] > 0.0);
    }

    #[test]
    fn empty_stats_error() {
        assert!(distribution_stats(&MomentumDistribution::zeros(3)).is_err());
        assert!(MomentumDistribution::zeros(3).add(Level::E, 4, 1.0).is_err());
    }

    fn band_limited(coeffs: &[(f64, f64)], phase: f64) -> AmplitudeField {
        band_limited_on(64, coeffs, phase)
    }

    fn band_limited_on(n: usize, coeffs: &[(f64, f64)], phase: f64) -> AmplitudeField {
        let k = coeffs.len() as i64 / 2;
        let norm: f64 = coeffs.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        field_from(n, |x| {
            let g: C64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| C64::new(a, b) * C64::from_polar(1.0, (i as i64 - k) as f64 * x))
                .sum::<C64>()
                / norm;
            let p = C64::from_polar(1.0, phase);
            [g * p, g * p * 0.0, C64::new(0.0, 0.0)]
        })
    }

    proptest! {
        #[test]
        fn parseval_and_round_trip(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
            phase in 0.0f64..std::f64::consts::TAU,
        ) {
            prop_assume!(coeffs.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3);
            let f = band_limited(&coeffs, phase);
            let fine = band_limited_on(256, &coeffs, phase);
            let s = fourier_coefficients(&f, 12).unwrap();
            prop_assert!((s.total_mass() - f.norm()).abs() < 1e-12);
            prop_assert!((s.total_mass() - fine.norm()).abs() < 1e-12);
            prop_assert!(s.reconstruct(64).sup_distance(&f) < 1e-10);
            for m in -12..=12 {
                prop_assert!((s.coefficient(Level::G1, m) - direct(&fine, 0, m)).norm() < 1e-13);
            }
        }

        #[test]
        fn global_phase_invariance(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
            phase in 0.0f64..std::f64::consts::TAU,
        ) {
            prop_assume!(coeffs.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3);
            let a = probabilities(&fourier_coefficients(&band_limited(&coeffs, 0.0), 12).unwrap());
            let b = probabilities(&fourier_coefficients(&band_limited(&coeffs, phase), 12).unwrap());
            for (x, y) in a.w[0].iter().zip(&b.w[0]) {
                prop_assert!((x - y).abs() < 1e-14);
            }
        }
    }
}
