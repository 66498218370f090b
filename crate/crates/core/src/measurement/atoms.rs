//! Per-atom states and the stochastic steps acting on them.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hypothesis::Hypothesis;
use crate::dynamics::family_transfer;
use crate::error::{Error, Result};
use crate::momentum::{Level, MomentumDistribution};
use crate::params::PumpFieldSpec;

/// Distributions handed to the sampler must sum to one within this.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AtomState {
    /// Carries the shared wavefunction of the current stage.
    Superposed,
    /// One plane-wave component.
    Definite { level: Level, m: i64 },
    /// Mixture over the closed family `{g₁(m), g₂(m), e(m+1)}`.
    Family { m: i64, populations: [f64; 3] },
}

impl AtomState {
    /// `(level, m, weight)` entries this atom contributes.
    fn components(&self) -> Vec<(Level, i64, f64)> {
        match *self {
            AtomState::Superposed => Vec::new(),
            AtomState::Definite { level, m } => vec![(level, m, 1.0)],
            AtomState::Family { m, populations: p } => vec![
                (Level::G1, m, p[0]),
                (Level::G2, m, p[1]),
                (Level::E, m + 1, p[2]),
            ],
        }
    }
}

/// Draws `(level, m)` with probability `w`.
///
/// The outermost momenta `|m| = m_max` are left out: their weight is below
/// the tail limit, and a family built on them would leave the cutoff.
#[derive(Clone, Debug)]
pub struct DistributionSampler {
    entries: Vec<(Level, i64)>,
    index: WeightedIndex<f64>,
}

impl DistributionSampler {
    pub fn new(dist: &MomentumDistribution) -> Result<Self> {
        let edge = dist.m_max as i64;
        let support: Vec<_> = dist.support().into_iter().filter(|s| s.1.abs() < edge).collect();
        if support.is_empty() {
            return Err(Error::Empty("momentum distribution"));
        }
        let total = dist.total();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::NotNormalized {
                norm: total,
                tolerance: DISTRIBUTION_TOLERANCE,
            });
        }
        let index = WeightedIndex::new(support.iter().map(|s| s.2))
            .map_err(|e| Error::invalid("distribution", e.to_string()))?;
        Ok(DistributionSampler {
            entries: support.iter().map(|s| (s.0, s.1)).collect(),
            index,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> AtomState {
        let (level, m) = self.entries[self.index.sample(rng)];
        AtomState::Definite { level, m }
    }
}

/// State of each atom right after preparation: superpositional atoms share
/// the wavefunction, non-superpositional atoms get a definite `(level, m)`.
pub fn prepare_atoms<R: Rng + ?Sized>(
    hypothesis: Hypothesis,
    sampler: &DistributionSampler,
    n_atoms: usize,
    rng: &mut R,
) -> Vec<AtomState> {
    (0..n_atoms)
        .map(|_| {
            if hypothesis.is_superpositional() {
                AtomState::Superposed
            } else {
                sampler.draw(rng)
            }
        })
        .collect()
}

/// Applies the measurement: collapsing cells project every atom onto one
/// `(level, m)`, non-collapsing cells leave the states alone.
pub fn measure<R: Rng + ?Sized>(
    hypothesis: Hypothesis,
    atoms: &[AtomState],
    shared: &DistributionSampler,
    rng: &mut R,
) -> Result<Vec<AtomState>> {
    if !hypothesis.is_collapsing() {
        return Ok(atoms.to_vec());
    }
    atoms
        .iter()
        .map(|a| match *a {
            AtomState::Superposed => Ok(shared.draw(rng)),
            AtomState::Definite { .. } => Ok(a.clone()),
            AtomState::Family { m, populations } => {
                let k = WeightedIndex::new(populations)
                    .map_err(|e| Error::invalid("family populations", e.to_string()))?
                    .sample(rng);
                Ok(match k {
                    0 => AtomState::Definite { level: Level::G1, m },
                    1 => AtomState::Definite { level: Level::G2, m },
                    _ => AtomState::Definite { level: Level::E, m: m + 1 },
                })
            }
        })
        .collect()
}

/// Preparation followed by measurement, as seen by a probe right after the
/// standing stage.
pub fn sample_atoms<R: Rng + ?Sized>(
    hypothesis: Hypothesis,
    dist: &MomentumDistribution,
    n_atoms: usize,
    rng: &mut R,
) -> Result<Vec<AtomState>> {
    let sampler = DistributionSampler::new(dist)?;
    let atoms = prepare_atoms(hypothesis, &sampler, n_atoms, rng);
    measure(hypothesis, &atoms, &sampler, rng)
}

/// Traveling-stage evolution of definite-momentum atoms inside their closed
/// family, given `P[to][from]`. Superposed atoms are left as they are; the
/// shared wavefunction is evolved separately.
pub fn apply_family_transfer(atoms: &[AtomState], transfer: &[[f64; 3]; 3]) -> Vec<AtomState> {
    atoms
        .iter()
        .map(|a| {
            let (m, start) = match *a {
                AtomState::Superposed => return AtomState::Superposed,
                AtomState::Definite { level: Level::G1, m } => (m, [1.0, 0.0, 0.0]),
                AtomState::Definite { level: Level::G2, m } => (m, [0.0, 1.0, 0.0]),
                AtomState::Definite { level: Level::E, m } => (m - 1, [0.0, 0.0, 1.0]),
                AtomState::Family { m, populations } => (m, populations),
            };
            let mut populations = [0.0; 3];
            for (to, p) in populations.iter_mut().enumerate() {
                *p = (0..3).map(|from| transfer[to][from] * start[from]).sum();
            }
            AtomState::Family { m, populations }
        })
        .collect()
}

pub fn evolve_travel_per_hypothesis(
    atoms: &[AtomState],
    pump: &PumpFieldSpec,
    tau2: f64,
) -> Result<Vec<AtomState>> {
    if tau2 == 0.0 {
        return Ok(atoms.to_vec());
    }
    Ok(apply_family_transfer(atoms, &family_transfer(pump, tau2)?))
}

/// Sample distribution with weight `1/n` per atom; superposed atoms
/// contribute `shared`.
pub fn effective_distribution(
    atoms: &[AtomState],
    shared: &MomentumDistribution,
) -> Result<MomentumDistribution> {
    if atoms.is_empty() {
        return Err(Error::Empty("atom sample"));
    }
    let share = 1.0 / atoms.len() as f64;
    let mut out = MomentumDistribution::zeros(shared.m_max);
    for a in atoms {
        if let AtomState::Superposed = a {
            for (level, m, w) in shared.support() {
                out.add(level, m, share * w)?;
            }
        }
        for (level, m, w) in a.components() {
            if w > 0.0 {
                out.add(level, m, share * w)?;
            }
        }
    }
    Ok(out)
}
