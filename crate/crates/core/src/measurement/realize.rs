//! Seeded few-atom realizations of the pump-probe experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::atoms::{apply_family_transfer, effective_distribution, measure, prepare_atoms, AtomState, DistributionSampler};
use super::hypothesis::Hypothesis;
use crate::dynamics::{evolve, evolve_series, family_transfer, AmplitudeField};
use crate::error::{Error, Result};
use crate::exec;
use crate::momentum::{fourier_coefficients, probabilities, MomentumDistribution};
use crate::params::{MediumSpec, ProbeFieldSpec, PumpFieldSpec, PumpMode, SpecBundle};
use crate::spectroscopy::{find_resonances, scan_spectrum, AbsorptionSpectrum, ResonanceSet, SpectrumSource};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stages {
    StandingOnly,
    StandingThenTraveling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentProtocol {
    pub stages: Stages,
    /// Traveling-stage durations probed after the standing stage; ignored
    /// for `standing_only`.
    pub tau2_sweep: Vec<f64>,
    /// Also probe between the two stages.
    pub probe_between: bool,
    pub n_atoms: usize,
    pub n_realizations: usize,
    pub seed: u64,
}

impl Default for ExperimentProtocol {
    fn default() -> Self {
        ExperimentProtocol {
            stages: Stages::StandingThenTraveling,
            tau2_sweep: vec![0.3, 0.4, 0.5, 0.646, 0.8],
            probe_between: false,
            n_atoms: 3,
            n_realizations: 40,
            seed: 0,
        }
    }
}

impl ExperimentProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::invalid("protocol.n_atoms", "must be at least 1"));
        }
        if self.n_realizations == 0 {
            return Err(Error::invalid("protocol.n_realizations", "must be at least 1"));
        }
        if self.stages == Stages::StandingThenTraveling {
            if self.tau2_sweep.is_empty() {
                return Err(Error::invalid("protocol.tau2_sweep", "traveling stage needs at least one duration"));
            }
            if let Some(t) = self.tau2_sweep.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
                return Err(Error::invalid("protocol.tau2_sweep", format!("durations must be >= 0, got {t}")));
            }
        }
        Ok(())
    }

    /// Durations at which the final probe is applied; `[0]` for standing only.
    pub fn probe_points(&self) -> Vec<f64> {
        match self.stages {
            Stages::StandingOnly => vec![0.0],
            Stages::StandingThenTraveling => self.tau2_sweep.clone(),
        }
    }

    /// Fewer atoms than populated momentum states.
    pub fn few_atom(&self, populated_count: usize) -> bool {
        self.n_atoms < populated_count
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of realization `index` of `hypothesis`; independent across cells.
pub fn realization_seed(master: u64, hypothesis: Hypothesis, index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ hypothesis.tag()) ^ index as u64)
}

/// One probe point of the shared wavefunction.
struct Stage {
    dist: MomentumDistribution,
    sampler: DistributionSampler,
    /// Closed-family transfer matrix; identity for the standing probe.
    transfer: [[f64; 3]; 3],
    superposed: AbsorptionSpectrum,
}

/// Everything that does not depend on the sampled atoms, computed once.
pub struct ScenarioModel {
    pub pump: PumpFieldSpec,
    pub probe: ProbeFieldSpec,
    pub medium: MediumSpec,
    pub tau2_sweep: Vec<f64>,
    standing: Stage,
    traveling: Vec<Stage>,
}

impl ScenarioModel {
    /// Runs the standing stage from equal ground amplitudes and the traveling
    /// stage for every duration in `tau2_sweep`.
    pub fn new(bundle: &SpecBundle, tau2_sweep: &[f64]) -> Result<Self> {
        let initial = AmplitudeField::ground_equal(bundle.grid.n_eta);
        let pump = &bundle.pump;
        let standing = evolve(&initial, pump, PumpMode::Standing, pump.duration_tau1)?;
        let make = |field: &AmplitudeField, transfer| -> Result<Stage> {
            let dist = probabilities(&fourier_coefficients(field, bundle.grid.m_max)?);
            let superposed = scan_spectrum(SpectrumSource::Diagonal(&dist), &bundle.medium, &bundle.probe)?;
            Ok(Stage {
                sampler: DistributionSampler::new(&dist)?,
                dist,
                transfer,
                superposed,
            })
        };
        let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let fields = evolve_series(&standing, pump, PumpMode::Traveling, tau2_sweep)?;
        let traveling = fields
            .iter()
            .zip(tau2_sweep)
            .map(|(f, &t)| make(f, family_transfer(pump, t)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioModel {
            pump: pump.clone(),
            probe: bundle.probe.clone(),
            medium: bundle.medium.clone(),
            tau2_sweep: tau2_sweep.to_vec(),
            standing: make(&standing, identity)?,
            traveling,
        })
    }

    pub fn standing_distribution(&self) -> &MomentumDistribution {
        &self.standing.dist
    }

    /// Shared distribution after each traveling duration.
    pub fn traveling_distributions(&self) -> impl Iterator<Item = &MomentumDistribution> {
        self.traveling.iter().map(|s| &s.dist)
    }

    /// Populated `(level, m)` entries after the standing stage.
    pub fn populated_count(&self) -> usize {
        self.standing.dist.populated_count()
    }

    fn check(&self, protocol: &ExperimentProtocol) -> Result<()> {
        protocol.validate()?;
        if protocol.stages == Stages::StandingThenTraveling && protocol.tau2_sweep != self.tau2_sweep {
            return Err(Error::invalid(
                "protocol.tau2_sweep",
                "differs from the durations the scenario model was built for",
            ));
        }
        Ok(())
    }

    fn observe(&self, atoms: Vec<AtomState>, stage: &Stage) -> Result<Observation> {
        let spectrum = if atoms.iter().all(|a| *a == AtomState::Superposed) {
            stage.superposed.clone()
        } else {
            let eff = effective_distribution(&atoms, &stage.dist)?;
            scan_spectrum(SpectrumSource::Diagonal(&eff), &self.medium, &self.probe)?
        };
        let resonances = find_resonances(&spectrum, &self.probe)?;
        Ok(Observation {
            atoms,
            spectrum,
            resonances,
        })
    }

    /// Rebuilds the observation of stored atom states. `stage` is `None` for
    /// the standing stage and `Some(k)` for the `k`-th traveling duration.
    pub fn observe_atoms(&self, atoms: Vec<AtomState>, stage: Option<usize>) -> Result<Observation> {
        let stage = match stage {
            None => &self.standing,
            Some(k) => self
                .traveling
                .get(k)
                .ok_or_else(|| Error::invalid("stage", format!("no traveling stage {k}")))?,
        };
        if atoms.is_empty() {
            return Err(Error::Empty("atom sample"));
        }
        self.observe(atoms, stage)
    }

    /// Realization `index` of `hypothesis`, replayable from its seed.
    pub fn realize(&self, hypothesis: Hypothesis, protocol: &ExperimentProtocol, index: usize) -> Result<Realization> {
        self.check(protocol)?;
        let seed = realization_seed(protocol.seed, hypothesis, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut atoms = prepare_atoms(hypothesis, &self.standing.sampler, protocol.n_atoms, &mut rng);
        let mut between = None;
        let mut observations = Vec::new();
        match protocol.stages {
            Stages::StandingOnly => {
                let measured = measure(hypothesis, &atoms, &self.standing.sampler, &mut rng)?;
                observations.push(self.observe(measured, &self.standing)?);
            }
            Stages::StandingThenTraveling => {
                if protocol.probe_between {
                    atoms = measure(hypothesis, &atoms, &self.standing.sampler, &mut rng)?;
                    between = Some(self.observe(atoms.clone(), &self.standing)?);
                }
                for stage in &self.traveling {
                    let traveled = apply_family_transfer(&atoms, &stage.transfer);
                    let measured = measure(hypothesis, &traveled, &stage.sampler, &mut rng)?;
                    observations.push(self.observe(measured, stage)?);
                }
            }
        }
        Ok(Realization {
            index,
            seed,
            tau2: protocol.probe_points(),
            between,
            observations,
        })
    }
}

/// Atoms as seen by one probe, with the resulting spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub atoms: Vec<AtomState>,
    pub spectrum: AbsorptionSpectrum,
    pub resonances: ResonanceSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    /// Traveling duration of each observation (`0` for standing only).
    pub tau2: Vec<f64>,
    /// Auxiliary probe between the stages, when requested.
    pub between: Option<Observation>,
    pub observations: Vec<Observation>,
}

impl Realization {
    pub fn spectra(&self) -> Vec<&AbsorptionSpectrum> {
        self.observations.iter().map(|o| &o.spectrum).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationSet {
    pub hypothesis: Hypothesis,
    pub protocol: ExperimentProtocol,
    pub populated_count: usize,
    pub few_atom: bool,
    pub realizations: Vec<Realization>,
}

impl RealizationSet {
    /// Final-probe spectra per realization, without the hypothesis label.
    pub fn spectra(&self) -> Vec<Vec<&AbsorptionSpectrum>> {
        self.realizations.iter().map(|r| r.spectra()).collect()
    }
}

/// All realizations of one cell; realizations run in parallel with the same
/// result as a serial run.
pub fn realize_set(model: &ScenarioModel, hypothesis: Hypothesis, protocol: &ExperimentProtocol) -> Result<RealizationSet> {
    model.check(protocol)?;
    let realizations = exec::try_map_indexed(protocol.n_realizations, |i| model.realize(hypothesis, protocol, i))?;
    let populated_count = model.populated_count();
    Ok(RealizationSet {
        hypothesis,
        protocol: protocol.clone(),
        populated_count,
        few_atom: protocol.few_atom(populated_count),
        realizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SimGrid;

    fn small_model(sweep: &[f64]) -> ScenarioModel {
        let mut bundle = SpecBundle {
            grid: SimGrid { n_eta: 256, m_max: 64 },
            ..SpecBundle::default()
        };
        bundle.probe.level = crate::params::ProbeLevel::Both;
        ScenarioModel::new(&bundle, sweep).unwrap()
    }

    #[test]
    fn seeds_differ_across_cells_and_indices() {
        let a = realization_seed(7, Hypothesis::SUP_COLLAPSE, 0);
        assert_ne!(a, realization_seed(7, Hypothesis::SUP_COLLAPSE, 1));
        assert_ne!(a, realization_seed(7, Hypothesis::NONSUP_COLLAPSE, 0));
        assert_ne!(a, realization_seed(8, Hypothesis::SUP_COLLAPSE, 0));
    }

    #[test]
    fn protocol_validation() {
        let mut p = ExperimentProtocol::default();
        assert!(p.validate().is_ok());
        p.tau2_sweep.clear();
        assert!(p.validate().is_err());
        p.stages = Stages::StandingOnly;
        assert!(p.validate().is_ok());
        p.n_atoms = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn replay_is_bit_identical() {
        let model = small_model(&[0.3, 0.646]);
        let protocol = ExperimentProtocol {
            tau2_sweep: vec![0.3, 0.646],
            probe_between: true,
            n_realizations: 3,
            seed: 11,
            ..ExperimentProtocol::default()
        };
        for h in Hypothesis::ALL {
            let a = realize_set(&model, h, &protocol).unwrap();
            let b = realize_set(&model, h, &protocol).unwrap();
            assert_eq!(a, b);
            let single = model.realize(h, &protocol, 2).unwrap();
            assert_eq!(single, a.realizations[2]);
        }
    }

    #[test]
    fn stored_atoms_rebuild_the_observation() {
        let model = small_model(&[0.646]);
        let protocol = ExperimentProtocol {
            tau2_sweep: vec![0.646],
            probe_between: true,
            n_realizations: 1,
            ..ExperimentProtocol::default()
        };
        for h in Hypothesis::ALL {
            let r = model.realize(h, &protocol, 0).unwrap();
            let between = r.between.unwrap();
            assert_eq!(model.observe_atoms(between.atoms.clone(), None).unwrap(), between);
            let obs = &r.observations[0];
            assert_eq!(&model.observe_atoms(obs.atoms.clone(), Some(0)).unwrap(), obs);
        }
        assert!(model.observe_atoms(vec![AtomState::Superposed], Some(1)).is_err());
    }

    #[test]
    fn mismatched_sweep_rejected() {
        let model = small_model(&[0.3]);
        let protocol = ExperimentProtocol {
            tau2_sweep: vec![0.4],
            ..ExperimentProtocol::default()
        };
        assert!(model.realize(Hypothesis::SUP_COLLAPSE, &protocol, 0).is_err());
    }
}
