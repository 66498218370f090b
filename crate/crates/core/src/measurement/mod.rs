//! Few-atom Monte Carlo of the four state/measurement hypotheses and the
//! classifier that tries to recover them from spectra.

mod atoms;
mod classify;
mod hypothesis;
mod realize;

pub use atoms::{
    apply_family_transfer, effective_distribution, evolve_travel_per_hypothesis, measure, prepare_atoms,
    sample_atoms, AtomState, DistributionSampler, DISTRIBUTION_TOLERANCE,
};
pub use classify::{
    classify, degenerate_cells, realization_features, ClassifierContext, ClassifierFeatures, ClassifierVerdict,
    RealizationFeatures, ASYMMETRY_ALPHA, IDENTICAL_TOLERANCE, MIN_REALIZATIONS, QUANTIZATION_TOLERANCE,
};
pub use hypothesis::{Hypothesis, MeasurementNature, StateNature};
pub use realize::{
    realization_seed, realize_set, ExperimentProtocol, Observation, Realization, RealizationSet, ScenarioModel,
    Stages,
};
