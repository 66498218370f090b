use thiserror::Error;

use crate::params::Violation;

/// Errors raised by the simulation core.
///
/// The variants are grouped so a front end can map them onto exit codes:
/// validation problems, numerical-quality failures, and internal faults.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{} validation violation(s): {}", .0.len(), format_violations(.0))]
    Violations(Vec<Violation>),

    #[error("state is not normalized: grid-mean population {norm} (expected 1 within {tolerance:e})")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("momentum tail mass {mass:e} above {limit:e} near |m| = {m_max}; increase m_max")]
    TailMass { mass: f64, limit: f64, m_max: usize },

    #[error("resonance denominator {magnitude:e} at detuning {detuning} (m = {m}); shift the scan point or use the diagonal form with gamma > 0")]
    Pole { detuning: f64, m: i64, magnitude: f64 },

    #[error("rk4 oracle did not converge: halving dt changed the state by {change:e}")]
    NoConvergence { change: f64 },

    #[error("eigen-decomposition failed at eta = {eta}")]
    Eigen { eta: f64 },

    #[error("peaks unresolvable: resonance spacing {spacing:e} below 3 gamma ({gamma:e}); lower gamma or raise omega_r")]
    Unresolvable { spacing: f64, gamma: f64 },

    #[error("scan resolution too coarse near resonances: step {step:e} exceeds gamma/10 = {limit:e}")]
    ScanResolution { step: f64, limit: f64 },

    #[error("need at least {required} realizations, got {got}")]
    TooFewRealizations { required: usize, got: usize },

    #[error("empty {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by bad user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::Violations(_)
                | Error::Empty(_)
                | Error::TooFewRealizations { .. }
        )
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
