use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateNature {
    Superpositional,
    NonSuperpositional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementNature {
    Collapsing,
    NonCollapsing,
}

/// One cell of the state × measurement table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypothesis {
    pub state: StateNature,
    pub measurement: MeasurementNature,
}

impl Hypothesis {
    pub const SUP_COLLAPSE: Hypothesis = Hypothesis::new(StateNature::Superpositional, MeasurementNature::Collapsing);
    pub const SUP_NON_COLLAPSE: Hypothesis =
        Hypothesis::new(StateNature::Superpositional, MeasurementNature::NonCollapsing);
    pub const NONSUP_COLLAPSE: Hypothesis =
        Hypothesis::new(StateNature::NonSuperpositional, MeasurementNature::Collapsing);
    pub const NONSUP_NON_COLLAPSE: Hypothesis =
        Hypothesis::new(StateNature::NonSuperpositional, MeasurementNature::NonCollapsing);

    pub const ALL: [Hypothesis; 4] = [
        Hypothesis::SUP_COLLAPSE,
        Hypothesis::SUP_NON_COLLAPSE,
        Hypothesis::NONSUP_COLLAPSE,
        Hypothesis::NONSUP_NON_COLLAPSE,
    ];

    pub const fn new(state: StateNature, measurement: MeasurementNature) -> Self {
        Hypothesis { state, measurement }
    }

    pub fn is_superpositional(self) -> bool {
        self.state == StateNature::Superpositional
    }

    pub fn is_collapsing(self) -> bool {
        self.measurement == MeasurementNature::Collapsing
    }

    /// Stable small integer, used to derive per-cell seed streams.
    pub fn tag(self) -> u64 {
        match (self.state, self.measurement) {
            (StateNature::Superpositional, MeasurementNature::Collapsing) => 1,
            (StateNature::Superpositional, MeasurementNature::NonCollapsing) => 2,
            (StateNature::NonSuperpositional, MeasurementNature::Collapsing) => 3,
            (StateNature::NonSuperpositional, MeasurementNature::NonCollapsing) => 4,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.state {
            StateNature::Superpositional => "sup",
            StateNature::NonSuperpositional => "nonsup",
        };
        let m = match self.measurement {
            MeasurementNature::Collapsing => "collapse",
            MeasurementNature::NonCollapsing => "non-collapse",
        };
        write!(f, "{s}+{m}")
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.to_string() == norm)
            .ok_or_else(|| {
                Error::invalid(
                    "hypothesis",
                    format!("unknown cell `{s}`; expected one of sup+collapse, sup+non-collapse, nonsup+collapse, nonsup+non-collapse"),
                )
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for h in Hypothesis::ALL {
            assert_eq!(h.to_string().parse::<Hypothesis>().unwrap(), h);
        }
        assert_eq!("NONSUP+NON_COLLAPSE".parse::<Hypothesis>().unwrap(), Hypothesis::NONSUP_NON_COLLAPSE);
        assert!("sup".parse::<Hypothesis>().is_err());
    }

    #[test]
    fn tags_distinct() {
        let mut tags: Vec<u64> = Hypothesis::ALL.iter().map(|h| h.tag()).collect();
        tags.sort();
        tags.dedup();
        assert_eq!(tags.len(), 4);
    }
}
