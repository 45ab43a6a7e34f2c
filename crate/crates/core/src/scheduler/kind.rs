use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Band selection policy.
///
/// Serialized as a plain name (`"even_split"`, `"leaky_bucket"`, ...);
/// a single-band policy carries its band index as `"single_band:<j>"`.
/// A bare `"single_band"` means band 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchedulerKind {
    SingleBand(usize),
    EvenSplit,
    LoadBalancing,
    BandPerFlow,
    MinimumDelay,
    LeakyBucket,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scheduler `{0}`")]
pub struct ParseSchedulerError(pub String);

impl SchedulerKind {
    /// Every policy for `bands` bands: one single-band policy per band
    /// followed by the five multi-band policies.
    pub fn all(bands: usize) -> Vec<SchedulerKind> {
        (0..bands)
            .map(SchedulerKind::SingleBand)
            .chain([
                SchedulerKind::EvenSplit,
                SchedulerKind::LoadBalancing,
                SchedulerKind::BandPerFlow,
                SchedulerKind::MinimumDelay,
                SchedulerKind::LeakyBucket,
            ])
            .collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerKind::SingleBand(_) => "single_band",
            SchedulerKind::EvenSplit => "even_split",
            SchedulerKind::LoadBalancing => "load_balancing",
            SchedulerKind::BandPerFlow => "band_per_flow",
            SchedulerKind::MinimumDelay => "minimum_delay",
            SchedulerKind::LeakyBucket => "leaky_bucket",
        }
    }

    /// Policies that spread one stream over several bands at the same time.
    pub fn aggregates(&self) -> bool {
        matches!(
            self,
            SchedulerKind::EvenSplit | SchedulerKind::LoadBalancing | SchedulerKind::MinimumDelay | SchedulerKind::LeakyBucket
        )
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerKind::SingleBand(j) => write!(f, "single_band:{j}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SchedulerKind {
    type Err = ParseSchedulerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "single_band" => SchedulerKind::SingleBand(0),
            "even_split" => SchedulerKind::EvenSplit,
            "load_balancing" => SchedulerKind::LoadBalancing,
            "band_per_flow" => SchedulerKind::BandPerFlow,
            "minimum_delay" => SchedulerKind::MinimumDelay,
            "leaky_bucket" => SchedulerKind::LeakyBucket,
            other => {
                let band = other
                    .strip_prefix("single_band:")
                    .and_then(|j| j.parse().ok())
                    .ok_or_else(|| ParseSchedulerError(other.to_string()))?;
                SchedulerKind::SingleBand(band)
            }
        })
    }
}

impl TryFrom<String> for SchedulerKind {
    type Error = ParseSchedulerError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SchedulerKind> for String {
    fn from(kind: SchedulerKind) -> String {
        kind.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_back() {
        for kind in SchedulerKind::all(3) {
            assert_eq!(kind.to_string().parse::<SchedulerKind>().unwrap(), kind);
        }
        assert_eq!("single_band".parse::<SchedulerKind>().unwrap(), SchedulerKind::SingleBand(0));
        assert!("fastest".parse::<SchedulerKind>().is_err());
        assert!("single_band:x".parse::<SchedulerKind>().is_err());
    }

    #[test]
    fn json_uses_plain_names() {
        let json = serde_json::to_string(&vec![SchedulerKind::LeakyBucket, SchedulerKind::SingleBand(1)]).unwrap();
        assert_eq!(json, r#"["leaky_bucket","single_band:1"]"#);
    }

    #[test]
    fn seven_policies_for_two_bands() {
        assert_eq!(SchedulerKind::all(2).len(), 7);
    }
}
