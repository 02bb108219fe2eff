//! Shared classification labels.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Outcome of an analytic stability test.
///
/// `Boundary` marks parameter points on (or numerically indistinguishable
/// from) the edge of the stability region; `Inconclusive` marks methods
/// whose hypotheses could not be certified either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Boundary,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Boundary => "boundary",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}
