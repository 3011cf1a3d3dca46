use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    #[default]
    Logit,
    Identity,
}

impl Link {
    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Identity => "identity",
        }
    }

    /// Maps a link-space score to the probability scale.
    pub fn inverse(self, score: f64) -> f64 {
        match self {
            Link::Logit => to_probability(score),
            Link::Identity => score,
        }
    }
}

/// `ln(p / (1 - p))`.
pub fn to_link(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityDomain(p));
    }
    Ok((p / (1.0 - p)).ln())
}

/// Logistic function `1 / (1 + exp(-s))`.
pub fn to_probability(s: f64) -> f64 {
    // split by sign so exp never overflows
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Decision threshold on the probability of default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecisionConfig {
    threshold: f64,
}

impl DecisionConfig {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidThreshold(threshold));
        }
        Ok(Self { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Approve when the probability of default does not exceed the threshold.
    pub fn decide_probability(&self, p: f64) -> Decision {
        if p <= self.threshold {
            Decision::Accept
        } else {
            Decision::Decline
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Decline,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Decline => "decline",
        }
    }
}
