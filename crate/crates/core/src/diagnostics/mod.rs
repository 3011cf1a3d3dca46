//! Model-quality diagnostics: shape checks that should hold before reason
//! codes are disclosed, plus descriptive tools (1-D partial dependence,
//! AUC, permutation importance).
//!
//! The shape checks probe the model empirically. They find violations;
//! they cannot certify their absence.

mod descriptive;
mod shape;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use descriptive::{auc, pdp_1d, permutation_importance, Importance, PartialDependence};
pub use shape::{check_continuity, check_monotonicity, MONOTONE_TOLERANCE};

use crate::error::{Error, Result};

/// Probing parameters shared by the shape checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSpec {
    pub grid_points: usize,
    pub random_line_probes: usize,
    pub seed: u64,
    /// Jump step `h` as a fraction of each feature's range.
    pub relative_step: f64,
    /// Link-space jump above which a feature is reported discontinuous.
    pub jump_threshold: f64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            grid_points: 64,
            random_line_probes: 256,
            seed: 0,
            relative_step: 1e-4,
            jump_threshold: 0.05,
        }
    }
}

impl ProbeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::Diagnostics("grid_points must be at least 2".into()));
        }
        if self.random_line_probes == 0 {
            return Err(Error::Diagnostics(
                "random_line_probes must be positive".into(),
            ));
        }
        if !(self.relative_step > 0.0 && self.relative_step.is_finite()) {
            return Err(Error::Diagnostics(
                "relative_step must be a positive number".into(),
            ));
        }
        if !(self.jump_threshold >= 0.0 && self.jump_threshold.is_finite()) {
            return Err(Error::Diagnostics(
                "jump_threshold must be a non-negative number".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Violation,
}

/// Two points differing in one feature, with their link-space scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub score_lower: f64,
    pub score_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCheck {
    pub feature: String,
    pub verdict: Verdict,
    /// Largest direction violation (monotonicity) or largest jump
    /// (continuity) observed.
    pub magnitude: f64,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Monotonicity,
    Continuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub check: CheckKind,
    pub features: Vec<FeatureCheck>,
    pub probe: ProbeSpec,
    pub notes: Vec<String>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.features.iter().all(|f| f.verdict == Verdict::Pass)
    }

    pub fn violations(&self) -> impl Iterator<Item = &FeatureCheck> {
        self.features
            .iter()
            .filter(|f| f.verdict == Verdict::Violation)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let title = match self.check {
            CheckKind::Monotonicity => "monotonicity",
            CheckKind::Continuity => "continuity",
        };
        let _ = writeln!(out, "{title} check (seed {})", self.probe.seed);
        let width = self
            .features
            .iter()
            .map(|f| f.feature.len())
            .max()
            .unwrap_or(0)
            .max(7);
        let _ = writeln!(out, "{:<width$}  {:<9}  magnitude", "feature", "verdict");
        for f in &self.features {
            let verdict = match f.verdict {
                Verdict::Pass => "pass",
                Verdict::Violation => "VIOLATION",
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:<9}  {:.6e}",
                f.feature, verdict, f.magnitude
            );
            if let Some(w) = &f.witness {
                let _ = writeln!(
                    out,
                    "{:<width$}  f({:?}) = {:.6}, f({:?}) = {:.6}",
                    "", w.lower, w.score_lower, w.upper, w.score_upper
                );
            }
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

fn check_bounds(bounds: &[(f64, f64)], k: usize) -> Result<()> {
    if bounds.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: bounds.len(),
        });
    }
    if let Some((lo, hi)) = bounds
        .iter()
        .find(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
    {
        return Err(Error::Diagnostics(format!(
            "invalid probing range [{lo}, {hi}]"
        )));
    }
    Ok(())
}
