//! Baseline-Shapley attribution for adverse credit decisions.
//!
//! The difference in model score between a declined applicant `x_D` and an
//! accepted reference `x_A` is split into per-feature (or per-group)
//! contributions that sum exactly to `f(x_D) - f(x_A)`. Models with only
//! low-order interactions are attributed through closed forms; anything
//! else falls back to exact enumeration of all `2^G` hybrid points.

pub mod attribution;
pub mod data;
pub mod diagnostics;
pub mod dsl;
pub mod error;
pub mod model;
pub mod reference;
pub mod report;

pub use attribution::{explain, AttributionPath, AttributionResult, AttributionSpace, Grouping};
pub use data::{load_dataset, Dataset};
pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use model::{
    to_link, to_probability, Component, Decision, DecisionConfig, Direction, FeatureDef,
    FeaturePoint, FeatureSpace, Link, ModelSpec, Scorer,
};
pub use reference::{select_reference, validate_reference, ReferencePolicy};
pub use report::{build_report, render_report, ReportFormat, ReportTable};
