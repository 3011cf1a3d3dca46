//! Baseline-Shapley attribution.
//!
//! [`explain`] picks the cheapest exact route: the closed forms in
//! [`closed_form`] when units are single features, attribution is in link
//! space and the model's interaction order is at most three; otherwise the
//! full coalition enumeration in [`exact`].

pub mod closed_form;
pub mod exact;
mod grouping;
mod result;
mod weights;

pub use closed_form::{explain_additive, explain_pairwise, explain_triple};
pub use exact::{baseline_shapley, explain_exact, GameOutcome, MAX_EXACT_UNITS};
pub use grouping::{Group, Grouping};
pub use result::{AttributionPath, AttributionResult, AttributionSpace, PERCENT_GUARD};
pub use weights::shapley_weight;

use crate::dsl::term_structure;
use crate::error::Result;
use crate::model::{FeaturePoint, ModelSpec};

pub fn explain(
    model: &ModelSpec,
    xd: &FeaturePoint,
    xa: &FeaturePoint,
    grouping: &Grouping,
    space: AttributionSpace,
) -> Result<AttributionResult> {
    if grouping.is_singletons() && space == AttributionSpace::Link {
        match term_structure(model).max_order {
            0 | 1 => return explain_additive(model, xd, xa),
            2 => return explain_pairwise(model, xd, xa),
            3 => return explain_triple(model, xd, xa),
            _ => {}
        }
    }
    explain_exact(model, xd, xa, grouping, space)
}
