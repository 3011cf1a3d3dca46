//! Choice of the accepted reference point `x_A`.
//!
//! Every point returned here has been checked against the decision rule;
//! a reference that the model would decline is an error, never a result.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{Decision, DecisionConfig, Direction, FeaturePoint, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum ReferencePolicy {
    FixedPoint(FeaturePoint),
    /// Per-feature quantile of the accepted applicants.
    Percentile(f64),
    /// Closest accepted applicant in standardized distance.
    NearestAccepted {
        restrict_to_mutable: bool,
    },
}

/// Ok when the model accepts `point` at the configured threshold.
pub fn validate_reference(
    model: &ModelSpec,
    point: &FeaturePoint,
    cfg: &DecisionConfig,
) -> Result<()> {
    model.check_point(point)?;
    let p = model.probability(point.values());
    match cfg.decide_probability(p) {
        Decision::Accept => Ok(()),
        Decision::Decline => Err(Error::ReferenceDeclined {
            point: point.values().to_vec(),
            probability: p,
            threshold: cfg.threshold(),
        }),
    }
}

/// The `ceil(q * n)`-th smallest value (1-based, at least the first).
pub fn nearest_rank(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    // tolerance keeps e.g. 0.07 * 100 = 7.000000000000001 at rank 7
    let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    values[rank.min(n) - 1]
}

fn accepted_rows<'d>(
    dataset: &'d Dataset,
    model: &ModelSpec,
    cfg: &DecisionConfig,
) -> Vec<(usize, &'d FeaturePoint)> {
    dataset
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, r)| cfg.decide_probability(model.probability(r.values())) == Decision::Accept)
        .collect()
}

/// Per-feature nearest-rank quantile over the accepted sub-population.
///
/// Features whose default probability increases with their value use the
/// `1 - q` quantile so the reference sits on the creditworthy side; the
/// rest use `q`.
pub fn percentile_reference(
    dataset: &Dataset,
    model: &ModelSpec,
    cfg: &DecisionConfig,
    q: f64,
) -> Result<FeaturePoint> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidQuantile(q));
    }
    if dataset.is_empty() {
        return Err(Error::NoReference("dataset is empty".into()));
    }
    let accepted = accepted_rows(dataset, model, cfg);
    if accepted.is_empty() {
        return Err(Error::NoReference(format!(
            "no row of the dataset is accepted at tau = {}",
            cfg.threshold()
        )));
    }
    let space = model.space();
    let values = (0..space.len())
        .map(|k| {
            let mut column: Vec<f64> = accepted.iter().map(|(_, r)| r[k]).collect();
            let qk = match space.direction(k) {
                Direction::Increasing => 1.0 - q,
                Direction::Decreasing | Direction::None => q,
            };
            nearest_rank(&mut column, qk)
        })
        .collect();
    let point = space.point(values)?;
    validate_reference(model, &point, cfg)?;
    Ok(point)
}

/// Population standard deviation of every feature.
fn feature_scales(dataset: &Dataset) -> Vec<f64> {
    let n = dataset.len() as f64;
    (0..dataset.space().len())
        .map(|k| {
            let mean = dataset.rows().iter().map(|r| r[k]).sum::<f64>() / n;
            let var = dataset
                .rows()
                .iter()
                .map(|r| (r[k] - mean).powi(2))
                .sum::<f64>()
                / n;
            var.sqrt()
        })
        .collect()
}

/// Squared standardized distance over the features selected by `mask`;
/// zero-variance features contribute nothing.
fn distance2(a: &[f64], b: &[f64], scales: &[f64], mask: &[bool]) -> f64 {
    a.iter()
        .zip(b)
        .zip(scales.iter().zip(mask))
        .filter(|(_, (s, m))| **m && **s > 0.0)
        .map(|((x, y), (s, _))| ((x - y) / s).powi(2))
        .sum()
}

/// The accepted applicant closest to `xd`.
///
/// With `restrict_to_mutable`, distance counts only mutable features and
/// each candidate's mutable values are spliced onto the immutable values of
/// `xd`; the spliced point must itself be accepted. Ties go to the lowest
/// row index. If `xd` is already accepted it is returned unchanged.
pub fn nearest_accepted_reference(
    dataset: &Dataset,
    model: &ModelSpec,
    cfg: &DecisionConfig,
    xd: &FeaturePoint,
    restrict_to_mutable: bool,
) -> Result<FeaturePoint> {
    model.check_point(xd)?;
    if validate_reference(model, xd, cfg).is_ok() {
        return Ok(xd.clone());
    }
    let space = model.space();
    let mask: Vec<bool> = (0..space.len())
        .map(|k| !restrict_to_mutable || space.is_mutable(k))
        .collect();
    let scales = feature_scales(dataset);
    let mut best: Option<(f64, FeaturePoint)> = None;
    for (_, row) in accepted_rows(dataset, model, cfg) {
        let candidate = if restrict_to_mutable {
            let spliced: Vec<f64> = (0..space.len())
                .map(|k| if mask[k] { row[k] } else { xd[k] })
                .collect();
            let point = space.point(spliced)?;
            if validate_reference(model, &point, cfg).is_err() {
                continue;
            }
            point
        } else {
            row.clone()
        };
        let d = distance2(candidate.values(), xd.values(), &scales, &mask);
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, candidate));
        }
    }
    best.map(|(_, p)| p).ok_or_else(|| {
        Error::NoReference(if restrict_to_mutable {
            "no accepted row remains accepted after fixing the immutable features".into()
        } else {
            format!(
                "no row of the dataset is accepted at tau = {}",
                cfg.threshold()
            )
        })
    })
}

/// Resolves a policy to a validated reference point.
pub fn select_reference(
    policy: &ReferencePolicy,
    dataset: Option<&Dataset>,
    model: &ModelSpec,
    cfg: &DecisionConfig,
    xd: Option<&FeaturePoint>,
) -> Result<FeaturePoint> {
    let need_data = || {
        dataset.ok_or_else(|| Error::NoReference("this reference policy needs a dataset".into()))
    };
    match policy {
        ReferencePolicy::FixedPoint(p) => {
            validate_reference(model, p, cfg)?;
            Ok(p.clone())
        }
        ReferencePolicy::Percentile(q) => percentile_reference(need_data()?, model, cfg, *q),
        ReferencePolicy::NearestAccepted {
            restrict_to_mutable,
        } => {
            let xd = xd.ok_or_else(|| {
                Error::NoReference("nearest-accepted policy needs a declined point".into())
            })?;
            nearest_accepted_reference(need_data()?, model, cfg, xd, *restrict_to_mutable)
        }
    }
}
