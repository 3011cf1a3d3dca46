//! Exact Baseline-Shapley attribution by enumerating every hybrid point.
//!
//! For `G` units the value of a coalition `S` is the score of the point
//! whose units in `S` take their declined values and all other units their
//! reference values. Each of the `2^G` coalitions is evaluated once and
//! kept in a table indexed by the membership bitmask; the contribution of
//! unit `k` is then the weighted sum of marginal differences
//! `v(S + k) - v(S)` over the coalitions that exclude `k`.

use rayon::prelude::*;

use super::grouping::Grouping;
use super::result::{AttributionPath, AttributionResult, AttributionSpace};
use super::weights::weight_table;
use crate::error::{Error, Result};
use crate::model::{FeaturePoint, FnScorer, Link, ModelSpec, Scorer};

/// Largest number of units the exact path accepts.
pub const MAX_EXACT_UNITS: usize = 25;

const PARALLEL_MIN_COALITIONS: usize = 1 << 12;

/// Raw outcome of the coalition game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameOutcome {
    pub contributions: Vec<f64>,
    /// Score with every unit at its declined value.
    pub value_declined: f64,
    /// Score with every unit at its reference value.
    pub value_reference: f64,
    pub eval_count: usize,
}

/// Plays the Baseline-Shapley game for `scorer` over the units in `units`.
///
/// Units whose features coincide in `xd` and `xa` cannot change any hybrid
/// point, so they are credited exactly zero and left out of the
/// enumeration; the remaining units keep their Shapley values.
pub fn baseline_shapley<S: Scorer + ?Sized>(
    scorer: &S,
    xd: &[f64],
    xa: &[f64],
    units: &[Vec<usize>],
) -> Result<GameOutcome> {
    if units.len() > MAX_EXACT_UNITS {
        return Err(Error::TooManyUnits {
            groups: units.len(),
            max: MAX_EXACT_UNITS,
        });
    }
    let active: Vec<usize> = (0..units.len())
        .filter(|&u| units[u].iter().any(|&i| xd[i] != xa[i]))
        .collect();
    let mut contributions = vec![0.0; units.len()];
    if active.is_empty() {
        let v = scorer.score(xd);
        return Ok(GameOutcome {
            contributions,
            value_declined: v,
            value_reference: v,
            eval_count: 1,
        });
    }

    let m = active.len();
    let n = 1usize << m;
    let value = |mask: usize, buf: &mut Vec<f64>| {
        buf.clear();
        buf.extend_from_slice(xa);
        for (bit, &u) in active.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                for &i in &units[u] {
                    buf[i] = xd[i];
                }
            }
        }
        scorer.score(buf)
    };
    let values: Vec<f64> = if n >= PARALLEL_MIN_COALITIONS {
        (0..n)
            .into_par_iter()
            .with_min_len(1024)
            .map_init(
                || Vec::with_capacity(xa.len()),
                |buf, mask| value(mask, buf),
            )
            .collect()
    } else {
        let mut buf = Vec::with_capacity(xa.len());
        (0..n).map(|mask| value(mask, &mut buf)).collect()
    };

    let weights = weight_table(m);
    let per_unit: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|bit| {
            let b = 1usize << bit;
            let mut acc = 0.0;
            for mask in 0..n {
                if mask & b == 0 {
                    acc += weights[mask.count_ones() as usize] * (values[mask | b] - values[mask]);
                }
            }
            acc
        })
        .collect();
    for (bit, &u) in active.iter().enumerate() {
        contributions[u] = per_unit[bit];
    }
    Ok(GameOutcome {
        contributions,
        value_declined: values[n - 1],
        value_reference: values[0],
        eval_count: n,
    })
}

pub(crate) fn check_pair(model: &ModelSpec, xd: &FeaturePoint, xa: &FeaturePoint) -> Result<()> {
    model.check_point(xd)?;
    model.check_point(xa)
}

/// Exact attribution of `model` over the units of `grouping`.
pub fn explain_exact(
    model: &ModelSpec,
    xd: &FeaturePoint,
    xa: &FeaturePoint,
    grouping: &Grouping,
    space: AttributionSpace,
) -> Result<AttributionResult> {
    check_pair(model, xd, xa)?;
    if grouping
        .groups()
        .iter()
        .flat_map(|g| &g.members)
        .any(|&i| i >= model.space().len())
    {
        return Err(Error::InvalidGrouping(
            "grouping does not match the model's feature space".into(),
        ));
    }
    let units: Vec<Vec<usize>> = grouping
        .groups()
        .iter()
        .map(|g| g.members.clone())
        .collect();
    let outcome = match (space, model.link()) {
        (AttributionSpace::Link, _) | (AttributionSpace::Probability, Link::Identity) => {
            baseline_shapley(model, xd.values(), xa.values(), &units)?
        }
        (AttributionSpace::Probability, link) => {
            let prob = FnScorer::new(model.space().len(), |x: &[f64]| {
                link.inverse(model.score(x))
            });
            baseline_shapley(&prob, xd.values(), xa.values(), &units)?
        }
    };
    Ok(AttributionResult::assemble(
        grouping.names(),
        units,
        outcome.contributions,
        outcome.value_declined,
        outcome.value_reference,
        space,
        outcome.eval_count,
        AttributionPath::Exact,
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::dsl::parse_model_spec;
    use crate::model::FeatureSpace;

    fn run(text: &str, xd: &[f64], xa: &[f64]) -> AttributionResult {
        let space = FeatureSpace::numbered(xd.len());
        let m = parse_model_spec(text, &space).unwrap();
        let g = Grouping::singletons(&space);
        explain_exact(
            &m,
            &space.point(xd.to_vec()).unwrap(),
            &space.point(xa.to_vec()).unwrap(),
            &g,
            AttributionSpace::Link,
        )
        .unwrap()
    }

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn two_factor_product() {
        let r = run("identity: x1*x2", &[1.0, 1.0], &[0.0, 0.0]);
        close(&r.contributions, &[0.5, 0.5]);
        let r = run("identity: x1*x2", &[2.0, 1.0], &[0.0, 3.0]);
        close(&r.contributions, &[4.0, -2.0]);
        assert_eq!(r.total, 2.0);
    }

    #[test]
    fn dummy_and_three_factor() {
        let r = run("identity: x1", &[1.0, 5.0], &[0.0, 7.0]);
        close(&r.contributions, &[1.0, 0.0]);
        let r = run("identity: x1*x2*x3", &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0]);
        close(&r.contributions, &[1.0 / 3.0; 3]);
    }

    #[test]
    fn identical_points_give_zero_without_percentages() {
        let r = run("logit: x1*x2 + 3", &[1.5, 2.0], &[1.5, 2.0]);
        assert_eq!(r.contributions, vec![0.0, 0.0]);
        assert_eq!(r.total, 0.0);
        assert!(r.percentages.is_none());
    }

    #[test]
    fn refuses_too_many_units() {
        let space = FeatureSpace::numbered(26);
        let m = parse_model_spec("identity: x1*x26", &space).unwrap();
        let p = space.point(vec![1.0; 26]).unwrap();
        let q = space.point(vec![0.0; 26]).unwrap();
        let err = explain_exact(
            &m,
            &p,
            &q,
            &Grouping::singletons(&space),
            AttributionSpace::Link,
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooManyUnits { groups: 26, .. }));
        assert!(err.to_string().contains("--groups"));
    }

    #[test]
    fn each_coalition_evaluated_once() {
        let calls = AtomicUsize::new(0);
        let scorer = FnScorer::new(6, |x: &[f64]| {
            calls.fetch_add(1, Ordering::Relaxed);
            x.iter().product::<f64>() + x[0] * x[5]
        });
        let units: Vec<Vec<usize>> = (0..6).map(|i| vec![i]).collect();
        let out = baseline_shapley(&scorer, &[1.0; 6], &[2.0; 6], &units).unwrap();
        assert_eq!(out.eval_count, 64);
        assert_eq!(calls.load(Ordering::Relaxed), 64);
    }

    #[test]
    fn single_group_takes_the_total() {
        let space = FeatureSpace::numbered(3);
        let m = parse_model_spec("logit: exp(x1*x2) - x3^3", &space).unwrap();
        let g = Grouping::from_names(&space, [("all", ["x1", "x2", "x3"])]).unwrap();
        let xd = space.point(vec![0.3, -1.0, 2.0]).unwrap();
        let xa = space.point(vec![1.0, 0.5, 0.0]).unwrap();
        let r = explain_exact(&m, &xd, &xa, &g, AttributionSpace::Link).unwrap();
        assert_eq!(r.contributions, vec![r.total]);
        assert_eq!(r.eval_count, 2);
    }

    #[test]
    fn probability_space_decomposes_p() {
        let space = FeatureSpace::numbered(2);
        let m = parse_model_spec("logit: x1 + x1*x2", &space).unwrap();
        let xd = space.point(vec![1.0, 2.0]).unwrap();
        let xa = space.point(vec![-1.0, 0.0]).unwrap();
        let r = explain_exact(
            &m,
            &xd,
            &xa,
            &Grouping::singletons(&space),
            AttributionSpace::Probability,
        )
        .unwrap();
        let expected = m.probability(xd.values()) - m.probability(xa.values());
        assert!((r.total - expected).abs() < 1e-15);
        assert!(r.efficiency_gap() < 1e-15);
    }
}
