//! Closed-form attribution for models built from low-order submodels.
//!
//! When every component reads at most three features, the model is a sum
//! of submodels `f_S` over small variable sets `S`, and the Shapley value
//! of the whole model is the sum of the Shapley values of the submodels.
//! Each submodel only needs the `2^|S|` corners of its own box:
//!
//! * one feature: `g_k(x_k^D) - g_k(x_k^A)`;
//! * two features: the average of the two one-step differences along each
//!   axis (the rectangle rule);
//! * three features: weights 1/3, 1/6, 1/6, 1/3 on the four edge
//!   differences along the credited axis (the cube rule).
//!
//! All routines here work in link space.

use std::collections::BTreeMap;

use super::exact::check_pair;
use super::grouping::Grouping;
use super::result::{AttributionPath, AttributionResult, AttributionSpace};
use crate::error::{Error, Result};
use crate::model::{Component, EvalFlags, FeaturePoint, ModelSpec};

/// Components sharing one variable set.
struct Submodel<'m> {
    vars: Vec<usize>,
    parts: Vec<&'m Component>,
}

impl Submodel<'_> {
    fn eval(&self, x: &[f64]) -> f64 {
        let mut flags = EvalFlags::default();
        self.parts.iter().map(|c| c.eval(x, &mut flags)).sum()
    }
}

struct Decomposition<'m> {
    constant: f64,
    submodels: Vec<Submodel<'m>>,
}

fn decompose<'m>(
    model: &'m ModelSpec,
    max_order: usize,
    path: &'static str,
    suggestion: &'static str,
) -> Result<Decomposition<'m>> {
    let mut by_vars: BTreeMap<Vec<usize>, Vec<&Component>> = BTreeMap::new();
    for c in model.components() {
        let vars: Vec<usize> = c.variables().into_iter().collect();
        if vars.len() > max_order {
            return Err(Error::Dispatch {
                path,
                order: vars.len(),
                suggestion,
            });
        }
        by_vars.entry(vars).or_default().push(c);
    }
    let mut constant = 0.0;
    let mut submodels = Vec::new();
    for (vars, parts) in by_vars {
        if vars.is_empty() {
            // point-independent, only shifts both scores
            let mut flags = EvalFlags::default();
            constant += parts.iter().map(|c| c.eval(&[], &mut flags)).sum::<f64>();
        } else {
            submodels.push(Submodel { vars, parts });
        }
    }
    Ok(Decomposition {
        constant,
        submodels,
    })
}

/// Evaluates submodels at the corners of their boxes and accumulates shares.
struct Accumulator<'a> {
    xd: &'a [f64],
    xa: &'a [f64],
    scratch: Vec<f64>,
    contributions: Vec<f64>,
    value_declined: f64,
    value_reference: f64,
    eval_count: usize,
}

impl<'a> Accumulator<'a> {
    fn new(xd: &'a [f64], xa: &'a [f64], constant: f64) -> Self {
        Self {
            xd,
            xa,
            scratch: xa.to_vec(),
            contributions: vec![0.0; xd.len()],
            value_declined: constant,
            value_reference: constant,
            eval_count: 0,
        }
    }

    /// Submodel value with `vars[i]` at its declined value when bit `i` of
    /// `mask` is set.
    fn corner(&mut self, sub: &Submodel<'_>, mask: usize) -> f64 {
        for (bit, &v) in sub.vars.iter().enumerate() {
            self.scratch[v] = if mask >> bit & 1 == 1 {
                self.xd[v]
            } else {
                self.xa[v]
            };
        }
        self.eval_count += 1;
        sub.eval(&self.scratch)
    }

    fn main_effect(&mut self, sub: &Submodel<'_>) {
        let d = self.corner(sub, 1);
        let a = self.corner(sub, 0);
        self.contributions[sub.vars[0]] += d - a;
        self.value_declined += d;
        self.value_reference += a;
    }

    fn pair(&mut self, sub: &Submodel<'_>) {
        let (i, j) = (sub.vars[0], sub.vars[1]);
        // f_{ij} at (x_i state, x_j state)
        let aa = self.corner(sub, 0b00);
        let da = self.corner(sub, 0b01);
        let ad = self.corner(sub, 0b10);
        let dd = self.corner(sub, 0b11);
        self.contributions[i] += 0.5 * ((dd - ad) + (da - aa));
        self.contributions[j] += 0.5 * ((dd - da) + (ad - aa));
        self.value_declined += dd;
        self.value_reference += aa;
    }

    fn triple(&mut self, sub: &Submodel<'_>) {
        let mut cube = [0.0; 8];
        for (mask, v) in cube.iter_mut().enumerate() {
            *v = self.corner(sub, mask);
        }
        for own in 0..3 {
            let others: Vec<usize> = (0..3).filter(|&b| b != own).collect();
            let at = |own_d: bool, first_d: bool, second_d: bool| {
                let mut mask = 0;
                if own_d {
                    mask |= 1 << own;
                }
                if first_d {
                    mask |= 1 << others[0];
                }
                if second_d {
                    mask |= 1 << others[1];
                }
                cube[mask]
            };
            let step = |first_d: bool, second_d: bool| {
                at(true, first_d, second_d) - at(false, first_d, second_d)
            };
            let share = (step(true, true) + step(false, false)) / 3.0
                + (step(false, true) + step(true, false)) / 6.0;
            self.contributions[sub.vars[own]] += share;
        }
        self.value_declined += cube[7];
        self.value_reference += cube[0];
    }

    fn finish(self, model: &ModelSpec, path: AttributionPath) -> AttributionResult {
        let grouping = Grouping::singletons(model.space());
        AttributionResult::assemble(
            grouping.names(),
            (0..self.xd.len()).map(|i| vec![i]).collect(),
            self.contributions,
            self.value_declined,
            self.value_reference,
            AttributionSpace::Link,
            self.eval_count,
            path,
        )
    }
}

/// Attribution of an additive model: each feature receives the change of
/// its own main effect.
pub fn explain_additive(
    model: &ModelSpec,
    xd: &FeaturePoint,
    xa: &FeaturePoint,
) -> Result<AttributionResult> {
    check_pair(model, xd, xa)?;
    let dec = decompose(model, 1, "additive", "the pairwise, triple or exact path")?;
    let mut acc = Accumulator::new(xd.values(), xa.values(), dec.constant);
    for sub in &dec.submodels {
        acc.main_effect(sub);
    }
    Ok(acc.finish(model, AttributionPath::Additive))
}

/// Attribution of a model with interactions of order at most two. Main
/// effects are credited directly; each pairwise submodel is split with the
/// rectangle rule.
pub fn explain_pairwise(
    model: &ModelSpec,
    xd: &FeaturePoint,
    xa: &FeaturePoint,
) -> Result<AttributionResult> {
    check_pair(model, xd, xa)?;
    let dec = decompose(model, 2, "pairwise", "the triple or exact path")?;
    let mut acc = Accumulator::new(xd.values(), xa.values(), dec.constant);
    for sub in &dec.submodels {
        match sub.vars.len() {
            1 => acc.main_effect(sub),
            _ => acc.pair(sub),
        }
    }
    Ok(acc.finish(model, AttributionPath::Pairwise))
}

/// Attribution of a model with interactions of order at most three, using
/// the cube rule for every three-feature submodel.
pub fn explain_triple(
    model: &ModelSpec,
    xd: &FeaturePoint,
    xa: &FeaturePoint,
) -> Result<AttributionResult> {
    check_pair(model, xd, xa)?;
    let dec = decompose(model, 3, "triple", "the exact path")?;
    let mut acc = Accumulator::new(xd.values(), xa.values(), dec.constant);
    for sub in &dec.submodels {
        match sub.vars.len() {
            1 => acc.main_effect(sub),
            2 => acc.pair(sub),
            _ => acc.triple(sub),
        }
    }
    Ok(acc.finish(model, AttributionPath::Triple))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model_spec;
    use crate::model::FeatureSpace;

    fn setup(text: &str, xd: &[f64], xa: &[f64]) -> (ModelSpec, FeaturePoint, FeaturePoint) {
        let space = FeatureSpace::numbered(xd.len());
        let m = parse_model_spec(text, &space).unwrap();
        (
            m,
            space.point(xd.to_vec()).unwrap(),
            space.point(xa.to_vec()).unwrap(),
        )
    }

    fn close(a: &[f64], b: &[f64]) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn additive_hand_values() {
        let (m, d, a) = setup("identity: x1^2 + 3*x2", &[2.0, 1.0], &[1.0, 0.0]);
        let r = explain_additive(&m, &d, &a).unwrap();
        close(&r.contributions, &[3.0, 3.0]);
        assert_eq!(r.eval_count, 4);

        let (m, d, a) = setup("identity: 0.7 + 2*x1 - x2", &[1.5, 2.0], &[0.5, 1.0]);
        let r = explain_additive(&m, &d, &a).unwrap();
        close(&r.contributions, &[2.0, -1.0]);
        assert!((r.value_declined - m.score(d.values())).abs() < 1e-15);

        let (m, d, a) = setup("identity: x1 + x2", &[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(
            explain_additive(&m, &d, &a).unwrap().contributions,
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn additive_rejects_interactions() {
        let (m, d, a) = setup("identity: x1*x2", &[1.0, 1.0], &[0.0, 0.0]);
        assert!(matches!(
            explain_additive(&m, &d, &a),
            Err(Error::Dispatch { order: 2, .. })
        ));
    }

    #[test]
    fn pairwise_hand_values() {
        let (m, d, a) = setup("identity: x1*x2 + x1*x3 + x2*x3", &[1.0; 3], &[0.0; 3]);
        let r = explain_pairwise(&m, &d, &a).unwrap();
        close(&r.contributions, &[1.0, 1.0, 1.0]);
        assert_eq!(r.eval_count, 12);

        // rectangle rule on b12*x1*x2 with main effects
        let (m, d, a) = setup("identity: 2*x1 - x2 + 0.5*x1*x2", &[3.0, 1.0], &[1.0, 2.0]);
        let r = explain_pairwise(&m, &d, &a).unwrap();
        let e1 = 2.0 * 2.0 + 0.5 * 0.5 * 2.0 * (1.0 + 2.0);
        let e2 = 1.0 - 0.5 * 0.5 * (3.0 + 1.0);
        close(&r.contributions, &[e1, e2]);

        let (m, d, a) = setup("identity: x1*x2", &[1.0, 2.0, 5.0], &[0.0, 1.0, -3.0]);
        assert_eq!(explain_pairwise(&m, &d, &a).unwrap().contributions[2], 0.0);

        let (m, d, a) = setup("identity: x1*x2*x3", &[1.0; 3], &[0.0; 3]);
        assert!(matches!(
            explain_pairwise(&m, &d, &a),
            Err(Error::Dispatch { order: 3, .. })
        ));
    }

    #[test]
    fn triple_hand_values() {
        let (m, d, a) = setup("identity: x1*x2*x3", &[1.0; 3], &[0.0; 3]);
        let r = explain_triple(&m, &d, &a).unwrap();
        close(&r.contributions, &[1.0 / 3.0; 3]);
        assert_eq!(r.eval_count, 8);

        // x3 fixed at 1 reduces to the two-factor product
        let (m, d, a) = setup("identity: x1*x2*x3", &[1.0, 1.0, 1.0], &[0.0, 0.0, 1.0]);
        close(
            &explain_triple(&m, &d, &a).unwrap().contributions,
            &[0.5, 0.5, 0.0],
        );

        let (m, d, a) = setup("identity: 4.5", &[1.0, 2.0], &[3.0, 4.0]);
        let r = explain_triple(&m, &d, &a).unwrap();
        assert_eq!(r.contributions, vec![0.0, 0.0]);
        assert_eq!(r.value_declined, 4.5);

        let (m, d, a) = setup("identity: x1*x2*x3*x4", &[1.0; 4], &[0.0; 4]);
        assert!(matches!(
            explain_triple(&m, &d, &a),
            Err(Error::Dispatch { order: 4, .. })
        ));
    }
}
