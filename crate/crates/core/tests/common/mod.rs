#![allow(dead_code)]

use bshap_core::dsl::parse_model_spec;
use bshap_core::{FeatureSpace, ModelSpec};
use proptest::prelude::*;

/// Shapley values by averaging marginal contributions over every ordering
/// of the units. Exponential in a worse way than the coalition table, but
/// shares no code with it.
pub fn permutation_shapley(
    f: &dyn Fn(&[f64]) -> f64,
    xd: &[f64],
    xa: &[f64],
    units: &[Vec<usize>],
) -> Vec<f64> {
    let m = units.len();
    let mut order: Vec<usize> = (0..m).collect();
    let mut sums = vec![0.0; m];
    let mut count = 0usize;
    permute(&mut order, 0, &mut |perm| {
        let mut x = xa.to_vec();
        let mut prev = f(&x);
        for &u in perm {
            for &i in &units[u] {
                x[i] = xd[i];
            }
            let v = f(&x);
            sums[u] += v - prev;
            prev = v;
        }
        count += 1;
    });
    sums.iter().map(|s| s / count as f64).collect()
}

fn permute(v: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

pub fn singletons(k: usize) -> Vec<Vec<usize>> {
    (0..k).map(|i| vec![i]).collect()
}

/// One additive term over the listed features.
#[derive(Debug, Clone)]
pub struct Term {
    pub coef: f64,
    pub vars: Vec<(usize, u32)>,
    pub kind: u8,
}

fn name(i: usize) -> String {
    format!("x{}", i + 1)
}

impl Term {
    pub fn text(&self) -> String {
        let c = format!("{:.6}", self.coef.abs());
        let body = match self.kind {
            // polynomial monomial
            0 => self
                .vars
                .iter()
                .map(|&(i, p)| {
                    if p > 1 {
                        format!("{}^{p}", name(i))
                    } else {
                        name(i)
                    }
                })
                .collect::<Vec<_>>()
                .join("*"),
            1 => format!(
                "exp(0.3*({}))",
                self.vars
                    .iter()
                    .map(|&(i, _)| name(i))
                    .collect::<Vec<_>>()
                    .join(" + ")
            ),
            2 => format!(
                "logistic({})",
                self.vars
                    .iter()
                    .map(|&(i, _)| name(i))
                    .collect::<Vec<_>>()
                    .join("*")
            ),
            3 => {
                let mut s = name(self.vars[0].0);
                for &(i, _) in &self.vars[1..] {
                    s = format!("max({s}, {})", name(i));
                }
                s
            }
            _ => format!(
                "log(1 + ({})^2)",
                self.vars
                    .iter()
                    .map(|&(i, _)| name(i))
                    .collect::<Vec<_>>()
                    .join(" - ")
            ),
        };
        format!("{c}*{body}")
    }
}

pub fn model_text(link: &str, intercept: f64, terms: &[Term]) -> String {
    let mut s = format!("{link}: {intercept:.6}");
    for t in terms {
        s.push_str(if t.coef < 0.0 { " - " } else { " + " });
        s.push_str(&t.text());
    }
    s
}

pub fn parse(text: &str, k: usize) -> ModelSpec {
    parse_model_spec(text, &FeatureSpace::numbered(k)).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn term(k: usize, max_order: usize) -> impl Strategy<Value = Term> {
    (
        -2.0..2.0f64,
        proptest::sample::subsequence((0..k).collect::<Vec<_>>(), 1..=max_order.min(k)),
        proptest::collection::vec(1u32..=3, 3),
        0u8..5,
    )
        .prop_map(|(coef, vars, powers, kind)| Term {
            coef,
            vars: vars.into_iter().zip(powers).collect(),
            kind,
        })
}

/// Text of a random model over `k` features whose terms read at most
/// `max_order` features each.
pub fn model(k: usize, max_order: usize) -> impl Strategy<Value = String> {
    (
        prop_oneof![Just("logit"), Just("identity")],
        -1.0..1.0f64,
        proptest::collection::vec(term(k, max_order), 1..6),
    )
        .prop_map(|(link, b0, terms)| model_text(link, b0, &terms))
}

pub fn point(k: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0..2.0f64, k)
}

/// Points that share some coordinates, so dummy units occur.
pub fn point_pair(k: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        point(k),
        point(k),
        proptest::collection::vec(any::<bool>(), k),
    )
        .prop_map(|(d, mut a, same)| {
            for i in 0..d.len() {
                if same[i] {
                    a[i] = d[i];
                }
            }
            (d, a)
        })
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        prop_assert!(
            (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0),
            "{:?} vs {:?}",
            a,
            b
        );
    }
    Ok(())
}
