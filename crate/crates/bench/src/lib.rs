//! Fixtures shared by the criterion benchmarks.

use bshap_core::dsl::parse_model_spec;
use bshap_core::{FeaturePoint, FeatureSpace, ModelSpec};

/// Polynomial with three-way interactions over `k` features, so only the
/// exact path applies once one term reads four features.
pub fn dense_model(k: usize) -> ModelSpec {
    let mut text = String::from("logit: 0.2");
    for i in 0..k {
        text.push_str(&format!(
            " + 0.1*x{} - 0.05*x{}^2*x{}",
            i + 1,
            i + 1,
            (i + 3) % k + 1
        ));
    }
    text.push_str(" + 0.01*x1*x2*x3*x4");
    parse_model_spec(&text, &FeatureSpace::numbered(k)).expect("bench model parses")
}

/// Every main effect and every pair over `k` features.
pub fn pairwise_model(k: usize) -> ModelSpec {
    let mut text = String::from("logit: 0.1");
    for i in 0..k {
        text.push_str(&format!(" + 0.3*x{}", i + 1));
        for j in i + 1..k {
            text.push_str(&format!(" + 0.01*x{}*x{}", i + 1, j + 1));
        }
    }
    parse_model_spec(&text, &FeatureSpace::numbered(k)).expect("bench model parses")
}

pub fn points(model: &ModelSpec) -> (FeaturePoint, FeaturePoint) {
    let k = model.space().len();
    let xd = (0..k).map(|i| 1.0 + 0.1 * i as f64).collect();
    let xa = (0..k).map(|i| -0.5 + 0.05 * i as f64).collect();
    (
        model.space().point(xd).unwrap(),
        model.space().point(xa).unwrap(),
    )
}
