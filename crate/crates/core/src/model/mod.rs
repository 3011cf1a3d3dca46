//! Feature schema, model representation and scoring.
//!
//! A [`ModelSpec`] is a link function plus a sum of components. Scores are
//! produced in link space; [`ModelSpec::probability`] applies the inverse
//! link.

mod component;
mod link;
mod space;

use serde::{Deserialize, Serialize};

pub use component::{Component, EvalFlags, Interpolation, Polynomial, Tabulated, MAX_POWER};
pub use link::{to_link, to_probability, Decision, DecisionConfig, Link};
pub use space::{Direction, FeatureDef, FeaturePoint, FeatureSpace};

use crate::dsl;
use crate::error::{Error, Result};

/// Anything that maps a feature vector to a real score.
pub trait Scorer: Sync {
    fn dim(&self) -> usize;
    fn score(&self, x: &[f64]) -> f64;
}

/// Adapts a closure into a [`Scorer`].
pub struct FnScorer<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnScorer<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Scorer for FnScorer<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Result envelope of a checked evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub score: f64,
    pub flags: EvalFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    space: FeatureSpace,
    link: Link,
    components: Vec<Component>,
}

impl ModelSpec {
    pub fn new(space: FeatureSpace, link: Link, components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel(
                "a model needs at least one component".into(),
            ));
        }
        let k = space.len();
        for c in &components {
            if let Some(&i) = c.variables().iter().find(|&&i| i >= k) {
                return Err(Error::InvalidModel(format!(
                    "component references feature index {i} but the space has {k} features"
                )));
            }
        }
        Ok(Self {
            space,
            link,
            components,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Same model with extra components appended.
    pub fn with_components(&self, extra: impl IntoIterator<Item = Component>) -> Result<Self> {
        let mut components = self.components.clone();
        components.extend(extra);
        Self::new(self.space.clone(), self.link, components)
    }

    /// Link-space score without warning flags.
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut flags = EvalFlags::default();
        self.components.iter().map(|c| c.eval(x, &mut flags)).sum()
    }

    /// Link-space score with the extrapolation and guard flags.
    pub fn evaluate(&self, point: &FeaturePoint) -> Result<Evaluation> {
        self.check_point(point)?;
        let mut flags = EvalFlags::default();
        let score = self
            .components
            .iter()
            .map(|c| c.eval(point.values(), &mut flags))
            .sum();
        Ok(Evaluation { score, flags })
    }

    /// Probability of default: the inverse link of the score.
    pub fn probability(&self, x: &[f64]) -> f64 {
        self.link.inverse(self.score(x))
    }

    pub fn decide(&self, point: &FeaturePoint, cfg: &DecisionConfig) -> Result<Decision> {
        self.check_point(point)?;
        Ok(cfg.decide_probability(self.probability(point.values())))
    }

    pub fn check_point(&self, point: &FeaturePoint) -> Result<()> {
        if point.len() != self.space.len() {
            return Err(Error::DimensionMismatch {
                expected: self.space.len(),
                got: point.len(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            version: MODEL_SCHEMA_VERSION,
            link: self.link,
            components: self
                .components
                .iter()
                .map(|c| self.component_doc(c))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    pub fn from_json(text: &str, space: &FeatureSpace) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                doc.version
            )));
        }
        let components = doc
            .components
            .into_iter()
            .map(|c| c.into_component(space))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space.clone(), doc.link, components)
    }

    fn component_doc(&self, c: &Component) -> ComponentDoc {
        let names = |idx: &mut dyn Iterator<Item = usize>| {
            idx.map(|i| self.space.name(i).to_string()).collect()
        };
        match c {
            Component::Polynomial(p) => ComponentDoc::Polynomial {
                variables: names(&mut p.factors.iter().map(|f| f.0)),
                powers: p.factors.iter().map(|f| f.1).collect(),
                coefficients: vec![p.coefficient],
            },
            Component::Tabulated(t) => ComponentDoc::Tabulated {
                variables: names(&mut t.variables.iter().copied()),
                knots: t.knots.clone(),
                values: t.values.clone(),
                interpolation: t.interpolation,
            },
            Component::Expression(e) => ComponentDoc::Expression {
                variables: names(&mut e.features().into_iter()),
                expression: e.display(&self.space).to_string(),
            },
        }
    }
}

impl Scorer for ModelSpec {
    fn dim(&self) -> usize {
        self.space.len()
    }

    fn score(&self, x: &[f64]) -> f64 {
        ModelSpec::score(self, x)
    }
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    link: Link,
    components: Vec<ComponentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ComponentDoc {
    Polynomial {
        variables: Vec<String>,
        #[serde(default)]
        powers: Vec<u32>,
        coefficients: Vec<f64>,
    },
    Tabulated {
        variables: Vec<String>,
        knots: Vec<Vec<f64>>,
        values: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Expression {
        #[serde(default)]
        variables: Vec<String>,
        expression: String,
    },
}

fn resolve(space: &FeatureSpace, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            space
                .index_of(n)
                .ok_or_else(|| Error::InvalidModel(format!("unknown feature '{n}'")))
        })
        .collect()
}

impl ComponentDoc {
    fn into_component(self, space: &FeatureSpace) -> Result<Component> {
        match self {
            ComponentDoc::Polynomial {
                variables,
                powers,
                coefficients,
            } => {
                let idx = resolve(space, &variables)?;
                let powers = if powers.is_empty() {
                    vec![1; idx.len()]
                } else {
                    powers
                };
                if powers.len() != idx.len() {
                    return Err(Error::InvalidModel(format!(
                        "{} powers for {} variables",
                        powers.len(),
                        idx.len()
                    )));
                }
                let [coefficient] = coefficients[..] else {
                    return Err(Error::InvalidModel(
                        "a polynomial component takes exactly one coefficient".into(),
                    ));
                };
                Ok(Component::Polynomial(Polynomial::new(
                    coefficient,
                    idx.into_iter().zip(powers),
                )?))
            }
            ComponentDoc::Tabulated {
                variables,
                knots,
                values,
                interpolation,
            } => {
                let idx = resolve(space, &variables)?;
                Ok(Component::Tabulated(Tabulated::new(
                    idx,
                    knots,
                    values,
                    interpolation,
                )?))
            }
            ComponentDoc::Expression {
                variables,
                expression,
            } => {
                let expr = dsl::parse_expression(&expression, space)?;
                let declared: std::collections::BTreeSet<usize> =
                    resolve(space, &variables)?.into_iter().collect();
                if !variables.is_empty() && declared != expr.features() {
                    return Err(Error::InvalidModel(format!(
                        "declared variables {variables:?} do not match expression '{expression}'"
                    )));
                }
                Ok(Component::Expression(expr))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space2() -> FeatureSpace {
        FeatureSpace::numbered(2)
    }

    #[test]
    fn rejects_out_of_space_components() {
        let p = Polynomial::new(1.0, [(2, 1)]).unwrap();
        assert!(ModelSpec::new(space2(), Link::Identity, vec![Component::Polynomial(p)]).is_err());
        assert!(ModelSpec::new(space2(), Link::Identity, vec![]).is_err());
    }

    #[test]
    fn evaluation_flags_extrapolation() {
        let t = Tabulated::new(
            vec![0],
            vec![vec![0.0, 1.0]],
            vec![0.0, 1.0],
            Interpolation::Linear,
        )
        .unwrap();
        let m = ModelSpec::new(space2(), Link::Identity, vec![Component::Tabulated(t)]).unwrap();
        let inside = m
            .evaluate(&space2().point(vec![0.5, 9.0]).unwrap())
            .unwrap();
        assert_eq!(inside.score, 0.5);
        assert!(!inside.flags.extrapolated);
        let outside = m
            .evaluate(&space2().point(vec![2.0, 0.0]).unwrap())
            .unwrap();
        assert_eq!(outside.score, 1.0);
        assert!(outside.flags.extrapolated);
    }

    #[test]
    fn json_round_trip() {
        let t = Tabulated::new(
            vec![1, 0],
            vec![vec![0.0, 1.0], vec![-1.0, 0.0, 2.0]],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            Interpolation::Constant,
        )
        .unwrap();
        let p = Polynomial::new(-0.25, [(0, 2), (1, 1)]).unwrap();
        let e = dsl::parse_expression("exp(x1) / (1 + x2^2)", &space2()).unwrap();
        let m = ModelSpec::new(
            space2(),
            Link::Logit,
            vec![
                Component::Tabulated(t),
                Component::Polynomial(p),
                Component::Expression(e),
            ],
        )
        .unwrap();
        let json = m.to_json();
        assert!(json.contains("\"version\": 1"));
        let back = ModelSpec::from_json(&json, &space2()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_bad_documents() {
        let s = space2();
        assert!(
            ModelSpec::from_json(r#"{"version": 2, "link": "logit", "components": []}"#, &s)
                .is_err()
        );
        let bad_var = r#"{"version": 1, "link": "logit", "components": [
            {"kind": "polynomial", "variables": ["x9"], "coefficients": [1.0]}]}"#;
        assert!(ModelSpec::from_json(bad_var, &s).is_err());
        let two_coefs = r#"{"version": 1, "link": "identity", "components": [
            {"kind": "polynomial", "variables": ["x1"], "coefficients": [1.0, 2.0]}]}"#;
        assert!(ModelSpec::from_json(two_coefs, &s).is_err());
    }
}
