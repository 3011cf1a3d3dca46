use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared shape constraint of the probability of default in one predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    #[serde(default)]
    pub monotone: Direction,
    #[serde(default = "default_mutable")]
    pub mutable: bool,
}

fn default_mutable() -> bool {
    true
}

impl FeatureDef {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            monotone: Direction::None,
            mutable: true,
        }
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.monotone = direction;
        self
    }

    pub fn immutable(mut self) -> Self {
        self.mutable = false;
        self
    }
}

#[derive(Deserialize)]
struct FeatureSpaceDoc {
    features: Vec<FeatureDef>,
}

/// Ordered predictor schema. Names are unique and non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureSpaceDoc")]
pub struct FeatureSpace {
    features: Vec<FeatureDef>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<FeatureSpaceDoc> for FeatureSpace {
    type Error = Error;

    fn try_from(doc: FeatureSpaceDoc) -> Result<Self> {
        FeatureSpace::new(doc.features)
    }
}

impl FeatureSpace {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSpace(
                "at least one feature is required".into(),
            ));
        }
        let mut index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if f.name.is_empty() {
                return Err(Error::InvalidSpace(format!(
                    "feature {i} has an empty name"
                )));
            }
            if index.insert(f.name.clone(), i).is_some() {
                return Err(Error::InvalidSpace(format!(
                    "duplicate feature name '{}'",
                    f.name
                )));
            }
        }
        Ok(Self { features, index })
    }

    /// Unconstrained, mutable features with the given names.
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(names.into_iter().map(FeatureDef::new).collect())
    }

    /// `x1, ..., xk`.
    pub fn numbered(k: usize) -> Self {
        Self::from_names((1..=k).map(|i| format!("x{i}"))).expect("k >= 1")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn name(&self, i: usize) -> &str {
        &self.features[i].name
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn direction(&self, i: usize) -> Direction {
        self.features[i].monotone
    }

    pub fn is_mutable(&self, i: usize) -> bool {
        self.features[i].mutable
    }

    /// Builds a point after checking its length and finiteness.
    pub fn point(&self, values: Vec<f64>) -> Result<FeaturePoint> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                feature: self.name(i).to_string(),
                value: *v,
            });
        }
        Ok(FeaturePoint(values))
    }
}

/// A concrete value for every feature of a [`FeatureSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeaturePoint(Vec<f64>);

impl FeaturePoint {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for FeaturePoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_and_empty_names() {
        assert!(FeatureSpace::from_names(["a", "a"]).is_err());
        assert!(FeatureSpace::from_names([""]).is_err());
        assert!(FeatureSpace::from_names(Vec::<String>::new()).is_err());
    }

    #[test]
    fn point_validation() {
        let space = FeatureSpace::numbered(2);
        assert!(space.point(vec![1.0]).is_err());
        assert!(space.point(vec![1.0, f64::NAN]).is_err());
        assert_eq!(space.point(vec![1.0, 2.0]).unwrap()[1], 2.0);
    }

    #[test]
    fn json_document() {
        let space = FeatureSpace::from_json(
            r#"{"features": [
                {"name": "age", "monotone": "decreasing", "mutable": false},
                {"name": "inq"}
            ]}"#,
        )
        .unwrap();
        assert_eq!(space.direction(0), Direction::Decreasing);
        assert!(!space.is_mutable(0));
        assert!(space.is_mutable(1));
        assert_eq!(space.index_of("inq"), Some(1));
        assert!(
            FeatureSpace::from_json(r#"{"features": [{"name": "a"}, {"name": "a"}]}"#).is_err()
        );
    }
}
