use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FeatureSpace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub members: Vec<usize>,
}

/// Partition of the features into attribution units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grouping {
    groups: Vec<Group>,
    singletons: bool,
}

impl Grouping {
    /// One unit per feature, named after it.
    pub fn singletons(space: &FeatureSpace) -> Self {
        Self {
            groups: (0..space.len())
                .map(|i| Group {
                    name: space.name(i).to_string(),
                    members: vec![i],
                })
                .collect(),
            singletons: true,
        }
    }

    /// Groups given by feature names. Must partition the space.
    pub fn from_names<N, M, S>(
        space: &FeatureSpace,
        groups: impl IntoIterator<Item = (N, M)>,
    ) -> Result<Self>
    where
        N: Into<String>,
        M: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut resolved = Vec::new();
        for (name, members) in groups {
            let name = name.into();
            let idx = members
                .into_iter()
                .map(|m| {
                    space.index_of(m.as_ref()).ok_or_else(|| {
                        Error::InvalidGrouping(format!(
                            "group '{name}' names unknown feature '{}'",
                            m.as_ref()
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            resolved.push(Group { name, members: idx });
        }
        Self::new(space.len(), resolved)
    }

    pub fn new(k: usize, groups: Vec<Group>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidGrouping("no groups".into()));
        }
        let mut owner: Vec<Option<usize>> = vec![None; k];
        let mut names = std::collections::HashSet::new();
        for (g, group) in groups.iter().enumerate() {
            if group.name.is_empty() || !names.insert(group.name.as_str()) {
                return Err(Error::InvalidGrouping(format!(
                    "group name '{}' is empty or repeated",
                    group.name
                )));
            }
            if group.members.is_empty() {
                return Err(Error::InvalidGrouping(format!(
                    "group '{}' is empty",
                    group.name
                )));
            }
            for &m in &group.members {
                if m >= k {
                    return Err(Error::InvalidGrouping(format!(
                        "feature index {m} out of range"
                    )));
                }
                if let Some(prev) = owner[m] {
                    return Err(Error::InvalidGrouping(format!(
                        "feature {m} is in both '{}' and '{}'",
                        groups[prev].name, group.name
                    )));
                }
                owner[m] = Some(g);
            }
        }
        if let Some(missing) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidGrouping(format!(
                "feature {missing} is not in any group"
            )));
        }
        let singletons =
            groups.len() == k && groups.iter().enumerate().all(|(i, g)| g.members == [i]);
        Ok(Self { groups, singletons })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// One unit per feature, in feature order.
    pub fn is_singletons(&self) -> bool {
        self.singletons
    }

    pub fn names(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.name.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_rules() {
        let s = FeatureSpace::numbered(3);
        let g = Grouping::from_names(&s, [("z1", vec!["x1", "x2"]), ("x3", vec!["x3"])]).unwrap();
        assert_eq!(g.len(), 2);
        assert!(!g.is_singletons());
        assert!(Grouping::singletons(&s).is_singletons());

        assert!(
            Grouping::from_names(&s, [("a", vec!["x1", "x2"]), ("b", vec!["x2", "x3"])]).is_err()
        );
        assert!(Grouping::from_names(&s, [("a", vec!["x1", "x2"])]).is_err());
        assert!(Grouping::from_names(&s, [("a", vec!["x1", "x2"]), ("a", vec!["x3"])]).is_err());
        assert!(Grouping::from_names(&s, [("a", vec!["x1", "x2", "x3"]), ("b", vec![])]).is_err());
        assert!(Grouping::from_names(&s, [("a", vec!["x1", "x2", "x9"])]).is_err());
    }
}
