//! Run configuration: an optional TOML file whose values are overridden by
//! command-line flags. Relative paths in the file resolve against the
//! file's own directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use bshap_core::attribution::Grouping;
use bshap_core::FeatureSpace;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<PathBuf>,
    pub space: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub attribution_space: Option<String>,
    pub policy: Option<PolicyConfig>,
    pub groups: Option<Vec<GroupConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// percentile, nearest, nearest-mutable or fixed
    pub kind: String,
    pub q: Option<f64>,
    pub point: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub name: String,
    pub members: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut cfg.model);
        fix(&mut cfg.space);
        fix(&mut cfg.data);
        if let Some(policy) = &mut cfg.policy {
            fix(&mut policy.point);
        }
        Ok(cfg)
    }

    /// The policy block in the same syntax as `--policy`.
    pub fn policy_string(&self) -> Result<Option<String>> {
        let Some(p) = &self.policy else {
            return Ok(None);
        };
        Ok(Some(match p.kind.as_str() {
            "percentile" => format!("percentile:{}", p.q.unwrap_or(DEFAULT_QUANTILE)),
            "nearest" | "nearest-mutable" => p.kind.clone(),
            "fixed" => match &p.point {
                Some(path) => format!("fixed:{}", path.display()),
                None => bail!("policy kind 'fixed' needs a 'point' file"),
            },
            other => bail!("unknown policy kind '{other}'"),
        }))
    }

    pub fn grouping(&self, space: &FeatureSpace) -> Result<Option<Grouping>> {
        let Some(groups) = &self.groups else {
            return Ok(None);
        };
        let pairs = groups.iter().map(|g| (g.name.clone(), g.members.clone()));
        Ok(Some(Grouping::from_names(space, pairs)?))
    }
}

/// Default reference: the 75th percentile of each predictor.
pub const DEFAULT_QUANTILE: f64 = 0.75;

/// Parses `name=a,b;other=c` into a grouping of `space`.
pub fn parse_groups(spec: &str, space: &FeatureSpace) -> Result<Grouping> {
    let mut pairs = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((name, members)) = part.split_once('=') else {
            bail!("group '{part}' is not of the form name=feature,feature");
        };
        let members: Vec<String> = members
            .split(',')
            .map(|m| m.trim().to_string())
            .filter(|m| !m.is_empty())
            .collect();
        pairs.push((name.trim().to_string(), members));
    }
    Ok(Grouping::from_names(space, pairs)?)
}
