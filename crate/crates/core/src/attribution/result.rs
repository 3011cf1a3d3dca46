use serde::{Deserialize, Serialize};

/// Below this absolute total, percentages are not reported.
pub const PERCENT_GUARD: f64 = 1e-8;

/// Scale in which the score difference is decomposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributionSpace {
    /// The model's link-space score `f(x)`.
    #[default]
    Link,
    /// The probability `p(x)` obtained through the inverse link.
    Probability,
}

impl std::str::FromStr for AttributionSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "link" => Ok(Self::Link),
            "probability" => Ok(Self::Probability),
            other => Err(format!(
                "unknown attribution space '{other}' (expected link or probability)"
            )),
        }
    }
}

/// Which algorithm produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributionPath {
    Additive,
    Pairwise,
    Triple,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub unit_names: Vec<String>,
    /// Feature indices of each unit.
    pub units: Vec<Vec<usize>>,
    pub contributions: Vec<f64>,
    /// `value_declined - value_reference`.
    pub total: f64,
    pub value_declined: f64,
    pub value_reference: f64,
    /// `contribution / total * 100`; absent when `|total| < PERCENT_GUARD`.
    pub percentages: Option<Vec<f64>>,
    pub space: AttributionSpace,
    pub eval_count: usize,
    pub path: AttributionPath,
}

impl AttributionResult {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        unit_names: Vec<String>,
        units: Vec<Vec<usize>>,
        contributions: Vec<f64>,
        value_declined: f64,
        value_reference: f64,
        space: AttributionSpace,
        eval_count: usize,
        path: AttributionPath,
    ) -> Self {
        let total = value_declined - value_reference;
        let percentages = (total.abs() >= PERCENT_GUARD)
            .then(|| contributions.iter().map(|c| c / total * 100.0).collect());
        Self {
            unit_names,
            units,
            contributions,
            total,
            value_declined,
            value_reference,
            percentages,
            space,
            eval_count,
            path,
        }
    }

    /// `|sum(E_k) - total|`, the efficiency residual.
    pub fn efficiency_gap(&self) -> f64 {
        (self.contributions.iter().sum::<f64>() - self.total).abs()
    }

    /// Unit indices ordered by descending signed contribution; ties keep
    /// unit order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.contributions.len()).collect();
        order.sort_by(|&a, &b| self.contributions[b].total_cmp(&self.contributions[a]));
        order
    }
}
