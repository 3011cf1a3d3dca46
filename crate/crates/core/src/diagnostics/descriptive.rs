use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::Grouping;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDependence {
    pub feature: String,
    pub grid: Vec<f64>,
    /// Mean link-space score with the feature pinned at each grid value.
    pub values: Vec<f64>,
}

impl PartialDependence {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},pd\n", self.feature);
        for (g, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{g},{v}\n"));
        }
        out
    }
}

/// One-dimensional partial dependence over the observed range of `feature`.
pub fn pdp_1d(
    model: &ModelSpec,
    dataset: &Dataset,
    feature: usize,
    grid_size: usize,
) -> Result<PartialDependence> {
    if dataset.is_empty() {
        return Err(Error::Diagnostics(
            "partial dependence needs a non-empty dataset".into(),
        ));
    }
    if feature >= model.space().len() {
        return Err(Error::Diagnostics(format!(
            "feature index {feature} is out of range"
        )));
    }
    if grid_size < 2 {
        return Err(Error::Diagnostics(
            "partial dependence grid needs at least 2 points".into(),
        ));
    }
    let (lo, hi) = dataset.ranges()[feature];
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| {
            if i + 1 == grid_size {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (grid_size - 1) as f64
            }
        })
        .collect();
    let n = dataset.len() as f64;
    let values = grid
        .par_iter()
        .map(|&v| {
            let mut x = vec![0.0; model.space().len()];
            dataset
                .rows()
                .iter()
                .map(|row| {
                    x.copy_from_slice(row.values());
                    x[feature] = v;
                    model.score(&x)
                })
                .sum::<f64>()
                / n
        })
        .collect();
    Ok(PartialDependence {
        feature: model.space().name(feature).to_string(),
        grid,
        values,
    })
}

/// Area under the ROC curve in its Mann-Whitney form, with tied scores
/// counting one half. Label 1 is the positive (default) class.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Diagnostics(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Diagnostics(format!("label {bad} is not 0 or 1")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Diagnostics("scores contain NaN".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Diagnostics(
            "AUC needs both classes among the labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += midrank * order[i..=j].iter().filter(|&&r| labels[r] == 1).count() as f64;
        i = j + 1;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub units: Vec<String>,
    pub baseline_auc: f64,
    pub importance: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
}

impl Importance {
    pub fn to_text(&self) -> String {
        let width = self.units.iter().map(|u| u.len()).max().unwrap_or(0).max(4);
        let mut out = format!(
            "baseline AUC {:.4}\n{:<width$}  importance\n",
            self.baseline_auc, "unit"
        );
        for (u, v) in self.units.iter().zip(&self.importance) {
            out.push_str(&format!("{u:<width$}  {v:.4}\n"));
        }
        out
    }
}

/// Drop in AUC when the columns of each unit are permuted across rows.
///
/// All columns of a group share one permutation, so dependence inside the
/// group is kept while its link to the rest of the row is broken.
pub fn permutation_importance(
    model: &ModelSpec,
    dataset: &Dataset,
    grouping: &Grouping,
    seed: u64,
    repeats: usize,
) -> Result<Importance> {
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::Diagnostics("permutation importance needs a label column".into()))?;
    if repeats == 0 {
        return Err(Error::Diagnostics("repeats must be positive".into()));
    }
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
    let rows = dataset.rows();
    let base_scores: Vec<f64> = rows.iter().map(|r| model.score(r.values())).collect();
    let baseline_auc = auc(&base_scores, labels)?;
    let importance = grouping
        .groups()
        .par_iter()
        .enumerate()
        .map(|(u, group)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u as u64);
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            let mut x = vec![0.0; model.space().len()];
            let mut total = 0.0;
            for _ in 0..repeats {
                perm.shuffle(&mut rng);
                let scores: Vec<f64> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, row)| {
                        x.copy_from_slice(row.values());
                        for &k in &group.members {
                            x[k] = rows[perm[i]][k];
                        }
                        model.score(&x)
                    })
                    .collect();
                total += auc(&scores, labels)?;
            }
            Ok(baseline_auc - total / repeats as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Importance {
        units: grouping.names(),
        baseline_auc,
        importance,
        repeats,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::dsl::parse_model_spec;
    use crate::model::FeatureSpace;

    #[test]
    fn auc_fixtures() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auc(&[0.1, 0.2, 0.7, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 5], &[0, 1, 0, 1, 1]).unwrap(), 0.5);
        assert!(auc(&[0.1, 0.2], &[1, 1]).is_err());
        // brute force over pairs
        let s = [0.3, 0.1, 0.3, 0.9, 0.5, 0.1, 0.5];
        let l = [1, 0, 0, 1, 0, 1, 1];
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if l[i] == 1 && l[j] == 0 {
                    den += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((auc(&s, &l).unwrap() - num / den).abs() < 1e-15);
    }

    fn synth(text: &str, k: usize, n: usize) -> (ModelSpec, Dataset) {
        let space = FeatureSpace::numbered(k);
        let m = parse_model_spec(text, &space).unwrap();
        let ds = generate_synthetic(&space, &m, &SynthConfig::new(n, 11)).unwrap();
        (m, ds)
    }

    #[test]
    fn pdp_shapes() {
        let (m, ds) = synth("logit: x1^2 - 0.5*x2 + x3", 3, 200);
        let pd = pdp_1d(&m, &ds, 0, 16).unwrap();
        for w in 1..16 {
            let expected = pd.grid[w].powi(2) - pd.grid[0].powi(2);
            assert!((pd.values[w] - pd.values[0] - expected).abs() < 1e-10);
        }
        let (m, ds) = synth("logit: 0.25", 2, 50);
        let pd = pdp_1d(&m, &ds, 1, 8).unwrap();
        assert!(pd.values.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn pdp_of_product_is_flat_when_partner_is_centred() {
        let space = FeatureSpace::numbered(2);
        let m = parse_model_spec("identity: x1*x2", &space).unwrap();
        let rows = [[-1.0, -2.0], [0.5, 2.0], [2.0, -1.0], [1.0, 1.0]];
        let ds = Dataset::new(
            space.clone(),
            rows.iter()
                .map(|r| space.point(r.to_vec()).unwrap())
                .collect(),
            None,
        )
        .unwrap();
        let pd = pdp_1d(&m, &ds, 0, 5).unwrap();
        assert!(pd.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn importance_of_inert_and_sole_features() {
        let (m, ds) = synth("logit: 2.5*x1", 3, 2000);
        let g = Grouping::singletons(m.space());
        let imp = permutation_importance(&m, &ds, &g, 5, 10).unwrap();
        assert!(imp.importance[1].abs() <= 0.01 && imp.importance[2].abs() <= 0.01);
        assert!((imp.importance[0] - (imp.baseline_auc - 0.5)).abs() < 0.03);
        assert_eq!(imp, permutation_importance(&m, &ds, &g, 5, 10).unwrap());

        let grouped = Grouping::from_names(
            m.space(),
            [("signal", vec!["x1"]), ("noise", vec!["x2", "x3"])],
        )
        .unwrap();
        let imp = permutation_importance(&m, &ds, &grouped, 5, 10).unwrap();
        assert!(imp.importance[1].abs() <= 0.01);
    }
}
