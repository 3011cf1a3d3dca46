//! Labeled datasets: CSV ingestion and a seeded synthetic generator.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{FeaturePoint, FeatureSpace, ModelSpec};

/// Name of the optional default-indicator column.
pub const LABEL_COLUMN: &str = "y";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    space: FeatureSpace,
    rows: Vec<FeaturePoint>,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    pub fn new(
        space: FeatureSpace,
        rows: Vec<FeaturePoint>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.len() != space.len()) {
            return Err(Error::Data(format!(
                "row {} has {} values, expected {}",
                bad + 1,
                rows[bad].len(),
                space.len()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(Error::Data(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    rows.len()
                )));
            }
            if labels.iter().any(|&y| y > 1) {
                return Err(Error::Data("labels must be 0 or 1".into()));
            }
        }
        Ok(Self {
            space,
            rows,
            labels,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn rows(&self) -> &[FeaturePoint] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    /// Observed `(min, max)` of every feature.
    pub fn ranges(&self) -> Vec<(f64, f64)> {
        (0..self.space.len())
            .map(|k| {
                self.rows
                    .iter()
                    .map(|r| r[k])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            })
            .collect()
    }

    /// Writes a header row of feature names (plus `y` when labeled) and one
    /// line per row. Values use the shortest representation that reads back
    /// to the same `f64`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.space.names().collect();
        if self.labels.is_some() {
            header.push(LABEL_COLUMN);
        }
        w.write_record(&header).map_err(csv_error)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = row.values().iter().map(|v| v.to_string()).collect();
            if let Some(labels) = &self.labels {
                rec.push(labels[i].to_string());
            }
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

pub fn load_dataset(path: impl AsRef<Path>, space: &FeatureSpace) -> Result<Dataset> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    read_dataset(file, space).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Reads CSV with a header row. Feature columns are matched by exact name in
/// any order; a `y` column, when present, supplies 0/1 labels. Other columns
/// are ignored.
pub fn read_dataset<R: Read>(input: R, space: &FeatureSpace) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::Data("empty file".into()));
    }
    let position = |name: &str| headers.iter().position(|h| h == name);
    let columns = space
        .names()
        .map(|name| {
            position(name).ok_or_else(|| Error::Data(format!("missing feature column '{name}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let label_col = position(LABEL_COLUMN).filter(|_| space.index_of(LABEL_COLUMN).is_none());

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row_no = r + 1;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Data(format!(
                    "row {row_no}, column '{name}': cannot parse '{raw}' as a finite number"
                ))),
            }
        };
        let values = columns
            .iter()
            .zip(space.names())
            .map(|(&c, name)| cell(c, name))
            .collect::<Result<Vec<_>>>()?;
        rows.push(space.point(values)?);
        if let Some(c) = label_col {
            let y = cell(c, LABEL_COLUMN)?;
            if y != 0.0 && y != 1.0 {
                return Err(Error::Data(format!(
                    "row {row_no}, column 'y': label {y} is not 0 or 1"
                )));
            }
            labels.push(y as u8);
        }
    }
    if rows.is_empty() {
        return Err(Error::Data("no data rows".into()));
    }
    Dataset::new(space.clone(), rows, label_col.map(|_| labels))
}

/// Marginal of one synthetic feature: `mean + sd * z` with `z` drawn from
/// the (optionally correlated) standard normal vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalMarginal {
    pub mean: f64,
    pub sd: f64,
}

impl Default for NormalMarginal {
    fn default() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    /// One per feature; standard normal when empty.
    pub marginals: Vec<NormalMarginal>,
    /// Lower-triangular `K x K` matrix `L`; the latent vector is `L e` for
    /// independent standard normal `e`.
    pub mixing: Option<Vec<Vec<f64>>>,
}

impl SynthConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            marginals: Vec::new(),
            mixing: None,
        }
    }
}

/// Draws `n` applicants and labels each as a default with probability
/// `p(x)` under `true_model`. Identical configs yield identical datasets.
pub fn generate_synthetic(
    space: &FeatureSpace,
    true_model: &ModelSpec,
    cfg: &SynthConfig,
) -> Result<Dataset> {
    let k = space.len();
    if cfg.n == 0 {
        return Err(Error::Data("synthetic dataset needs n >= 1".into()));
    }
    if true_model.space().len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: true_model.space().len(),
        });
    }
    let marginals = if cfg.marginals.is_empty() {
        vec![NormalMarginal::default(); k]
    } else if cfg.marginals.len() == k {
        cfg.marginals.clone()
    } else {
        return Err(Error::Data(format!(
            "{} marginals for {k} features",
            cfg.marginals.len()
        )));
    };
    if let Some(m) = &cfg.mixing {
        if m.len() != k || m.iter().any(|r| r.len() != k) {
            return Err(Error::Data(format!("mixing matrix must be {k} x {k}")));
        }
        if m.iter()
            .enumerate()
            .any(|(i, r)| r[i + 1..].iter().any(|&v| v != 0.0))
        {
            return Err(Error::Data("mixing matrix must be lower-triangular".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    let mut e = vec![0.0; k];
    for _ in 0..cfg.n {
        for v in e.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let z: Vec<f64> = match &cfg.mixing {
            Some(m) => m
                .iter()
                .map(|r| r.iter().zip(&e).map(|(a, b)| a * b).sum())
                .collect(),
            None => e.clone(),
        };
        let x: Vec<f64> = z
            .iter()
            .zip(&marginals)
            .map(|(z, m)| m.mean + m.sd * z)
            .collect();
        let p = true_model.probability(&x).clamp(0.0, 1.0);
        labels.push(u8::from(rng.random::<f64>() < p));
        rows.push(space.point(x)?);
    }
    Dataset::new(space.clone(), rows, Some(labels))
}
