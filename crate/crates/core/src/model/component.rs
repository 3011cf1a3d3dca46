use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dsl::Expr;
use crate::error::{Error, Result};

/// Largest integer power a polynomial factor may carry.
pub const MAX_POWER: u32 = 8;

/// `coefficient * prod(x_i ^ p_i)`. An empty factor list is a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coefficient: f64,
    /// `(feature, power)` pairs with distinct features sorted by index.
    pub factors: Vec<(usize, u32)>,
}

impl Polynomial {
    pub fn new(coefficient: f64, factors: impl IntoIterator<Item = (usize, u32)>) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidModel(format!(
                "non-finite coefficient {coefficient}"
            )));
        }
        let mut merged: Vec<(usize, u32)> = Vec::new();
        let mut sorted: Vec<(usize, u32)> = factors.into_iter().collect();
        sorted.sort_by_key(|(i, _)| *i);
        for (i, p) in sorted {
            match merged.last_mut() {
                Some((j, q)) if *j == i => *q += p,
                _ => merged.push((i, p)),
            }
        }
        for &(i, p) in &merged {
            if p == 0 || p > MAX_POWER {
                return Err(Error::InvalidModel(format!(
                    "power {p} of feature {i} outside 1..={MAX_POWER}"
                )));
            }
        }
        Ok(Self {
            coefficient,
            factors: merged,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            coefficient: c,
            factors: Vec::new(),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.coefficient;
        for &(i, p) in &self.factors {
            v *= x[i].powi(p as i32);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Multilinear between knots.
    #[default]
    Linear,
    /// Value of the greatest knot not exceeding the coordinate.
    Constant,
}

/// A function of one to three features given on a rectilinear grid.
/// Values are stored row-major with the last variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    pub variables: Vec<usize>,
    pub knots: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub interpolation: Interpolation,
}

impl Tabulated {
    pub fn new(
        variables: Vec<usize>,
        knots: Vec<Vec<f64>>,
        values: Vec<f64>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if variables.is_empty() || variables.len() > 3 {
            return Err(Error::InvalidModel(format!(
                "tabulated component over {} variables; expected 1 to 3",
                variables.len()
            )));
        }
        let distinct: BTreeSet<_> = variables.iter().collect();
        if distinct.len() != variables.len() {
            return Err(Error::InvalidModel(
                "tabulated component repeats a variable".into(),
            ));
        }
        if knots.len() != variables.len() {
            return Err(Error::InvalidModel(format!(
                "{} knot axes for {} variables",
                knots.len(),
                variables.len()
            )));
        }
        for axis in &knots {
            if axis.is_empty() {
                return Err(Error::InvalidModel("empty knot axis".into()));
            }
            if axis.iter().any(|k| !k.is_finite()) || axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidModel(
                    "knots must be finite and strictly increasing".into(),
                ));
            }
        }
        let cells: usize = knots.iter().map(Vec::len).product();
        if values.len() != cells {
            return Err(Error::InvalidModel(format!(
                "tabulated grid has {cells} cells but {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite tabulated value".into()));
        }
        Ok(Self {
            variables,
            knots,
            values,
            interpolation,
        })
    }

    /// Evaluates with boundary clamping; `extrapolated` is set when any
    /// coordinate falls outside its knot range.
    pub fn eval(&self, x: &[f64], extrapolated: &mut bool) -> f64 {
        let d = self.variables.len();
        // per axis: lower knot index and the weight of the upper neighbour
        let mut cell = [(0usize, 0.0f64); 3];
        for (a, (&var, axis)) in self.variables.iter().zip(&self.knots).enumerate() {
            let v = x[var];
            let last = axis.len() - 1;
            cell[a] = if v < axis[0] {
                *extrapolated = true;
                (0, 0.0)
            } else if v >= axis[last] {
                if v > axis[last] {
                    *extrapolated = true;
                }
                (last, 0.0)
            } else {
                // axis[lo] <= v < axis[lo + 1]
                let lo = axis.partition_point(|k| *k <= v) - 1;
                let t = match self.interpolation {
                    Interpolation::Linear => (v - axis[lo]) / (axis[lo + 1] - axis[lo]),
                    Interpolation::Constant => 0.0,
                };
                (lo, t)
            };
        }
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = 0;
            for (a, axis) in self.knots.iter().enumerate() {
                let (lo, t) = cell[a];
                let upper = corner >> a & 1 == 1;
                if upper && t == 0.0 {
                    weight = 0.0;
                    break;
                }
                weight *= if upper { t } else { 1.0 - t };
                flat = flat * axis.len() + lo + usize::from(upper);
            }
            if weight != 0.0 {
                total += weight * self.values[flat];
            }
        }
        total
    }
}

/// One additive piece of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Polynomial(Polynomial),
    Tabulated(Tabulated),
    Expression(Expr),
}

impl Component {
    /// Features this component reads.
    pub fn variables(&self) -> BTreeSet<usize> {
        match self {
            Component::Polynomial(p) => p.factors.iter().map(|(i, _)| *i).collect(),
            Component::Tabulated(t) => t.variables.iter().copied().collect(),
            Component::Expression(e) => e.features(),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], flags: &mut EvalFlags) -> f64 {
        match self {
            Component::Polynomial(p) => p.eval(x),
            Component::Tabulated(t) => t.eval(x, &mut flags.extrapolated),
            Component::Expression(e) => e.eval(x, &mut flags.guarded),
        }
    }
}

/// Warnings raised while evaluating a model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalFlags {
    /// A tabulated component was evaluated outside its knot range.
    pub extrapolated: bool,
    /// An expression hit a guarded operation (division by zero, log of a
    /// non-positive value, overflow).
    pub guarded: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_merges_repeated_factors() {
        let p = Polynomial::new(2.0, [(1, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(p.factors, vec![(0, 2), (1, 3)]);
        assert_eq!(p.eval(&[3.0, 2.0]), 2.0 * 9.0 * 8.0);
        assert!(Polynomial::new(1.0, [(0, 9)]).is_err());
        assert!(Polynomial::new(1.0, [(0, 0)]).is_err());
    }

    #[test]
    fn linear_table_interpolates_and_clamps() {
        let t = Tabulated::new(
            vec![0],
            vec![vec![0.0, 1.0, 3.0]],
            vec![0.0, 2.0, 6.0],
            Interpolation::Linear,
        )
        .unwrap();
        let mut ext = false;
        assert_eq!(t.eval(&[0.5], &mut ext), 1.0);
        assert_eq!(t.eval(&[2.0], &mut ext), 4.0);
        assert_eq!(t.eval(&[3.0], &mut ext), 6.0);
        assert!(!ext);
        assert_eq!(t.eval(&[10.0], &mut ext), 6.0);
        assert!(ext);
        let mut ext = false;
        assert_eq!(t.eval(&[-1.0], &mut ext), 0.0);
        assert!(ext);
    }

    #[test]
    fn constant_table_steps_at_knots() {
        let t = Tabulated::new(
            vec![0],
            vec![vec![0.0, 1.0]],
            vec![0.0, 5.0],
            Interpolation::Constant,
        )
        .unwrap();
        let mut ext = false;
        assert_eq!(t.eval(&[0.999_999], &mut ext), 0.0);
        assert_eq!(t.eval(&[1.0], &mut ext), 5.0);
    }

    #[test]
    fn bilinear_table_reproduces_product() {
        // x*y is bilinear, so it is reproduced exactly between knots
        let knots = vec![vec![0.0, 1.0, 2.0], vec![0.0, 2.0]];
        let values = vec![0.0, 0.0, 0.0, 2.0, 0.0, 4.0];
        let t = Tabulated::new(vec![0, 1], knots, values, Interpolation::Linear).unwrap();
        let mut ext = false;
        for &(a, b) in &[(0.5, 1.0), (1.5, 0.25), (2.0, 2.0), (1.0, 1.0)] {
            assert!((t.eval(&[a, b], &mut ext) - a * b).abs() < 1e-12);
        }
        assert!(!ext);
    }

    #[test]
    fn table_validation() {
        assert!(Tabulated::new(
            vec![0],
            vec![vec![1.0, 1.0]],
            vec![0.0, 0.0],
            Interpolation::Linear
        )
        .is_err());
        assert!(Tabulated::new(
            vec![0],
            vec![vec![1.0, 2.0]],
            vec![0.0],
            Interpolation::Linear
        )
        .is_err());
        assert!(Tabulated::new(
            vec![0, 0],
            vec![vec![1.0], vec![1.0]],
            vec![0.0],
            Interpolation::Linear
        )
        .is_err());
        assert!(Tabulated::new(
            vec![0, 1, 2, 3],
            vec![vec![1.0]; 4],
            vec![0.0],
            Interpolation::Linear
        )
        .is_err());
    }
}
