use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    check_bounds, CheckKind, DiagnosticsReport, FeatureCheck, ProbeSpec, Verdict, Witness,
};
use crate::error::Result;
use crate::model::{Direction, ModelSpec};

/// Score decreases smaller than this are treated as rounding noise.
pub const MONOTONE_TOLERANCE: f64 = 1e-9;

/// One generator per feature so results do not depend on scheduling.
fn feature_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

fn random_base(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds
        .iter()
        .map(|&(lo, hi)| rng.random_range(lo..=hi))
        .collect()
}

fn axis_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn with_value(base: &[f64], k: usize, v: f64) -> Vec<f64> {
    let mut x = base.to_vec();
    x[k] = v;
    x
}

fn witness(model: &ModelSpec, base: &[f64], k: usize, a: f64, b: f64) -> Witness {
    let lower = with_value(base, k, a);
    let upper = with_value(base, k, b);
    Witness {
        score_lower: model.score(&lower),
        score_upper: model.score(&upper),
        lower,
        upper,
    }
}

/// Probes every feature with a declared direction along axis-aligned grids
/// through random base points drawn uniformly from `bounds`.
///
/// A feature is flagged when some adjacent pair of grid points moves the
/// score against the declared direction by more than
/// [`MONOTONE_TOLERANCE`]; the worst such pair is the witness.
pub fn check_monotonicity(
    model: &ModelSpec,
    bounds: &[(f64, f64)],
    probe: &ProbeSpec,
) -> Result<DiagnosticsReport> {
    probe.validate()?;
    let space = model.space();
    check_bounds(bounds, space.len())?;
    let declared: Vec<(usize, f64)> = (0..space.len())
        .filter_map(|k| match space.direction(k) {
            Direction::Increasing => Some((k, 1.0)),
            Direction::Decreasing => Some((k, -1.0)),
            Direction::None => None,
        })
        .collect();
    let mut notes = Vec::new();
    if declared.is_empty() {
        notes.push("no feature declares a monotone direction; nothing to check".into());
    }
    let features = declared
        .par_iter()
        .map(|&(k, sign)| {
            let mut rng = feature_rng(probe.seed, k);
            let (lo, hi) = bounds[k];
            let grid = axis_grid(lo, hi, probe.grid_points);
            let mut worst: Option<(f64, Vec<f64>, usize)> = None;
            let mut x = vec![0.0; bounds.len()];
            for _ in 0..probe.random_line_probes {
                let base = random_base(&mut rng, bounds);
                x.copy_from_slice(&base);
                let mut prev = f64::NAN;
                for (i, &v) in grid.iter().enumerate() {
                    x[k] = v;
                    let s = model.score(&x);
                    if i > 0 {
                        let drop = sign * (prev - s);
                        if drop > MONOTONE_TOLERANCE
                            && worst.as_ref().is_none_or(|(w, _, _)| drop > *w)
                        {
                            worst = Some((drop, base.clone(), i));
                        }
                    }
                    prev = s;
                }
            }
            match worst {
                Some((magnitude, base, i)) => FeatureCheck {
                    feature: space.name(k).to_string(),
                    verdict: Verdict::Violation,
                    magnitude,
                    witness: Some(witness(model, &base, k, grid[i - 1], grid[i])),
                },
                None => FeatureCheck {
                    feature: space.name(k).to_string(),
                    verdict: Verdict::Pass,
                    magnitude: 0.0,
                    witness: None,
                },
            }
        })
        .collect();
    Ok(DiagnosticsReport {
        check: CheckKind::Monotonicity,
        features,
        probe: probe.clone(),
        notes,
    })
}

/// Largest link-space change across a step of size `h` along feature `k`.
///
/// Each probe line is scanned on the grid; the cell with the largest change
/// is then bisected, keeping the half with the larger change, until it is
/// no wider than `h`. A jump discontinuity survives the bisection at full
/// size while a continuous slope shrinks to about `|slope| * h`.
pub fn check_continuity(
    model: &ModelSpec,
    bounds: &[(f64, f64)],
    probe: &ProbeSpec,
) -> Result<DiagnosticsReport> {
    probe.validate()?;
    let space = model.space();
    check_bounds(bounds, space.len())?;
    let features = (0..space.len())
        .into_par_iter()
        .map(|k| {
            let mut rng = feature_rng(probe.seed, k);
            let (lo, hi) = bounds[k];
            let range = hi - lo;
            let h = probe.relative_step * if range > 0.0 { range } else { 1.0 };
            let grid = axis_grid(lo, hi, probe.grid_points);
            let mut best = (0.0, vec![lo; 0], lo, lo + h);
            let mut x = vec![0.0; bounds.len()];
            for _ in 0..probe.random_line_probes {
                let base = random_base(&mut rng, bounds);
                x.copy_from_slice(&base);
                let f = |x: &mut Vec<f64>, v: f64| {
                    x[k] = v;
                    model.score(x)
                };
                // forward step at the base point itself
                let (mut a, mut b) = (base[k], base[k] + h);
                let mut fa = f(&mut x, a);
                let mut fb = f(&mut x, b);
                if range > 0.0 {
                    let scores: Vec<f64> = grid.iter().map(|&v| f(&mut x, v)).collect();
                    let cell = (1..grid.len())
                        .max_by(|&i, &j| {
                            (scores[i] - scores[i - 1])
                                .abs()
                                .total_cmp(&(scores[j] - scores[j - 1]).abs())
                        })
                        .expect("grid has at least two points");
                    let (mut ca, mut cb) = (grid[cell - 1], grid[cell]);
                    let (mut ga, mut gb) = (scores[cell - 1], scores[cell]);
                    while cb - ca > h {
                        let m = 0.5 * (ca + cb);
                        let gm = f(&mut x, m);
                        if (gm - ga).abs() >= (gb - gm).abs() {
                            cb = m;
                            gb = gm;
                        } else {
                            ca = m;
                            ga = gm;
                        }
                    }
                    if (gb - ga).abs() > (fb - fa).abs() {
                        (a, b, fa, fb) = (ca, cb, ga, gb);
                    }
                }
                let jump = (fb - fa).abs();
                if jump > best.0 || best.1.is_empty() {
                    best = (jump, base, a, b);
                }
            }
            let (magnitude, base, a, b) = best;
            let flagged = magnitude > probe.jump_threshold;
            FeatureCheck {
                feature: space.name(k).to_string(),
                verdict: if flagged {
                    Verdict::Violation
                } else {
                    Verdict::Pass
                },
                magnitude,
                witness: flagged.then(|| witness(model, &base, k, a, b)),
            }
        })
        .collect();
    Ok(DiagnosticsReport {
        check: CheckKind::Continuity,
        features,
        probe: probe.clone(),
        notes: vec![format!(
            "jump step h = {:e} x feature range; threshold {} in link space",
            probe.relative_step, probe.jump_threshold
        )],
    })
}
