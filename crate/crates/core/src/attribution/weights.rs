use crate::error::{Error, Result};

/// Shapley weight `s! (g - s - 1)! / g!` of a coalition of size `s` that
/// excludes the player being credited, among `g` players.
///
/// Computed as `1 / (g * C(g-1, s))` with the binomial built by a
/// multiplicative recurrence, so no factorial is ever formed.
pub fn shapley_weight(s: usize, g: usize) -> Result<f64> {
    if s >= g {
        return Err(Error::WeightDomain {
            size: s,
            players: g,
        });
    }
    let n = g - 1;
    let k = s.min(n - s);
    let mut binom = 1.0f64;
    for i in 1..=k {
        binom = binom * (n - k + i) as f64 / i as f64;
    }
    Ok(1.0 / (g as f64 * binom))
}

/// Weights for every coalition size `0..g`.
pub(crate) fn weight_table(g: usize) -> Vec<f64> {
    (0..g)
        .map(|s| shapley_weight(s, g).expect("s < g"))
        .collect()
}
