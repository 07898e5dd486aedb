use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Values sorted ascending; the curve lies on or below the diagonal.
    Standard,
    /// Values sorted descending: the share held by the top fraction of the
    /// population. The curve lies on or above the diagonal.
    Inverted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzCurve {
    /// `(cumulative population fraction, cumulative value fraction)` from
    /// `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub orientation: Orientation,
}

impl LorenzCurve {
    /// Smallest population fraction whose cumulative value reaches `share`.
    /// Only meaningful for inverted curves ("x% of packages account for
    /// `share` of the total").
    pub fn population_for_share(&self, share: f64) -> f64 {
        self.points
            .iter()
            .find(|&&(_, v)| v >= share)
            .map_or(1.0, |&(p, _)| p)
    }
}

fn check(values: &[f64]) -> Result<(), StatsError> {
    match values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        Some(&bad) => Err(StatsError::InvalidValue(bad)),
        None => Ok(()),
    }
}

pub fn lorenz_points(values: &[f64], inverted: bool) -> Result<LorenzCurve, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    check(values)?;
    let mut sorted = values.to_vec();
    if inverted {
        sorted.sort_by(|a, b| b.total_cmp(a));
    } else {
        sorted.sort_by(|a, b| a.total_cmp(b));
    }
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Err(StatsError::ZeroSum);
    }
    let n = sorted.len();
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let mut acc = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        acc += v;
        points.push(((i + 1) as f64 / n as f64, acc / total));
    }
    *points.last_mut().expect("non-empty") = (1.0, 1.0);
    Ok(LorenzCurve {
        points,
        orientation: if inverted {
            Orientation::Inverted
        } else {
            Orientation::Standard
        },
    })
}

/// Gini index by the mean absolute difference,
/// `sum_i sum_j |x_i - x_j| / (2 n^2 mean)`, evaluated in O(n log n) as
/// `sum_i (2i - n - 1) x_(i) / (n sum x)` over ascending order statistics.
///
/// Ranges over `[0, 1 - 1/n]`. Returns 0 for an empty input or when every
/// value is 0.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - nf - 1.0) * x)
        .sum();
    weighted / (nf * total)
}

/// Gini index divided by its maximum `1 - 1/n`, so that values are
/// comparable across population sizes.
pub fn normalized_gini(values: &[f64]) -> Result<f64, StatsError> {
    let n = values.len();
    if n < 2 {
        return Err(StatsError::TooFewValues { needed: 2, got: n });
    }
    check(values)?;
    Ok(gini(values) / (1.0 - 1.0 / n as f64))
}
