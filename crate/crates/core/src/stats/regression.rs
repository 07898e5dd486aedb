use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `y = a * t + b`
    Linear,
    /// `y = a * exp(b * t)`
    Exponential,
}

impl GrowthModel {
    pub fn name(self) -> &'static str {
        match self {
            GrowthModel::Linear => "linear",
            GrowthModel::Exponential => "exponential",
        }
    }

    pub fn predict(self, a: f64, b: f64, t: f64) -> f64 {
        match self {
            GrowthModel::Linear => a * t + b,
            GrowthModel::Exponential => a * (b * t).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub model: GrowthModel,
    pub a: f64,
    pub b: f64,
    /// Coefficient of determination on the original scale.
    pub r_squared: f64,
    /// For the exponential model, R² of the straight-line fit to `ln y`.
    pub r_squared_log: Option<f64>,
}

impl RegressionFit {
    pub fn predict(&self, t: f64) -> f64 {
        self.model.predict(self.a, self.b, t)
    }
}

/// Ordinary least squares `y = slope * t + intercept`.
fn least_squares(points: &[(f64, f64)]) -> Result<(f64, f64), StatsError> {
    if points.len() < 3 {
        return Err(StatsError::TooFewValues {
            needed: 3,
            got: points.len(),
        });
    }
    for &(t, y) in points {
        if !t.is_finite() {
            return Err(StatsError::InvalidValue(t));
        }
        if !y.is_finite() {
            return Err(StatsError::InvalidValue(y));
        }
    }
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, y) in points {
        stt += (t - t_mean) * (t - t_mean);
        sty += (t - t_mean) * (y - y_mean);
    }
    if stt == 0.0 {
        return Err(StatsError::ZeroTimeVariance);
    }
    let slope = sty / stt;
    Ok((slope, y_mean - slope * t_mean))
}

/// `1 - SS_res / SS_tot`. A constant series (`SS_tot = 0`) scores 1 when it
/// is reproduced exactly (up to rounding) and 0 otherwise.
fn r_squared(points: &[(f64, f64)], predict: impl Fn(f64) -> f64) -> f64 {
    let n = points.len() as f64;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut ss_res, mut ss_tot, mut scale) = (0.0, 0.0, 0.0);
    for &(t, y) in points {
        ss_res += (y - predict(t)).powi(2);
        ss_tot += (y - y_mean).powi(2);
        scale += y * y;
    }
    if ss_tot == 0.0 {
        let exact = ss_res <= 1e-24 * scale.max(1.0);
        return if exact { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

pub fn fit_linear(points: &[(f64, f64)]) -> Result<RegressionFit, StatsError> {
    let (a, b) = least_squares(points)?;
    Ok(RegressionFit {
        model: GrowthModel::Linear,
        a,
        b,
        r_squared: r_squared(points, |t| a * t + b),
        r_squared_log: None,
    })
}

/// Fits `ln y = ln a + b t` by least squares and reports R² between the
/// back-transformed predictions and the observations.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<RegressionFit, StatsError> {
    if let Some(&(_, y)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(StatsError::NonPositive(y));
    }
    let logged: Vec<(f64, f64)> = points.iter().map(|&(t, y)| (t, y.ln())).collect();
    let (rate, log_scale) = least_squares(&logged)?;
    let a = log_scale.exp();
    Ok(RegressionFit {
        model: GrowthModel::Exponential,
        a,
        b: rate,
        r_squared: r_squared(points, |t| a * (rate * t).exp()),
        r_squared_log: Some(r_squared(&logged, |t| log_scale + rate * t)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn exact_line() {
        let f = fit_linear(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert_eq!((f.a, f.b, f.r_squared), (2.0, 1.0, 1.0));
    }

    #[test]
    fn constant_series() {
        let f = fit_linear(&[(0.0, 4.0), (1.0, 4.0), (2.0, 4.0)]).unwrap();
        assert_eq!((f.a, f.b, f.r_squared), (0.0, 4.0, 1.0));
        let e = fit_exponential(&[(0.0, 2.0), (1.0, 2.0), (2.0, 2.0)]).unwrap();
        assert!(e.b.abs() < 1e-15);
        assert!((e.a - 2.0).abs() < 1e-15);
        assert_eq!(e.r_squared, 1.0);
    }

    #[test]
    fn best_line_through_a_parabola() {
        // Normal equations give y = 2t - 1/3; SS_res = 2/3, SS_tot = 26/3.
        let f = fit_linear(&[(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)]).unwrap();
        assert!((f.a - 2.0).abs() < 1e-12);
        assert!((f.b + 1.0 / 3.0).abs() < 1e-12);
        assert!((f.r_squared - 24.0 / 26.0).abs() < 1e-12);
    }

    #[test]
    fn exact_exponential() {
        let f = fit_exponential(&[(0.0, 1.0), (1.0, E), (2.0, E * E)]).unwrap();
        assert!((f.a - 1.0).abs() < 1e-12);
        assert!((f.b - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.r_squared_log.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(
            fit_exponential(&[(0.0, 1.0), (1.0, 0.0), (2.0, 3.0)]),
            Err(StatsError::NonPositive(0.0))
        );
        assert_eq!(
            fit_linear(&[(0.0, 1.0), (1.0, 2.0)]),
            Err(StatsError::TooFewValues { needed: 3, got: 2 })
        );
        assert_eq!(
            fit_linear(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]),
            Err(StatsError::ZeroTimeVariance)
        );
    }
}
