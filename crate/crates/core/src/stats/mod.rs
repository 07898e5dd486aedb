//! Statistical machinery: Kaplan-Meier survival with the two-group log-rank
//! test, Lorenz curves and the Gini index, and linear / exponential growth
//! fits with R².

mod inequality;
mod regression;
mod survival;

use thiserror::Error;

pub use inequality::{gini, lorenz_points, normalized_gini, LorenzCurve, Orientation};
pub use regression::{fit_exponential, fit_linear, GrowthModel, RegressionFit};
pub use survival::{
    kaplan_meier, log_rank, Alpha, LogRankResult, Observation, SurvivalCurve, SurvivalSample,
    SurvivalStep,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("duration {0} is negative or not finite")]
    InvalidDuration(f64),
    #[error("values must be finite and non-negative, got {0}")]
    InvalidValue(f64),
    #[error("values sum to zero")]
    ZeroSum,
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("time values have zero variance")]
    ZeroTimeVariance,
    #[error("exponential fit needs strictly positive values, got {0}")]
    NonPositive(f64),
    #[error("unsupported significance level {0}; use 0.05 or 0.01")]
    UnsupportedAlpha(f64),
}
