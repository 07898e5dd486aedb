use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Time to event (or to censoring), in days.
    pub duration: f64,
    /// The event was not observed before the end of observation.
    pub censored: bool,
}

impl Observation {
    pub fn event(duration: f64) -> Self {
        Self {
            duration,
            censored: false,
        }
    }

    pub fn censored(duration: f64) -> Self {
        Self {
            duration,
            censored: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    pub label: String,
    pub observations: Vec<Observation>,
}

impl SurvivalSample {
    pub fn new(label: impl Into<String>, observations: Vec<Observation>) -> Self {
        Self {
            label: label.into(),
            observations,
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn events(&self) -> usize {
        self.observations.iter().filter(|o| !o.censored).count()
    }

    fn sorted(&self) -> Result<Vec<Observation>, StatsError> {
        if self.observations.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if let Some(bad) = self
            .observations
            .iter()
            .find(|o| !o.duration.is_finite() || o.duration < 0.0)
        {
            return Err(StatsError::InvalidDuration(bad.duration));
        }
        let mut obs = self.observations.clone();
        obs.sort_by(|a, b| a.duration.total_cmp(&b.duration));
        Ok(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalStep {
    pub time: f64,
    pub survival: f64,
    pub at_risk: usize,
    pub events: usize,
}

/// Product-limit estimate. The first step is `(0, 1.0)`; every further step
/// sits at a distinct event time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub steps: Vec<SurvivalStep>,
}

impl SurvivalCurve {
    /// S(t): survival of the last step at or before `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.time <= t);
        if idx == 0 {
            1.0
        } else {
            self.steps[idx - 1].survival
        }
    }

    /// First time at which S(t) drops to 0.5 or below.
    pub fn median(&self) -> Option<f64> {
        self.steps.iter().find(|s| s.survival <= 0.5).map(|s| s.time)
    }
}

/// Runs of equal durations: `(time, events, censored)`.
fn tied_groups(sorted: &[Observation]) -> Vec<(f64, usize, usize)> {
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for o in sorted {
        match groups.last_mut() {
            Some(g) if g.0 == o.duration => {}
            _ => groups.push((o.duration, 0, 0)),
        }
        let g = groups.last_mut().expect("just pushed");
        if o.censored {
            g.2 += 1;
        } else {
            g.1 += 1;
        }
    }
    groups
}

/// Kaplan-Meier estimator. Subjects censored at an event time are still at
/// risk at that time.
pub fn kaplan_meier(s: &SurvivalSample) -> Result<SurvivalCurve, StatsError> {
    let obs = s.sorted()?;
    let mut at_risk = obs.len();
    let mut survival = 1.0;
    let mut steps = vec![SurvivalStep {
        time: 0.0,
        survival,
        at_risk,
        events: 0,
    }];
    for (time, events, censored) in tied_groups(&obs) {
        if events > 0 {
            survival *= 1.0 - events as f64 / at_risk as f64;
            steps.push(SurvivalStep {
                time,
                survival,
                at_risk,
                events,
            });
        }
        at_risk -= events + censored;
    }
    Ok(SurvivalCurve { steps })
}

/// Significance level for the log-rank test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha {
    P05,
    P01,
}

impl Alpha {
    /// Upper critical value of the chi-square distribution with one degree
    /// of freedom.
    pub fn critical_value(self) -> f64 {
        match self {
            Alpha::P05 => 3.841_458_820_694_124,
            Alpha::P01 => 6.634_896_601_021_214,
        }
    }

    pub fn level(self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P01 => 0.01,
        }
    }
}

impl TryFrom<f64> for Alpha {
    type Error = StatsError;

    fn try_from(a: f64) -> Result<Self, StatsError> {
        if a == 0.05 {
            Ok(Alpha::P05)
        } else if a == 0.01 {
            Ok(Alpha::P01)
        } else {
            Err(StatsError::UnsupportedAlpha(a))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRankResult {
    pub statistic: f64,
    pub significant: bool,
    pub alpha: f64,
    pub observed_a: f64,
    pub expected_a: f64,
    pub variance: f64,
}

/// Two-group log-rank test: squared difference between observed and
/// expected events in group `a`, over the summed hypergeometric variance.
/// Without any event the statistic is 0.
pub fn log_rank(
    a: &SurvivalSample,
    b: &SurvivalSample,
    alpha: Alpha,
) -> Result<LogRankResult, StatsError> {
    a.sorted()?;
    b.sorted()?;
    let mut pooled: Vec<(f64, bool, bool)> = a
        .observations
        .iter()
        .map(|o| (o.duration, o.censored, true))
        .chain(b.observations.iter().map(|o| (o.duration, o.censored, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut n = pooled.len() as f64;
    let mut n_a = a.len() as f64;
    let (mut observed, mut expected, mut variance) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        let (mut d, mut d_a, mut leave_a, mut leave) = (0.0, 0.0, 0.0, 0.0);
        while i < pooled.len() && pooled[i].0 == t {
            let (_, censored, in_a) = pooled[i];
            if !censored {
                d += 1.0;
                if in_a {
                    d_a += 1.0;
                }
            }
            if in_a {
                leave_a += 1.0;
            }
            leave += 1.0;
            i += 1;
        }
        if d > 0.0 {
            let share = n_a / n;
            observed += d_a;
            expected += d * share;
            if n > 1.0 {
                variance += d * share * (1.0 - share) * (n - d) / (n - 1.0);
            }
        }
        n -= leave;
        n_a -= leave_a;
    }

    let statistic = if variance > 0.0 {
        (observed - expected).powi(2) / variance
    } else {
        0.0
    };
    Ok(LogRankResult {
        statistic,
        significant: statistic > alpha.critical_value(),
        alpha: alpha.level(),
        observed_a: observed,
        expected_a: expected,
        variance,
    })
}
