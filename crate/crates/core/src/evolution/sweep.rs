//! Every monthly metric in one pass: each snapshot is built once, measured,
//! and dropped before the next one is needed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activity::updates_in_month;
use super::{months, EvolutionError};
use crate::graphops::{classify, transitive_dependent_counts};
use crate::indices::{
    changeability_on, h_index, p_impact_report, IndexError, ReuseBasis, DEFAULT_P_PERCENT,
    DEFAULT_WINDOW_DAYS,
};
use crate::snapshot::Timeline;
use crate::stats::normalized_gini;
use crate::time::Month;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub window_days: u32,
    pub p_percent: f64,
    pub reuse_basis: ReuseBasis,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            window_days: DEFAULT_WINDOW_DAYS,
            p_percent: DEFAULT_P_PERCENT,
            reuse_basis: ReuseBasis::Direct,
        }
    }
}

/// Measurements of the snapshot at the start of `month`. `updates` counts
/// the updates released during the month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyMetrics {
    pub month: Month,
    pub packages: usize,
    pub dependencies: usize,
    pub dependent: usize,
    pub required: usize,
    pub connected: usize,
    pub top_level: usize,
    pub transitive_dependencies: u64,
    pub updates: usize,
    pub changeability: u64,
    pub reusability: u64,
    pub p_impact: u64,
    /// Over the in-degrees of required packages; needs two of them.
    pub dependents_gini: Option<f64>,
}

impl MonthlyMetrics {
    pub fn dependency_ratio(&self) -> Option<f64> {
        (self.packages > 0).then(|| self.dependencies as f64 / self.packages as f64)
    }

    pub fn transitive_ratio(&self) -> Option<f64> {
        (self.dependencies > 0).then(|| self.transitive_dependencies as f64 / self.dependencies as f64)
    }
}

/// Runs on the current rayon pool; months are measured in parallel and
/// returned in month order.
pub fn sweep(
    tl: &Timeline,
    from: Month,
    to: Month,
    opts: &SweepOptions,
) -> Result<Vec<MonthlyMetrics>, EvolutionError> {
    if opts.window_days == 0 {
        return Err(IndexError::EmptyWindow.into());
    }
    if !(opts.p_percent > 0.0 && opts.p_percent <= 100.0) {
        return Err(IndexError::InvalidPercent(opts.p_percent).into());
    }
    let months = months(from, to)?;
    months
        .par_iter()
        .map(|&m| measure(tl, m, opts))
        .collect()
}

fn measure(tl: &Timeline, month: Month, opts: &SweepOptions) -> Result<MonthlyMetrics, EvolutionError> {
    let t = month.start();
    let g = tl.snapshot_at(t);
    let roles = classify(&g);
    let dependents = transitive_dependent_counts(&g);
    let in_degrees: Vec<u32> = (0..g.node_count()).map(|v| g.in_degree(v) as u32).collect();
    let reuse_counts: Vec<u32> = match opts.reuse_basis {
        ReuseBasis::Direct => in_degrees.iter().copied().filter(|&c| c > 0).collect(),
        ReuseBasis::Transitive => dependents.iter().copied().filter(|&c| c > 0).collect(),
    };
    let required_in: Vec<f64> = in_degrees
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64)
        .collect();
    Ok(MonthlyMetrics {
        month,
        packages: g.node_count(),
        dependencies: g.edge_count(),
        dependent: roles.dependent,
        required: roles.required,
        connected: roles.connected,
        top_level: roles.top_level,
        transitive_dependencies: dependents.iter().map(|&c| c as u64).sum(),
        updates: updates_in_month(tl, month),
        changeability: changeability_on(tl, t, opts.window_days)?.value,
        reusability: h_index(&reuse_counts),
        p_impact: p_impact_report(&g, &dependents, opts.p_percent).value,
        dependents_gini: normalized_gini(&required_in).ok(),
    })
}
