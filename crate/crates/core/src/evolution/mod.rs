//! Longitudinal metrics: monthly series of network size, update activity,
//! transitive structure and indices, plus the per-window update statistics
//! and the release survival data.

mod activity;
mod survival;
mod sweep;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphops::{
    dependency_depths, depth_of, transitive_dependency_counts, transitive_dependent_counts,
};
use crate::indices::{
    changeability_on, p_impact_index, reusability_index, IndexError, IndexName,
    DEFAULT_P_PERCENT, DEFAULT_WINDOW_DAYS,
};
use crate::ingest::Dataset;
use crate::snapshot::{month_range, SnapshotError, SnapshotGraph, Timeline};
use crate::stats::{
    fit_exponential, fit_linear, gini, lorenz_points, normalized_gini, LorenzCurve,
    RegressionFit, StatsError,
};
use crate::time::{Month, Timestamp};

pub use activity::{
    active_packages, release_counts_series, update_counts_series, update_distribution,
    update_inequality, updates_by_age, AgeBin, AgeHistogram, UpdateBins, UpdateInequality,
    AGE_BIN_EDGES_MONTHS, DAYS_PER_MONTH,
};
pub use survival::{survival_dataset, survival_on, SurvivalGroups};
pub use sweep::{sweep, MonthlyMetrics, SweepOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("window start {start} is after its end {end}")]
    InvertedWindow { start: String, end: String },
    #[error("no package was updated in the window")]
    NoActivePackages,
    #[error("no package is required in the snapshot")]
    NoRequiredPackages,
}

/// A metric sampled once per month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub points: Vec<(Month, f64)>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, points: Vec<(Month, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points with time measured in months since the first point.
    pub fn as_xy(&self) -> Vec<(f64, f64)> {
        let Some(&(origin, _)) = self.points.first() else {
            return Vec::new();
        };
        self.points
            .iter()
            .map(|(m, v)| (m.months_since(&origin) as f64, *v))
            .collect()
    }

    pub fn fit_linear(&self) -> Result<RegressionFit, StatsError> {
        fit_linear(&self.as_xy())
    }

    pub fn fit_exponential(&self) -> Result<RegressionFit, StatsError> {
        fit_exponential(&self.as_xy())
    }
}

fn months(from: Month, to: Month) -> Result<Vec<Month>, EvolutionError> {
    Ok(month_range(from, to)?)
}

/// Evaluates `f` on the snapshot at the start of every month, in parallel,
/// keeping month order.
fn per_month<T: Send>(
    tl: &Timeline,
    from: Month,
    to: Month,
    f: impl Fn(Month, &SnapshotGraph) -> T + Sync,
) -> Result<Vec<T>, EvolutionError> {
    let months = months(from, to)?;
    Ok(months
        .par_iter()
        .map(|&m| f(m, &tl.snapshot_at(m.start())))
        .collect())
}

/// Number of packages and of dependencies in every monthly snapshot.
pub fn growth_series(d: &Dataset, from: Month, to: Month) -> Result<(TimeSeries, TimeSeries), EvolutionError> {
    let tl = Timeline::new(d);
    let sizes = per_month(&tl, from, to, |m, g| (m, g.node_count(), g.edge_count()))?;
    Ok((
        TimeSeries::new("packages", sizes.iter().map(|&(m, n, _)| (m, n as f64)).collect()),
        TimeSeries::new("dependencies", sizes.iter().map(|&(m, _, e)| (m, e as f64)).collect()),
    ))
}

/// Dependencies per package; months without packages are omitted.
pub fn dependency_ratio_series(d: &Dataset, from: Month, to: Month) -> Result<TimeSeries, EvolutionError> {
    let tl = Timeline::new(d);
    let ratios = per_month(&tl, from, to, |m, g| {
        (g.node_count() > 0).then(|| (m, g.edge_count() as f64 / g.node_count() as f64))
    })?;
    Ok(TimeSeries::new("dependency_ratio", ratios.into_iter().flatten().collect()))
}

/// Transitive over direct dependencies, summed over all packages; months
/// without any direct dependency are omitted.
pub fn transitive_ratio_series(d: &Dataset, from: Month, to: Month) -> Result<TimeSeries, EvolutionError> {
    let tl = Timeline::new(d);
    let ratios = per_month(&tl, from, to, |m, g| {
        let direct = g.edge_count();
        (direct > 0).then(|| {
            let transitive: u64 = transitive_dependent_counts(g).iter().map(|&c| c as u64).sum();
            (m, transitive as f64 / direct as f64)
        })
    })?;
    Ok(TimeSeries::new("transitive_ratio", ratios.into_iter().flatten().collect()))
}

/// One index evaluated at the start of every month. `parameter` is the
/// window length in days for changeability (default 30) and P for P-Impact
/// (default 5); reusability takes none.
pub fn index_series(
    d: &Dataset,
    from: Month,
    to: Month,
    which: IndexName,
    parameter: Option<f64>,
) -> Result<TimeSeries, EvolutionError> {
    let tl = Timeline::new(d);
    let months = months(from, to)?;
    let values: Result<Vec<(Month, f64)>, IndexError> = months
        .par_iter()
        .map(|&m| {
            let t = m.start();
            let value = match which {
                IndexName::Changeability => {
                    let days = parameter.map_or(DEFAULT_WINDOW_DAYS, |p| p as u32);
                    changeability_on(&tl, t, days)?.value
                }
                IndexName::Reusability => reusability_index(&tl.snapshot_at(t)).value,
                IndexName::PImpact => {
                    let p = parameter.unwrap_or(DEFAULT_P_PERCENT);
                    p_impact_index(&tl.snapshot_at(t), p)?.value
                }
            };
            Ok((m, value as f64))
        })
        .collect();
    Ok(TimeSeries::new(which.to_string(), values?))
}

/// Histogram of dependency-tree depth over the top-level packages.
pub fn depth_distribution(g: &SnapshotGraph) -> BTreeMap<usize, usize> {
    let depths: Vec<usize> = (0..g.node_count())
        .into_par_iter()
        .filter(|&v| g.out_degree(v) > 0 && g.in_degree(v) == 0)
        .map(|v| depth_of(g, v))
        .collect();
    let mut hist = BTreeMap::new();
    for d in depths {
        *hist.entry(d).or_insert(0) += 1;
    }
    hist
}

/// Direct and transitive dependency structure of one package.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageStructure {
    pub package: String,
    pub n_direct: usize,
    pub n_transitive: u32,
    pub n_rev_direct: usize,
    pub n_rev_transitive: u32,
    pub depth: usize,
}

/// Per-package direct / transitive counts in both directions, in name order.
pub fn dependency_distribution(g: &SnapshotGraph) -> Vec<PackageStructure> {
    let forward = transitive_dependency_counts(g);
    let reverse = transitive_dependent_counts(g);
    let depths = dependency_depths(g);
    (0..g.node_count())
        .map(|v| PackageStructure {
            package: g.name(v).to_owned(),
            n_direct: g.out_degree(v),
            n_transitive: forward[v],
            n_rev_direct: g.in_degree(v),
            n_rev_transitive: reverse[v],
            depth: depths[v],
        })
        .collect()
}

/// Inequality of the number of direct dependents over required packages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentsInequality {
    pub at: Timestamp,
    pub required_packages: usize,
    pub lorenz: LorenzCurve,
    pub gini: f64,
    /// Undefined with fewer than two required packages.
    pub normalized_gini: Option<f64>,
}

pub fn dependents_inequality(g: &SnapshotGraph) -> Result<DependentsInequality, EvolutionError> {
    let counts: Vec<f64> = (0..g.node_count())
        .map(|v| g.in_degree(v) as f64)
        .filter(|&c| c > 0.0)
        .collect();
    if counts.is_empty() {
        return Err(EvolutionError::NoRequiredPackages);
    }
    Ok(DependentsInequality {
        at: g.at(),
        required_packages: counts.len(),
        lorenz: lorenz_points(&counts, true)?,
        gini: gini(&counts),
        normalized_gini: normalized_gini(&counts).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::tiny;
    use crate::snapshot::build_snapshot;
    use crate::time::parse_timestamp;

    fn m(s: &str) -> Month {
        s.parse().unwrap()
    }

    #[test]
    fn growth_on_tiny() {
        let (p, e) = growth_series(&tiny(), m("2020-02"), m("2020-04")).unwrap();
        assert_eq!(p.values(), [3.0, 4.0, 5.0]);
        assert_eq!(e.values(), [0.0, 2.0, 4.0]);
        assert!(growth_series(&tiny(), m("2020-04"), m("2020-02")).is_err());
    }

    #[test]
    fn ratios_on_tiny() {
        let r = dependency_ratio_series(&tiny(), m("2019-12"), m("2020-04")).unwrap();
        // No package exists on Dec 1 or Jan 1: no points.
        assert_eq!(r.points[0].0, m("2020-02"));
        assert_eq!(r.values(), [0.0, 0.5, 0.8]);

        let t = transitive_ratio_series(&tiny(), m("2020-02"), m("2020-04")).unwrap();
        // February has no edges; March: a->b, c->a gives (1 + 2) / 2.
        assert_eq!(t.points, vec![(m("2020-03"), 1.5), (m("2020-04"), 1.5)]);
    }

    #[test]
    fn index_series_on_tiny() {
        let c = index_series(&tiny(), m("2020-02"), m("2020-04"), IndexName::Changeability, None).unwrap();
        assert_eq!(c.values(), [0.0, 1.0, 1.0]);
        let p = index_series(&tiny(), m("2020-04"), m("2020-04"), IndexName::PImpact, Some(50.0)).unwrap();
        assert_eq!(p.values(), [1.0]);
        let r = index_series(&tiny(), m("2020-04"), m("2020-04"), IndexName::Reusability, None).unwrap();
        assert_eq!(r.values(), [1.0]);
        assert!(index_series(&tiny(), m("2020-04"), m("2020-04"), IndexName::PImpact, Some(0.0)).is_err());
    }

    #[test]
    fn depth_histogram() {
        let g = build_snapshot(&tiny(), parse_timestamp("2020-04-01").unwrap());
        assert_eq!(depth_distribution(&g), BTreeMap::from([(2, 1)]));
        let edgeless = build_snapshot(&tiny(), parse_timestamp("2020-02-01").unwrap());
        assert!(depth_distribution(&edgeless).is_empty());
    }

    #[test]
    fn structure_rows() {
        let g = build_snapshot(&tiny(), parse_timestamp("2020-04-01").unwrap());
        let rows = dependency_distribution(&g);
        let d = rows.iter().find(|r| r.package == "d").unwrap();
        assert_eq!(
            (d.n_direct, d.n_transitive, d.n_rev_direct, d.n_rev_transitive, d.depth),
            (1, 3, 0, 0, 2)
        );
        let b = rows.iter().find(|r| r.package == "b").unwrap();
        assert_eq!((b.n_rev_direct, b.n_rev_transitive), (2, 3));
    }

    #[test]
    fn dependents_inequality_on_tiny() {
        let g = build_snapshot(&tiny(), parse_timestamp("2020-04-01").unwrap());
        let r = dependents_inequality(&g).unwrap();
        // In-degrees of required packages: a 1, b 2, c 1.
        assert_eq!(r.required_packages, 3);
        assert!((r.gini - 2.0 / 12.0).abs() < 1e-12);
        assert!((r.normalized_gini.unwrap() - 0.25).abs() < 1e-12);
        let edgeless = build_snapshot(&tiny(), parse_timestamp("2020-02-01").unwrap());
        assert_eq!(
            dependents_inequality(&edgeless),
            Err(EvolutionError::NoRequiredPackages)
        );
    }

    #[test]
    fn time_series_fits_use_month_offsets() {
        let s = TimeSeries::new(
            "x",
            vec![(m("2020-11"), 1.0), (m("2020-12"), 3.0), (m("2021-01"), 5.0)],
        );
        assert_eq!(s.as_xy(), vec![(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        let f = s.fit_linear().unwrap();
        assert_eq!((f.a, f.b, f.r_squared), (2.0, 1.0, 1.0));
    }
}
