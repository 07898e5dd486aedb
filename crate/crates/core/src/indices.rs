//! Ecosystem-level indices in the style of the Hirsch index.
//!
//! * Changeability: largest `n` such that `n` packages were each updated at
//!   least `n` times in the trailing window ending at `t`.
//! * Reusability: largest `n` such that `n` required packages each have at
//!   least `n` dependents.
//! * P-Impact: number of packages transitively required by at least P% of
//!   all packages in the snapshot.

use std::fmt;
use std::str::FromStr;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphops::{transitive_dependent_counts, transitive_dependency_counts};
use crate::ingest::Dataset;
use crate::snapshot::{SnapshotGraph, Timeline};
use crate::time::Timestamp;

pub const DEFAULT_WINDOW_DAYS: u32 = 30;
pub const DEFAULT_P_PERCENT: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("P must lie in (0, 100], got {0}")]
    InvalidPercent(f64),
    #[error("window length must be positive")]
    EmptyWindow,
    #[error("unknown index `{0}` (expected changeability, reusability or impact)")]
    UnknownIndex(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexName {
    Changeability,
    Reusability,
    PImpact,
}

impl fmt::Display for IndexName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexName::Changeability => "changeability",
            IndexName::Reusability => "reusability",
            IndexName::PImpact => "p_impact",
        })
    }
}

impl FromStr for IndexName {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "changeability" => Ok(IndexName::Changeability),
            "reusability" => Ok(IndexName::Reusability),
            "p_impact" | "impact" => Ok(IndexName::PImpact),
            _ => Err(IndexError::UnknownIndex(s.to_owned())),
        }
    }
}

/// Value of one index for one ecosystem at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub ecosystem: String,
    pub at: Timestamp,
    pub index: IndexName,
    pub value: u64,
    /// Window length in days for changeability, P for P-Impact.
    pub parameter: Option<f64>,
}

/// Largest `n` such that at least `n` of the counts are `>= n`.
pub fn h_index<T: Copy + Into<u64>>(counts: &[T]) -> u64 {
    let n = counts.len();
    // Counts above n cannot raise the index past n, so bucket them at n.
    let mut buckets = vec![0usize; n + 1];
    for &c in counts {
        buckets[(c.into()).min(n as u64) as usize] += 1;
    }
    let mut at_least = 0;
    for h in (1..=n).rev() {
        at_least += buckets[h];
        if at_least >= h {
            return h as u64;
        }
    }
    0
}

/// Per-package number of updates (releases after a package's first one)
/// timestamped in `(t - window, t]`. Packages without such updates are
/// omitted.
pub fn updates_in_window(tl: &Timeline, t: Timestamp, window: Duration) -> Vec<u32> {
    let start = t - window;
    (0..tl.package_count())
        .filter_map(|id| {
            let rel = tl.releases_of(id);
            let lo = rel.partition_point(|r| r.timestamp <= start).max(1);
            let hi = rel.partition_point(|r| r.timestamp <= t);
            (hi > lo).then(|| (hi - lo) as u32)
        })
        .collect()
}

pub fn changeability_index(d: &Dataset, t: Timestamp, window_days: u32) -> Result<IndexReport, IndexError> {
    changeability_on(&Timeline::new(d), t, window_days)
}

pub fn changeability_on(tl: &Timeline, t: Timestamp, window_days: u32) -> Result<IndexReport, IndexError> {
    if window_days == 0 {
        return Err(IndexError::EmptyWindow);
    }
    let counts = updates_in_window(tl, t, Duration::days(window_days as i64));
    Ok(IndexReport {
        ecosystem: tl.ecosystem().to_owned(),
        at: t,
        index: IndexName::Changeability,
        value: h_index(&counts),
        parameter: Some(window_days as f64),
    })
}

/// Which dependents the reusability index counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReuseBasis {
    /// Direct dependents (in-degree).
    #[default]
    Direct,
    /// Transitive dependents.
    Transitive,
}

pub fn reusability_index(g: &SnapshotGraph) -> IndexReport {
    reusability_index_with(g, ReuseBasis::Direct)
}

pub fn reusability_index_with(g: &SnapshotGraph, basis: ReuseBasis) -> IndexReport {
    let counts: Vec<u32> = match basis {
        ReuseBasis::Direct => (0..g.node_count()).map(|v| g.in_degree(v) as u32).collect(),
        ReuseBasis::Transitive => transitive_dependent_counts(g),
    };
    let required: Vec<u32> = counts.into_iter().filter(|&c| c > 0).collect();
    IndexReport {
        ecosystem: g.ecosystem().to_owned(),
        at: g.at(),
        index: IndexName::Reusability,
        value: h_index(&required),
        parameter: None,
    }
}

fn check_percent(p_percent: f64) -> Result<(), IndexError> {
    if p_percent > 0.0 && p_percent <= 100.0 {
        Ok(())
    } else {
        Err(IndexError::InvalidPercent(p_percent))
    }
}

/// Number of entries of `dependent_counts` that reach `p_percent` of
/// `packages`. The threshold is compared as a real number, not rounded.
pub fn p_impact_from_counts(dependent_counts: &[u32], packages: usize, p_percent: f64) -> u64 {
    let threshold = p_percent * packages as f64;
    dependent_counts
        .iter()
        .filter(|&&c| c as f64 * 100.0 >= threshold)
        .count() as u64
}

pub fn p_impact_index(g: &SnapshotGraph, p_percent: f64) -> Result<IndexReport, IndexError> {
    check_percent(p_percent)?;
    let counts = transitive_dependent_counts(g);
    Ok(p_impact_report(g, &counts, p_percent))
}

pub(crate) fn p_impact_report(g: &SnapshotGraph, dependent_counts: &[u32], p_percent: f64) -> IndexReport {
    IndexReport {
        ecosystem: g.ecosystem().to_owned(),
        at: g.at(),
        index: IndexName::PImpact,
        value: p_impact_from_counts(dependent_counts, g.node_count(), p_percent),
        parameter: Some(p_percent),
    }
}

/// Sum of transitive dependency counts over all nodes. Equal to the sum of
/// transitive dependent counts by symmetry of the closure.
pub fn total_transitive_dependencies(g: &SnapshotGraph) -> u64 {
    transitive_dependency_counts(g).iter().map(|&c| c as u64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::tiny;
    use crate::snapshot::build_snapshot;
    use crate::time::parse_timestamp;
    use proptest::prelude::*;

    fn sort_and_scan(counts: &[u64]) -> u64 {
        let mut v = counts.to_vec();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v.iter()
            .enumerate()
            .take_while(|&(i, &c)| c >= (i + 1) as u64)
            .count() as u64
    }

    #[test]
    fn h_index_examples() {
        assert_eq!(h_index::<u64>(&[]), 0);
        assert_eq!(h_index(&[5u64, 3, 2, 1]), 2);
        assert_eq!(h_index(&[1u64, 1, 1]), 1);
        assert_eq!(h_index(&[0u64, 0]), 0);
        assert_eq!(h_index(&[100u64, 100, 100]), 3);
    }

    proptest! {
        #[test]
        fn h_index_matches_sort_and_scan(v in proptest::collection::vec(0u64..50, 0..60)) {
            let h = h_index(&v);
            prop_assert_eq!(h, sort_and_scan(&v));
            prop_assert!(h <= v.len() as u64);
            prop_assert!(h <= v.iter().copied().max().unwrap_or(0));
            let mut more = v.clone();
            more.push(7);
            prop_assert!(h_index(&more) >= h);
        }
    }

    #[test]
    fn changeability_on_tiny() {
        let d = tiny();
        let at = |s: &str| parse_timestamp(s).unwrap();
        assert_eq!(changeability_index(&d, at("2020-03-31"), 30).unwrap().value, 1);
        assert_eq!(changeability_index(&d, at("2020-01-31"), 30).unwrap().value, 0);
        assert_eq!(changeability_index(&d, at("2019-01-01"), 30).unwrap().value, 0);
        let r = changeability_index(&d, at("2020-03-01"), 30).unwrap();
        assert_eq!((r.value, r.parameter), (1, Some(30.0)));
        assert_eq!(changeability_index(&d, at("2020-03-01"), 0), Err(IndexError::EmptyWindow));
    }

    #[test]
    fn window_is_open_at_the_start_and_closed_at_the_end() {
        let tl = Timeline::new(&tiny());
        // a@1.1.0 is at 2020-02-15T00:00:00Z.
        let t = parse_timestamp("2020-02-15").unwrap();
        assert_eq!(updates_in_window(&tl, t, Duration::days(1)), [1]);
        let t = parse_timestamp("2020-02-16").unwrap();
        assert!(updates_in_window(&tl, t, Duration::days(1)).is_empty());
    }

    #[test]
    fn reusability() {
        let g = build_snapshot(&tiny(), parse_timestamp("2020-04-01").unwrap());
        assert_eq!(reusability_index(&g).value, 1);
        assert_eq!(reusability_index_with(&g, ReuseBasis::Transitive).value, 2);

        let at = parse_timestamp("2020-01-01").unwrap();
        let edgeless = SnapshotGraph::from_edges(at, ["a", "b"], Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!(reusability_index(&edgeless).value, 0);
        let star = SnapshotGraph::from_edges(
            at,
            ["h", "s1", "s2", "s3"],
            [("s1", "h"), ("s2", "h"), ("s3", "h")],
        )
        .unwrap();
        assert_eq!(reusability_index(&star).value, 1);
        let hubs = SnapshotGraph::from_edges(
            at,
            ["h1", "h2", "s1", "s2"],
            [("s1", "h1"), ("s2", "h1"), ("s1", "h2"), ("s2", "h2")],
        )
        .unwrap();
        assert_eq!(reusability_index(&hubs).value, 2);
    }

    #[test]
    fn p_impact_on_tiny() {
        let g = build_snapshot(&tiny(), parse_timestamp("2020-04-01").unwrap());
        assert_eq!(p_impact_index(&g, 50.0).unwrap().value, 1);
        assert_eq!(p_impact_index(&g, 80.0).unwrap().value, 0);
        assert_eq!(p_impact_index(&g, 60.0).unwrap().value, 1);
        assert_eq!(p_impact_index(&g, 5.0).unwrap().value, 3);
        assert!(p_impact_index(&g, 0.0).is_err());
        assert!(p_impact_index(&g, 100.5).is_err());
    }

    #[test]
    fn p_impact_threshold_is_not_rounded() {
        // 5% of 100 is exactly 5; 5% of 101 is 5.05.
        assert_eq!(p_impact_from_counts(&[5, 4], 100, 5.0), 1);
        assert_eq!(p_impact_from_counts(&[5, 4], 101, 5.0), 0);
        assert_eq!(p_impact_from_counts(&[1], 100, 1.0), 1);
    }

    #[test]
    fn index_names() {
        assert_eq!("impact".parse::<IndexName>().unwrap(), IndexName::PImpact);
        assert_eq!("p-impact".parse::<IndexName>().unwrap(), IndexName::PImpact);
        assert!("fame".parse::<IndexName>().is_err());
        assert_eq!(IndexName::PImpact.to_string(), "p_impact");
    }
}
