//! Release activity: how often packages are updated, and by whom.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{months, EvolutionError, TimeSeries};
use crate::ingest::Dataset;
use crate::snapshot::Timeline;
use crate::stats::{gini, lorenz_points, normalized_gini, LorenzCurve};
use crate::time::{format_timestamp, Month, Timestamp};

/// Length of a month when converting package ages, in days.
pub const DAYS_PER_MONTH: f64 = 30.44;

/// Lower edges of the package-age bins, in months. The last bin is open.
pub const AGE_BIN_EDGES_MONTHS: [f64; 5] = [0.0, 3.0, 6.0, 12.0, 24.0];

/// Release timestamps per package in chronological order; packages without
/// releases are skipped.
fn release_times(d: &Dataset) -> Vec<(String, Vec<Timestamp>)> {
    let mut by_package: Vec<(String, Vec<Timestamp>)> = d
        .releases_by_package()
        .into_iter()
        .map(|(p, rel)| (p.to_owned(), rel.iter().map(|r| r.timestamp).collect()))
        .collect();
    by_package.sort_by(|a, b| a.0.cmp(&b.0));
    by_package
}

fn check_window(start: Timestamp, end: Timestamp) -> Result<(), EvolutionError> {
    if start > end {
        return Err(EvolutionError::InvertedWindow {
            start: format_timestamp(&start),
            end: format_timestamp(&end),
        });
    }
    Ok(())
}

fn monthly_counts(
    d: &Dataset,
    from: Month,
    to: Month,
    skip_first: bool,
    name: &str,
) -> Result<TimeSeries, EvolutionError> {
    let months = months(from, to)?;
    let mut counts: BTreeMap<Month, f64> = months.iter().map(|&m| (m, 0.0)).collect();
    for (_, times) in release_times(d) {
        let skip = usize::from(skip_first);
        for t in times.iter().skip(skip) {
            if let Some(c) = counts.get_mut(&Month::of(t)) {
                *c += 1.0;
            }
        }
    }
    Ok(TimeSeries::new(name, counts.into_iter().collect()))
}

/// Updates (releases other than a package's first) per calendar month.
pub fn update_counts_series(d: &Dataset, from: Month, to: Month) -> Result<TimeSeries, EvolutionError> {
    monthly_counts(d, from, to, true, "updates")
}

/// All releases per calendar month, first releases included.
pub fn release_counts_series(d: &Dataset, from: Month, to: Month) -> Result<TimeSeries, EvolutionError> {
    monthly_counts(d, from, to, false, "releases")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateBins {
    /// Never updated.
    pub never: usize,
    /// 1 to 4 updates.
    pub low: usize,
    /// 5 or more updates.
    pub high: usize,
    pub total: usize,
}

/// Lifetime update counts at `t` of the packages released by then.
pub fn update_distribution(d: &Dataset, t: Timestamp) -> UpdateBins {
    let mut bins = UpdateBins::default();
    for (_, times) in release_times(d) {
        let released = times.partition_point(|r| *r <= t);
        match released {
            0 => continue,
            1 => bins.never += 1,
            2..=5 => bins.low += 1,
            _ => bins.high += 1,
        }
        bins.total += 1;
    }
    bins
}

/// Update count per package over `[start, end)`, for packages with at least
/// one update in the window.
fn updates_between(d: &Dataset, start: Timestamp, end: Timestamp) -> Vec<(String, usize)> {
    release_times(d)
        .into_iter()
        .filter_map(|(p, times)| {
            let n = times[1..].iter().filter(|t| **t >= start && **t < end).count();
            (n > 0).then_some((p, n))
        })
        .collect()
}

/// Packages with at least one update timestamped in `[start, end)`.
pub fn active_packages(
    d: &Dataset,
    start: Timestamp,
    end: Timestamp,
) -> Result<BTreeSet<String>, EvolutionError> {
    check_window(start, end)?;
    Ok(updates_between(d, start, end).into_iter().map(|p| p.0).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateInequality {
    pub active_packages: usize,
    pub updates: usize,
    /// Inverted: share of updates made by the most active fraction.
    pub lorenz: LorenzCurve,
    pub gini: f64,
    /// Undefined with a single active package.
    pub normalized_gini: Option<f64>,
}

/// Concentration of updates among the packages active in `[start, end)`.
pub fn update_inequality(
    d: &Dataset,
    start: Timestamp,
    end: Timestamp,
) -> Result<UpdateInequality, EvolutionError> {
    check_window(start, end)?;
    let counts: Vec<f64> = updates_between(d, start, end)
        .into_iter()
        .map(|(_, n)| n as f64)
        .collect();
    if counts.is_empty() {
        return Err(EvolutionError::NoActivePackages);
    }
    Ok(UpdateInequality {
        active_packages: counts.len(),
        updates: counts.iter().sum::<f64>() as usize,
        lorenz: lorenz_points(&counts, true)?,
        gini: gini(&counts),
        normalized_gini: normalized_gini(&counts).ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBin {
    pub label: String,
    pub lower_months: f64,
    pub upper_months: Option<f64>,
    pub count: usize,
    pub proportion: f64,
}

/// Updates in a window by the age of their package. Empty when the window
/// holds no update.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgeHistogram {
    pub bins: Vec<AgeBin>,
}

impl AgeHistogram {
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

fn age_bin_label(i: usize) -> String {
    let lo = AGE_BIN_EDGES_MONTHS[i];
    match AGE_BIN_EDGES_MONTHS.get(i + 1) {
        Some(hi) => format!("[{lo}-{hi})"),
        None => format!(">={lo}"),
    }
}

/// Ages are measured from the package's first release, in months of
/// [`DAYS_PER_MONTH`] days.
pub fn updates_by_age(d: &Dataset, start: Timestamp, end: Timestamp) -> Result<AgeHistogram, EvolutionError> {
    check_window(start, end)?;
    let month_secs = (DAYS_PER_MONTH * 86_400.0).round() as i64;
    let mut counts = [0usize; AGE_BIN_EDGES_MONTHS.len()];
    for (_, times) in release_times(d) {
        let first = times[0];
        for t in times[1..].iter().filter(|t| **t >= start && **t < end) {
            let age = (*t - first).num_seconds();
            // Integer comparison keeps exact boundaries in the upper bin.
            let bin = AGE_BIN_EDGES_MONTHS
                .iter()
                .rposition(|&edge| age >= edge as i64 * month_secs)
                .unwrap_or(0);
            counts[bin] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Ok(AgeHistogram::default());
    }
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| AgeBin {
            label: age_bin_label(i),
            lower_months: AGE_BIN_EDGES_MONTHS[i],
            upper_months: AGE_BIN_EDGES_MONTHS.get(i + 1).copied(),
            count,
            proportion: count as f64 / total as f64,
        })
        .collect();
    Ok(AgeHistogram { bins })
}

// Timeline-based variant used by the monthly sweep.
pub(crate) fn updates_in_month(tl: &Timeline, m: Month) -> usize {
    let (lo, hi) = (m.start(), m.succ().start());
    (0..tl.package_count())
        .map(|id| {
            tl.release_times(id)
                .skip(1)
                .filter(|t| *t >= lo && *t < hi)
                .count()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::tiny;
    use crate::ingest::{PackageRecord, ReleaseRecord};
    use crate::time::parse_timestamp;

    fn ts(s: &str) -> Timestamp {
        parse_timestamp(s).unwrap()
    }

    fn m(s: &str) -> Month {
        s.parse().unwrap()
    }

    fn one_package(times: &[&str]) -> Dataset {
        let releases = times
            .iter()
            .enumerate()
            .map(|(i, t)| ReleaseRecord {
                package: "p".into(),
                version: format!("1.0.{i}"),
                timestamp: ts(t),
            })
            .collect();
        Dataset::new(
            "test",
            vec![PackageRecord {
                name: "p".into(),
                ecosystem: "test".into(),
            }],
            releases,
            vec![],
            ts("2030-01-01"),
        )
        .unwrap()
    }

    #[test]
    fn monthly_updates_on_tiny() {
        let s = update_counts_series(&tiny(), m("2020-01"), m("2020-03")).unwrap();
        assert_eq!(s.values(), [0.0, 1.0, 1.0]);
        let all = release_counts_series(&tiny(), m("2020-01"), m("2020-03")).unwrap();
        assert_eq!(all.values(), [3.0, 2.0, 2.0]);
        assert!(update_counts_series(&tiny(), m("2020-03"), m("2020-01")).is_err());
    }

    #[test]
    fn three_releases_in_one_month_are_two_updates() {
        let d = one_package(&["2020-05-01", "2020-05-02", "2020-05-03"]);
        let s = update_counts_series(&d, m("2020-05"), m("2020-05")).unwrap();
        assert_eq!(s.values(), [2.0]);
    }

    #[test]
    fn distribution_on_tiny() {
        let b = update_distribution(&tiny(), ts("2020-04-01"));
        assert_eq!(
            b,
            UpdateBins {
                never: 3,
                low: 2,
                high: 0,
                total: 5
            }
        );
        let six = one_package(&["2020-01-01", "2020-01-02", "2020-01-03", "2020-01-04", "2020-01-05", "2020-01-06"]);
        assert_eq!(update_distribution(&six, ts("2021-01-01")).high, 1);
        assert_eq!(update_distribution(&six, ts("2019-01-01")).total, 0);
    }

    #[test]
    fn active_on_tiny() {
        let d = tiny();
        let year = active_packages(&d, ts("2020-01-01"), ts("2021-01-01")).unwrap();
        assert_eq!(year, BTreeSet::from(["a".to_owned(), "c".to_owned()]));
        let march = active_packages(&d, ts("2020-03-01"), ts("2020-04-01")).unwrap();
        assert_eq!(march, BTreeSet::from(["c".to_owned()]));
        assert!(active_packages(&d, ts("2010-01-01"), ts("2011-01-01")).unwrap().is_empty());
        assert!(matches!(
            active_packages(&d, ts("2021-01-01"), ts("2020-01-01")),
            Err(EvolutionError::InvertedWindow { .. })
        ));
    }

    #[test]
    fn inequality_on_tiny() {
        let r = update_inequality(&tiny(), ts("2020-01-01"), ts("2021-01-01")).unwrap();
        assert_eq!(r.gini, 0.0);
        assert_eq!(r.normalized_gini, Some(0.0));
        assert_eq!(r.lorenz.points, vec![(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)]);
        assert_eq!(
            update_inequality(&tiny(), ts("2010-01-01"), ts("2011-01-01")),
            Err(EvolutionError::NoActivePackages)
        );
    }

    #[test]
    fn ages_on_tiny() {
        let h = updates_by_age(&tiny(), ts("2020-01-01"), ts("2021-01-01")).unwrap();
        assert_eq!(h.bins.len(), 5);
        assert_eq!((h.bins[0].count, h.bins[0].proportion), (2, 1.0));
        assert_eq!(h.bins[0].label, "[0-3)");
        assert_eq!(h.bins[4].label, ">=24");
        assert!(updates_by_age(&tiny(), ts("2010-01-01"), ts("2011-01-01")).unwrap().is_empty());
    }

    #[test]
    fn age_boundary_goes_up() {
        // 3 * 30.44 days = 91.32 days = 91 days 7h40m48s.
        let d = one_package(&["2020-01-01T00:00:00Z", "2020-04-01T07:40:48Z"]);
        let h = updates_by_age(&d, ts("2020-01-01"), ts("2021-01-01")).unwrap();
        assert_eq!(h.bins[1].count, 1);
        let d = one_package(&["2020-01-01T00:00:00Z", "2020-04-01T07:40:47Z"]);
        let h = updates_by_age(&d, ts("2020-01-01"), ts("2021-01-01")).unwrap();
        assert_eq!(h.bins[0].count, 1);
    }

    #[test]
    fn month_updates_from_the_timeline() {
        let tl = Timeline::new(&tiny());
        assert_eq!(updates_in_month(&tl, m("2020-02")), 1);
        assert_eq!(updates_in_month(&tl, m("2020-01")), 0);
    }
}
