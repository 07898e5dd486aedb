use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::time::Month;
use crate::version::compare_versions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// A month is a burst when its release count exceeds this multiple of
    /// the trailing 12-month median.
    pub burst_factor: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { burst_factor: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingProblem {
    /// The later release carries a lower (or equal) version.
    VersionRegression,
    /// Both releases share one timestamp.
    SameTimestamp,
}

/// Two consecutive releases of one package whose chronology disagrees with
/// a strictly increasing sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingFlag {
    pub package: String,
    pub earlier_version: String,
    pub later_version: String,
    pub problem: OrderingProblem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstWarning {
    pub month: Month,
    pub releases: usize,
    pub trailing_median: f64,
}

/// Findings of [`validate_dataset`]. Nothing here is fatal; the dataset is
/// never modified.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub duplicate_releases: Vec<(String, String)>,
    pub ordering_flags: Vec<OrderingFlag>,
    pub bursts: Vec<BurstWarning>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.duplicate_releases.is_empty() && self.ordering_flags.is_empty() && self.bursts.is_empty()
    }

    /// Findings other than burst warnings.
    pub fn has_errors(&self) -> bool {
        !self.duplicate_releases.is_empty() || !self.ordering_flags.is_empty()
    }
}

pub fn validate_dataset(d: &Dataset, opts: &ValidationOptions) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = HashSet::new();
    for r in d.releases() {
        if !seen.insert((r.package.as_str(), r.version.as_str())) {
            report
                .duplicate_releases
                .push((r.package.clone(), r.version.clone()));
        }
    }

    let by_pkg = d.releases_by_package();
    let mut names: Vec<&str> = by_pkg.keys().copied().collect();
    names.sort_unstable();
    for name in names {
        for pair in by_pkg[name].windows(2) {
            let (prev, cur) = (pair[0], pair[1]);
            let problem = if prev.timestamp == cur.timestamp {
                Some(OrderingProblem::SameTimestamp)
            } else if compare_versions(&cur.version, &prev.version).is_le() {
                Some(OrderingProblem::VersionRegression)
            } else {
                None
            };
            if let Some(problem) = problem {
                report.ordering_flags.push(OrderingFlag {
                    package: name.to_owned(),
                    earlier_version: prev.version.clone(),
                    later_version: cur.version.clone(),
                    problem,
                });
            }
        }
    }

    report.bursts = release_bursts(d, opts.burst_factor);
    report
}

/// Months whose release count exceeds `factor` times the median of the up
/// to 12 preceding months (counting empty months, starting at the first
/// month with a release). A median of zero is treated as one.
fn release_bursts(d: &Dataset, factor: f64) -> Vec<BurstWarning> {
    let mut per_month: BTreeMap<Month, usize> = BTreeMap::new();
    for r in d.releases() {
        *per_month.entry(Month::of(&r.timestamp)).or_default() += 1;
    }
    let (Some(&first), Some(&last)) = (per_month.keys().next(), per_month.keys().next_back())
    else {
        return Vec::new();
    };
    let counts: Vec<(Month, usize)> = Month::range_inclusive(first, last)
        .map(|m| (m, per_month.get(&m).copied().unwrap_or(0)))
        .collect();

    let mut out = Vec::new();
    for i in 1..counts.len() {
        let mut trailing: Vec<usize> = counts[i.saturating_sub(12)..i]
            .iter()
            .map(|&(_, c)| c)
            .collect();
        trailing.sort_unstable();
        let median = median_of_sorted(&trailing);
        let (month, releases) = counts[i];
        if releases as f64 > factor * median.max(1.0) {
            out.push(BurstWarning {
                month,
                releases,
                trailing_median: median,
            });
        }
    }
    out
}

fn median_of_sorted(v: &[usize]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::tiny;
    use crate::ingest::{PackageRecord, ReleaseRecord};
    use crate::time::parse_timestamp;

    #[test]
    fn tiny_is_clean() {
        assert!(validate_dataset(&tiny(), &ValidationOptions::default()).is_empty());
    }

    #[test]
    fn version_regression_is_flagged_not_reordered() {
        let d = Dataset::new(
            "x",
            vec![PackageRecord {
                name: "p".into(),
                ecosystem: "x".into(),
            }],
            vec![
                ReleaseRecord {
                    package: "p".into(),
                    version: "2.0.0".into(),
                    timestamp: parse_timestamp("2020-01-01").unwrap(),
                },
                ReleaseRecord {
                    package: "p".into(),
                    version: "1.9.0".into(),
                    timestamp: parse_timestamp("2020-02-01").unwrap(),
                },
            ],
            vec![],
            parse_timestamp("2020-03-01").unwrap(),
        )
        .unwrap();
        let before = d.clone();
        let report = validate_dataset(&d, &ValidationOptions::default());
        assert_eq!(
            report.ordering_flags,
            vec![OrderingFlag {
                package: "p".into(),
                earlier_version: "2.0.0".into(),
                later_version: "1.9.0".into(),
                problem: OrderingProblem::VersionRegression,
            }]
        );
        assert!(report.has_errors());
        assert_eq!(d, before);
    }

    #[test]
    fn mass_import_month_is_a_burst() {
        let mut packages = Vec::new();
        let mut releases = Vec::new();
        // A year of quiet history: 5 releases per month.
        for m in 1..=12u32 {
            for k in 0..5 {
                let name = format!("q{m}-{k}");
                packages.push(PackageRecord {
                    name: name.clone(),
                    ecosystem: "x".into(),
                });
                releases.push(ReleaseRecord {
                    package: name,
                    version: "1.0.0".into(),
                    timestamp: parse_timestamp(&format!("2015-{m:02}-10")).unwrap(),
                });
            }
        }
        packages.push(PackageRecord {
            name: "bulk".into(),
            ecosystem: "x".into(),
        });
        let t0 = parse_timestamp("2016-01-01").unwrap();
        for i in 0..25_000i64 {
            releases.push(ReleaseRecord {
                package: "bulk".into(),
                version: format!("0.0.{i}"),
                timestamp: t0 + chrono::Duration::seconds(i),
            });
        }
        let d = Dataset::new("x", packages, releases, vec![], parse_timestamp("2016-02-01").unwrap())
            .unwrap();
        let report = validate_dataset(&d, &ValidationOptions::default());
        assert_eq!(report.bursts.len(), 1);
        assert_eq!(report.bursts[0].month.to_string(), "2016-01");
        assert_eq!(report.bursts[0].releases, 25_000);
        assert_eq!(report.bursts[0].trailing_median, 5.0);
        assert!(!report.has_errors());

        let lenient = ValidationOptions {
            burst_factor: 10_000.0,
        };
        assert!(validate_dataset(&d, &lenient).bursts.is_empty());
    }
}
