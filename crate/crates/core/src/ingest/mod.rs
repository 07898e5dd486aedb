//! Loading release metadata into a [`Dataset`].
//!
//! A dataset is read from three CSV files (packages, releases, dependency
//! declarations), checked for structural consistency, and then narrowed by
//! [`filter_dependencies`] to the dependency kinds that matter for install
//! and run time.

mod filter;
mod io;
mod validate;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{format_timestamp, Timestamp};

pub use filter::{
    filter_dependencies, read_exclusion_list, FilterReport, DEFAULT_INCLUDED_KINDS,
    EXCLUDED_KINDS,
};
pub use io::{parse_dataset, write_csv_files, DatasetPaths};
pub use validate::{
    validate_dataset, BurstWarning, OrderingFlag, ValidationOptions, ValidationReport,
};

/// Ecosystem identifier used when the input does not name one.
pub const DEFAULT_ECOSYSTEM: &str = "default";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: missing column `{column}` in header")]
    MissingColumn { path: String, column: &'static str },
    #[error("{path}:{line}: column `{column}`: {message}")]
    Field {
        path: String,
        line: u64,
        column: &'static str,
        message: String,
    },
    #[error("{path}: duplicate package `{name}` on lines {first_line} and {second_line}")]
    DuplicatePackage {
        path: String,
        name: String,
        first_line: u64,
        second_line: u64,
    },
    #[error(
        "{path}: duplicate release {package}@{version} on lines {first_line} and {second_line}"
    )]
    DuplicateRelease {
        path: String,
        package: String,
        version: String,
        first_line: u64,
        second_line: u64,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PackageRecord {
    pub name: String,
    pub ecosystem: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReleaseRecord {
    pub package: String,
    pub version: String,
    pub timestamp: Timestamp,
}

/// One declared dependency of one release. The constraint string is carried
/// through untouched.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependencyRecord {
    pub source_package: String,
    pub source_version: String,
    pub target_package: String,
    pub constraint: String,
    pub kind: String,
}

/// Packages, releases and dependency declarations of one ecosystem, observed
/// up to `cutoff`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ecosystem: String,
    packages: Vec<PackageRecord>,
    releases: Vec<ReleaseRecord>,
    dependencies: Vec<DependencyRecord>,
    cutoff: Timestamp,
    filter_report: FilterReport,
}

impl Dataset {
    /// Builds a dataset from in-memory records, enforcing the structural
    /// invariants: unique package names, unique releases of known packages,
    /// dependency sources that name an existing release, and a cutoff no
    /// earlier than the last release.
    ///
    /// Dependency targets are not checked here; unresolved targets are the
    /// business of [`filter_dependencies`].
    pub fn new(
        ecosystem: impl Into<String>,
        packages: Vec<PackageRecord>,
        releases: Vec<ReleaseRecord>,
        dependencies: Vec<DependencyRecord>,
        cutoff: Timestamp,
    ) -> Result<Self, IngestError> {
        let mut names = HashSet::with_capacity(packages.len());
        for p in &packages {
            if p.name.is_empty() {
                return Err(IngestError::Invalid("empty package name".into()));
            }
            if !names.insert(p.name.as_str()) {
                return Err(IngestError::Invalid(format!(
                    "duplicate package `{}`",
                    p.name
                )));
            }
        }
        let mut known_releases = HashSet::with_capacity(releases.len());
        for r in &releases {
            if !names.contains(r.package.as_str()) {
                return Err(IngestError::Invalid(format!(
                    "release {}@{} of unknown package",
                    r.package, r.version
                )));
            }
            if !known_releases.insert((r.package.as_str(), r.version.as_str())) {
                return Err(IngestError::Invalid(format!(
                    "duplicate release {}@{}",
                    r.package, r.version
                )));
            }
            if r.timestamp > cutoff {
                return Err(IngestError::Invalid(format!(
                    "release {}@{} at {} is after the cutoff {}",
                    r.package,
                    r.version,
                    format_timestamp(&r.timestamp),
                    format_timestamp(&cutoff)
                )));
            }
        }
        for dep in &dependencies {
            if !known_releases.contains(&(dep.source_package.as_str(), dep.source_version.as_str()))
            {
                return Err(IngestError::Invalid(format!(
                    "dependency declared by unknown release {}@{}",
                    dep.source_package, dep.source_version
                )));
            }
        }
        Ok(Self {
            ecosystem: ecosystem.into(),
            packages,
            releases,
            dependencies,
            cutoff,
            filter_report: FilterReport::default(),
        })
    }

    pub(crate) fn from_parts_unchecked(
        ecosystem: String,
        packages: Vec<PackageRecord>,
        releases: Vec<ReleaseRecord>,
        dependencies: Vec<DependencyRecord>,
        cutoff: Timestamp,
        filter_report: FilterReport,
    ) -> Self {
        Self {
            ecosystem,
            packages,
            releases,
            dependencies,
            cutoff,
            filter_report,
        }
    }

    /// Renames the ecosystem, including on every package record.
    pub fn with_ecosystem(mut self, ecosystem: impl Into<String>) -> Self {
        self.ecosystem = ecosystem.into();
        for p in &mut self.packages {
            p.ecosystem.clone_from(&self.ecosystem);
        }
        self
    }

    /// Moves the end of observation. Fails when a release lies after `cutoff`.
    pub fn with_cutoff(mut self, cutoff: Timestamp) -> Result<Self, IngestError> {
        if let Some(last) = self.last_release_time().filter(|t| *t > cutoff) {
            return Err(IngestError::Invalid(format!(
                "cutoff {} precedes the release at {}",
                format_timestamp(&cutoff),
                format_timestamp(&last)
            )));
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn ecosystem(&self) -> &str {
        &self.ecosystem
    }

    pub fn packages(&self) -> &[PackageRecord] {
        &self.packages
    }

    pub fn releases(&self) -> &[ReleaseRecord] {
        &self.releases
    }

    pub fn dependencies(&self) -> &[DependencyRecord] {
        &self.dependencies
    }

    pub fn cutoff(&self) -> Timestamp {
        self.cutoff
    }

    pub fn filter_report(&self) -> &FilterReport {
        &self.filter_report
    }

    /// Earliest release timestamp, if any release exists.
    pub fn first_release_time(&self) -> Option<Timestamp> {
        self.releases.iter().map(|r| r.timestamp).min()
    }

    /// Latest release timestamp, if any release exists.
    pub fn last_release_time(&self) -> Option<Timestamp> {
        self.releases.iter().map(|r| r.timestamp).max()
    }

    /// Releases grouped by package and sorted chronologically (ties broken
    /// by version order). Packages without releases are absent.
    pub fn releases_by_package(&self) -> HashMap<&str, Vec<&ReleaseRecord>> {
        let mut by_pkg: HashMap<&str, Vec<&ReleaseRecord>> = HashMap::new();
        for r in &self.releases {
            by_pkg.entry(r.package.as_str()).or_default().push(r);
        }
        for list in by_pkg.values_mut() {
            list.sort_by(|a, b| chronological(a, b));
        }
        by_pkg
    }
}

/// Order of releases within one package: timestamp first, version order on
/// ties.
pub(crate) fn chronological(a: &ReleaseRecord, b: &ReleaseRecord) -> std::cmp::Ordering {
    a.timestamp
        .cmp(&b.timestamp)
        .then_with(|| crate::version::compare_versions(&a.version, &b.version))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::parse_timestamp;

    #[test]
    fn cutoff_can_move_but_not_before_a_release() {
        let d = crate::fixtures::tiny();
        let later = d.clone().with_cutoff(parse_timestamp("2021-01-01").unwrap()).unwrap();
        assert_eq!(later.cutoff(), parse_timestamp("2021-01-01").unwrap());
        assert!(d.with_cutoff(parse_timestamp("2020-03-09").unwrap()).is_err());
    }

    fn pkg(name: &str) -> PackageRecord {
        PackageRecord {
            name: name.into(),
            ecosystem: DEFAULT_ECOSYSTEM.into(),
        }
    }

    fn rel(p: &str, v: &str, t: &str) -> ReleaseRecord {
        ReleaseRecord {
            package: p.into(),
            version: v.into(),
            timestamp: parse_timestamp(t).unwrap(),
        }
    }

    #[test]
    fn new_rejects_structural_violations() {
        let cutoff = parse_timestamp("2020-04-01").unwrap();
        let dup = Dataset::new("x", vec![pkg("a"), pkg("a")], vec![], vec![], cutoff);
        assert!(matches!(dup, Err(IngestError::Invalid(_))));

        let late = Dataset::new(
            "x",
            vec![pkg("a")],
            vec![rel("a", "1", "2020-05-01")],
            vec![],
            cutoff,
        );
        assert!(late.is_err());

        let orphan = Dataset::new(
            "x",
            vec![pkg("a")],
            vec![rel("a", "1", "2020-01-01")],
            vec![DependencyRecord {
                source_package: "a".into(),
                source_version: "2".into(),
                target_package: "a".into(),
                constraint: String::new(),
                kind: "runtime".into(),
            }],
            cutoff,
        );
        assert!(orphan.is_err());
    }

    #[test]
    fn releases_by_package_breaks_timestamp_ties_by_version() {
        let cutoff = parse_timestamp("2020-04-01").unwrap();
        let d = Dataset::new(
            "x",
            vec![pkg("a")],
            vec![
                rel("a", "1.10.0", "2020-01-01"),
                rel("a", "1.9.0", "2020-01-01"),
                rel("a", "1.0.0", "2019-01-01"),
            ],
            vec![],
            cutoff,
        )
        .unwrap();
        let by = d.releases_by_package();
        let versions: Vec<_> = by["a"].iter().map(|r| r.version.as_str()).collect();
        assert_eq!(versions, ["1.0.0", "1.9.0", "1.10.0"]);
    }
}
