use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError};

/// Dependency kinds needed to install and run a package, across the
/// ecosystems covered by libraries.io style dumps.
pub const DEFAULT_INCLUDED_KINDS: [&str; 4] = ["runtime", "imports", "depends", "normal"];

/// Kinds that only matter for development, testing, building, or that are
/// optional.
pub const EXCLUDED_KINDS: [&str; 9] = [
    "development",
    "optional",
    "enhances",
    "suggests",
    "build",
    "configure",
    "test",
    "develop",
    "dev",
];

/// Per-rule counts of records removed by [`filter_dependencies`].
///
/// Counts accumulate over repeated filtering; `input_dependencies` is the
/// number of dependency rows seen by the first filtering pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub filtered: bool,
    pub input_dependencies: usize,
    /// Rows whose kind is not in the include list.
    pub kind_dropped: usize,
    /// Packages removed by the exclusion list.
    pub excluded_packages: usize,
    /// Releases of excluded packages.
    pub excluded_releases: usize,
    /// Rows declared by, or targeting, an excluded package.
    pub excluded_dependencies: usize,
    /// Repeated (source release, target, kind) rows; the first one is kept.
    pub duplicate_dependencies: usize,
    /// Rows whose target is not a known package.
    pub unresolved_dropped: usize,
}

impl FilterReport {
    /// Unresolved rows as a fraction of the dependency rows before
    /// filtering; 0 when there were none.
    pub fn unresolved_fraction(&self) -> f64 {
        if self.input_dependencies == 0 {
            0.0
        } else {
            self.unresolved_dropped as f64 / self.input_dependencies as f64
        }
    }

    pub fn total_dependencies_dropped(&self) -> usize {
        self.kind_dropped
            + self.excluded_dependencies
            + self.duplicate_dependencies
            + self.unresolved_dropped
    }
}

/// Restricts `d` to the dependency kinds in `included_kinds`, removes the
/// packages listed in `excluded_packages` together with their releases and
/// every row they declare or are targeted by, drops repeated rows, and
/// finally drops rows whose target package is unknown.
///
/// Kind tags in `included_kinds` are matched after trimming and lowercasing.
/// Applying the same filter twice leaves the dataset unchanged.
pub fn filter_dependencies(
    d: Dataset,
    included_kinds: &BTreeSet<String>,
    excluded_packages: &BTreeSet<String>,
) -> Dataset {
    let kinds: HashSet<String> = included_kinds
        .iter()
        .map(|k| k.trim().to_lowercase())
        .collect();
    let Dataset {
        ecosystem,
        packages,
        releases,
        dependencies,
        cutoff,
        mut filter_report,
    } = d;

    if !filter_report.filtered {
        filter_report.filtered = true;
        filter_report.input_dependencies = dependencies.len();
    }

    let before = packages.len();
    let packages: Vec<_> = packages
        .into_iter()
        .filter(|p| !excluded_packages.contains(&p.name))
        .collect();
    filter_report.excluded_packages += before - packages.len();

    let before = releases.len();
    let releases: Vec<_> = releases
        .into_iter()
        .filter(|r| !excluded_packages.contains(&r.package))
        .collect();
    filter_report.excluded_releases += before - releases.len();

    let known: HashSet<&str> = packages.iter().map(|p| p.name.as_str()).collect();
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(dependencies.len());
    for dep in dependencies {
        if !kinds.contains(&dep.kind) {
            filter_report.kind_dropped += 1;
        } else if excluded_packages.contains(&dep.source_package)
            || excluded_packages.contains(&dep.target_package)
        {
            filter_report.excluded_dependencies += 1;
        } else if !seen.insert((
            dep.source_package.clone(),
            dep.source_version.clone(),
            dep.target_package.clone(),
            dep.kind.clone(),
        )) {
            filter_report.duplicate_dependencies += 1;
        } else if !known.contains(dep.target_package.as_str()) {
            filter_report.unresolved_dropped += 1;
        } else {
            kept.push(dep);
        }
    }

    Dataset {
        ecosystem,
        packages,
        releases,
        dependencies: kept,
        cutoff,
        filter_report,
    }
}

/// Reads a package exclusion list: one name per line, blank lines and lines
/// starting with `#` ignored.
pub fn read_exclusion_list(path: &Path) -> Result<BTreeSet<String>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}
