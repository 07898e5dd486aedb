//! Datasets for tests and benchmarks: the hand-checked five-package fixture
//! and a seeded synthetic ecosystem generator.
//!
//! The generator draws from ChaCha8 (`rand_chacha` 0.9) seeded with
//! `seed_from_u64`, and consumes the stream in a fixed order, so the output
//! depends on the configuration alone.

use std::path::Path;

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{
    write_csv_files, Dataset, DependencyRecord, IngestError, PackageRecord, ReleaseRecord,
    DEFAULT_ECOSYSTEM,
};
use crate::time::{parse_timestamp, Month, Timestamp};

pub const MANIFEST_FILE: &str = "manifest.json";

/// The five-package fixture `a`..`e` with seven releases and five runtime
/// dependencies, observed up to 2020-04-01.
pub fn tiny() -> Dataset {
    let ts = |s: &str| parse_timestamp(s).expect("fixture timestamp");
    let packages = ["a", "b", "c", "d", "e"]
        .iter()
        .map(|n| PackageRecord {
            name: (*n).to_owned(),
            ecosystem: DEFAULT_ECOSYSTEM.to_owned(),
        })
        .collect();
    let releases = [
        ("e", "1.0.0", "2020-01-05"),
        ("a", "1.0.0", "2020-01-10"),
        ("b", "1.0.0", "2020-01-20"),
        ("c", "1.0.0", "2020-02-03"),
        ("a", "1.1.0", "2020-02-15"),
        ("c", "2.0.0", "2020-03-05"),
        ("d", "1.0.0", "2020-03-10"),
    ]
    .iter()
    .map(|&(p, v, t)| ReleaseRecord {
        package: p.to_owned(),
        version: v.to_owned(),
        timestamp: ts(t),
    })
    .collect();
    let dependencies = [
        ("a", "1.1.0", "b", "^1.0.0"),
        ("c", "1.0.0", "a", "^1.0.0"),
        ("c", "2.0.0", "a", "^1.1.0"),
        ("c", "2.0.0", "b", ">=1.0.0"),
        ("d", "1.0.0", "c", "^2.0.0"),
    ]
    .iter()
    .map(|&(sp, sv, tp, c)| DependencyRecord {
        source_package: sp.to_owned(),
        source_version: sv.to_owned(),
        target_package: tp.to_owned(),
        constraint: c.to_owned(),
        kind: "runtime".to_owned(),
    })
    .collect();
    Dataset::new(DEFAULT_ECOSYSTEM, packages, releases, dependencies, ts("2020-04-01"))
        .expect("fixture is consistent")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("n_packages must be positive")]
    NoPackages,
    #[error("months must be positive")]
    NoMonths,
    #[error("{field} must be a finite number >= 0, got {value}")]
    OutOfRange { field: &'static str, value: f64 },
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_packages: usize,
    pub months: u32,
    pub seed: u64,
    /// Exponent on `in_degree + 1` when picking dependency targets; 0 picks
    /// uniformly.
    pub attachment_bias: f64,
    /// Mean number of dependencies declared by a first release.
    pub mean_deps: f64,
    /// Expected updates per package per month.
    pub update_rate: f64,
    pub start: Month,
    pub ecosystem: String,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_packages: 1000,
            months: 24,
            seed: 0,
            attachment_bias: 1.0,
            mean_deps: 2.0,
            update_rate: 0.3,
            start: Month::new(2015, 1).expect("valid month"),
            ecosystem: "synthetic".to_owned(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_packages == 0 {
            return Err(ConfigError::NoPackages);
        }
        if self.months == 0 {
            return Err(ConfigError::NoMonths);
        }
        for (field, value) in [
            ("attachment_bias", self.attachment_bias),
            ("mean_deps", self.mean_deps),
            ("update_rate", self.update_rate),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(ConfigError::OutOfRange { field, value });
            }
        }
        Ok(())
    }

    /// First instant after the generated history.
    pub fn cutoff(&self) -> Timestamp {
        self.start.plus(self.months).start()
    }
}

/// Fenwick tree over sampling weights.
struct Weights {
    tree: Vec<f64>,
    raw: Vec<f64>,
}

impl Weights {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0.0; n + 1],
            raw: vec![0.0; n],
        }
    }

    fn set(&mut self, i: usize, w: f64) {
        let delta = w - self.raw[i];
        self.raw[i] = w;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut k = self.raw.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Index whose cumulative weight interval contains `u`.
    fn find(&self, mut u: f64) -> usize {
        let n = self.raw.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                pos = next;
                u -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

fn poisson(rng: &mut ChaCha8Rng, dist: &Option<Poisson<f64>>) -> u64 {
    dist.as_ref().map_or(0, |p| p.sample(rng) as u64)
}

/// Generates a synthetic ecosystem.
///
/// Package `i` first appears at an evenly spaced instant of the history and
/// declares Poisson(`mean_deps`) distinct dependencies on earlier packages,
/// chosen with probability proportional to `(in_degree + 1)^attachment_bias`.
/// From its arrival month on it publishes Poisson(`update_rate`) updates a
/// month that keep the dependencies of its first release.
pub fn generate(cfg: &GeneratorConfig) -> Result<Dataset, FixtureError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let deps_dist = (cfg.mean_deps > 0.0).then(|| Poisson::new(cfg.mean_deps).expect("positive mean"));
    let update_dist = (cfg.update_rate > 0.0).then(|| Poisson::new(cfg.update_rate).expect("positive rate"));

    let n = cfg.n_packages;
    let origin = cfg.start.start();
    let cutoff = cfg.cutoff();
    let span = (cutoff - origin).num_seconds();
    let names: Vec<String> = (0..n).map(|i| format!("pkg{i:06}")).collect();
    let weight = |indeg: u32| (indeg as f64 + 1.0).powf(cfg.attachment_bias);

    let mut weights = Weights::new(n);
    let mut indeg = vec![0u32; n];
    let mut targets_of: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut first_release: Vec<Timestamp> = Vec::with_capacity(n);
    for i in 0..n {
        first_release.push(origin + Duration::seconds(i as i64 * span / n as i64));
        let k = (poisson(&mut rng, &deps_dist) as usize).min(i);
        let mut chosen: Vec<u32> = Vec::with_capacity(k);
        while chosen.len() < k {
            let total = weights.total();
            let j = weights.find(rng.random::<f64>() * total);
            if weights.raw[j] == 0.0 {
                // Landed on a chosen target through rounding; draw again.
                continue;
            }
            chosen.push(j as u32);
            weights.set(j, 0.0);
        }
        for &j in &chosen {
            indeg[j as usize] += 1;
            weights.set(j as usize, weight(indeg[j as usize]));
        }
        chosen.sort_unstable();
        targets_of.push(chosen);
        weights.set(i, weight(0));
    }

    let last_month = cfg.start.plus(cfg.months - 1);
    let mut releases = Vec::new();
    let mut dependencies = Vec::new();
    for i in 0..n {
        let mut times = vec![first_release[i]];
        let mut month = Month::of(&first_release[i]);
        loop {
            let updates = poisson(&mut rng, &update_dist);
            let (lo, hi) = (month.start(), month.succ().start());
            let lo_secs = (lo - origin).num_seconds();
            let hi_secs = (hi - origin).num_seconds();
            let mut offsets: Vec<i64> = (0..updates)
                .map(|_| rng.random_range(lo_secs..hi_secs))
                .collect();
            offsets.sort_unstable();
            for off in offsets {
                let prev = *times.last().expect("first release");
                let t = (origin + Duration::seconds(off)).max(prev + Duration::seconds(1));
                if t < hi {
                    times.push(t);
                }
            }
            if month == last_month {
                break;
            }
            month = month.succ();
        }
        for (k, t) in times.into_iter().enumerate() {
            let version = format!("1.0.{k}");
            for &j in &targets_of[i] {
                dependencies.push(DependencyRecord {
                    source_package: names[i].clone(),
                    source_version: version.clone(),
                    target_package: names[j as usize].clone(),
                    constraint: "^1.0.0".to_owned(),
                    kind: "runtime".to_owned(),
                });
            }
            releases.push(ReleaseRecord {
                package: names[i].clone(),
                version,
                timestamp: t,
            });
        }
    }

    let packages = names
        .into_iter()
        .map(|name| PackageRecord {
            name,
            ecosystem: cfg.ecosystem.clone(),
        })
        .collect();
    Ok(Dataset::new(cfg.ecosystem.clone(), packages, releases, dependencies, cutoff)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowCounts {
    pub packages: usize,
    pub releases: usize,
    pub dependencies: usize,
}

/// Sidecar describing a dataset directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub cutoff: Timestamp,
    #[serde(default)]
    pub ecosystem: Option<String>,
    #[serde(default)]
    pub rows: Option<RowCounts>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: Option<GeneratorConfig>,
    /// SHA-256 over the packages, releases and dependencies files, in that
    /// order.
    #[serde(default)]
    pub sha256: Option<String>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest, FixtureError> {
    let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FixtureError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the three CSV files and a manifest with row counts, content hash
/// and, for generated data, the configuration.
pub fn write_dataset(d: &Dataset, dir: &Path, config: Option<&GeneratorConfig>) -> Result<Manifest, FixtureError> {
    let paths = write_csv_files(d, dir)?;
    let mut hasher = Sha256::new();
    for p in [&paths.packages, &paths.releases, &paths.dependencies] {
        let bytes = std::fs::read(p).map_err(|source| FixtureError::Io {
            path: p.display().to_string(),
            source,
        })?;
        hasher.update(&bytes);
    }
    let sha = hex::encode(hasher.finalize());
    let manifest = Manifest {
        cutoff: d.cutoff(),
        ecosystem: Some(d.ecosystem().to_owned()),
        rows: Some(RowCounts {
            packages: d.packages().len(),
            releases: d.releases().len(),
            dependencies: d.dependencies().len(),
        }),
        seed: config.map(|c| c.seed),
        config: config.cloned(),
        sha256: Some(sha),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json + "\n").map_err(|source| FixtureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_dataset, validate_dataset, DatasetPaths, ValidationOptions};
    use crate::snapshot::Timeline;

    fn fixture_dir() -> std::path::PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tiny")
    }

    #[test]
    fn shipped_tiny_files_match() {
        let dir = fixture_dir();
        let manifest = read_manifest(&dir.join(MANIFEST_FILE)).unwrap();
        let d = parse_dataset(&DatasetPaths::in_dir(&dir), manifest.cutoff).unwrap();
        assert_eq!(d, tiny());
        assert_eq!(
            (d.packages().len(), d.releases().len(), d.dependencies().len()),
            (5, 7, 5)
        );
    }

    #[test]
    fn tiny_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_dataset(&tiny(), dir.path(), None).unwrap();
        assert_eq!(m.rows.unwrap().dependencies, 5);
        let back = parse_dataset(&DatasetPaths::in_dir(dir.path()), m.cutoff).unwrap();
        assert_eq!(back, tiny());
        assert_eq!(read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap(), m);
    }

    #[test]
    fn empty_dataset_writes_headers_only() {
        let cutoff = parse_timestamp("2020-01-01").unwrap();
        let d = Dataset::new("x", vec![], vec![], vec![], cutoff).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&d, dir.path(), None).unwrap();
        let deps = std::fs::read_to_string(dir.path().join("dependencies.csv")).unwrap();
        assert_eq!(deps.lines().count(), 1);
    }

    #[test]
    fn deterministic() {
        let cfg = GeneratorConfig {
            n_packages: 5,
            months: 3,
            seed: 42,
            ..GeneratorConfig::default()
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = write_dataset(&generate(&cfg).unwrap(), a.path(), Some(&cfg)).unwrap();
        let mb = write_dataset(&generate(&cfg).unwrap(), b.path(), Some(&cfg)).unwrap();
        assert_eq!(ma.sha256, mb.sha256);
        for f in ["packages.csv", "releases.csv", "dependencies.csv", MANIFEST_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
        let other = generate(&GeneratorConfig { seed: 43, ..cfg.clone() }).unwrap();
        assert_ne!(other, generate(&cfg).unwrap());
    }

    #[test]
    fn generated_data_is_valid() {
        let cfg = GeneratorConfig {
            n_packages: 500,
            months: 12,
            seed: 7,
            update_rate: 1.5,
            ..GeneratorConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let report = validate_dataset(&d, &ValidationOptions::default());
        assert!(!report.has_errors(), "{report:?}");
        assert!(report.ordering_flags.is_empty());
        assert_eq!(d.packages().len(), 500);
        assert!(d.last_release_time().unwrap() < cfg.cutoff());
        // Round trip through files, manifest included.
        let dir = tempfile::tempdir().unwrap();
        let m = write_dataset(&d, dir.path(), Some(&cfg)).unwrap();
        assert_eq!(m.rows.unwrap().releases, d.releases().len());
        let back = parse_dataset(&DatasetPaths::in_dir(dir.path()), m.cutoff).unwrap();
        assert_eq!(back, d);
        assert_eq!(m.config, Some(cfg));
    }

    #[test]
    fn no_dependencies_when_mean_is_zero() {
        let cfg = GeneratorConfig {
            n_packages: 200,
            months: 6,
            mean_deps: 0.0,
            ..GeneratorConfig::default()
        };
        let d = generate(&cfg).unwrap();
        assert!(d.dependencies().is_empty());
        let tl = Timeline::new(&d);
        for m in Month::range_inclusive(cfg.start, cfg.start.plus(cfg.months)) {
            assert_eq!(tl.snapshot_at(m.start()).edge_count(), 0);
        }
    }

    #[test]
    fn invalid_configs() {
        let bad = |cfg: GeneratorConfig| generate(&cfg).is_err();
        assert!(bad(GeneratorConfig { n_packages: 0, ..Default::default() }));
        assert!(bad(GeneratorConfig { months: 0, ..Default::default() }));
        assert!(bad(GeneratorConfig { mean_deps: -1.0, ..Default::default() }));
        assert!(bad(GeneratorConfig { attachment_bias: f64::NAN, ..Default::default() }));
        assert!(bad(GeneratorConfig { update_rate: f64::INFINITY, ..Default::default() }));
    }

    #[test]
    fn fenwick_sampling() {
        let mut w = Weights::new(5);
        for (i, x) in [1.0, 0.0, 2.0, 0.0, 1.0].into_iter().enumerate() {
            w.set(i, x);
        }
        assert_eq!(w.total(), 4.0);
        assert_eq!(w.find(0.5), 0);
        assert_eq!(w.find(1.0), 2);
        assert_eq!(w.find(2.99), 2);
        assert_eq!(w.find(3.0), 4);
        assert_eq!(w.find(3.99), 4);
    }
}
