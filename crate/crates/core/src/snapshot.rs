//! Package-level dependency networks at a point in time.
//!
//! A [`Timeline`] indexes a [`Dataset`] once (interned package names,
//! per-package chronological release lists, resolved dependency targets) so
//! that the network at any instant can be rebuilt cheaply. The network at
//! `t` has one node per package with a release at or before `t` and an edge
//! `p -> q` whenever the latest release of `p` at `t` declares a dependency
//! on `q` and `q` already exists.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{chronological, Dataset, ReleaseRecord};
use crate::time::{Month, Timestamp};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("month range {from}..{to} is inverted")]
    InvertedRange { from: Month, to: Month },
    #[error("edge endpoint `{0}` is not a node")]
    UnknownNode(String),
}

#[derive(Debug, Clone)]
pub(crate) struct TimelineRelease {
    pub(crate) version: Arc<str>,
    pub(crate) timestamp: Timestamp,
    /// Known target packages, sorted, deduplicated, self excluded.
    pub(crate) targets: Box<[u32]>,
    /// Rows naming a package absent from the dataset.
    pub(crate) unresolved: u32,
}

/// Index over a dataset for fast point-in-time reconstruction.
#[derive(Debug, Clone)]
pub struct Timeline {
    ecosystem: Arc<str>,
    names: Vec<Arc<str>>,
    releases: Vec<Vec<TimelineRelease>>,
}

impl Timeline {
    pub fn new(d: &Dataset) -> Self {
        let mut names: Vec<Arc<str>> = d.packages().iter().map(|p| Arc::from(p.name.as_str())).collect();
        names.sort_unstable();
        let ids: HashMap<&str, u32> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (&**n, i as u32))
            .collect();

        let mut rows: HashMap<(&str, &str), (Vec<u32>, u32)> = HashMap::new();
        for dep in d.dependencies() {
            let entry = rows
                .entry((dep.source_package.as_str(), dep.source_version.as_str()))
                .or_default();
            match ids.get(dep.target_package.as_str()) {
                Some(&t) if dep.target_package != dep.source_package => entry.0.push(t),
                Some(_) => {}
                None => entry.1 += 1,
            }
        }

        let mut per_pkg: Vec<Vec<&ReleaseRecord>> = vec![Vec::new(); names.len()];
        for r in d.releases() {
            if let Some(&id) = ids.get(r.package.as_str()) {
                per_pkg[id as usize].push(r);
            }
        }
        let releases = per_pkg
            .into_iter()
            .map(|mut list| {
                list.sort_by(|a, b| chronological(a, b));
                list.into_iter()
                    .map(|r| {
                        let (mut targets, unresolved) = rows
                            .remove(&(r.package.as_str(), r.version.as_str()))
                            .unwrap_or_default();
                        targets.sort_unstable();
                        targets.dedup();
                        TimelineRelease {
                            version: Arc::from(r.version.as_str()),
                            timestamp: r.timestamp,
                            targets: targets.into_boxed_slice(),
                            unresolved,
                        }
                    })
                    .collect()
            })
            .collect();

        Self {
            ecosystem: Arc::from(d.ecosystem()),
            names,
            releases,
        }
    }

    pub fn ecosystem(&self) -> &str {
        &self.ecosystem
    }

    pub fn package_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub(crate) fn releases_of(&self, id: usize) -> &[TimelineRelease] {
        &self.releases[id]
    }

    /// Release timestamps of package `id` in chronological order.
    pub fn release_times(&self, id: usize) -> impl Iterator<Item = Timestamp> + '_ {
        self.releases[id].iter().map(|r| r.timestamp)
    }

    /// Index of the latest release of `id` at `t`, if it existed by then.
    pub(crate) fn latest_index_at(&self, id: usize, t: Timestamp) -> Option<usize> {
        self.releases[id]
            .partition_point(|r| r.timestamp <= t)
            .checked_sub(1)
    }

    pub fn latest_releases_at(&self, t: Timestamp) -> BTreeMap<String, ReleaseRecord> {
        (0..self.names.len())
            .filter_map(|id| {
                let idx = self.latest_index_at(id, t)?;
                let r = &self.releases[id][idx];
                Some((
                    self.names[id].to_string(),
                    ReleaseRecord {
                        package: self.names[id].to_string(),
                        version: r.version.to_string(),
                        timestamp: r.timestamp,
                    },
                ))
            })
            .collect()
    }

    /// The dependency network at instant `t`.
    pub fn snapshot_at(&self, t: Timestamp) -> SnapshotGraph {
        let mut local = vec![u32::MAX; self.names.len()];
        let mut globals = Vec::new();
        let mut latest = Vec::new();
        for id in 0..self.names.len() {
            if let Some(idx) = self.latest_index_at(id, t) {
                local[id] = globals.len() as u32;
                globals.push(id);
                let r = &self.releases[id][idx];
                latest.push(LatestRelease {
                    version: r.version.clone(),
                    timestamp: r.timestamp,
                });
            }
        }

        let mut dropped = 0usize;
        let mut edges = Vec::new();
        for (src, &id) in globals.iter().enumerate() {
            let idx = self.latest_index_at(id, t).expect("node has a release");
            let r = &self.releases[id][idx];
            dropped += r.unresolved as usize;
            for &tgt in r.targets.iter() {
                match local[tgt as usize] {
                    u32::MAX => dropped += 1,
                    l => edges.push((src as u32, l)),
                }
            }
        }

        let names = globals.iter().map(|&id| self.names[id].clone()).collect();
        let mut g = SnapshotGraph::from_sorted_parts(self.ecosystem.clone(), t, names, edges);
        g.latest = latest;
        g.dropped_dependencies = dropped;
        g
    }

    /// One snapshot at the first instant of every month in `from..=to`.
    /// Months are built in parallel on the current rayon pool.
    pub fn monthly_snapshots(&self, from: Month, to: Month) -> Result<SnapshotSeries, SnapshotError> {
        let months = month_range(from, to)?;
        let snapshots = months
            .par_iter()
            .map(|m| self.snapshot_at(m.start()))
            .collect();
        Ok(SnapshotSeries { snapshots })
    }
}

/// The months `from..=to`, or an error when the range is inverted.
pub fn month_range(from: Month, to: Month) -> Result<Vec<Month>, SnapshotError> {
    if from > to {
        return Err(SnapshotError::InvertedRange { from, to });
    }
    Ok(Month::range_inclusive(from, to).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatestRelease {
    pub version: Arc<str>,
    pub timestamp: Timestamp,
}

/// Compressed adjacency lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Adjacency {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Adjacency {
    /// `edges` must be sorted by source.
    fn from_sorted(n: usize, edges: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut offsets = vec![0u32; n + 1];
        let mut targets = Vec::new();
        for (s, t) in edges {
            offsets[s as usize + 1] += 1;
            targets.push(t);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Self { offsets, targets }
    }

    #[inline]
    pub(crate) fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    #[inline]
    pub(crate) fn degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub(crate) fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }
}

/// Immutable package-level dependency network at one instant.
///
/// Nodes are numbered `0..node_count()` in ascending name order; edges
/// point from a dependent package to the package it requires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotGraph {
    ecosystem: Arc<str>,
    at: Timestamp,
    names: Vec<Arc<str>>,
    latest: Vec<LatestRelease>,
    out: Adjacency,
    inc: Adjacency,
    dropped_dependencies: usize,
}

impl SnapshotGraph {
    /// Builds a graph from explicit nodes and edges. Duplicate edges and
    /// self-loops are discarded; endpoints must be nodes.
    pub fn from_edges<N, E, S>(at: Timestamp, nodes: N, edges: E) -> Result<Self, SnapshotError>
    where
        N: IntoIterator<Item = S>,
        E: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut names: Vec<Arc<str>> = nodes.into_iter().map(|s| Arc::from(s.as_ref())).collect();
        names.sort_unstable();
        names.dedup();
        let lookup = |s: &str| {
            names
                .binary_search_by(|n| (**n).cmp(s))
                .map(|i| i as u32)
                .map_err(|_| SnapshotError::UnknownNode(s.to_owned()))
        };
        let mut pairs = Vec::new();
        for (a, b) in edges {
            let (a, b) = (lookup(a.as_ref())?, lookup(b.as_ref())?);
            if a != b {
                pairs.push((a, b));
            }
        }
        Ok(Self::from_sorted_parts(
            Arc::from(crate::ingest::DEFAULT_ECOSYSTEM),
            at,
            names,
            pairs,
        ))
    }

    fn from_sorted_parts(
        ecosystem: Arc<str>,
        at: Timestamp,
        names: Vec<Arc<str>>,
        mut edges: Vec<(u32, u32)>,
    ) -> Self {
        let n = names.len();
        edges.sort_unstable();
        edges.dedup();
        let out = Adjacency::from_sorted(n, edges.iter().copied());
        let mut rev: Vec<(u32, u32)> = edges.iter().map(|&(a, b)| (b, a)).collect();
        rev.sort_unstable();
        let inc = Adjacency::from_sorted(n, rev.into_iter());
        Self {
            ecosystem,
            at,
            names,
            latest: Vec::new(),
            out,
            inc,
            dropped_dependencies: 0,
        }
    }

    pub fn with_ecosystem(mut self, ecosystem: &str) -> Self {
        self.ecosystem = Arc::from(ecosystem);
        self
    }

    pub fn ecosystem(&self) -> &str {
        &self.ecosystem
    }

    pub fn at(&self) -> Timestamp {
        self.at
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.targets.len()
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| (**n).cmp(name)).ok()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    /// Node names in id order (ascending).
    pub fn names(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.names.iter().map(|n| &**n)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        (0..self.node_count()).flat_map(move |s| {
            self.out
                .neighbors(s)
                .iter()
                .map(move |&t| (self.name(s), self.name(t as usize)))
        })
    }

    /// Packages that node `id` depends on directly.
    pub fn successors(&self, id: usize) -> &[u32] {
        self.out.neighbors(id)
    }

    /// Packages that depend directly on node `id`.
    pub fn predecessors(&self, id: usize) -> &[u32] {
        self.inc.neighbors(id)
    }

    pub fn out_degree(&self, id: usize) -> usize {
        self.out.degree(id)
    }

    pub fn in_degree(&self, id: usize) -> usize {
        self.inc.degree(id)
    }

    pub(crate) fn out_adjacency(&self) -> &Adjacency {
        &self.out
    }

    pub(crate) fn in_adjacency(&self) -> &Adjacency {
        &self.inc
    }

    /// The release that represents node `id`. Absent for graphs built with
    /// [`SnapshotGraph::from_edges`].
    pub fn latest(&self, id: usize) -> Option<&LatestRelease> {
        self.latest.get(id)
    }

    /// Dependency rows of the represented releases whose target did not
    /// exist at `at()`.
    pub fn dropped_dependencies(&self) -> usize {
        self.dropped_dependencies
    }
}

/// Snapshots at the first instant of consecutive calendar months.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotSeries {
    snapshots: Vec<SnapshotGraph>,
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SnapshotGraph> {
        self.snapshots.iter()
    }

    pub fn get(&self, i: usize) -> Option<&SnapshotGraph> {
        self.snapshots.get(i)
    }
}

impl<'a> IntoIterator for &'a SnapshotSeries {
    type Item = &'a SnapshotGraph;
    type IntoIter = std::slice::Iter<'a, SnapshotGraph>;

    fn into_iter(self) -> Self::IntoIter {
        self.snapshots.iter()
    }
}

/// Latest release of every package that existed at `t`.
pub fn latest_releases_at(d: &Dataset, t: Timestamp) -> BTreeMap<String, ReleaseRecord> {
    Timeline::new(d).latest_releases_at(t)
}

pub fn build_snapshot(d: &Dataset, t: Timestamp) -> SnapshotGraph {
    Timeline::new(d).snapshot_at(t)
}

pub fn monthly_snapshots(d: &Dataset, from: Month, to: Month) -> Result<SnapshotSeries, SnapshotError> {
    Timeline::new(d).monthly_snapshots(from, to)
}
