//! Structural queries on a [`SnapshotGraph`]: direct and transitive
//! (reverse) dependencies, package roles, weakly connected components, and
//! dependency-tree depth.

mod closure;
mod dsu;

use std::collections::{BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snapshot::{Adjacency, SnapshotGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("package `{0}` is not in the snapshot")]
    UnknownPackage(String),
}

fn lookup(g: &SnapshotGraph, p: &str) -> Result<usize, GraphError> {
    g.node_id(p)
        .ok_or_else(|| GraphError::UnknownPackage(p.to_owned()))
}

fn names<'g>(g: &'g SnapshotGraph, ids: impl IntoIterator<Item = usize>) -> BTreeSet<&'g str> {
    ids.into_iter().map(|i| g.name(i)).collect()
}

pub fn direct_dependencies<'g>(g: &'g SnapshotGraph, p: &str) -> Result<BTreeSet<&'g str>, GraphError> {
    let id = lookup(g, p)?;
    Ok(names(g, g.successors(id).iter().map(|&v| v as usize)))
}

pub fn direct_dependents<'g>(g: &'g SnapshotGraph, p: &str) -> Result<BTreeSet<&'g str>, GraphError> {
    let id = lookup(g, p)?;
    Ok(names(g, g.predecessors(id).iter().map(|&v| v as usize)))
}

/// Breadth-first levels from `src` along `adj`: `(node, level)` for every
/// node reached through at least one edge, `src` excluded.
fn bfs_levels(adj: &Adjacency, src: usize) -> Vec<(usize, usize)> {
    let mut seen = vec![false; adj.node_count()];
    seen[src] = true;
    let mut queue = VecDeque::from([(src, 0usize)]);
    let mut out = Vec::new();
    while let Some((v, lvl)) = queue.pop_front() {
        for &w in adj.neighbors(v) {
            let w = w as usize;
            if !seen[w] {
                seen[w] = true;
                out.push((w, lvl + 1));
                queue.push_back((w, lvl + 1));
            }
        }
    }
    out
}

/// Every package reachable from `p` through one or more edges. `p` itself
/// is never included, even when it lies on a cycle.
pub fn transitive_dependencies<'g>(
    g: &'g SnapshotGraph,
    p: &str,
) -> Result<BTreeSet<&'g str>, GraphError> {
    let id = lookup(g, p)?;
    Ok(names(g, bfs_levels(g.out_adjacency(), id).into_iter().map(|(v, _)| v)))
}

/// Every package that reaches `p` through one or more edges.
pub fn transitive_dependents<'g>(
    g: &'g SnapshotGraph,
    p: &str,
) -> Result<BTreeSet<&'g str>, GraphError> {
    let id = lookup(g, p)?;
    Ok(names(g, bfs_levels(g.in_adjacency(), id).into_iter().map(|(v, _)| v)))
}

/// Deepest breadth-first level among the transitive dependencies of `p`;
/// 0 when `p` has no dependencies.
pub fn dependency_depth(g: &SnapshotGraph, p: &str) -> Result<usize, GraphError> {
    let id = lookup(g, p)?;
    Ok(depth_of(g, id))
}

pub(crate) fn depth_of(g: &SnapshotGraph, id: usize) -> usize {
    if g.out_degree(id) == 0 {
        return 0;
    }
    bfs_levels(g.out_adjacency(), id)
        .last()
        .map_or(0, |&(_, lvl)| lvl)
}

/// Number of transitive dependents of every node, indexed by node id.
pub fn transitive_dependent_counts(g: &SnapshotGraph) -> Vec<u32> {
    closure::count_reachers(g.out_adjacency())
}

/// Number of transitive dependencies of every node, indexed by node id.
pub fn transitive_dependency_counts(g: &SnapshotGraph) -> Vec<u32> {
    closure::count_reachers(g.in_adjacency())
}

/// Dependency depth of every node, indexed by node id.
pub fn dependency_depths(g: &SnapshotGraph) -> Vec<usize> {
    (0..g.node_count())
        .into_par_iter()
        .map(|id| depth_of(g, id))
        .collect()
}

/// Packages that depend on something but are required by nobody.
pub fn top_level_packages(g: &SnapshotGraph) -> BTreeSet<&str> {
    names(
        g,
        (0..g.node_count()).filter(|&v| g.out_degree(v) > 0 && g.in_degree(v) == 0),
    )
}

/// Packages with at least one incoming or outgoing edge.
pub fn connected_packages(g: &SnapshotGraph) -> BTreeSet<&str> {
    names(
        g,
        (0..g.node_count()).filter(|&v| g.out_degree(v) > 0 || g.in_degree(v) > 0),
    )
}

/// Partition of the nodes into weakly connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components<'g> {
    /// Components ordered by decreasing size, then by first member name;
    /// members in ascending name order.
    pub components: Vec<Vec<&'g str>>,
}

impl Components<'_> {
    /// Size of the largest component as a fraction of connected packages,
    /// or `None` when no package is connected.
    pub fn largest_connected_fraction(&self) -> Option<f64> {
        let connected: usize = self
            .components
            .iter()
            .filter(|c| c.len() > 1)
            .map(Vec::len)
            .sum();
        let largest = self.components.first().map_or(0, Vec::len);
        (connected > 0).then(|| largest as f64 / connected as f64)
    }
}

pub fn weakly_connected_components(g: &SnapshotGraph) -> Components<'_> {
    let n = g.node_count();
    let mut dsu = dsu::DisjointSet::new(n);
    for v in 0..n {
        for &w in g.successors(v) {
            dsu.union(v, w as usize);
        }
    }
    let mut by_root: Vec<Vec<&str>> = vec![Vec::new(); n];
    for v in 0..n {
        let r = dsu.find(v);
        by_root[r].push(g.name(v));
    }
    let mut components: Vec<Vec<&str>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
    components.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(b[0])));
    Components { components }
}

/// Role of one package in the network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleFlags {
    pub dependent: bool,
    pub required: bool,
    pub connected: bool,
    pub top_level: bool,
}

impl RoleFlags {
    pub fn from_degrees(out_degree: usize, in_degree: usize) -> Self {
        let dependent = out_degree > 0;
        let required = in_degree > 0;
        Self {
            dependent,
            required,
            connected: dependent || required,
            top_level: dependent && !required,
        }
    }
}

/// Role flags of every package plus aggregate counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleSummary<'g> {
    pub flags: Vec<(&'g str, RoleFlags)>,
    pub packages: usize,
    pub dependent: usize,
    pub required: usize,
    pub connected: usize,
    pub top_level: usize,
}

impl RoleSummary<'_> {
    fn fraction(&self, k: usize) -> f64 {
        if self.packages == 0 {
            0.0
        } else {
            k as f64 / self.packages as f64
        }
    }

    pub fn dependent_fraction(&self) -> f64 {
        self.fraction(self.dependent)
    }

    pub fn required_fraction(&self) -> f64 {
        self.fraction(self.required)
    }

    pub fn connected_fraction(&self) -> f64 {
        self.fraction(self.connected)
    }

    pub fn top_level_fraction(&self) -> f64 {
        self.fraction(self.top_level)
    }
}

pub fn classify(g: &SnapshotGraph) -> RoleSummary<'_> {
    let flags: Vec<_> = (0..g.node_count())
        .map(|v| (g.name(v), RoleFlags::from_degrees(g.out_degree(v), g.in_degree(v))))
        .collect();
    let count = |f: fn(&RoleFlags) -> bool| flags.iter().filter(|(_, r)| f(r)).count();
    RoleSummary {
        packages: flags.len(),
        dependent: count(|r| r.dependent),
        required: count(|r| r.required),
        connected: count(|r| r.connected),
        top_level: count(|r| r.top_level),
        flags,
    }
}
