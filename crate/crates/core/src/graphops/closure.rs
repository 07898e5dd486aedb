//! All-sources reachability counts.
//!
//! For every node `v` we need the number of other nodes that can reach `v`.
//! Per-node BFS is quadratic on ecosystem-sized graphs, so instead the graph
//! is condensed into strongly connected components (iterative Tarjan), and
//! reachability bitsets are pushed through the condensation in topological
//! order, one block of `64 * WORDS` source nodes at a time. Each block costs
//! one pass over the edges reachable from it; blocks are independent and
//! run in parallel.

use rayon::prelude::*;

use crate::snapshot::Adjacency;

const WORDS: usize = 16;
const BLOCK: usize = 64 * WORDS;
const UNVISITED: u32 = u32::MAX;

/// Strongly connected components numbered in topological order: every edge
/// `u -> v` has `comp[u] <= comp[v]`.
pub(crate) struct Condensation {
    pub(crate) comp: Vec<u32>,
    pub(crate) count: usize,
}

pub(crate) fn condense(adj: &Adjacency) -> Condensation {
    let n = adj.node_count();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut calls: Vec<(u32, u32)> = Vec::new();
    let mut comp = vec![0u32; n];
    let mut emitted = 0u32;
    let mut counter = 0u32;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root as u32);
        on_stack[root] = true;
        calls.push((root as u32, 0));

        while let Some(frame) = calls.last_mut() {
            let v = frame.0 as usize;
            let nbrs = adj.neighbors(v);
            if (frame.1 as usize) < nbrs.len() {
                let w = nbrs[frame.1 as usize] as usize;
                frame.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    calls.push((w as u32, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(parent) = calls.last() {
                let p = parent.0 as usize;
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack") as usize;
                    on_stack[w] = false;
                    comp[w] = emitted;
                    if w == v {
                        break;
                    }
                }
                emitted += 1;
            }
        }
    }

    // Tarjan emits sinks first; flip to sources first.
    let count = emitted as usize;
    for c in &mut comp {
        *c = emitted - 1 - *c;
    }
    Condensation { comp, count }
}

/// For each node, the number of *other* nodes from which it is reachable
/// along `adj`.
pub(crate) fn count_reachers(adj: &Adjacency) -> Vec<u32> {
    let n = adj.node_count();
    if n == 0 {
        return Vec::new();
    }
    let cond = condense(adj);
    let ncomp = cond.count;

    // Component membership lists, components in topological order.
    let mut start = vec![0u32; ncomp + 1];
    for &c in &cond.comp {
        start[c as usize + 1] += 1;
    }
    for i in 0..ncomp {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut members = vec![0u32; n];
    for (v, &c) in cond.comp.iter().enumerate() {
        members[fill[c as usize] as usize] = v as u32;
        fill[c as usize] += 1;
    }

    // Only nodes with an outgoing edge can reach anything but themselves.
    let holders: Vec<u32> = members
        .iter()
        .copied()
        .filter(|&v| adj.degree(v as usize) > 0)
        .collect();
    if holders.is_empty() {
        return vec![0; n];
    }

    let ctx = BlockContext {
        adj,
        comp: &cond.comp,
        start: &start,
        members: &members,
        ncomp,
    };
    holders
        .par_chunks(BLOCK)
        .fold(
            || Scratch::new(n, ncomp),
            |mut scratch, block| {
                ctx.run_block(block, &mut scratch);
                scratch
            },
        )
        .map(|s| s.counts)
        .reduce(
            || vec![0u32; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

struct Scratch {
    counts: Vec<u32>,
    masks: Vec<u64>,
    active: Vec<bool>,
    /// Position of each node inside the current block, or `u32::MAX`.
    slot: Vec<u32>,
}

impl Scratch {
    fn new(n: usize, ncomp: usize) -> Self {
        Self {
            counts: vec![0; n],
            masks: vec![0; ncomp * WORDS],
            active: vec![false; ncomp],
            slot: vec![u32::MAX; n],
        }
    }
}

struct BlockContext<'a> {
    adj: &'a Adjacency,
    comp: &'a [u32],
    start: &'a [u32],
    members: &'a [u32],
    ncomp: usize,
}

impl BlockContext<'_> {
    fn component(&self, c: usize) -> &[u32] {
        &self.members[self.start[c] as usize..self.start[c + 1] as usize]
    }

    fn run_block(&self, block: &[u32], s: &mut Scratch) {
        let first = self.comp[block[0] as usize] as usize;
        for (i, &v) in block.iter().enumerate() {
            let c = self.comp[v as usize] as usize;
            s.masks[c * WORDS + i / 64] |= 1u64 << (i % 64);
            s.active[c] = true;
            s.slot[v as usize] = i as u32;
        }

        for c in first..self.ncomp {
            if !s.active[c] {
                continue;
            }
            for &u in self.component(c) {
                for &w in self.adj.neighbors(u as usize) {
                    let cw = self.comp[w as usize] as usize;
                    if cw == c {
                        continue;
                    }
                    debug_assert!(cw > c);
                    let (lo, hi) = s.masks.split_at_mut(cw * WORDS);
                    let src = &lo[c * WORDS..c * WORDS + WORDS];
                    for (d, x) in hi[..WORDS].iter_mut().zip(src) {
                        *d |= *x;
                    }
                    s.active[cw] = true;
                }
            }
        }

        for c in first..self.ncomp {
            if !s.active[c] {
                continue;
            }
            let mask = &mut s.masks[c * WORDS..c * WORDS + WORDS];
            let reach: u32 = mask.iter().map(|m| m.count_ones()).sum();
            mask.fill(0);
            s.active[c] = false;
            for &v in self.component(c) {
                let own = u32::from(s.slot[v as usize] != u32::MAX);
                s.counts[v as usize] += reach - own;
            }
        }
        for &v in block {
            s.slot[v as usize] = u32::MAX;
        }
    }
}
