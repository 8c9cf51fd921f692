//! Connectivity-preserving edge removal for link prediction.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;

use super::load::write_lines;
use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EdgeSplit {
    pub train_graph: Graph,
    /// Positive test edges, `(i, j)` with `i < j`.
    pub removed_edges: Vec<(usize, usize)>,
    /// Node pairs absent from the original graph, as many as `removed_edges` when possible.
    pub negative_edges: Vec<(usize, usize)>,
    pub fraction: f64,
    /// Requested removals that could not be made without disconnecting a component.
    pub shortfall: usize,
    /// Requested negatives that could not be drawn because the graph is too dense.
    pub negative_shortfall: usize,
}

impl EdgeSplit {
    /// Writes `train.edges`, `test_pos.edges` and `test_neg.edges`, each headed by
    /// a `# seed=<seed> fraction=<fraction>` line.
    pub fn write(&self, dir: &Path, seed: u64) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let g = &self.train_graph;
        let header = format!("# seed={seed} fraction={}", self.fraction);
        let fmt = |(a, b): (usize, usize)| format!("{} {}", g.node_id(a), g.node_id(b));
        write_lines(
            &dir.join("train.edges"),
            std::iter::once(header.clone()).chain(g.edges().map(fmt)),
        )?;
        write_lines(
            &dir.join("test_pos.edges"),
            std::iter::once(header.clone()).chain(self.removed_edges.iter().copied().map(fmt)),
        )?;
        write_lines(
            &dir.join("test_neg.edges"),
            std::iter::once(header).chain(self.negative_edges.iter().copied().map(fmt)),
        )
    }
}

/// Uniform spanning forest by Wilson's algorithm, one tree per connected component.
/// Returns the forest as a set of `(min, max)` edges.
fn random_spanning_forest<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> HashSet<(usize, usize)> {
    let n = g.node_count();
    let comp = g.connected_components();
    let mut in_tree = vec![false; n];
    let ncomp = comp.iter().max().map_or(0, |&c| c + 1);
    let mut next = vec![usize::MAX; n];
    let mut forest = HashSet::new();

    // one uniformly chosen root per component
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ncomp];
    for (i, &c) in comp.iter().enumerate() {
        members[c].push(i);
    }
    for nodes in &members {
        in_tree[nodes[rng.gen_range(0..nodes.len())]] = true;
    }

    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let nb = g.neighbors(u);
            next[u] = nb[rng.gen_range(0..nb.len())];
            u = next[u];
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            let v = next[u];
            forest.insert((u.min(v), u.max(v)));
            u = v;
        }
    }
    forest
}

/// Removes `⌊fraction·|E|⌋` edges uniformly among those outside a random spanning
/// forest, so every component of `g` stays connected, and samples as many
/// uniform node pairs that are not edges of `g`.
pub fn split_edges_connected<R: Rng + ?Sized>(g: &Graph, fraction: f64, rng: &mut R) -> Result<EdgeSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("removal fraction {fraction} not in (0, 1)")));
    }
    let forest = random_spanning_forest(g, rng);
    let removable: Vec<(usize, usize)> = g.edges().filter(|e| !forest.contains(e)).collect();
    let wanted = (fraction * g.edge_count() as f64).floor() as usize;
    let take = wanted.min(removable.len());
    let shortfall = wanted - take;
    if shortfall > 0 {
        log::warn!("only {} of {} requested edges are removable", take, wanted);
    }
    let mut chosen: Vec<usize> = sample(rng, removable.len(), take).into_vec();
    chosen.sort_unstable();
    let removed_edges: Vec<(usize, usize)> = chosen.iter().map(|&k| removable[k]).collect();
    let removed_set: HashSet<_> = removed_edges.iter().copied().collect();
    let retained: Vec<(usize, usize)> = g.edges().filter(|e| !removed_set.contains(e)).collect();
    let train_graph = g.with_edges(&retained)?;

    let n = g.node_count();
    let non_edges = (n * n.saturating_sub(1) / 2).saturating_sub(g.edge_count());
    let neg_target = take.min(non_edges);
    let mut seen = HashSet::with_capacity(neg_target);
    let mut negative_edges = Vec::with_capacity(neg_target);
    while negative_edges.len() < neg_target {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let pair = (a.min(b), a.max(b));
        if a == b || g.has_edge(a, b) || !seen.insert(pair) {
            continue;
        }
        negative_edges.push(pair);
    }

    Ok(EdgeSplit {
        train_graph,
        removed_edges,
        negative_edges,
        fraction,
        shortfall,
        negative_shortfall: take - neg_target,
    })
}
