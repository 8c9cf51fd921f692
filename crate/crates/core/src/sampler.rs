//! Training signal: second-order biased random walks for context nodes and
//! constrained uniform negative sampling.

use std::io::{self, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub walk_length: usize,
    /// Return parameter `p`: unnormalized weight `1/p` for stepping back.
    pub return_param: f64,
    /// In-out parameter `q`: weight `1/q` for moving two hops away from the previous node.
    pub inout_param: f64,
    /// Context window radius.
    pub window: usize,
    pub walks_per_center: usize,
    /// Also exclude nodes adjacent to the center's neighbors or its contexts from negatives.
    pub strict_negatives: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 20,
            return_param: 0.5,
            inout_param: 1.0,
            window: 5,
            walks_per_center: 1,
            strict_negatives: false,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 2 {
            return Err(Error::Config("walk_length must be at least 2".into()));
        }
        if self.window == 0 || self.window > self.walk_length - 1 {
            return Err(Error::Config(format!(
                "window must lie in [1, walk_length - 1 = {}]",
                self.walk_length - 1
            )));
        }
        if !(self.return_param > 0.0 && self.inout_param > 0.0) {
            return Err(Error::Config("p and q must be positive".into()));
        }
        if self.walks_per_center == 0 {
            return Err(Error::Config("walks_per_center must be positive".into()));
        }
        Ok(())
    }
}

/// Unnormalized node2vec weight for moving to `next` from `cur`, having arrived from `prev`.
#[inline]
fn transition_weight(g: &Graph, prev: usize, next: usize, cfg: &WalkConfig) -> f64 {
    if next == prev {
        1.0 / cfg.return_param
    } else if g.has_edge(prev, next) {
        1.0
    } else {
        1.0 / cfg.inout_param
    }
}

/// Walk of at most `walk_length` nodes starting at `start`. Self-loops are not
/// traversed; the walk stops early at a node with no neighbors.
pub fn biased_walk<R: Rng + ?Sized>(g: &Graph, start: usize, cfg: &WalkConfig, rng: &mut R) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let mut weights = Vec::new();
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let nb = g.neighbors(cur);
        if nb.is_empty() {
            break;
        }
        let next = if walk.len() == 1 {
            nb[rng.gen_range(0..nb.len())]
        } else {
            let prev = walk[walk.len() - 2];
            weights.clear();
            weights.extend(nb.iter().map(|&x| transition_weight(g, prev, x, cfg)));
            let total: f64 = weights.iter().sum();
            let mut r = rng.gen::<f64>() * total;
            let mut pick = nb[nb.len() - 1];
            for (&x, &w) in nb.iter().zip(&weights) {
                if r < w {
                    pick = x;
                    break;
                }
                r -= w;
            }
            pick
        };
        walk.push(next);
    }
    walk
}

/// Skip-gram pairs `(walk[t], walk[t'])` with `0 < |t - t'| <= window`,
/// omitting pairs whose endpoints are the same node.
pub fn extract_contexts(walk: &[usize], window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (t, &a) in walk.iter().enumerate() {
        let lo = t.saturating_sub(window);
        let hi = (t + window).min(walk.len().saturating_sub(1));
        for (s, &b) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if s != t && a != b {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Sorted, deduplicated set of nodes barred from being negatives of `center`.
fn exclusion_set(g: &Graph, center: usize, contexts: &[usize], strict: bool) -> Vec<usize> {
    let mut excl: Vec<usize> = Vec::with_capacity(1 + g.neighbors(center).len() + contexts.len());
    excl.push(center);
    excl.extend_from_slice(g.neighbors(center));
    excl.extend_from_slice(contexts);
    if strict {
        let base = excl.clone();
        for v in base {
            excl.extend_from_slice(g.neighbors(v));
        }
    }
    excl.sort_unstable();
    excl.dedup();
    excl
}

/// `k` nodes drawn uniformly with replacement from `V \ ({center} ∪ N(center) ∪ contexts)`.
pub fn sample_negatives<R: Rng + ?Sized>(
    g: &Graph,
    center: usize,
    contexts: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    sample_negatives_with(g, center, contexts, k, false, rng)
}

/// As [`sample_negatives`]; with `strict` the exclusion set also covers every
/// neighbor of a one-hop neighbor or context node.
pub fn sample_negatives_with<R: Rng + ?Sized>(
    g: &Graph,
    center: usize,
    contexts: &[usize],
    k: usize,
    strict: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::Config("negative sample count must be positive".into()));
    }
    let n = g.node_count();
    let excl = exclusion_set(g, center, contexts, strict);
    let valid = n - excl.len();
    if valid == 0 {
        return Err(Error::NoValidNegatives(center));
    }
    let mut out = Vec::with_capacity(k);
    if 2 * valid >= n {
        while out.len() < k {
            let v = rng.gen_range(0..n);
            if excl.binary_search(&v).is_err() {
                out.push(v);
            }
        }
    } else {
        let mut candidates = Vec::with_capacity(valid);
        let mut e = excl.iter().peekable();
        for v in 0..n {
            if e.peek() == Some(&&v) {
                e.next();
            } else {
                candidates.push(v);
            }
        }
        out.extend((0..k).map(|_| candidates[rng.gen_range(0..candidates.len())]));
    }
    Ok(out)
}

/// Centers with their sampled contexts and negatives.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub centers: Vec<usize>,
    pub contexts: Vec<Vec<usize>>,
    pub negatives: Vec<Vec<usize>>,
    /// Requested centers that were dropped (no contexts or no valid negatives).
    pub dropped: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Every node whose embedding the batch needs, ascending.
    pub fn nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .centers
            .iter()
            .chain(self.contexts.iter().flatten())
            .chain(self.negatives.iter().flatten())
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// One line per center: `center | contexts | negatives`.
    pub fn write_debug<W: Write>(&self, g: &Graph, mut w: W) -> io::Result<()> {
        let ids = |v: &[usize]| v.iter().map(|&i| g.node_id(i)).collect::<Vec<_>>().join(" ");
        for i in 0..self.len() {
            writeln!(
                w,
                "{} | {} | {}",
                g.node_id(self.centers[i]),
                ids(&self.contexts[i]),
                ids(&self.negatives[i])
            )?;
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Generator for one center, derived from a batch seed and the center id so the
/// result does not depend on the order centers are processed in.
pub(crate) fn center_rng(batch_seed: u64, center: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(batch_seed ^ splitmix64(center as u64)))
}

/// Builds a batch: `walks_per_center` walks per center, contexts within the
/// window of the center's occurrences, then `k` negatives. Centers with no
/// context or no valid negative are dropped with a warning.
pub fn make_batch<R: RngCore + ?Sized>(
    g: &Graph,
    centers: &[usize],
    cfg: &WalkConfig,
    k: usize,
    rng: &mut R,
) -> Result<Batch> {
    if centers.is_empty() {
        return Err(Error::Invalid("make_batch needs at least one center".into()));
    }
    cfg.validate()?;
    let batch_seed = rng.next_u64();
    let mut batch = Batch::default();
    for &u in centers {
        let mut crng = center_rng(batch_seed, u);
        let mut contexts = Vec::new();
        for _ in 0..cfg.walks_per_center {
            let walk = biased_walk(g, u, cfg, &mut crng);
            contexts.extend(
                extract_contexts(&walk, cfg.window)
                    .into_iter()
                    .filter(|&(a, _)| a == u)
                    .map(|(_, b)| b),
            );
        }
        if contexts.is_empty() {
            log::warn!("center {} dropped: walk produced no contexts", g.node_id(u));
            batch.dropped.push(u);
            continue;
        }
        match sample_negatives_with(g, u, &contexts, k, cfg.strict_negatives, &mut crng) {
            Ok(neg) => {
                batch.centers.push(u);
                batch.contexts.push(contexts);
                batch.negatives.push(neg);
            }
            Err(Error::NoValidNegatives(_)) => {
                log::warn!("center {} dropped: no valid negatives", g.node_id(u));
                batch.dropped.push(u);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{synthetic, Features};

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new((0..n).map(|i| i.to_string()).collect(), edges, Features::zeros(n, 1), None).unwrap()
    }

    fn path(n: usize) -> Graph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        graph(n, &edges)
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn walk_weights_on_path_from_end() {
        // at b=1 having come from a=0: weights 1/p = 2 back, 1/q = 1 forward
        let g = path(3);
        let cfg = WalkConfig::default();
        let wa = transition_weight(&g, 0, 0, &cfg);
        let wc = transition_weight(&g, 0, 2, &cfg);
        assert!((wa / (wa + wc) - 2.0 / 3.0).abs() < 1e-15);

        let mut r = rng(5);
        let trials = 30_000;
        let mut back = 0;
        for _ in 0..trials {
            // walks from 0 must step to 1 first
            let w = biased_walk(&g, 0, &WalkConfig { walk_length: 3, window: 1, ..cfg.clone() }, &mut r);
            assert_eq!(w[1], 1);
            if w[2] == 0 {
                back += 1;
            }
        }
        let p = back as f64 / trials as f64;
        let sd = (2.0 / 9.0 / trials as f64).sqrt();
        assert!((p - 2.0 / 3.0).abs() < 4.0 * sd, "p = {p}");
    }

    #[test]
    fn isolated_start_gives_single_node_walk() {
        let g = graph(2, &[]);
        assert_eq!(biased_walk(&g, 1, &WalkConfig::default(), &mut rng(0)), vec![1]);
    }

    #[test]
    fn walk_never_self_steps() {
        let g = synthetic::erdos_renyi(30, 0.2, 1, 3);
        let w = biased_walk(&g, 0, &WalkConfig::default(), &mut rng(1));
        assert_eq!(w.len(), 20);
        assert!(w.windows(2).all(|p| p[0] != p[1] && g.has_edge(p[0], p[1])));
    }

    #[test]
    fn context_pairs() {
        let mut pairs = extract_contexts(&[0, 1, 2], 1);
        pairs.sort();
        assert_eq!(pairs, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert!(extract_contexts(&[7], 3).is_empty());
        let pairs = extract_contexts(&[0, 1, 0], 2);
        assert!(!pairs.contains(&(0, 0)));
        assert_eq!(pairs.len(), 4);
    }

    #[test]
    fn star_hub_has_no_negatives() {
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert!(matches!(
            sample_negatives(&g, 0, &[], 10, &mut rng(0)),
            Err(Error::NoValidNegatives(0))
        ));
    }

    #[test]
    fn path_end_negatives_are_uniform_over_the_rest() {
        let g = path(10);
        let draws = 100_000;
        let neg = sample_negatives(&g, 0, &[], draws, &mut rng(2)).unwrap();
        let mut counts = [0usize; 10];
        for v in neg {
            counts[v] += 1;
        }
        assert_eq!(counts[0] + counts[1], 0);
        let expected = draws as f64 / 8.0;
        let chi2: f64 = counts[2..]
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square, 7 dof, 0.999 quantile
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    #[test]
    fn candidate_list_path_is_also_uniform() {
        // center 0 of a 10-node graph excluding 7 nodes takes the enumeration branch
        let g = graph(10, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6)]);
        let neg = sample_negatives(&g, 0, &[], 30_000, &mut rng(8)).unwrap();
        let mut counts = [0usize; 10];
        for v in neg {
            counts[v] += 1;
        }
        assert!(counts[..7].iter().all(|&c| c == 0));
        let chi2: f64 = counts[7..]
            .iter()
            .map(|&c| (c as f64 - 10_000.0).powi(2) / 10_000.0)
            .sum();
        assert!(chi2 < 13.82, "chi2 = {chi2}");
    }

    #[test]
    fn strict_exclusion_removes_two_hop_nodes() {
        let g = path(6);
        let neg = sample_negatives_with(&g, 0, &[], 500, true, &mut rng(3)).unwrap();
        assert!(neg.iter().all(|&v| v >= 3));
    }

    #[test]
    fn two_node_graph_drops_center() {
        let g = path(2);
        let b = make_batch(&g, &[0], &WalkConfig::default(), 5, &mut rng(0)).unwrap();
        assert!(b.is_empty());
        assert_eq!(b.dropped, vec![0]);
    }

    #[test]
    fn batches_are_deterministic() {
        let g = synthetic::erdos_renyi(50, 0.1, 1, 1);
        let centers: Vec<usize> = (0..20).collect();
        let cfg = WalkConfig::default();
        let a = make_batch(&g, &centers, &cfg, 10, &mut rng(42)).unwrap();
        let b = make_batch(&g, &centers, &cfg, 10, &mut rng(42)).unwrap();
        assert_eq!(a, b);
        let c = make_batch(&g, &centers, &cfg, 10, &mut rng(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn batch_order_does_not_change_per_center_samples() {
        let g = synthetic::erdos_renyi(40, 0.15, 1, 6);
        let cfg = WalkConfig::default();
        let a = make_batch(&g, &[1, 2, 3], &cfg, 5, &mut rng(7)).unwrap();
        let b = make_batch(&g, &[3, 2, 1], &cfg, 5, &mut rng(7)).unwrap();
        assert_eq!(a.contexts[0], b.contexts[2]);
        assert_eq!(a.negatives[2], b.negatives[0]);
    }

    #[test]
    fn config_validation() {
        assert!(WalkConfig::default().validate().is_ok());
        assert!(WalkConfig { walk_length: 1, ..Default::default() }.validate().is_err());
        assert!(WalkConfig { window: 20, ..Default::default() }.validate().is_err());
        assert!(WalkConfig { return_param: 0.0, ..Default::default() }.validate().is_err());
    }
}
