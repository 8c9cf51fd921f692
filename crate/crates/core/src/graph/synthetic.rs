//! Planted-partition graphs with class-correlated bag-of-words attributes.
//!
//! Used by tests and smoke runs when no benchmark data is at hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Features, Graph, Labels};

#[derive(Debug, Clone)]
pub struct SbmConfig {
    pub nodes: usize,
    pub classes: usize,
    /// Expected number of same-class neighbors per node.
    pub intra_degree: f64,
    /// Expected number of other-class neighbors per node.
    pub inter_degree: f64,
    pub dim: usize,
    /// Active words per node.
    pub words_per_node: usize,
    /// Probability a word is drawn from the node's class vocabulary instead of uniformly.
    pub topic_strength: f64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            nodes: 200,
            classes: 4,
            intra_degree: 4.0,
            inter_degree: 0.5,
            dim: 120,
            words_per_node: 8,
            topic_strength: 0.5,
        }
    }
}

pub fn attributed_sbm(cfg: &SbmConfig, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.nodes;
    let classes = cfg.classes.max(1);
    let class_of: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let per_class = n.div_ceil(classes) as f64;
    let p_in = (cfg.intra_degree / per_class.max(1.0)).min(1.0);
    let p_out = (cfg.inter_degree / (n as f64 - per_class).max(1.0)).min(1.0);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if class_of[i] == class_of[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let vocab = (cfg.dim / classes).max(1);
    let mut features = Features::empty(cfg.dim);
    for &c in &class_of {
        let mut row = vec![0.0; cfg.dim];
        for _ in 0..cfg.words_per_node {
            let w = if rng.gen::<f64>() < cfg.topic_strength {
                (c * vocab + rng.gen_range(0..vocab)) % cfg.dim
            } else {
                rng.gen_range(0..cfg.dim)
            };
            row[w] = 1.0;
        }
        features.push_dense(&row).expect("row has the configured width");
    }

    let names = (0..classes).map(|c| format!("c{c}")).collect();
    let labels = Labels::new(names, class_of.into_iter().map(Some).collect()).expect("labels in range");
    let ids = (0..n).map(|i| format!("v{i}")).collect();
    Graph::new(ids, &edges, features, Some(labels)).expect("well-formed synthetic graph")
}

/// Uniform random graph on `n` nodes with edge probability `p` and dense random attributes.
pub fn erdos_renyi(n: usize, p: f64, dim: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let features = Features::from_dense(dim, &rows).expect("rows have width dim");
    Graph::new((0..n).map(|i| i.to_string()).collect(), &edges, features, None)
        .expect("well-formed random graph")
}
