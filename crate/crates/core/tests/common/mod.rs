#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mfgcn::graph::{Features, Graph};
use mfgcn::linalg::Matrix;
use mfgcn::model::{Activation, ModelConfig, ModelParams};
use mfgcn::sampler::Batch;
use mfgcn::trainer::batch_gradients;

/// Dense `α(D^-1/2 (A+I) D^-1/2 X θ)` with `D` the degree of `A+I`.
pub fn dense_filter(g: &Graph, theta: &Matrix, act: Activation) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
        for &j in g.neighbors(i) {
            row[j] = 1.0;
        }
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let x: Vec<Vec<f64>> = (0..n).map(|i| g.features().dense_row(i)).collect();
    let mut out = vec![vec![0.0; theta.cols()]; n];
    for i in 0..n {
        for j in 0..n {
            let c = a[i][j] / (deg[i] * deg[j]).sqrt();
            for k in 0..theta.rows() {
                for f in 0..theta.cols() {
                    out[i][f] += c * x[j][k] * theta.get(k, f);
                }
            }
        }
        out[i].iter_mut().for_each(|v| *v = act.apply(*v));
    }
    out
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / pairs
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / pred.len() as f64
}

/// Largest relative error between analytic and central-difference gradients of
/// the summed batch loss, per parameter block.
pub fn fd_errors(
    g: &Graph,
    params: &ModelParams,
    mcfg: &ModelConfig,
    batch: &Batch,
    labels: Option<&[Option<usize>]>,
    weight: f64,
) -> Vec<(String, f64)> {
    let (_, grads) = batch_gradients(g, params, mcfg, batch, labels, weight).unwrap();
    let loss = |p: &ModelParams| batch_gradients(g, p, mcfg, batch, labels, weight).unwrap().0.total;
    let h = 1e-5;
    let mut out = Vec::new();
    for (bi, (name, ga)) in grads.blocks().into_iter().enumerate() {
        let mut worst: f64 = 0.0;
        for (i, &a) in ga.iter().enumerate() {
            let mut plus = params.clone();
            plus.blocks_mut()[bi][i] += h;
            let mut minus = params.clone();
            minus.blocks_mut()[bi][i] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            worst = worst.max((fd - a).abs() / fd.abs().max(a.abs()).max(1e-6));
        }
        out.push((name, worst));
    }
    out
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `g` plus one new node per `(source, attach)`: attributes copied from
/// `source`, a single edge to `attach`.
pub fn extend_graph(g: &Graph, additions: &[(usize, usize)]) -> Graph {
    let n = g.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.extend(additions.iter().map(|&(s, _)| s));
    let features: Features = g.features().select(&order);
    let mut ids = g.node_ids().to_vec();
    ids.extend((0..additions.len()).map(|k| format!("new{k}")));
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    edges.extend(additions.iter().enumerate().map(|(k, &(_, a))| (n + k, a)));
    Graph::new(ids, &edges, features, None).unwrap()
}

/// `$MFGCN_DATA_DIR`, else `data/` at the workspace root.
pub fn data_dir() -> PathBuf {
    std::env::var_os("MFGCN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().join("data"))
}
