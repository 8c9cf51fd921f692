//! Skip-gram negative-sampling loss, supervised cross-entropy, and their sum.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, log_sigmoid, sigmoid};

/// SGNS loss of one center and the gradients with respect to every input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsOutput {
    pub loss: f64,
    pub grad_center: Vec<f64>,
    pub grad_contexts: Vec<Vec<f64>>,
    pub grad_negatives: Vec<Vec<f64>>,
}

/// Loss plus the scalar factors `∂L/∂(c·u)` for each context and negative.
///
/// Each context contributes `-ln σ(c·u)` (factor `σ(c·u) - 1`), each negative
/// `-ln σ(-n·u)` (factor `σ(n·u)`). Gradients follow as factor times the
/// partner vector.
pub fn sgns_factors<'a>(
    center: &[f64],
    contexts: impl IntoIterator<Item = &'a [f64]>,
    negatives: impl IntoIterator<Item = &'a [f64]>,
) -> (f64, Vec<f64>, Vec<f64>) {
    let mut loss = 0.0;
    let ctx: Vec<f64> = contexts
        .into_iter()
        .map(|c| {
            let s = dot(c, center);
            loss -= log_sigmoid(s);
            sigmoid(s) - 1.0
        })
        .collect();
    let neg: Vec<f64> = negatives
        .into_iter()
        .map(|n| {
            let s = dot(n, center);
            loss -= log_sigmoid(-s);
            sigmoid(s)
        })
        .collect();
    (loss, ctx, neg)
}

/// `-Σ ln σ(c·u) - Σ ln σ(-n·u)` with exact gradients.
pub fn sgns_loss(center: &[f64], contexts: &[&[f64]], negatives: &[&[f64]]) -> Result<SgnsOutput> {
    if contexts.is_empty() {
        return Err(Error::Invalid("SGNS loss needs at least one context".into()));
    }
    let d = center.len();
    if contexts.iter().chain(negatives).any(|v| v.len() != d) {
        return Err(Error::Dimension("SGNS vectors differ in length".into()));
    }
    let (loss, cf, nf) = sgns_factors(center, contexts.iter().copied(), negatives.iter().copied());
    let mut grad_center = vec![0.0; d];
    let mut grad_contexts = Vec::with_capacity(contexts.len());
    for (c, &f) in contexts.iter().zip(&cf) {
        axpy(f, c, &mut grad_center);
        grad_contexts.push(center.iter().map(|&u| f * u).collect());
    }
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for (n, &f) in negatives.iter().zip(&nf) {
        axpy(f, n, &mut grad_center);
        grad_negatives.push(center.iter().map(|&u| f * u).collect());
    }
    Ok(SgnsOutput {
        loss,
        grad_center,
        grad_contexts,
        grad_negatives,
    })
}

/// Largest universe [`exact_softmax_loss`] accepts.
pub const EXACT_SOFTMAX_MAX_NODES: usize = 200;

/// Full-softmax skip-gram loss `-Σ_c [c·u - ln Σ_j exp(c_j·u)]` over every node.
/// Only meant for checking the sampled objective on small graphs.
pub fn exact_softmax_loss(center: &[f64], context_ids: &[usize], all: &[Vec<f64>]) -> Result<f64> {
    if all.len() > EXACT_SOFTMAX_MAX_NODES {
        return Err(Error::Invalid(format!(
            "exact softmax limited to {EXACT_SOFTMAX_MAX_NODES} nodes, got {}",
            all.len()
        )));
    }
    if let Some(&bad) = context_ids.iter().find(|&&c| c >= all.len()) {
        return Err(Error::Invalid(format!("context id {bad} out of range")));
    }
    let scores: Vec<f64> = all.iter().map(|v| dot(v, center)).collect();
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    Ok(-context_ids.iter().map(|&c| scores[c] - log_z).sum::<f64>())
}

/// `-ln p[label]` and the softmax-plus-cross-entropy gradient `p - onehot(label)`
/// with respect to the logits.
pub fn cross_entropy_loss(probs: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= probs.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: probs.len(),
        });
    }
    let mut grad = probs.to_vec();
    grad[label] -= 1.0;
    Ok((-probs[label].ln(), grad))
}

/// Loss terms of one center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterLoss {
    pub center: usize,
    pub sgns: f64,
    /// Cross-entropy when the center carries a training label.
    pub supervised: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub sgns: f64,
    pub supervised: f64,
    pub total: f64,
    pub per_center: Vec<CenterLoss>,
}

/// Sums the per-center terms. With `supervised` off the cross-entropy terms
/// are ignored and `total == sgns`.
pub fn total_loss(per_center: Vec<CenterLoss>, supervised: bool) -> LossReport {
    let sgns: f64 = per_center.iter().map(|c| c.sgns).sum();
    let sup: f64 = if supervised {
        per_center.iter().filter_map(|c| c.supervised).sum()
    } else {
        0.0
    };
    LossReport {
        sgns,
        supervised: sup,
        total: sgns + sup,
        per_center,
    }
}
