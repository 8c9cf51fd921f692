//! The multi-filter local GCN encoder.
//!
//! For a node `u` each filter `l` computes
//! `α( Σ_{j ∈ N(u) ∪ {u}} x_j θ_l / sqrt(deg(u)·deg(j)) )`, the `L` filter
//! outputs are concatenated, appended to the raw attributes `x_u`, passed
//! through one dense layer with activation `σ`, and finally L2-normalized.
//!
//! [`Forward`] evaluates a whole set of nodes at once, sharing the per-node
//! projections `x_j θ` between overlapping neighborhoods, and records what
//! [`Forward::backward`] needs for exact gradients.

mod checkpoint;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{pair_coefficient, Features, Graph};
use crate::linalg::{axpy, dot, norm, softmax, Matrix};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => crate::linalg::sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at pre-activation `pre`, given `out = apply(pre)`.
    #[inline]
    pub fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => out * (1.0 - out),
            Activation::Tanh => 1.0 - out * out,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::Config(format!("unknown activation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub num_filters: usize,
    pub filter_dim: usize,
    pub embed_dim: usize,
    pub input_dim: usize,
    /// Propagation depth; only 1 is supported.
    pub depth: usize,
    pub aggregator_activation: Activation,
    pub encoder_activation: Activation,
    pub num_classes: Option<usize>,
}

impl ModelConfig {
    /// 25 relu filters of width 16 into a 100-dimensional tanh embedding.
    pub fn new(input_dim: usize, num_classes: Option<usize>) -> Self {
        ModelConfig {
            num_filters: 25,
            filter_dim: 16,
            embed_dim: 100,
            input_dim,
            depth: 1,
            aggregator_activation: Activation::Relu,
            encoder_activation: Activation::Tanh,
            num_classes,
        }
    }

    /// Width of the concatenated filter outputs.
    pub fn aggregation_width(&self) -> usize {
        self.num_filters * self.filter_dim
    }

    pub fn encoder_input_width(&self) -> usize {
        self.input_dim + self.aggregation_width()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_filters == 0 || self.filter_dim == 0 || self.embed_dim == 0 || self.input_dim == 0 {
            return Err(Error::Config(format!(
                "model dimensions must be positive (filters={}, filter_dim={}, embed_dim={}, input_dim={})",
                self.num_filters, self.filter_dim, self.embed_dim, self.input_dim
            )));
        }
        if self.depth != 1 {
            return Err(Error::Config(format!(
                "depth {} is not supported; only single-layer models (depth 1) are implemented",
                self.depth
            )));
        }
        if self.num_classes == Some(0) {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        Ok(())
    }
}

/// Learnable parameters. The same shape doubles as a gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// One `input_dim × filter_dim` matrix per filter.
    pub theta: Vec<Matrix>,
    /// `(input_dim + L·F) × embed_dim`; rows `0..input_dim` act on the raw attributes.
    pub w_enc: Matrix,
    pub b_enc: Vec<f64>,
    /// `embed_dim × num_classes` softmax head.
    pub w_cls: Option<Matrix>,
    pub b_cls: Option<Vec<f64>>,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let theta = (0..cfg.num_filters)
            .map(|_| Matrix::glorot(cfg.input_dim, cfg.filter_dim, rng))
            .collect();
        let w_enc = Matrix::glorot(cfg.encoder_input_width(), cfg.embed_dim, rng);
        let (w_cls, b_cls) = match cfg.num_classes {
            Some(m) => (Some(Matrix::glorot(cfg.embed_dim, m, rng)), Some(vec![0.0; m])),
            None => (None, None),
        };
        Ok(ModelParams {
            theta,
            w_enc,
            b_enc: vec![0.0; cfg.embed_dim],
            w_cls,
            b_cls,
        })
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            theta: self
                .theta
                .iter()
                .map(|t| Matrix::zeros(t.rows(), t.cols()))
                .collect(),
            w_enc: Matrix::zeros(self.w_enc.rows(), self.w_enc.cols()),
            b_enc: vec![0.0; self.b_enc.len()],
            w_cls: self.w_cls.as_ref().map(|w| Matrix::zeros(w.rows(), w.cols())),
            b_cls: self.b_cls.as_ref().map(|b| vec![0.0; b.len()]),
        }
    }

    /// Named parameter blocks in a fixed order.
    pub fn blocks(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = self
            .theta
            .iter()
            .enumerate()
            .map(|(l, t)| (format!("theta.{l}"), t.as_slice()))
            .collect();
        out.push(("w_enc".into(), self.w_enc.as_slice()));
        out.push(("b_enc".into(), &self.b_enc));
        if let Some(w) = &self.w_cls {
            out.push(("w_cls".into(), w.as_slice()));
        }
        if let Some(b) = &self.b_cls {
            out.push(("b_cls".into(), b));
        }
        out
    }

    /// Mutable counterpart of [`ModelParams::blocks`], same order.
    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.theta.iter_mut().map(|t| t.as_mut_slice()).collect();
        out.push(self.w_enc.as_mut_slice());
        out.push(&mut self.b_enc);
        if let Some(w) = &mut self.w_cls {
            out.push(w.as_mut_slice());
        }
        if let Some(b) = &mut self.b_cls {
            out.push(b);
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        for b in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Error naming the first block that holds a NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        for (name, b) in self.blocks() {
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(name));
            }
        }
        Ok(())
    }

    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<()> {
        let bad = |what: &str| Err(Error::Dimension(format!("parameter {what} does not match the model configuration")));
        if self.theta.len() != cfg.num_filters {
            return bad("theta count");
        }
        if self
            .theta
            .iter()
            .any(|t| t.rows() != cfg.input_dim || t.cols() != cfg.filter_dim)
        {
            return bad("theta shape");
        }
        if self.w_enc.rows() != cfg.encoder_input_width()
            || self.w_enc.cols() != cfg.embed_dim
            || self.b_enc.len() != cfg.embed_dim
        {
            return bad("w_enc");
        }
        match (cfg.num_classes, &self.w_cls, &self.b_cls) {
            (None, None, None) => Ok(()),
            (Some(m), Some(w), Some(b)) if w.rows() == cfg.embed_dim && w.cols() == m && b.len() == m => Ok(()),
            _ => bad("w_cls"),
        }
    }
}

/// `x_j θ` for a sparse attribute row.
#[inline]
fn project_into(idx: &[usize], val: &[f64], theta: &Matrix, out: &mut [f64]) {
    for (&k, &v) in idx.iter().zip(val) {
        axpy(v, theta.row(k), out);
    }
}

fn check_inputs(g: &Graph, inputs: &Features, u: usize) -> Result<()> {
    if inputs.rows() != g.node_count() {
        return Err(Error::Dimension(format!(
            "{} input rows for {} nodes",
            inputs.rows(),
            g.node_count()
        )));
    }
    if u >= g.node_count() {
        return Err(Error::Invalid(format!("node index {u} out of range")));
    }
    Ok(())
}

/// One local GCN filter evaluated at `u`.
pub fn filter_aggregate(
    g: &Graph,
    inputs: &Features,
    u: usize,
    theta: &Matrix,
    act: Activation,
) -> Result<Vec<f64>> {
    check_inputs(g, inputs, u)?;
    if theta.rows() != inputs.dim() {
        return Err(Error::Dimension(format!(
            "filter has {} rows, inputs have dimension {}",
            theta.rows(),
            inputs.dim()
        )));
    }
    let mut out = vec![0.0; theta.cols()];
    let mut proj = vec![0.0; theta.cols()];
    for j in g.closed_neighborhood(u) {
        proj.iter_mut().for_each(|v| *v = 0.0);
        let (idx, val) = inputs.row(j);
        project_into(idx, val, theta, &mut proj);
        axpy(pair_coefficient(g, u, j), &proj, &mut out);
    }
    out.iter_mut().for_each(|v| *v = act.apply(*v));
    Ok(out)
}

/// Concatenation of every filter's output at `u`, filters in index order.
pub fn mf_aggregate(
    g: &Graph,
    inputs: &Features,
    u: usize,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cfg.aggregation_width());
    for theta in &params.theta {
        out.extend(filter_aggregate(g, inputs, u, theta, cfg.aggregator_activation)?);
    }
    Ok(out)
}

/// Encoder pre-activation `[x_u ‖ agg] · W + b`.
fn encoder_pre(x_idx: &[usize], x_val: &[f64], agg: &[f64], params: &ModelParams, out: &mut [f64]) {
    out.copy_from_slice(&params.b_enc);
    for (&k, &v) in x_idx.iter().zip(x_val) {
        axpy(v, params.w_enc.row(k), out);
    }
    let offset = params.w_enc.rows() - agg.len();
    for (m, &a) in agg.iter().enumerate() {
        if a != 0.0 {
            axpy(a, params.w_enc.row(offset + m), out);
        }
    }
}

/// Unnormalized embedding `σ([x_u ‖ mf_aggregate(u)] · W + b)`.
pub fn encode(
    g: &Graph,
    inputs: &Features,
    u: usize,
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    if inputs.dim() != cfg.input_dim {
        return Err(Error::Dimension(format!(
            "inputs have dimension {}, model expects {}",
            inputs.dim(),
            cfg.input_dim
        )));
    }
    let agg = mf_aggregate(g, inputs, u, params, cfg)?;
    let (idx, val) = inputs.row(u);
    let mut h = vec![0.0; cfg.embed_dim];
    encoder_pre(idx, val, &agg, params, &mut h);
    h.iter_mut().for_each(|v| *v = cfg.encoder_activation.apply(*v));
    Ok(h)
}

/// Unit-norm embeddings for a list of nodes, one row each.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    nodes: Vec<usize>,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Graph node index of each row.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    /// Writes `node-id v1 … v_d` per row with round-trip precision.
    pub fn write(&self, g: &Graph, path: &Path) -> Result<()> {
        crate::graph::write_lines(
            path,
            (0..self.len()).map(|r| {
                let mut line = g.node_id(self.nodes[r]).to_owned();
                for v in self.row(r) {
                    line.push(' ');
                    line.push_str(&format!("{v:?}"));
                }
                line
            }),
        )
    }
}

/// Embeds `nodes` (any order, repeats allowed) and L2-normalizes each row.
pub fn embed_nodes(
    g: &Graph,
    nodes: &[usize],
    params: &ModelParams,
    cfg: &ModelConfig,
) -> Result<EmbeddingMatrix> {
    let mut unique = nodes.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let fwd = Forward::run(g, &unique, params, cfg)?;
    let mut data = Vec::with_capacity(nodes.len() * cfg.embed_dim);
    for &u in nodes {
        data.extend_from_slice(fwd.z(fwd.slot(u).expect("node was embedded")));
    }
    Ok(EmbeddingMatrix {
        dim: cfg.embed_dim,
        nodes: nodes.to_vec(),
        data,
    })
}

/// Head logits `z · W_cls + b`.
pub fn logits(z: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let (w, b) = match (&params.w_cls, &params.b_cls) {
        (Some(w), Some(b)) => (w, b),
        _ => return Err(Error::MissingHead),
    };
    if z.len() != w.rows() {
        return Err(Error::Dimension(format!(
            "embedding of length {} for a head expecting {}",
            z.len(),
            w.rows()
        )));
    }
    let mut out = b.clone();
    for (i, &zi) in z.iter().enumerate() {
        axpy(zi, w.row(i), &mut out);
    }
    Ok(out)
}

/// Class probabilities `softmax(z · W_cls + b)`.
pub fn classify(z: &[f64], params: &ModelParams, _cfg: &ModelConfig) -> Result<Vec<f64>> {
    Ok(softmax(&logits(z, params)?))
}

/// Accumulates head gradients for one embedding given `∂L/∂logits`, and adds
/// the gradient with respect to `z` into `dz`.
pub fn head_backward(
    z: &[f64],
    dlogits: &[f64],
    params: &ModelParams,
    grads: &mut ModelParams,
    dz: &mut [f64],
) -> Result<()> {
    let w = params.w_cls.as_ref().ok_or(Error::MissingHead)?;
    let (gw, gb) = match (&mut grads.w_cls, &mut grads.b_cls) {
        (Some(gw), Some(gb)) => (gw, gb),
        _ => return Err(Error::MissingHead),
    };
    axpy(1.0, dlogits, gb);
    for (i, &zi) in z.iter().enumerate() {
        axpy(zi, dlogits, gw.row_mut(i));
        dz[i] += dot(w.row(i), dlogits);
    }
    Ok(())
}

/// Recorded forward pass over a sorted set of distinct nodes.
#[derive(Debug, Clone)]
pub struct Forward<'a> {
    g: &'a Graph,
    cfg: ModelConfig,
    nodes: Vec<usize>,
    slot: HashMap<usize, usize>,
    /// Nodes whose projections were needed, ascending, and their projections.
    support: Vec<usize>,
    agg_pre: Matrix,
    agg: Matrix,
    enc_pre: Matrix,
    enc: Matrix,
    norms: Vec<f64>,
    z: Matrix,
}

impl<'a> Forward<'a> {
    /// Evaluates the encoder for `nodes`, which must be ascending and distinct.
    pub fn run(g: &'a Graph, nodes: &[usize], params: &ModelParams, cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        params.check_shapes(cfg)?;
        let feats = g.features();
        if feats.dim() != cfg.input_dim {
            return Err(Error::Dimension(format!(
                "graph attributes have dimension {}, model expects {}",
                feats.dim(),
                cfg.input_dim
            )));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("forward nodes must be ascending and distinct".into()));
        }
        if let Some(&last) = nodes.last() {
            if last >= g.node_count() {
                return Err(Error::Invalid(format!("node index {last} out of range")));
            }
        }
        let n = nodes.len();
        let (f, width, d) = (cfg.filter_dim, cfg.aggregation_width(), cfg.embed_dim);

        let mut support: Vec<usize> = nodes.iter().flat_map(|&u| g.closed_neighborhood(u)).collect();
        support.sort_unstable();
        support.dedup();
        let support_slot: HashMap<usize, usize> = support.iter().enumerate().map(|(s, &j)| (j, s)).collect();

        let mut proj = Matrix::zeros(support.len(), width);
        for (s, &j) in support.iter().enumerate() {
            let (idx, val) = feats.row(j);
            let row = proj.row_mut(s);
            for (l, theta) in params.theta.iter().enumerate() {
                project_into(idx, val, theta, &mut row[l * f..(l + 1) * f]);
            }
        }

        let mut agg_pre = Matrix::zeros(n, width);
        let mut agg = Matrix::zeros(n, width);
        let mut enc_pre = Matrix::zeros(n, d);
        let mut enc = Matrix::zeros(n, d);
        let mut z = Matrix::zeros(n, d);
        let mut norms = vec![0.0; n];
        for (r, &u) in nodes.iter().enumerate() {
            let pre = agg_pre.row_mut(r);
            for j in g.closed_neighborhood(u) {
                axpy(pair_coefficient(g, u, j), proj.row(support_slot[&j]), pre);
            }
            let act = agg.row_mut(r);
            for (a, &p) in act.iter_mut().zip(agg_pre.row(r)) {
                *a = cfg.aggregator_activation.apply(p);
            }
            let (idx, val) = feats.row(u);
            encoder_pre(idx, val, agg.row(r), params, enc_pre.row_mut(r));
            let h = enc.row_mut(r);
            for (hv, &p) in h.iter_mut().zip(enc_pre.row(r)) {
                *hv = cfg.encoder_activation.apply(p);
            }
            let nrm = norm(enc.row(r));
            if nrm == 0.0 || !nrm.is_finite() {
                return Err(Error::ZeroEmbedding(g.node_id(u).to_owned()));
            }
            norms[r] = nrm;
            for (zv, &hv) in z.row_mut(r).iter_mut().zip(enc.row(r)) {
                *zv = hv / nrm;
            }
        }

        Ok(Forward {
            g,
            cfg: cfg.clone(),
            nodes: nodes.to_vec(),
            slot: nodes.iter().enumerate().map(|(r, &u)| (u, r)).collect(),
            support,
            agg_pre,
            agg,
            enc_pre,
            enc,
            norms,
            z,
        })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Row index of node `u`, if it was evaluated.
    pub fn slot(&self, u: usize) -> Option<usize> {
        self.slot.get(&u).copied()
    }

    /// Unit embedding of row `r`.
    pub fn z(&self, r: usize) -> &[f64] {
        self.z.row(r)
    }

    /// Unnormalized embedding of row `r`.
    pub fn hidden(&self, r: usize) -> &[f64] {
        self.enc.row(r)
    }

    /// Concatenated filter outputs of row `r`.
    pub fn aggregation(&self, r: usize) -> &[f64] {
        self.agg.row(r)
    }

    /// Gradients of all encoder parameters given `∂L/∂z` for every row
    /// (`dz` is `nodes × embed_dim`, row-major). Head gradients are left at zero.
    pub fn backward(&self, dz: &Matrix, params: &ModelParams) -> Result<ModelParams> {
        let mut grads = params.zeros_like();
        self.backward_into(dz, params, &mut grads)?;
        Ok(grads)
    }

    /// As [`Forward::backward`], accumulating into `grads`.
    pub fn backward_into(&self, dz: &Matrix, params: &ModelParams, grads: &mut ModelParams) -> Result<()> {
        let cfg = &self.cfg;
        let n = self.nodes.len();
        if dz.rows() != n || dz.cols() != cfg.embed_dim {
            return Err(Error::Dimension(format!(
                "upstream gradient is {}×{}, expected {}×{}",
                dz.rows(),
                dz.cols(),
                n,
                cfg.embed_dim
            )));
        }
        let g = self.g;
        let feats = g.features();
        let (f, width, d) = (cfg.filter_dim, cfg.aggregation_width(), cfg.embed_dim);
        let offset = cfg.input_dim;
        let support_slot: HashMap<usize, usize> =
            self.support.iter().enumerate().map(|(s, &j)| (j, s)).collect();

        let mut dproj = Matrix::zeros(self.support.len(), width);
        let mut dpre = vec![0.0; d];
        let mut dagg = vec![0.0; width];
        for (r, &u) in self.nodes.iter().enumerate() {
            // through the normalization: (I - z zᵀ) dz / ‖h‖
            let zr = self.z.row(r);
            let g_r = dz.row(r);
            let proj_len = dot(zr, g_r);
            let inv = 1.0 / self.norms[r];
            for k in 0..d {
                let dh = (g_r[k] - zr[k] * proj_len) * inv;
                dpre[k] = dh * cfg
                    .encoder_activation
                    .derivative(self.enc_pre.get(r, k), self.enc.get(r, k));
            }

            axpy(1.0, &dpre, &mut grads.b_enc);
            let (idx, val) = feats.row(u);
            for (&k, &v) in idx.iter().zip(val) {
                axpy(v, &dpre, grads.w_enc.row_mut(k));
            }
            let agg = self.agg.row(r);
            let agg_pre = self.agg_pre.row(r);
            for m in 0..width {
                if agg[m] != 0.0 {
                    axpy(agg[m], &dpre, grads.w_enc.row_mut(offset + m));
                }
                let da = cfg.aggregator_activation.derivative(agg_pre[m], agg[m]);
                dagg[m] = if da == 0.0 {
                    0.0
                } else {
                    dot(params.w_enc.row(offset + m), &dpre) * da
                };
            }

            for j in g.closed_neighborhood(u) {
                axpy(pair_coefficient(g, u, j), &dagg, dproj.row_mut(support_slot[&j]));
            }
        }

        for (s, &j) in self.support.iter().enumerate() {
            let (idx, val) = feats.row(j);
            let dp = dproj.row(s);
            for (l, gtheta) in grads.theta.iter_mut().enumerate() {
                let block = &dp[l * f..(l + 1) * f];
                for (&k, &v) in idx.iter().zip(val) {
                    axpy(v, block, gtheta.row_mut(k));
                }
            }
        }
        grads.check_finite()
    }
}

#[cfg(test)]
mod tests;
