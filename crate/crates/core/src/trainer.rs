//! Mini-batch training loop.
//!
//! Every epoch shuffles the nodes and cuts them into batches of centers. For
//! each batch the sampler draws contexts and negatives, the encoder embeds
//! every node the batch touches once, the SGNS loss (plus cross-entropy for
//! labelled centers when supervised) is evaluated on the unit embeddings, and
//! the summed gradient divided by the number of centers drives one optimizer
//! step.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{axpy, Matrix};
use crate::model::{embed_nodes, head_backward, logits, EmbeddingMatrix, Forward, ModelConfig, ModelParams};
use crate::objectives::{cross_entropy_loss, sgns_factors, total_loss, CenterLoss, LossReport};
use crate::optim::{Optimizer, OptimizerKind};
use crate::sampler::{make_batch, Batch, WalkConfig};
use crate::linalg::softmax;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Negatives per center.
    pub negatives: usize,
    pub seed: u64,
    /// Add the cross-entropy term for labelled centers.
    pub supervised: bool,
    /// Multiplier on the cross-entropy term. 1.0 gives the plain sum.
    pub supervised_weight: f64,
    /// Stop after this many epochs without improvement of the held-out loss.
    pub early_stop_patience: Option<usize>,
    /// Nodes whose labels may be used by the supervised term. `None` means all labelled nodes.
    pub label_nodes: Option<Vec<usize>>,
    pub walk: WalkConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 512,
            epochs: 50,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            negatives: 100,
            seed: 0,
            supervised: false,
            supervised_weight: 1.0,
            early_stop_patience: None,
            label_nodes: None,
            walk: WalkConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.negatives == 0 {
            return Err(Error::Config("batch_size and negatives must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if self.early_stop_patience == Some(0) {
            return Err(Error::Config("early_stop_patience must be positive".into()));
        }
        self.walk.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLog {
    pub epoch: usize,
    pub batch: usize,
    pub centers: usize,
    /// Per-center means over the batch.
    pub sgns: f64,
    pub supervised: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Per-center means over the epoch.
    pub sgns: f64,
    pub supervised: f64,
    pub total: f64,
    pub seconds: f64,
    pub holdout: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub batches: Vec<BatchLog>,
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    /// Mean wall-clock seconds per completed epoch.
    pub fn seconds_per_epoch(&self) -> f64 {
        if self.epochs.is_empty() {
            0.0
        } else {
            self.epochs.iter().map(|e| e.seconds).sum::<f64>() / self.epochs.len() as f64
        }
    }

    /// `epoch batch sgns supervised total` per batch, and
    /// `# epoch <e> sgns supervised total seconds [holdout]` per epoch.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# epoch batch sgns supervised total")?;
        let mut b = self.batches.iter().peekable();
        for e in &self.epochs {
            while let Some(bl) = b.next_if(|bl| bl.epoch == e.epoch) {
                writeln!(w, "{} {} {:.6} {:.6} {:.6}", bl.epoch, bl.batch, bl.sgns, bl.supervised, bl.total)?;
            }
            write!(w, "{e}")?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "# epoch {} sgns {:.6} supervised {:.6} total {:.6} seconds {:.3}",
            self.epoch, self.sgns, self.supervised, self.total, self.seconds
        )?;
        if let Some(h) = self.holdout {
            write!(f, " holdout {h:.6}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
    /// Epochs actually run.
    pub epochs_run: usize,
}

/// Per-node training label, restricted to `label_nodes` when given.
fn training_labels(g: &Graph, cfg: &TrainConfig) -> Result<Vec<Option<usize>>> {
    let labels = g
        .labels()
        .ok_or_else(|| Error::Config("supervised training needs a labelled graph".into()))?;
    let mut out = vec![None; g.node_count()];
    match &cfg.label_nodes {
        Some(nodes) => {
            for &u in nodes {
                if u >= g.node_count() {
                    return Err(Error::Invalid(format!("label node {u} out of range")));
                }
                out[u] = labels.get(u);
            }
        }
        None => out.copy_from_slice(labels.as_slice()),
    }
    if out.iter().all(Option::is_none) {
        return Err(Error::Config("supervised training without any labelled node".into()));
    }
    Ok(out)
}

/// Losses and parameter gradients (summed over centers) for one batch.
pub fn batch_gradients(
    g: &Graph,
    params: &ModelParams,
    mcfg: &ModelConfig,
    batch: &Batch,
    labels: Option<&[Option<usize>]>,
    supervised_weight: f64,
) -> Result<(LossReport, ModelParams)> {
    let nodes = batch.nodes();
    let fwd = Forward::run(g, &nodes, params, mcfg)?;
    let d = mcfg.embed_dim;
    let mut dz = Matrix::zeros(nodes.len(), d);
    let mut grads = params.zeros_like();
    let slot = |u: usize| fwd.slot(u).expect("batch node was embedded");
    let mut per_center = Vec::with_capacity(batch.len());

    for i in 0..batch.len() {
        let u = batch.centers[i];
        let su = slot(u);
        let zu = fwd.z(su);
        let ctx: Vec<usize> = batch.contexts[i].iter().map(|&c| slot(c)).collect();
        let neg: Vec<usize> = batch.negatives[i].iter().map(|&c| slot(c)).collect();
        let (sgns, cf, nf) = sgns_factors(
            zu,
            ctx.iter().map(|&s| fwd.z(s)),
            neg.iter().map(|&s| fwd.z(s)),
        );
        let mut du = vec![0.0; d];
        for (&s, &f) in ctx.iter().zip(&cf).chain(neg.iter().zip(&nf)) {
            axpy(f, fwd.z(s), &mut du);
            axpy(f, zu, dz.row_mut(s));
        }

        let mut supervised = None;
        if let Some(label) = labels.and_then(|l| l[u]) {
            let probs = softmax(&logits(zu, params)?);
            let (ce, mut dlogits) = cross_entropy_loss(&probs, label)?;
            dlogits.iter_mut().for_each(|v| *v *= supervised_weight);
            head_backward(zu, &dlogits, params, &mut grads, &mut du)?;
            supervised = Some(supervised_weight * ce);
        }
        axpy(1.0, &du, dz.row_mut(su));
        per_center.push(CenterLoss { center: u, sgns, supervised });
    }

    fwd.backward_into(&dz, params, &mut grads)?;
    Ok((total_loss(per_center, labels.is_some()), grads))
}

/// Runs the training loop; `on_epoch` sees the parameters after every epoch.
pub fn train_with<F>(g: &Graph, mcfg: &ModelConfig, tcfg: &TrainConfig, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(usize, &ModelParams) -> Result<()>,
{
    mcfg.validate()?;
    tcfg.validate()?;
    if g.features().dim() != mcfg.input_dim {
        return Err(Error::Dimension(format!(
            "graph attributes have dimension {}, model expects {}",
            g.features().dim(),
            mcfg.input_dim
        )));
    }
    let labels = if tcfg.supervised {
        if mcfg.num_classes.is_none() {
            return Err(Error::Config("supervised training needs a classification head".into()));
        }
        Some(training_labels(g, tcfg)?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut params = ModelParams::init(mcfg, &mut rng)?;
    let mut opt = Optimizer::new(tcfg.optimizer, tcfg.learning_rate, &params);
    let mut log = TrainLog::default();

    let mut centers: Vec<usize> = (0..g.node_count()).collect();
    let mut holdout = Vec::new();
    let holdout_seed: u64 = rng.gen();
    if tcfg.early_stop_patience.is_some() {
        centers.shuffle(&mut rng);
        let h = (centers.len() / 10).max(1).min(centers.len().saturating_sub(1));
        holdout = centers.split_off(centers.len() - h);
        centers.sort_unstable();
        holdout.sort_unstable();
    }
    let mut best: Option<(f64, ModelParams)> = None;
    let mut since_best = 0;
    let mut epochs_run = 0;

    for epoch in 1..=tcfg.epochs {
        let start = Instant::now();
        centers.shuffle(&mut rng);
        let (mut s_sum, mut r_sum, mut count) = (0.0, 0.0, 0usize);
        for (b, chunk) in centers.chunks(tcfg.batch_size).enumerate() {
            let batch = make_batch(g, chunk, &tcfg.walk, tcfg.negatives, &mut rng)?;
            if batch.is_empty() {
                continue;
            }
            let (report, mut grads) =
                batch_gradients(g, &params, mcfg, &batch, labels.as_deref(), tcfg.supervised_weight)?;
            if !report.total.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            grads.scale(1.0 / batch.len() as f64);
            opt.step(&mut params, &grads);
            let n = batch.len() as f64;
            log.batches.push(BatchLog {
                epoch,
                batch: b,
                centers: batch.len(),
                sgns: report.sgns / n,
                supervised: report.supervised / n,
                total: report.total / n,
            });
            s_sum += report.sgns;
            r_sum += report.supervised;
            count += batch.len();
        }
        params.check_finite()?;

        let held = if holdout.is_empty() {
            None
        } else {
            let mut hrng = ChaCha8Rng::seed_from_u64(holdout_seed);
            let batch = make_batch(g, &holdout, &tcfg.walk, tcfg.negatives, &mut hrng)?;
            if batch.is_empty() {
                None
            } else {
                let (r, _) = batch_gradients(g, &params, mcfg, &batch, labels.as_deref(), tcfg.supervised_weight)?;
                Some(r.total / batch.len() as f64)
            }
        };

        let c = count.max(1) as f64;
        let entry = EpochLog {
            epoch,
            sgns: s_sum / c,
            supervised: r_sum / c,
            total: (s_sum + r_sum) / c,
            seconds: start.elapsed().as_secs_f64(),
            holdout: held,
        };
        log::info!("{entry}");
        log.epochs.push(entry);
        epochs_run = epoch;
        on_epoch(epoch, &params)?;

        if let (Some(patience), Some(h)) = (tcfg.early_stop_patience, held) {
            if best.as_ref().is_none_or(|(b, _)| h < *b) {
                best = Some((h, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    log::info!("early stop after epoch {epoch}");
                    break;
                }
            }
        }
    }

    if let Some((_, p)) = best {
        params = p;
    }
    Ok(TrainOutcome {
        params,
        log,
        epochs_run,
    })
}

pub fn train(g: &Graph, mcfg: &ModelConfig, tcfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(g, mcfg, tcfg, |_, _| Ok(()))
}

/// Unit embeddings for every node of `g`, in node order. `g` may contain nodes
/// never seen during training.
pub fn embed_all(g: &Graph, params: &ModelParams, cfg: &ModelConfig) -> Result<EmbeddingMatrix> {
    let nodes: Vec<usize> = (0..g.node_count()).collect();
    embed_nodes(g, &nodes, params, cfg)
}
