//! Link-prediction AUC, node-classification micro-F1, the raw-attribute
//! baseline and the filter-count sweep.

use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{split_edges_connected, EdgeSplit, Features, Graph};
use crate::linalg::{axpy, dot, softmax, Matrix};
use crate::model::{classify, EmbeddingMatrix, ModelConfig, ModelParams};
use crate::optim::{Optimizer, OptimizerKind};
use crate::trainer::{embed_all, train, TrainConfig, TrainLog};

/// Inner product of two unit embeddings.
pub fn score_edge(z_u: &[f64], z_v: &[f64]) -> f64 {
    dot(z_u, z_v)
}

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs where the
/// positive scores higher, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u128;
    let neg = labels.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Invalid("AUC needs both positive and negative labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum of the positives, ties at their mean rank
    let mut rank2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let p = order[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        rank2 += p * (i as u128 + 1 + j as u128);
        i = j;
    }
    let u2 = rank2 - pos * (pos + 1);
    Ok(u2 as f64 / (2 * pos * neg) as f64)
}

/// Micro-averaged F1 from pooled true positives, false positives and false negatives.
pub fn micro_f1(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::Invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Invalid("micro-F1 of an empty set".into()));
    }
    let tp = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    // each miss is one false positive (predicted class) and one false negative (true class)
    let fp = truth.len() - tp;
    let fn_ = fp;
    Ok((2 * tp) as f64 / (2 * tp + fp + fn_) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    LinkPrediction,
    NodeClassification,
    RawFeature,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::LinkPrediction => "link_prediction",
            Task::NodeClassification => "node_classification",
            Task::RawFeature => "raw_feature",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub dataset: String,
    pub fraction: f64,
    pub seed: u64,
    pub metric: &'static str,
    pub value: f64,
    pub seconds: f64,
    /// Single-class labels make micro-F1 trivially 1.
    pub degenerate: bool,
    pub config: Vec<(String, String)>,
}

pub const RESULTS_HEADER: &str = "# dataset task fraction seed metric value seconds";

impl EvalReport {
    /// Flat `key value` block.
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "task {}\ndataset {}\nfraction {}\nseed {}\nmetric {}\nvalue {}\nseconds {:.3}\ndegenerate {}\n",
            self.task, self.dataset, self.fraction, self.seed, self.metric, self.value, self.seconds, self.degenerate
        );
        for (k, v) in &self.config {
            s.push_str(&format!("config.{k} {v}\n"));
        }
        s
    }

    pub fn table_row(&self) -> String {
        format!(
            "{} {} {} {} {} {} {:.3}",
            self.dataset, self.task, self.fraction, self.seed, self.metric, self.value, self.seconds
        )
    }

    /// Appends the row to a results table, writing the header for a new file.
    pub fn append_to(&self, path: &Path) -> Result<()> {
        let fresh = !path.exists();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        if fresh {
            writeln!(f, "{RESULTS_HEADER}").map_err(|e| Error::io(path, e))?;
        }
        writeln!(f, "{}", self.table_row()).map_err(|e| Error::io(path, e))
    }
}

/// Settings that fully determine a run, as `key value` pairs.
pub fn config_echo(mcfg: &ModelConfig, tcfg: &TrainConfig) -> Vec<(String, String)> {
    let w = &tcfg.walk;
    [
        ("num_filters", mcfg.num_filters.to_string()),
        ("filter_dim", mcfg.filter_dim.to_string()),
        ("aggregation_width", mcfg.aggregation_width().to_string()),
        ("embed_dim", mcfg.embed_dim.to_string()),
        ("input_dim", mcfg.input_dim.to_string()),
        ("depth", mcfg.depth.to_string()),
        ("aggregator_activation", mcfg.aggregator_activation.to_string()),
        ("encoder_activation", mcfg.encoder_activation.to_string()),
        ("batch_size", tcfg.batch_size.to_string()),
        ("epochs", tcfg.epochs.to_string()),
        ("learning_rate", tcfg.learning_rate.to_string()),
        ("optimizer", tcfg.optimizer.to_string()),
        ("negatives", tcfg.negatives.to_string()),
        ("supervised_weight", tcfg.supervised_weight.to_string()),
        (
            "early_stop_patience",
            tcfg.early_stop_patience.map_or("none".into(), |p| p.to_string()),
        ),
        ("walk_length", w.walk_length.to_string()),
        ("return_param", w.return_param.to_string()),
        ("inout_param", w.inout_param.to_string()),
        ("window", w.window.to_string()),
        ("walks_per_center", w.walks_per_center.to_string()),
        ("strict_negatives", w.strict_negatives.to_string()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LpScorer {
    #[default]
    InnerProduct,
    /// Logistic regression on the elementwise product of the two embeddings.
    Hadamard,
}

impl FromStr for LpScorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" => Ok(LpScorer::InnerProduct),
            "hadamard" => Ok(LpScorer::Hadamard),
            _ => Err(Error::Config(format!("unknown link scorer {s:?}"))),
        }
    }
}

impl fmt::Display for LpScorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpScorer::InnerProduct => "inner",
            LpScorer::Hadamard => "hadamard",
        })
    }
}

/// Everything a link-prediction run produced.
#[derive(Debug, Clone)]
pub struct LinkPredictionRun {
    pub report: EvalReport,
    pub split: EdgeSplit,
    pub params: ModelParams,
    pub embeddings: EmbeddingMatrix,
    pub log: TrainLog,
}

fn split_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Removes `fraction` of the edges while keeping every component connected,
/// trains unsupervised on the rest and scores held-out edges against non-edges.
pub fn eval_link_prediction(
    g: &Graph,
    dataset: &str,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    fraction: f64,
    seed: u64,
    scorer: LpScorer,
) -> Result<LinkPredictionRun> {
    let start = Instant::now();
    let split = split_edges_connected(g, fraction, &mut split_rng(seed, 1))?;
    let tg = &split.train_graph;
    if let Some(&(a, b)) = split.removed_edges.iter().find(|&&(a, b)| tg.has_edge(a, b)) {
        return Err(Error::Data(format!("removed edge ({a}, {b}) still in the training graph")));
    }
    let tcfg = TrainConfig {
        seed,
        supervised: false,
        label_nodes: None,
        ..tcfg.clone()
    };
    let mcfg = ModelConfig {
        num_classes: None,
        ..mcfg.clone()
    };
    let out = train(tg, &mcfg, &tcfg)?;
    let emb = embed_all(tg, &out.params, &mcfg)?;

    let pairs: Vec<((usize, usize), bool)> = split
        .removed_edges
        .iter()
        .map(|&e| (e, true))
        .chain(split.negative_edges.iter().map(|&e| (e, false)))
        .collect();
    let scores: Vec<f64> = match scorer {
        LpScorer::InnerProduct => pairs.iter().map(|&((a, b), _)| score_edge(emb.row(a), emb.row(b))).collect(),
        LpScorer::Hadamard => hadamard_scores(g, &split, &emb, &pairs, seed)?,
    };
    let labels: Vec<bool> = pairs.iter().map(|&(_, l)| l).collect();
    let value = auc(&scores, &labels)?;

    let mut config = config_echo(&mcfg, &tcfg);
    config.push(("scorer".into(), scorer.to_string()));
    config.push(("removed_edges".into(), split.removed_edges.len().to_string()));
    config.push(("negative_edges".into(), split.negative_edges.len().to_string()));
    Ok(LinkPredictionRun {
        report: EvalReport {
            task: Task::LinkPrediction,
            dataset: dataset.to_string(),
            fraction,
            seed,
            metric: "auc",
            value,
            seconds: start.elapsed().as_secs_f64(),
            degenerate: false,
            config,
        },
        split,
        params: out.params,
        embeddings: emb,
        log: out.log,
    })
}

fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Fits the pair classifier on training edges against sampled non-edges of
/// the full graph that are not evaluation negatives, then scores `pairs`.
fn hadamard_scores(
    g: &Graph,
    split: &EdgeSplit,
    emb: &EmbeddingMatrix,
    pairs: &[((usize, usize), bool)],
    seed: u64,
) -> Result<Vec<f64>> {
    let tg = &split.train_graph;
    let held: std::collections::HashSet<(usize, usize)> = split.negative_edges.iter().copied().collect();
    let mut rng = split_rng(seed, 2);
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (a, b) in tg.edges() {
        rows.push(hadamard(emb.row(a), emb.row(b)));
        targets.push(1);
    }
    let n = g.node_count();
    let wanted = targets.len();
    let mut tries = 0;
    while targets.len() < 2 * wanted && tries < 100 * wanted.max(1) {
        tries += 1;
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let key = (a.min(b), a.max(b));
        if a == b || g.has_edge(a, b) || held.contains(&key) {
            continue;
        }
        rows.push(hadamard(emb.row(a), emb.row(b)));
        targets.push(0);
    }
    let x = Features::from_dense_signed(emb.dim(), &rows)?;
    let idx: Vec<usize> = (0..rows.len()).collect();
    let model = fit_softmax(&x, &idx, &targets, 2, &ProbeConfig::default(), seed)?;
    Ok(pairs
        .iter()
        .map(|&((a, b), _)| {
            let h = hadamard(emb.row(a), emb.row(b));
            let x = Features::from_dense_signed(h.len(), &[h]).expect("finite row");
            softmax(&sparse_logits(&x, 0, &model))[1]
        })
        .collect())
}

/// Training settings for the linear models fitted on fixed inputs: the raw
/// attribute baseline, the embedding probe and the pair scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 512,
            epochs: 1000,
        }
    }
}

/// Multinomial logistic regression on sparse rows.
pub fn fit_softmax(
    x: &Features,
    rows: &[usize],
    labels: &[usize],
    classes: usize,
    tcfg: &ProbeConfig,
    seed: u64,
) -> Result<ModelParams> {
    if tcfg.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(Error::Invalid("softmax regression needs one label per training row".into()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label: l, classes });
    }
    let mut params = ModelParams {
        theta: Vec::new(),
        w_enc: Matrix::zeros(0, 0),
        b_enc: Vec::new(),
        w_cls: Some(Matrix::zeros(x.dim(), classes)),
        b_cls: Some(vec![0.0; classes]),
    };
    let mut opt = Optimizer::new(tcfg.optimizer, tcfg.learning_rate, &params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for _ in 0..tcfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(tcfg.batch_size) {
            let mut grads = params.zeros_like();
            {
                let gw = grads.w_cls.as_mut().expect("head");
                let gb = grads.b_cls.as_mut().expect("head");
                for &i in chunk {
                    let mut p = softmax(&sparse_logits(x, rows[i], &params));
                    p[labels[i]] -= 1.0;
                    axpy(1.0, &p, gb);
                    let (idx, val) = x.row(rows[i]);
                    for (&k, &v) in idx.iter().zip(val) {
                        axpy(v, &p, gw.row_mut(k));
                    }
                }
            }
            grads.scale(1.0 / chunk.len() as f64);
            opt.step(&mut params, &grads);
        }
    }
    params.check_finite()?;
    Ok(params)
}

fn sparse_logits(x: &Features, row: usize, params: &ModelParams) -> Vec<f64> {
    let w = params.w_cls.as_ref().expect("head");
    let mut out = params.b_cls.clone().expect("head");
    let (idx, val) = x.row(row);
    for (&k, &v) in idx.iter().zip(val) {
        axpy(v, w.row(k), &mut out);
    }
    out
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    #[default]
    Uniform,
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Classifier {
    /// The model's own softmax head, trained jointly.
    #[default]
    Head,
    /// A softmax regression fitted afterwards on frozen embeddings.
    LinearProbe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NcOptions {
    pub split: SplitMode,
    pub classifier: Classifier,
}

/// Picks `fraction` of the labelled nodes for training; the rest are test nodes.
pub fn split_labeled<R: Rng + ?Sized>(
    g: &Graph,
    fraction: f64,
    mode: SplitMode,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let labels = g
        .labels()
        .ok_or_else(|| Error::Data("node classification needs labels".into()))?;
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("label fraction {fraction} outside (0, 1)")));
    }
    let nodes = labels.labeled_nodes();
    if nodes.len() < 2 {
        return Err(Error::Data("fewer than two labelled nodes".into()));
    }
    let take = |n: usize| ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    match mode {
        SplitMode::Uniform => {
            let mut shuffled = nodes;
            shuffled.shuffle(rng);
            let k = take(shuffled.len());
            train.extend_from_slice(&shuffled[..k]);
            test.extend_from_slice(&shuffled[k..]);
        }
        SplitMode::Stratified => {
            for c in 0..labels.num_classes() {
                let mut members: Vec<usize> = nodes.iter().copied().filter(|&u| labels.get(u) == Some(c)).collect();
                members.shuffle(rng);
                match members.len() {
                    0 => {}
                    1 => train.push(members[0]),
                    n => {
                        let k = take(n);
                        train.extend_from_slice(&members[..k]);
                        test.extend_from_slice(&members[k..]);
                    }
                }
            }
        }
    }
    if test.is_empty() {
        return Err(Error::Data("no test nodes left after the split".into()));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

fn truth(g: &Graph, nodes: &[usize]) -> Vec<usize> {
    let labels = g.labels().expect("checked by split");
    nodes.iter().map(|&u| labels.get(u).expect("labelled node")).collect()
}

/// Jointly trains on the whole graph with labels from `fraction` of the
/// labelled nodes and reports micro-F1 on the remaining labelled nodes.
pub fn eval_node_classification(
    g: &Graph,
    dataset: &str,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    fraction: f64,
    seed: u64,
    opts: NcOptions,
) -> Result<(EvalReport, TrainLog)> {
    let start = Instant::now();
    let (train_nodes, test_nodes) = split_labeled(g, fraction, opts.split, &mut split_rng(seed, 3))?;
    let classes = g.labels().expect("checked by split").num_classes();
    let mcfg = ModelConfig {
        num_classes: Some(classes),
        ..mcfg.clone()
    };
    let tcfg = TrainConfig {
        seed,
        supervised: opts.classifier == Classifier::Head,
        label_nodes: Some(train_nodes.clone()),
        ..tcfg.clone()
    };
    let out = train(g, &mcfg, &tcfg)?;
    let emb = embed_all(g, &out.params, &mcfg)?;
    let predictions: Vec<usize> = match opts.classifier {
        Classifier::Head => test_nodes
            .iter()
            .map(|&u| classify(emb.row(u), &out.params, &mcfg).map(|p| argmax(&p)))
            .collect::<Result<_>>()?,
        Classifier::LinearProbe => {
            let rows: Vec<&[f64]> = (0..emb.len()).map(|r| emb.row(r)).collect();
            let x = Features::from_dense_signed(emb.dim(), &rows)?;
            let probe = fit_softmax(&x, &train_nodes, &truth(g, &train_nodes), classes, &ProbeConfig::default(), seed)?;
            test_nodes.iter().map(|&u| argmax(&sparse_logits(&x, u, &probe))).collect()
        }
    };
    let value = micro_f1(&predictions, &truth(g, &test_nodes))?;
    let mut config = config_echo(&mcfg, &tcfg);
    config.push(("classifier".into(), format!("{:?}", opts.classifier).to_lowercase()));
    config.push(("split".into(), format!("{:?}", opts.split).to_lowercase()));
    config.push(("train_nodes".into(), train_nodes.len().to_string()));
    config.push(("test_nodes".into(), test_nodes.len().to_string()));
    let report = EvalReport {
        task: Task::NodeClassification,
        dataset: dataset.to_string(),
        fraction,
        seed,
        metric: "micro_f1",
        value,
        seconds: start.elapsed().as_secs_f64(),
        degenerate: classes < 2,
        config,
    };
    Ok((report, out.log))
}

/// Softmax regression on the raw attribute vectors of the training split.
pub fn eval_raw_feature(
    g: &Graph,
    dataset: &str,
    tcfg: &ProbeConfig,
    fraction: f64,
    seed: u64,
    split: SplitMode,
) -> Result<EvalReport> {
    let start = Instant::now();
    let (train_nodes, test_nodes) = split_labeled(g, fraction, split, &mut split_rng(seed, 3))?;
    let classes = g.labels().expect("checked by split").num_classes();
    let model = fit_softmax(g.features(), &train_nodes, &truth(g, &train_nodes), classes, tcfg, seed)?;
    let predictions: Vec<usize> = test_nodes
        .iter()
        .map(|&u| argmax(&sparse_logits(g.features(), u, &model)))
        .collect();
    let value = micro_f1(&predictions, &truth(g, &test_nodes))?;
    let config = vec![
        ("batch_size".to_string(), tcfg.batch_size.to_string()),
        ("epochs".to_string(), tcfg.epochs.to_string()),
        ("learning_rate".to_string(), tcfg.learning_rate.to_string()),
        ("optimizer".to_string(), tcfg.optimizer.to_string()),
        ("split".to_string(), format!("{split:?}").to_lowercase()),
    ];
    Ok(EvalReport {
        task: Task::RawFeature,
        dataset: dataset.to_string(),
        fraction,
        seed,
        metric: "micro_f1",
        value,
        seconds: start.elapsed().as_secs_f64(),
        degenerate: classes < 2,
        config,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub filters: usize,
    /// Mean over repeats.
    pub f1: f64,
    /// Fastest mean epoch time over repeats.
    pub seconds_per_epoch: f64,
}

pub const SWEEP_HEADER: &str = "L f1 sec_per_epoch";

impl fmt::Display for SweepRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {:.6}", self.filters, self.f1, self.seconds_per_epoch)
    }
}

/// Node classification at `fraction` labels for each filter count, with
/// seeds `seed, seed + 1, …` over `repeats` runs.
pub fn filter_sweep(
    g: &Graph,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    filter_counts: &[usize],
    fraction: f64,
    seed: u64,
    repeats: usize,
) -> Result<Vec<SweepRow>> {
    if repeats == 0 {
        return Err(Error::Config("sweep needs at least one repeat".into()));
    }
    let (train_nodes, test_nodes) = split_labeled(g, fraction, SplitMode::Uniform, &mut split_rng(seed, 3))?;
    let classes = g.labels().expect("checked by split").num_classes();
    let mut rows = Vec::with_capacity(filter_counts.len());
    for &l in filter_counts {
        let mcfg = ModelConfig {
            num_filters: l,
            num_classes: Some(classes),
            ..mcfg.clone()
        };
        let (mut f1, mut secs) = (0.0, f64::INFINITY);
        for r in 0..repeats {
            let tcfg = TrainConfig {
                seed: seed.wrapping_add(r as u64),
                supervised: true,
                label_nodes: Some(train_nodes.clone()),
                ..tcfg.clone()
            };
            let out = train(g, &mcfg, &tcfg)?;
            let emb = embed_all(g, &out.params, &mcfg)?;
            let predictions: Vec<usize> = test_nodes
                .iter()
                .map(|&u| classify(emb.row(u), &out.params, &mcfg).map(|p| argmax(&p)))
                .collect::<Result<_>>()?;
            f1 += micro_f1(&predictions, &truth(g, &test_nodes))?;
            secs = secs.min(out.log.seconds_per_epoch());
        }
        rows.push(SweepRow {
            filters: l,
            f1: f1 / repeats as f64,
            seconds_per_epoch: secs,
        });
    }
    Ok(rows)
}

/// Mean, minimum and maximum of a metric over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    Some(Summary {
        n: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} mean={:.4} min={:.4} max={:.4}", self.n, self.mean, self.min, self.max)
    }
}
