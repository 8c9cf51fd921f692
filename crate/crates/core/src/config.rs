//! Run configuration as flat `key=value` text, and the dataset registry.
//!
//! Values are resolved in three layers: built-in defaults, then a config
//! file, then command-line flags. Every run writes the resolved
//! configuration next to its outputs with [`RunConfig::to_text`], and that
//! file can be fed back with `--config` to repeat the run.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{Classifier, LpScorer, ProbeConfig, SplitMode};
use crate::graph::{load_content_cites, load_edge_list, Graph, LoadReport};
use crate::model::{Activation, ModelConfig};
use crate::optim::OptimizerKind;
use crate::sampler::WalkConfig;
use crate::trainer::TrainConfig;

pub const DATA_DIR_VAR: &str = "MFGCN_DATA_DIR";
pub const OUTPUT_ROOT_VAR: &str = "MFGCN_OUTPUT_ROOT";

/// Names with a fixed on-disk layout under the data directory.
pub const REGISTRY: [&str; 4] = ["cora", "citeseer", "pubmed", "wiki"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: String,
    pub data_dir: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub seeds: usize,
    pub jobs: usize,

    pub filters: usize,
    pub filter_dim: usize,
    pub embed_dim: usize,
    pub depth: usize,
    pub aggregator_activation: Activation,
    pub encoder_activation: Activation,

    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub negatives: usize,
    pub supervised: bool,
    pub supervised_weight: f64,
    pub early_stop_patience: Option<usize>,
    pub checkpoint_every: Option<usize>,

    pub walk_length: usize,
    pub return_param: f64,
    pub inout_param: f64,
    pub window: usize,
    pub walks_per_center: usize,
    pub strict_negatives: bool,

    /// Removed-edge fraction for link prediction, labelled fraction otherwise.
    pub fraction: Option<f64>,
    pub scorer: LpScorer,
    pub classifier: Classifier,
    pub split: SplitMode,
    pub sweep_filters: Vec<usize>,
    pub sweep_repeats: usize,
    pub probe_epochs: usize,
    pub probe_learning_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let w = WalkConfig::default();
        let m = ModelConfig::new(1, None);
        let p = ProbeConfig::default();
        RunConfig {
            dataset: String::new(),
            data_dir: std::env::var_os(DATA_DIR_VAR).map_or_else(|| PathBuf::from("data"), PathBuf::from),
            output_dir: None,
            seed: t.seed,
            seeds: 1,
            jobs: 1,
            filters: m.num_filters,
            filter_dim: m.filter_dim,
            embed_dim: m.embed_dim,
            depth: m.depth,
            aggregator_activation: m.aggregator_activation,
            encoder_activation: m.encoder_activation,
            batch_size: t.batch_size,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            optimizer: t.optimizer,
            negatives: t.negatives,
            supervised: t.supervised,
            supervised_weight: t.supervised_weight,
            early_stop_patience: t.early_stop_patience,
            checkpoint_every: None,
            walk_length: w.walk_length,
            return_param: w.return_param,
            inout_param: w.inout_param,
            window: w.window,
            walks_per_center: w.walks_per_center,
            strict_negatives: w.strict_negatives,
            fraction: None,
            scorer: LpScorer::default(),
            classifier: Classifier::default(),
            split: SplitMode::default(),
            sweep_filters: vec![1, 5, 10, 25, 50, 100],
            sweep_repeats: 1,
            probe_epochs: p.epochs,
            probe_learning_rate: p.learning_rate,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value {value:?} for {key}"))),
    }
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn opt_text<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or("none".into(), |v| v.to_string())
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    let list: Vec<usize> = value
        .split(',')
        .map(|t| parse(key, t.trim()))
        .collect::<Result<_>>()?;
    if list.is_empty() {
        return Err(Error::Config(format!("{key} is empty")));
    }
    Ok(list)
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "head" => Ok(Classifier::Head),
            "probe" => Ok(Classifier::LinearProbe),
            _ => Err(Error::Config(format!("unknown classifier {s:?}"))),
        }
    }
}

impl std::fmt::Display for Classifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classifier::Head => "head",
            Classifier::LinearProbe => "probe",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SplitMode::Uniform),
            "stratified" => Ok(SplitMode::Stratified),
            _ => Err(Error::Config(format!("unknown split mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitMode::Uniform => "uniform",
            SplitMode::Stratified => "stratified",
        })
    }
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "dataset" => self.dataset = v.to_string(),
            "data_dir" => self.data_dir = PathBuf::from(v),
            "output_dir" => self.output_dir = parse_opt::<String>(key, v)?.map(PathBuf::from),
            "seed" => self.seed = parse(key, v)?,
            "seeds" => self.seeds = parse(key, v)?,
            "jobs" => self.jobs = parse(key, v)?,
            "filters" => self.filters = parse(key, v)?,
            "filter_dim" => self.filter_dim = parse(key, v)?,
            "embed_dim" => self.embed_dim = parse(key, v)?,
            "depth" => self.depth = parse(key, v)?,
            "aggregator_activation" => self.aggregator_activation = parse(key, v)?,
            "encoder_activation" => self.encoder_activation = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "learning_rate" => self.learning_rate = parse(key, v)?,
            "optimizer" => self.optimizer = v.parse()?,
            "negatives" => self.negatives = parse(key, v)?,
            "supervised" => self.supervised = parse_bool(key, v)?,
            "supervised_weight" => self.supervised_weight = parse(key, v)?,
            "early_stop_patience" => self.early_stop_patience = parse_opt(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse_opt(key, v)?,
            "walk_length" => self.walk_length = parse(key, v)?,
            "return_param" => self.return_param = parse(key, v)?,
            "inout_param" => self.inout_param = parse(key, v)?,
            "window" => self.window = parse(key, v)?,
            "walks_per_center" => self.walks_per_center = parse(key, v)?,
            "strict_negatives" => self.strict_negatives = parse_bool(key, v)?,
            "fraction" => self.fraction = parse_opt(key, v)?,
            "scorer" => self.scorer = v.parse()?,
            "classifier" => self.classifier = v.parse()?,
            "split" => self.split = v.parse()?,
            "sweep_filters" => self.sweep_filters = parse_list(key, v)?,
            "sweep_repeats" => self.sweep_repeats = parse(key, v)?,
            "probe_epochs" => self.probe_epochs = parse(key, v)?,
            "probe_learning_rate" => self.probe_learning_rate = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` file; blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}:{}: expected key=value", origin.display(), n + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", origin.display(), n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("dataset", self.dataset.clone()),
            ("data_dir", self.data_dir.display().to_string()),
            ("output_dir", opt_text(&self.output_dir.as_ref().map(|p| p.display()))),
            ("seed", self.seed.to_string()),
            ("seeds", self.seeds.to_string()),
            ("jobs", self.jobs.to_string()),
            ("filters", self.filters.to_string()),
            ("filter_dim", self.filter_dim.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("depth", self.depth.to_string()),
            ("aggregator_activation", self.aggregator_activation.to_string()),
            ("encoder_activation", self.encoder_activation.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("negatives", self.negatives.to_string()),
            ("supervised", self.supervised.to_string()),
            ("supervised_weight", self.supervised_weight.to_string()),
            ("early_stop_patience", opt_text(&self.early_stop_patience)),
            ("checkpoint_every", opt_text(&self.checkpoint_every)),
            ("walk_length", self.walk_length.to_string()),
            ("return_param", self.return_param.to_string()),
            ("inout_param", self.inout_param.to_string()),
            ("window", self.window.to_string()),
            ("walks_per_center", self.walks_per_center.to_string()),
            ("strict_negatives", self.strict_negatives.to_string()),
            ("fraction", opt_text(&self.fraction)),
            ("scorer", self.scorer.to_string()),
            ("classifier", self.classifier.to_string()),
            ("split", self.split.to_string()),
            (
                "sweep_filters",
                self.sweep_filters.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("sweep_repeats", self.sweep_repeats.to_string()),
            ("probe_epochs", self.probe_epochs.to_string()),
            ("probe_learning_rate", self.probe_learning_rate.to_string()),
        ]
    }

    /// Resolved configuration in the file format, plus derived values as comments.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(&format!("{k}={v}\n"));
        }
        s.push_str(&format!(
            "# aggregation_width={}\n",
            self.filters * self.filter_dim
        ));
        s
    }

    pub fn model_config(&self, input_dim: usize, num_classes: Option<usize>) -> ModelConfig {
        ModelConfig {
            num_filters: self.filters,
            filter_dim: self.filter_dim,
            embed_dim: self.embed_dim,
            input_dim,
            depth: self.depth,
            aggregator_activation: self.aggregator_activation,
            encoder_activation: self.encoder_activation,
            num_classes,
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            walk_length: self.walk_length,
            return_param: self.return_param,
            inout_param: self.inout_param,
            window: self.window,
            walks_per_center: self.walks_per_center,
            strict_negatives: self.strict_negatives,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            negatives: self.negatives,
            seed,
            supervised: self.supervised,
            supervised_weight: self.supervised_weight,
            early_stop_patience: self.early_stop_patience,
            label_nodes: None,
            walk: self.walk_config(),
        }
    }

    pub fn probe_config(&self) -> ProbeConfig {
        ProbeConfig {
            optimizer: self.optimizer,
            learning_rate: self.probe_learning_rate,
            batch_size: self.batch_size,
            epochs: self.probe_epochs,
        }
    }

    /// Checks everything that does not depend on the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.dataset.is_empty() {
            return Err(Error::Config("no dataset given".into()));
        }
        if self.seeds == 0 || self.jobs == 0 || self.sweep_repeats == 0 {
            return Err(Error::Config("seeds, jobs and sweep_repeats must be positive".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        if let Some(f) = self.fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("fraction {f} outside (0, 1)")));
            }
        }
        self.model_config(1, None).validate()?;
        self.train_config(self.seed).validate()
    }
}

/// Where a dataset's files live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetFiles {
    ContentCites { content: PathBuf, cites: PathBuf },
    EdgeList { edges: PathBuf, attrs: Option<PathBuf>, labels: Option<PathBuf> },
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Registry names map to `<data_dir>/<name>/<name>.{content,cites}`, or to
/// `<data_dir>/wiki/wiki.{edges,attrs,labels}`. Any other value is a path
/// prefix tried with `.content`/`.cites` first and `.edges` second.
pub fn resolve_dataset(name: &str, data_dir: &Path) -> DatasetFiles {
    let prefix = if REGISTRY.contains(&name) {
        data_dir.join(name).join(name)
    } else {
        PathBuf::from(name)
    };
    let content = with_ext(&prefix, "content");
    let edges = with_ext(&prefix, "edges");
    let edge_layout = name == "wiki" || (!REGISTRY.contains(&name) && !content.exists() && edges.exists());
    if edge_layout {
        let attrs = with_ext(&prefix, "attrs");
        let labels = with_ext(&prefix, "labels");
        DatasetFiles::EdgeList {
            edges,
            attrs: attrs.exists().then_some(attrs),
            labels: labels.exists().then_some(labels),
        }
    } else {
        DatasetFiles::ContentCites {
            cites: with_ext(&prefix, "cites"),
            content,
        }
    }
}

pub fn load_dataset(name: &str, data_dir: &Path) -> Result<(Graph, LoadReport)> {
    match resolve_dataset(name, data_dir) {
        DatasetFiles::ContentCites { content, cites } => load_content_cites(&content, &cites),
        DatasetFiles::EdgeList { edges, attrs, labels } => {
            load_edge_list(&edges, attrs.as_deref(), labels.as_deref())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig {
            dataset: "cora".into(),
            early_stop_patience: Some(4),
            fraction: Some(0.3),
            sweep_filters: vec![1, 25],
            output_dir: Some(PathBuf::from("out")),
            ..Default::default()
        };
        c.learning_rate = 0.0025;
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text(), Path::new("x")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn later_layers_override() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nfilters = 5\n\nepochs=3\n", Path::new("f")).unwrap();
        assert_eq!((c.filters, c.epochs), (5, 3));
        c.set("filters", "7").unwrap();
        assert_eq!(c.filters, 7);
        assert_eq!(c.filter_dim, 16);
    }

    #[test]
    fn bad_lines_name_their_origin() {
        let mut c = RunConfig::default();
        let e = c.apply_text("filters=5\nnope\n", Path::new("run.cfg")).unwrap_err();
        assert!(e.to_string().contains("run.cfg:2"));
        assert!(c.apply_text("colour=blue", Path::new("f")).is_err());
        assert!(c.set("filters", "-1").is_err());
        assert!(c.set("optimizer", "rmsprop").is_err());
    }

    #[test]
    fn defaults_match_model_and_walk() {
        let c = RunConfig::default();
        assert_eq!((c.filters, c.filter_dim, c.embed_dim), (25, 16, 100));
        assert_eq!((c.walk_length, c.negatives), (20, 100));
        assert_eq!((c.return_param, c.inout_param), (0.5, 1.0));
        assert!(c.to_text().contains("# aggregation_width=400"));
    }

    #[test]
    fn validation() {
        let ok = RunConfig {
            dataset: "cora".into(),
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
        assert!(RunConfig::default().validate().is_err());
        assert!(RunConfig { depth: 2, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { fraction: Some(1.5), ..ok.clone() }.validate().is_err());
        assert!(RunConfig { seeds: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn registry_layout() {
        let d = Path::new("/data");
        assert_eq!(
            resolve_dataset("cora", d),
            DatasetFiles::ContentCites {
                content: PathBuf::from("/data/cora/cora.content"),
                cites: PathBuf::from("/data/cora/cora.cites"),
            }
        );
        match resolve_dataset("wiki", d) {
            DatasetFiles::EdgeList { edges, .. } => assert_eq!(edges, PathBuf::from("/data/wiki/wiki.edges")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_dataset_error_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let e = load_dataset("cora", dir.path()).unwrap_err();
        assert!(e.to_string().contains("cora.content"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }
}
