use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mfgcn::config::{load_dataset, RunConfig, OUTPUT_ROOT_VAR};
use mfgcn::eval::{
    eval_link_prediction, eval_node_classification, eval_raw_feature, filter_sweep, summarize, EvalReport, NcOptions,
    SWEEP_HEADER,
};
use mfgcn::graph::{Graph, LoadReport};
use mfgcn::model::{load_checkpoint, save_checkpoint, Checkpoint, ModelParams};
use mfgcn::trainer::{embed_all, train_with, TrainLog};
use mfgcn::{Error, Result};

/// Multi-filter GCN node embeddings: training, export and evaluation.
#[derive(Debug, Parser)]
#[command(name = "mfgcn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write a checkpoint, the training log and the resolved config.
    Train(TrainArgs),
    /// Export unit embeddings for every node (or a listed subset) from a checkpoint.
    Embed(EmbedArgs),
    /// Run an evaluation protocol and append its rows to the results table.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// key=value file applied before the flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// cora, citeseer, pubmed, wiki, or a path prefix of .content/.cites or .edges files
    #[arg(long)]
    dataset: Option<String>,
    /// Root of the dataset registry [default: $MFGCN_DATA_DIR or ./data]
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Where run directories are created [default: $MFGCN_OUTPUT_ROOT or ./runs]
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Base random seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Local filters L; a comma list for the sweep task [default: 25; sweep 1,5,10,25,50,100]
    #[arg(long, value_name = "L")]
    filters: Option<String>,
    /// Output width F of each filter [default: 16]
    #[arg(long, value_name = "F")]
    filter_dim: Option<usize>,
    /// Embedding dimension d [default: 100]
    #[arg(long, value_name = "D")]
    embed_dim: Option<usize>,
    /// Propagation depth K, only 1 is supported [default: 1]
    #[arg(long)]
    depth: Option<usize>,
    /// Filter activation: relu, sigmoid, tanh, identity [default: relu]
    #[arg(long, value_name = "ACT")]
    aggregator_activation: Option<String>,
    /// Encoder activation: relu, sigmoid, tanh, identity [default: tanh]
    #[arg(long, value_name = "ACT")]
    encoder_activation: Option<String>,
}

#[derive(Debug, Args)]
struct TrainingArgs {
    /// Centers per mini-batch [default: 512]
    #[arg(long)]
    batch_size: Option<usize>,
    /// Passes over all nodes [default: 50]
    #[arg(long)]
    epochs: Option<usize>,
    /// Step size [default: 0.001]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// sgd or adam [default: adam]
    #[arg(long)]
    optimizer: Option<String>,
    /// Negative samples per center [default: 100]
    #[arg(long)]
    negatives: Option<usize>,
    /// Multiplier on the cross-entropy term [default: 1]
    #[arg(long)]
    supervised_weight: Option<f64>,
    /// Stop after this many epochs without held-out improvement [default: none]
    #[arg(long)]
    early_stop_patience: Option<usize>,
    /// Random-walk length [default: 20]
    #[arg(long)]
    walk_length: Option<usize>,
    /// Return parameter p [default: 0.5]
    #[arg(long, value_name = "P")]
    return_param: Option<f64>,
    /// In-out parameter q [default: 1]
    #[arg(long, value_name = "Q")]
    inout_param: Option<f64>,
    /// Context window along the walk [default: 5]
    #[arg(long)]
    window: Option<usize>,
    /// Walks started from each center [default: 1]
    #[arg(long)]
    walks_per_center: Option<usize>,
    /// Also exclude two-hop neighbors from negatives [default: off]
    #[arg(long)]
    strict_negatives: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Add the cross-entropy term over all labelled nodes [default: off]
    #[arg(long, conflicts_with = "unsupervised")]
    supervised: bool,
    /// Structural loss only [default: on]
    #[arg(long)]
    unsupervised: bool,
    /// Also write a checkpoint every k epochs [default: none]
    #[arg(long, value_name = "K")]
    checkpoint_every: Option<usize>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Checkpoint written by `train`
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// File of node ids, one per line; only these are exported [default: all nodes]
    #[arg(long, value_name = "FILE")]
    nodes: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    /// link prediction AUC
    Lp,
    /// node classification micro-F1
    Nc,
    /// raw-attribute softmax baseline
    Raw,
    /// filter-count sweep
    Sweep,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    training: TrainingArgs,
    /// Protocol to run
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Removed-edge fraction (lp) or labelled fraction (nc, raw, sweep) [default: lp 0.5, nc 0.5, raw 0.5, sweep 0.3]
    #[arg(long)]
    fraction: Option<f64>,
    /// Number of runs with seeds seed, seed+1, ... [default: 1]
    #[arg(long)]
    seeds: Option<usize>,
    /// Runs executed in parallel [default: 1]
    #[arg(long)]
    jobs: Option<usize>,
    /// Link scorer: inner or hadamard [default: inner]
    #[arg(long)]
    scorer: Option<String>,
    /// Classifier: head or probe [default: head]
    #[arg(long)]
    classifier: Option<String>,
    /// Label split: uniform or stratified [default: uniform]
    #[arg(long)]
    split: Option<String>,
    /// Repeats per filter count in the sweep [default: 1]
    #[arg(long)]
    sweep_repeats: Option<usize>,
    /// Epochs for the raw baseline and linear probe [default: 1000]
    #[arg(long)]
    probe_epochs: Option<usize>,
    /// Step size for the raw baseline and linear probe [default: 0.001]
    #[arg(long)]
    probe_learning_rate: Option<f64>,
}

type Overrides = Vec<(&'static str, Option<String>)>;

fn text<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(|v| v.to_string())
}

fn common_overrides(c: &CommonArgs) -> Overrides {
    vec![
        ("dataset", c.dataset.clone()),
        ("data_dir", c.data_dir.as_ref().map(|p| p.display().to_string())),
        ("output_dir", c.output_dir.as_ref().map(|p| p.display().to_string())),
        ("seed", text(&c.seed)),
    ]
}

fn model_overrides(m: &ModelArgs, sweep: bool) -> Overrides {
    vec![
        (if sweep { "sweep_filters" } else { "filters" }, m.filters.clone()),
        ("filter_dim", text(&m.filter_dim)),
        ("embed_dim", text(&m.embed_dim)),
        ("depth", text(&m.depth)),
        ("aggregator_activation", m.aggregator_activation.clone()),
        ("encoder_activation", m.encoder_activation.clone()),
    ]
}

fn training_overrides(t: &TrainingArgs) -> Overrides {
    vec![
        ("batch_size", text(&t.batch_size)),
        ("epochs", text(&t.epochs)),
        ("learning_rate", text(&t.learning_rate)),
        ("optimizer", t.optimizer.clone()),
        ("negatives", text(&t.negatives)),
        ("supervised_weight", text(&t.supervised_weight)),
        ("early_stop_patience", text(&t.early_stop_patience)),
        ("walk_length", text(&t.walk_length)),
        ("return_param", text(&t.return_param)),
        ("inout_param", text(&t.inout_param)),
        ("window", text(&t.window)),
        ("walks_per_center", text(&t.walks_per_center)),
        ("strict_negatives", t.strict_negatives.then(|| "true".to_string())),
    ]
}

/// Defaults, then the config file, then flags.
fn resolve(config: Option<&Path>, overrides: Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = config {
        cfg.apply_file(path)?;
    }
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_root(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn dataset_tag(cfg: &RunConfig) -> String {
    Path::new(&cfg.dataset)
        .file_name()
        .map_or_else(|| cfg.dataset.clone(), |n| n.to_string_lossy().into_owned())
}

fn run_dir(cfg: &RunConfig, name: &str) -> Result<PathBuf> {
    let dir = output_root(cfg).join(name);
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    Ok(dir)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| io_error(path, e))
}

fn load(cfg: &RunConfig) -> Result<(Graph, LoadReport)> {
    let (g, report) = load_dataset(&cfg.dataset, &cfg.data_dir)?;
    log::info!(
        "{}: {} nodes, {} edges, {} attributes",
        cfg.dataset,
        g.node_count(),
        g.edge_count(),
        g.features().dim()
    );
    Ok((g, report))
}

fn graph_summary(g: &Graph, report: &LoadReport) -> String {
    format!(
        "# nodes {} edges {} attributes {} classes {}\n# dropped_edges {} duplicate_edges {} self_pairs {}\n",
        g.node_count(),
        g.edge_count(),
        g.features().dim(),
        g.labels().map_or(0, |l| l.num_classes()),
        report.dropped_edges,
        report.duplicate_edges,
        report.self_pairs
    )
}

fn write_log(path: &Path, preamble: &str, log: &TrainLog) -> Result<()> {
    let f = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(preamble.as_bytes()).map_err(|e| io_error(path, e))?;
    log.write(&mut w).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

fn checkpoint(cfg: &RunConfig, mcfg: &mfgcn::model::ModelConfig, params: &ModelParams, epoch: usize) -> Checkpoint {
    Checkpoint {
        config: mcfg.clone(),
        params: params.clone(),
        seed: cfg.seed,
        epoch,
        meta: cfg
            .entries()
            .into_iter()
            .filter(|(k, _)| !matches!(*k, "filters" | "filter_dim" | "embed_dim" | "depth"))
            .map(|(k, v)| (k.to_string(), if v.is_empty() { "-".into() } else { v }))
            .collect(),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut o = common_overrides(&args.common);
    o.extend(model_overrides(&args.model, false));
    o.extend(training_overrides(&args.training));
    o.push(("checkpoint_every", text(&args.checkpoint_every)));
    if args.supervised {
        o.push(("supervised", Some("true".into())));
    }
    if args.unsupervised {
        o.push(("supervised", Some("false".into())));
    }
    let cfg = resolve(args.common.config.as_deref(), o)?;
    let (g, report) = load(&cfg)?;
    let classes = if cfg.supervised {
        Some(
            g.labels()
                .ok_or_else(|| Error::Data(format!("{} has no labels for supervised training", cfg.dataset)))?
                .num_classes(),
        )
    } else {
        None
    };
    let mcfg = cfg.model_config(g.features().dim(), classes);
    let tcfg = cfg.train_config(cfg.seed);
    let dir = run_dir(&cfg, &format!("train-{}-seed{}", dataset_tag(&cfg), cfg.seed))?;
    write_file(&dir.join("config.txt"), &cfg.to_text())?;

    let out = train_with(&g, &mcfg, &tcfg, |epoch, params| {
        match cfg.checkpoint_every {
            Some(k) if epoch % k == 0 => save_checkpoint(
                &dir.join(format!("model-epoch{epoch}.ckpt")),
                &checkpoint(&cfg, &mcfg, params, epoch),
            ),
            _ => Ok(()),
        }
    })?;
    write_log(&dir.join("train.log"), &graph_summary(&g, &report), &out.log)?;
    save_checkpoint(&dir.join("model.ckpt"), &checkpoint(&cfg, &mcfg, &out.params, out.epochs_run))?;
    println!("aggregation width {}", mcfg.aggregation_width());
    if let Some(last) = out.log.epochs.last() {
        println!("{last}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn read_node_list(path: &Path, g: &Graph) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|id| {
            g.index_of(id)
                .ok_or_else(|| Error::Data(format!("{}: unknown node id {id}", path.display())))
        })
        .collect()
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let cfg = resolve(args.common.config.as_deref(), common_overrides(&args.common))?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    let (g, report) = load(&cfg)?;
    if g.features().dim() != ckpt.config.input_dim {
        return Err(Error::Dimension(format!(
            "{} has {} attributes but the checkpoint expects {}",
            cfg.dataset,
            g.features().dim(),
            ckpt.config.input_dim
        )));
    }
    let emb = match &args.nodes {
        Some(path) => mfgcn::model::embed_nodes(&g, &read_node_list(path, &g)?, &ckpt.params, &ckpt.config)?,
        None => embed_all(&g, &ckpt.params, &ckpt.config)?,
    };
    let dir = run_dir(&cfg, &format!("embed-{}-seed{}", dataset_tag(&cfg), ckpt.seed))?;
    write_file(
        &dir.join("config.txt"),
        &format!("{}# checkpoint={}\n", cfg.to_text(), args.checkpoint.display()),
    )?;
    write_file(
        &dir.join("embed.log"),
        &format!(
            "{}# checkpoint {} epoch {}\n# rows {} dim {}\n",
            graph_summary(&g, &report),
            args.checkpoint.display(),
            ckpt.epoch,
            emb.len(),
            emb.dim()
        ),
    )?;
    let path = dir.join("embeddings.txt");
    emb.write(&g, &path)?;
    println!("wrote {} rows to {}", emb.len(), path.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let sweep = args.task == TaskArg::Sweep;
    let mut o = common_overrides(&args.common);
    o.extend(model_overrides(&args.model, sweep));
    o.extend(training_overrides(&args.training));
    o.extend([
        ("fraction", text(&args.fraction)),
        ("seeds", text(&args.seeds)),
        ("jobs", text(&args.jobs)),
        ("scorer", args.scorer.clone()),
        ("classifier", args.classifier.clone()),
        ("split", args.split.clone()),
        ("sweep_repeats", text(&args.sweep_repeats)),
        ("probe_epochs", text(&args.probe_epochs)),
        ("probe_learning_rate", text(&args.probe_learning_rate)),
    ]);
    let mut cfg = resolve(args.common.config.as_deref(), o)?;
    let fraction = cfg.fraction.unwrap_or(if sweep { 0.3 } else { 0.5 });
    cfg.fraction = Some(fraction);
    let (g, load_report) = load(&cfg)?;
    let root = output_root(&cfg);
    std::fs::create_dir_all(&root).map_err(|e| io_error(&root, e))?;
    let tag = dataset_tag(&cfg);

    if sweep {
        let mcfg = cfg.model_config(g.features().dim(), None);
        let rows = filter_sweep(
            &g,
            &mcfg,
            &cfg.train_config(cfg.seed),
            &cfg.sweep_filters,
            fraction,
            cfg.seed,
            cfg.sweep_repeats,
        )?;
        let dir = run_dir(&cfg, &format!("sweep-{tag}-seed{}", cfg.seed))?;
        write_file(&dir.join("config.txt"), &cfg.to_text())?;
        let mut table = format!("{SWEEP_HEADER}\n");
        for r in &rows {
            table.push_str(&format!("{r}\n"));
        }
        write_file(&dir.join("sweep.txt"), &table)?;
        write_file(&dir.join("sweep.log"), &graph_summary(&g, &load_report))?;
        print!("{table}");
        return Ok(());
    }

    let task_name = match args.task {
        TaskArg::Lp => "lp",
        TaskArg::Nc => "nc",
        _ => "raw",
    };
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let results: Mutex<Vec<Option<Result<EvalReport>>>> = Mutex::new((0..seeds.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let run_one = |seed: u64| -> Result<EvalReport> {
        let dir = run_dir(&cfg, &format!("eval-{task_name}-{tag}-f{fraction}-seed{seed}"))?;
        let mut run_cfg = cfg.clone();
        run_cfg.seed = seed;
        run_cfg.seeds = 1;
        write_file(&dir.join("config.txt"), &run_cfg.to_text())?;
        let tcfg = cfg.train_config(seed);
        let mcfg = cfg.model_config(g.features().dim(), None);
        let (report, log) = match args.task {
            TaskArg::Lp => {
                let run = eval_link_prediction(&g, &tag, &mcfg, &tcfg, fraction, seed, cfg.scorer)?;
                run.split.write(&dir, seed)?;
                (run.report, Some(run.log))
            }
            TaskArg::Nc => {
                let opts = NcOptions {
                    split: cfg.split,
                    classifier: cfg.classifier,
                };
                let (report, log) = eval_node_classification(&g, &tag, &mcfg, &tcfg, fraction, seed, opts)?;
                (report, Some(log))
            }
            _ => (eval_raw_feature(&g, &tag, &cfg.probe_config(), fraction, seed, cfg.split)?, None),
        };
        write_file(&dir.join("report.txt"), &report.to_kv())?;
        match log {
            Some(l) => write_log(&dir.join("eval.log"), &graph_summary(&g, &load_report), &l)?,
            None => write_file(&dir.join("eval.log"), &graph_summary(&g, &load_report))?,
        }
        Ok(report)
    };
    std::thread::scope(|s| {
        for _ in 0..cfg.jobs.min(seeds.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= seeds.len() {
                    break;
                }
                let r = run_one(seeds[i]);
                results.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });

    let results_path = root.join("results.txt");
    let mut values = Vec::new();
    for r in results.into_inner().expect("no worker panicked") {
        let report = r.expect("every seed ran")?;
        report.append_to(&results_path)?;
        println!("{}", report.table_row());
        values.push(report.value);
    }
    if let Some(s) = summarize(&values) {
        println!("# {tag} {task_name} fraction {fraction}: {s}");
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Eval(a) => cmd_eval(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
