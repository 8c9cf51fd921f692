use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfgcn::graph::save_edge_list;
use mfgcn::graph::synthetic::{attributed_sbm, SbmConfig};

const FAST: &[&str] = &[
    "--epochs", "2", "--batch-size", "64", "--negatives", "10", "--walk-length", "8", "--filters", "3",
    "--filter-dim", "4", "--embed-dim", "8",
];

fn mfgcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfgcn"))
        .args(args)
        .env_remove("MFGCN_DATA_DIR")
        .env_remove("MFGCN_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a small labelled graph and returns its path prefix.
fn dataset(dir: &Path) -> String {
    let g = attributed_sbm(&SbmConfig { nodes: 60, dim: 20, ..Default::default() }, 1);
    save_edge_list(&g, dir, "toy").unwrap();
    dir.join("toy").display().to_string()
}

/// Checkpoint text without the line recording where it was written.
fn checkpoint_body(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("meta output_dir "))
        .collect::<Vec<_>>()
        .join("\n")
}

fn train(data: &str, out: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let mut args = vec!["train", "--dataset", data, "--output-dir", out.to_str().unwrap()];
    args.extend_from_slice(FAST);
    args.extend_from_slice(extra);
    let o = mfgcn(&args);
    (o, out.join("train-toy-seed0"))
}

#[test]
fn help_shows_defaults() {
    for cmd in ["train", "embed", "eval"] {
        let o = mfgcn(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.contains("[default: 0]"), "{cmd}");
    }
    let text = stdout(&mfgcn(&["train", "--help"]));
    for d in ["[default: 25", "[default: 16]", "[default: 100]", "[default: 512]", "[default: 0.001]"] {
        assert!(text.contains(d), "{d}");
    }
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(mfgcn(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(mfgcn(&[]).status.code(), Some(1));
    let o = mfgcn(&["train", "--dataset", "cora", "--depth", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn missing_data_exits_two_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = mfgcn(&["train", "--dataset", "cora", "--data-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cora.content"), "{}", stderr(&o));
}

#[test]
fn train_echoes_config_and_embed_writes_every_node() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir.path().join("data"));
    let out = dir.path().join("runs");

    let (o, run) = mfgcn_default_width(&data, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("aggregation width 400"));
    let config = std::fs::read_to_string(run.join("config.txt")).unwrap();
    assert!(config.contains("filters=25\n") && config.contains("# aggregation_width=400"));
    assert!(std::fs::read_to_string(run.join("train.log")).unwrap().contains("# epoch batch sgns supervised total"));

    let ckpt = run.join("model.ckpt");
    let o = mfgcn(&[
        "embed", "--dataset", &data, "--checkpoint", ckpt.to_str().unwrap(), "--output-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let emb = std::fs::read_to_string(out.join("embed-toy-seed0/embeddings.txt")).unwrap();
    let lines: Vec<&str> = emb.lines().collect();
    assert_eq!(lines.len(), 60);
    assert!(lines.iter().all(|l| l.split_whitespace().count() == 101));

    let nodes = dir.path().join("nodes.txt");
    std::fs::write(&nodes, "v3\nv0\n").unwrap();
    let o = mfgcn(&[
        "embed", "--dataset", &data, "--checkpoint", ckpt.to_str().unwrap(), "--output-dir", out.to_str().unwrap(),
        "--nodes", nodes.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sub = std::fs::read_to_string(out.join("embed-toy-seed0/embeddings.txt")).unwrap();
    let ids: Vec<&str> = sub.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(ids, ["v3", "v0"]);
    assert_eq!(sub.lines().next(), lines.iter().find(|l| l.starts_with("v3 ")).copied());
}

fn mfgcn_default_width(data: &str, out: &Path) -> (Output, PathBuf) {
    let o = mfgcn(&[
        "train", "--dataset", data, "--output-dir", out.to_str().unwrap(), "--epochs", "1", "--negatives", "5",
        "--walk-length", "6",
    ]);
    (o, out.join("train-toy-seed0"))
}

#[test]
fn corrupted_checkpoint_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir.path().join("data"));
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, "not a checkpoint\n").unwrap();
    let o = mfgcn(&["embed", "--dataset", &data, "--checkpoint", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("checkpoint"));
}

#[test]
fn reruns_reproduce_checkpoints_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir.path().join("data"));
    let mut ckpts = Vec::new();
    let mut values = Vec::new();
    for rep in 0..2 {
        let out = dir.path().join(format!("runs{rep}"));
        let (o, run) = train(&data, &out, &[]);
        assert!(o.status.success(), "{}", stderr(&o));
        ckpts.push(checkpoint_body(&run.join("model.ckpt")));
        for task in ["lp", "nc"] {
            let mut args = vec!["eval", "--task", task, "--dataset", &data, "--output-dir", out.to_str().unwrap()];
            args.extend_from_slice(FAST);
            let o = mfgcn(&args);
            assert!(o.status.success(), "{}", stderr(&o));
            let report = std::fs::read_to_string(out.join(format!("eval-{task}-toy-f0.5-seed0/report.txt"))).unwrap();
            values.push(report.lines().find(|l| l.starts_with("value ")).unwrap().to_owned());
        }
        assert!(out.join("eval-lp-toy-f0.5-seed0/test_pos.edges").exists());
        assert_eq!(std::fs::read_to_string(out.join("results.txt")).unwrap().lines().count(), 3);
    }
    assert_eq!(ckpts[0], ckpts[1]);
    assert_eq!(values[0], values[2]);
    assert_eq!(values[1], values[3]);
}

#[test]
fn config_file_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir.path().join("data"));
    let (o, run) = train(&data, &dir.path().join("a"), &["--seed", "0"]);
    assert!(o.status.success());
    let cfg = run.join("config.txt");
    let out_b = dir.path().join("b");
    let o = mfgcn(&["train", "--config", cfg.to_str().unwrap(), "--output-dir", out_b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        checkpoint_body(&run.join("model.ckpt")),
        checkpoint_body(&out_b.join("train-toy-seed0/model.ckpt"))
    );
}

#[test]
fn seeds_run_in_parallel_report_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(&dir.path().join("data"));
    let out = dir.path().join("runs");
    let mut args = vec![
        "eval", "--task", "raw", "--dataset", &data, "--output-dir", out.to_str().unwrap(), "--seeds", "3", "--jobs",
        "2", "--probe-epochs", "20",
    ];
    args.extend_from_slice(&["--fraction", "0.3"]);
    let o = mfgcn(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let seeds: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(' ').nth(3).unwrap().to_owned())
        .collect();
    assert_eq!(seeds, ["0", "1", "2"]);
}
