//! Plain-text parameter checkpoints.
//!
//! Layout (version 1):
//!
//! ```text
//! mfgcn-checkpoint 1
//! num_filters <L>
//! filter_dim <F>
//! embed_dim <d>
//! input_dim <C>
//! depth 1
//! aggregator_activation <name>
//! encoder_activation <name>
//! num_classes <M|none>
//! seed <u64>
//! epoch <n>
//! meta <key> <value>        (zero or more, free-form run settings)
//! end-header
//! matrix <name> <rows> <cols>
//! <rows lines of cols values>
//! ...
//! ```
//!
//! Matrices follow in the order `theta.0 … theta.{L-1}`, `w_enc`, `b_enc`, and
//! `w_cls`, `b_cls` when a head is present. Biases are written as `1 × n`
//! matrices. Values use Rust's shortest round-trip float formatting, so a
//! save/load cycle is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Activation, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAGIC: &str = "mfgcn-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub seed: u64,
    pub epoch: usize,
    pub meta: Vec<(String, String)>,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    ckpt.params.check_shapes(&ckpt.config)?;
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let c = &ckpt.config;
    let mut header = vec![
        MAGIC.to_string(),
        format!("num_filters {}", c.num_filters),
        format!("filter_dim {}", c.filter_dim),
        format!("embed_dim {}", c.embed_dim),
        format!("input_dim {}", c.input_dim),
        format!("depth {}", c.depth),
        format!("aggregator_activation {}", c.aggregator_activation),
        format!("encoder_activation {}", c.encoder_activation),
        format!(
            "num_classes {}",
            c.num_classes.map_or("none".to_string(), |m| m.to_string())
        ),
        format!("seed {}", ckpt.seed),
        format!("epoch {}", ckpt.epoch),
    ];
    for (k, v) in &ckpt.meta {
        header.push(format!("meta {k} {v}"));
    }
    header.push("end-header".into());
    for l in header {
        writeln!(w, "{l}").map_err(io)?;
    }
    for (name, data) in ckpt.params.blocks() {
        let (rows, cols) = block_shape(&name, data.len(), c);
        writeln!(w, "matrix {name} {rows} {cols}").map_err(io)?;
        for r in 0..rows {
            let line: Vec<String> = data[r * cols..(r + 1) * cols]
                .iter()
                .map(|v| format!("{v:?}"))
                .collect();
            writeln!(w, "{}", line.join(" ")).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn block_shape(name: &str, len: usize, c: &ModelConfig) -> (usize, usize) {
    if name.starts_with("theta.") {
        (c.input_dim, c.filter_dim)
    } else if name == "w_enc" {
        (c.encoder_input_width(), c.embed_dim)
    } else if name == "w_cls" {
        (c.embed_dim, c.num_classes.unwrap_or(0))
    } else {
        (1, len)
    }
}

fn mismatch(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = || -> Result<String> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io(path, e)),
            None => Err(mismatch("unexpected end of file")),
        }
    };
    if next()? != MAGIC {
        return Err(mismatch("missing or unknown format line"));
    }

    let mut kv = std::collections::HashMap::new();
    let mut meta = Vec::new();
    loop {
        let l = next()?;
        if l == "end-header" {
            break;
        }
        let mut parts = l.splitn(2, ' ');
        let key = parts.next().unwrap_or_default().to_string();
        let value = parts.next().ok_or_else(|| mismatch(format!("malformed header line {l:?}")))?;
        if key == "meta" {
            let mut mv = value.splitn(2, ' ');
            let mk = mv.next().unwrap_or_default().to_string();
            meta.push((mk, mv.next().unwrap_or_default().to_string()));
        } else {
            kv.insert(key, value.to_string());
        }
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| mismatch(format!("missing header key {k}")));
    let num = |k: &str| -> Result<usize> {
        get(k)?
            .parse()
            .map_err(|_| mismatch(format!("header key {k} is not an integer")))
    };
    let act = |k: &str| -> Result<Activation> { get(k)?.parse().map_err(|_| mismatch(format!("bad {k}"))) };
    let config = ModelConfig {
        num_filters: num("num_filters")?,
        filter_dim: num("filter_dim")?,
        embed_dim: num("embed_dim")?,
        input_dim: num("input_dim")?,
        depth: num("depth")?,
        aggregator_activation: act("aggregator_activation")?,
        encoder_activation: act("encoder_activation")?,
        num_classes: match get("num_classes")?.as_str() {
            "none" => None,
            s => Some(s.parse().map_err(|_| mismatch("bad num_classes"))?),
        },
    };
    config.validate().map_err(|e| mismatch(e.to_string()))?;
    let seed = get("seed")?.parse().map_err(|_| mismatch("bad seed"))?;
    let epoch = num("epoch")?;

    let mut read_matrix = |name: &str, rows: usize, cols: usize| -> Result<Matrix> {
        let head = next()?;
        let expect = format!("matrix {name} {rows} {cols}");
        if head != expect {
            return Err(mismatch(format!("expected {expect:?}, found {head:?}")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let l = next()?;
            let before = data.len();
            for t in l.split_whitespace() {
                data.push(t.parse::<f64>().map_err(|_| mismatch(format!("bad value {t:?} in {name}")))?);
            }
            if data.len() - before != cols {
                return Err(mismatch(format!("row of {name} has wrong length")));
            }
        }
        Ok(Matrix::from_vec(rows, cols, data))
    };

    let mut theta = Vec::with_capacity(config.num_filters);
    for l in 0..config.num_filters {
        theta.push(read_matrix(&format!("theta.{l}"), config.input_dim, config.filter_dim)?);
    }
    let w_enc = read_matrix("w_enc", config.encoder_input_width(), config.embed_dim)?;
    let b_enc = read_matrix("b_enc", 1, config.embed_dim)?.as_slice().to_vec();
    let (w_cls, b_cls) = match config.num_classes {
        Some(m) => (
            Some(read_matrix("w_cls", config.embed_dim, m)?),
            Some(read_matrix("b_cls", 1, m)?.as_slice().to_vec()),
        ),
        None => (None, None),
    };
    let params = ModelParams {
        theta,
        w_enc,
        b_enc,
        w_cls,
        b_cls,
    };
    params.check_finite()?;
    Ok(Checkpoint {
        config,
        params,
        seed,
        epoch,
        meta,
    })
}
