//! Readers and writers for the two on-disk graph layouts.
//!
//! * content/cites: `<id> <v1> … <vC> <label>` per node, `<id> <id>` per edge.
//! * edge list: `<src> <dst>` per edge, optional `<id> <v1> … <vC>` attribute
//!   file and optional `<id> <class>` label file.
//!
//! Blank lines and lines starting with `#` are skipped everywhere.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Features, Graph, Labels};
use crate::error::{Error, Result};

/// Bookkeeping produced while loading a graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Edge lines whose endpoints are not known nodes.
    pub dropped_edges: usize,
    /// Edge lines that repeated an already-seen undirected edge.
    pub duplicate_edges: usize,
    /// Edge lines of the form `a a`.
    pub self_pairs: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

fn parse_values(path: &Path, line: usize, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("non-numeric attribute token {t:?}")))
        })
        .collect()
}

fn label_set<'a>(tokens: impl Iterator<Item = &'a str>) -> Vec<String> {
    tokens
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect()
}

/// Reads an edge file and resolves endpoints through `index`.
fn read_edges(
    path: &Path,
    index: &HashMap<String, usize>,
    report: &mut LoadReport,
) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for (line, toks) in data_lines(&text) {
        if toks.len() != 2 {
            return Err(Error::parse(path, line, format!("expected 2 node ids, found {}", toks.len())));
        }
        match (index.get(toks[0]), index.get(toks[1])) {
            (Some(&a), Some(&b)) => {
                if a == b {
                    report.self_pairs += 1;
                } else if seen.insert((a.min(b), a.max(b))) {
                    edges.push((a, b));
                } else {
                    report.duplicate_edges += 1;
                }
            }
            _ => report.dropped_edges += 1,
        }
    }
    Ok(edges)
}

/// Loads the citation-dataset layout (`.content` + `.cites`).
pub fn load_content_cites(
    content_path: impl AsRef<Path>,
    cites_path: impl AsRef<Path>,
) -> Result<(Graph, LoadReport)> {
    let content_path = content_path.as_ref();
    let text = read(content_path)?;
    let mut ids = Vec::new();
    let mut label_tokens = Vec::new();
    let mut features: Option<Features> = None;
    for (line, toks) in data_lines(&text) {
        if toks.len() < 2 {
            return Err(Error::parse(content_path, line, "expected node id and label"));
        }
        let values = parse_values(content_path, line, &toks[1..toks.len() - 1])?;
        let f = features.get_or_insert_with(|| Features::empty(values.len()));
        if values.len() != f.dim() {
            return Err(Error::parse(
                content_path,
                line,
                format!(
                    "inconsistent attribute dimension: {} values, expected {}",
                    values.len(),
                    f.dim()
                ),
            ));
        }
        f.push_dense(&values)
            .map_err(|e| Error::parse(content_path, line, e.to_string()))?;
        ids.push(toks[0].to_owned());
        label_tokens.push(toks[toks.len() - 1]);
    }
    let features = features.ok_or_else(|| Error::parse(content_path, 0, "empty content file"))?;
    let names = label_set(label_tokens.iter().copied());
    let of_node = label_tokens
        .iter()
        .map(|t| names.binary_search_by(|n| n.as_str().cmp(t)).ok())
        .collect();
    let labels = Labels::new(names, of_node)?;

    let mut index = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.clone(), i).is_some() {
            return Err(Error::Data(format!(
                "{}: node id collision: {id}",
                content_path.display()
            )));
        }
    }
    let mut report = LoadReport::default();
    let edges = read_edges(cites_path.as_ref(), &index, &mut report)?;
    if report.dropped_edges > 0 {
        log::warn!(
            "{}: dropped {} edges with unknown endpoints",
            cites_path.as_ref().display(),
            report.dropped_edges
        );
    }
    let g = Graph::new(ids, &edges, features, Some(labels))?;
    Ok((g, report))
}

/// Loads the generic edge-list layout.
///
/// Without an attribute file the node set is taken from the edge file (order
/// of first appearance) and attributes have dimension zero. With one, the node
/// set and order come from the attribute file and every node must appear there.
pub fn load_edge_list(
    edges_path: impl AsRef<Path>,
    attrs_path: Option<&Path>,
    labels_path: Option<&Path>,
) -> Result<(Graph, LoadReport)> {
    let edges_path = edges_path.as_ref();
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let features = match attrs_path {
        Some(p) => {
            let text = read(p)?;
            let mut f: Option<Features> = None;
            for (line, toks) in data_lines(&text) {
                let values = parse_values(p, line, &toks[1..])?;
                let feats = f.get_or_insert_with(|| Features::empty(values.len()));
                if values.len() != feats.dim() {
                    return Err(Error::parse(
                        p,
                        line,
                        format!(
                            "inconsistent attribute dimension: {} values, expected {}",
                            values.len(),
                            feats.dim()
                        ),
                    ));
                }
                feats
                    .push_dense(&values)
                    .map_err(|e| Error::parse(p, line, e.to_string()))?;
                if index.insert(toks[0].to_owned(), ids.len()).is_some() {
                    return Err(Error::parse(p, line, format!("node id collision: {}", toks[0])));
                }
                ids.push(toks[0].to_owned());
            }
            Some(f.ok_or_else(|| Error::parse(p, 0, "empty attribute file"))?)
        }
        None => None,
    };

    let mut report = LoadReport::default();
    let edges = if features.is_some() {
        read_edges(edges_path, &index, &mut report)?
    } else {
        let text = read(edges_path)?;
        for (line, toks) in data_lines(&text) {
            if toks.len() != 2 {
                return Err(Error::parse(
                    edges_path,
                    line,
                    format!("expected 2 node ids, found {}", toks.len()),
                ));
            }
            for t in toks {
                if !index.contains_key(t) {
                    index.insert(t.to_owned(), ids.len());
                    ids.push(t.to_owned());
                }
            }
        }
        if ids.is_empty() {
            return Err(Error::parse(edges_path, 0, "empty edge file"));
        }
        read_edges(edges_path, &index, &mut report)?
    };
    if report.dropped_edges > 0 {
        log::warn!(
            "{}: dropped {} edges with unknown endpoints",
            edges_path.display(),
            report.dropped_edges
        );
    }
    let features = features.unwrap_or_else(|| Features::zeros(ids.len(), 0));

    let labels = match labels_path {
        Some(p) => {
            let text = read(p)?;
            let mut rows = Vec::new();
            for (line, toks) in data_lines(&text) {
                if toks.len() != 2 {
                    return Err(Error::parse(p, line, "expected `id class`"));
                }
                let node = *index
                    .get(toks[0])
                    .ok_or_else(|| Error::parse(p, line, format!("dangling label id {}", toks[0])))?;
                rows.push((line, node, toks[1]));
            }
            let names = label_set(rows.iter().map(|r| r.2));
            let mut of_node = vec![None; ids.len()];
            for (line, node, tok) in rows {
                let class = names.binary_search_by(|n| n.as_str().cmp(tok)).ok();
                if of_node[node].is_some() && of_node[node] != class {
                    return Err(Error::parse(p, line, format!("conflicting labels for {}", ids[node])));
                }
                of_node[node] = class;
            }
            Some(Labels::new(names, of_node)?)
        }
        None => None,
    };

    let g = Graph::new(ids, &edges, features, labels)?;
    Ok((g, report))
}

/// Writes `<prefix>.edges`, `<prefix>.attrs` and (if labelled) `<prefix>.labels`
/// so that [`load_edge_list`] reproduces the graph exactly.
pub fn save_edge_list(g: &Graph, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join(format!("{prefix}.edges"));
    write_lines(&path, g.edges().map(|(a, b)| format!("{} {}", g.node_id(a), g.node_id(b))))?;
    written.push(path);

    let path = dir.join(format!("{prefix}.attrs"));
    write_lines(
        &path,
        (0..g.node_count()).map(|i| {
            let mut line = g.node_id(i).to_owned();
            for v in g.features().dense_row(i) {
                line.push(' ');
                line.push_str(&format!("{v:?}"));
            }
            line
        }),
    )?;
    written.push(path);

    if let Some(labels) = g.labels() {
        let path = dir.join(format!("{prefix}.labels"));
        write_lines(
            &path,
            (0..g.node_count()).filter_map(|i| {
                labels
                    .get(i)
                    .map(|c| format!("{} {}", g.node_id(i), labels.class_names()[c]))
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}

pub(crate) fn write_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for l in lines {
        writeln!(w, "{l}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
