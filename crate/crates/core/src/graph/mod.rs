//! Attributed undirected graphs.
//!
//! A [`Graph`] stores sorted, symmetric neighbor lists in CSR form. Every node
//! carries an implicit self-loop: it never appears in its own neighbor list,
//! but it is counted in the degree, so `degree(i) == neighbors(i).len() + 1`.
//! Aggregation walks the closed neighborhood `N(i) ∪ {i}`; random walks only
//! see `N(i)`.

mod load;
mod split;
pub mod synthetic;

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

pub(crate) use load::write_lines;
pub use load::{load_content_cites, load_edge_list, save_edge_list, LoadReport};
pub use split::{split_edges_connected, EdgeSplit};

/// Sparse non-negative attribute rows of a fixed dimension, stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    dim: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Features {
    pub fn empty(dim: usize) -> Self {
        Features {
            dim,
            offsets: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// `rows` zero rows of dimension `dim`.
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Features {
            dim,
            offsets: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a dense row, keeping only non-zero entries.
    pub fn push_dense(&mut self, row: &[f64]) -> Result<()> {
        self.push_row(row, false)
    }

    /// Signed rows, for derived inputs such as embeddings.
    pub(crate) fn from_dense_signed<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut f = Features::empty(dim);
        for r in rows {
            f.push_row(r.as_ref(), true)?;
        }
        Ok(f)
    }

    fn push_row(&mut self, row: &[f64], signed: bool) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dimension(format!(
                "attribute row has {} values, expected {}",
                row.len(),
                self.dim
            )));
        }
        for (k, &v) in row.iter().enumerate() {
            if !v.is_finite() || (v < 0.0 && !signed) {
                return Err(Error::Data(format!(
                    "attribute value {v} at column {k} is not a finite non-negative number"
                )));
            }
            if v != 0.0 {
                self.indices.push(k);
                self.values.push(v);
            }
        }
        self.offsets.push(self.indices.len());
        Ok(())
    }

    pub fn from_dense<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut f = Features::empty(dim);
        for r in rows {
            f.push_dense(r.as_ref())?;
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of the non-zero entries of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let (idx, val) = self.row(i);
        for (&k, &v) in idx.iter().zip(val) {
            out[k] = v;
        }
        out
    }

    /// Rows selected (and possibly repeated) by `order`.
    pub fn select(&self, order: &[usize]) -> Features {
        let mut out = Features::empty(self.dim);
        for &i in order {
            let (idx, val) = self.row(i);
            out.indices.extend_from_slice(idx);
            out.values.extend_from_slice(val);
            out.offsets.push(out.indices.len());
        }
        out
    }
}

/// Class assignment for a subset (possibly all) of the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Labels {
    names: Vec<String>,
    of_node: Vec<Option<usize>>,
}

impl Labels {
    pub fn new(names: Vec<String>, of_node: Vec<Option<usize>>) -> Result<Self> {
        if let Some(&bad) = of_node.iter().flatten().find(|&&c| c >= names.len()) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: names.len(),
            });
        }
        Ok(Labels { names, of_node })
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.of_node[node]
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.of_node.len())
            .filter(|&i| self.of_node[i].is_some())
            .collect()
    }

    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.of_node
    }
}

/// Immutable attributed undirected graph with implicit self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_ids: Vec<String>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Features,
    labels: Option<Labels>,
    index: HashMap<String, usize>,
}

impl Graph {
    /// Builds a graph from node ids, an edge list over node indices, attribute rows
    /// and optional labels. Edges are symmetrized and deduplicated; explicit
    /// self-pairs are dropped since every node already has its self-loop.
    pub fn new(
        node_ids: Vec<String>,
        edges: &[(usize, usize)],
        features: Features,
        labels: Option<Labels>,
    ) -> Result<Self> {
        let n = node_ids.len();
        if features.rows() != n {
            return Err(Error::Dimension(format!(
                "{} attribute rows for {} nodes",
                features.rows(),
                n
            )));
        }
        if let Some(l) = &labels {
            if l.of_node.len() != n {
                return Err(Error::Dimension(format!(
                    "{} label entries for {} nodes",
                    l.of_node.len(),
                    n
                )));
            }
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in node_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Data(format!("node id collision: {id}")));
            }
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Data(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend(list);
            offsets.push(neighbors.len());
        }
        Ok(Graph {
            node_ids,
            offsets,
            neighbors,
            features,
            labels,
            index,
        })
    }

    /// Same nodes, attributes and labels with a different edge set.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Self> {
        Graph::new(
            self.node_ids.clone(),
            edges,
            self.features.clone(),
            self.labels.clone(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    /// Number of undirected edges, self-loops excluded.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Self-loop inclusive degree.
    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i] + 1
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// `N(i) ∪ {i}` in ascending node order.
    pub fn closed_neighborhood(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let nb = self.neighbors(i);
        let split = nb.partition_point(|&j| j < i);
        nb[..split]
            .iter()
            .copied()
            .chain(std::iter::once(i))
            .chain(nb[split..].iter().copied())
    }

    /// Undirected edges as `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (i, j))
        })
    }

    pub fn features(&self) -> &Features {
        &self.features
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Component label per node, components numbered in order of their smallest node.
    pub fn connected_components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Symmetric propagation weight `1 / sqrt(deg(i) * deg(j))` for `j ∈ N(i) ∪ {i}`.
pub fn norm_coefficient(g: &Graph, i: usize, j: usize) -> Result<f64> {
    if i != j && !g.has_edge(i, j) {
        return Err(Error::NotAdjacent(i, j));
    }
    Ok(pair_coefficient(g, i, j))
}

#[inline]
pub(crate) fn pair_coefficient(g: &Graph, i: usize, j: usize) -> f64 {
    1.0 / ((g.degree(i) * g.degree(j)) as f64).sqrt()
}
