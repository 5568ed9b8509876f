//! Directed sparse graphs, the node-arc incidence operator and weighted
//! Laplacian assembly.
//!
//! The incidence matrix `A` (nodes × edges) carries `-1` at the tail and
//! `+1` at the head of every edge. It is never materialized: every consumer
//! goes through [`Graph::incidence_matvec`], [`Graph::incidence_rmatvec`] or
//! the Laplacian routines, which walk the edge list directly.

use std::sync::OnceLock;

use crate::error::{check_len, Error, Result};
use crate::linalg::SparseSymmetric;

/// A directed graph with non-negative edge costs whose underlying undirected
/// graph is connected.
#[derive(Debug)]
pub struct Graph {
    node_count: usize,
    tails: Vec<usize>,
    heads: Vec<usize>,
    cost: Vec<f64>,
    adjacency: OnceLock<Adjacency>,
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        Graph {
            node_count: self.node_count,
            tails: self.tails.clone(),
            heads: self.heads.clone(),
            cost: self.cost.clone(),
            adjacency: OnceLock::new(),
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.node_count == other.node_count
            && self.tails == other.tails
            && self.heads == other.heads
            && self.cost == other.cost
    }
}

/// Undirected incidence lists: for every node, the `(neighbour, edge)` pairs
/// of all edges touching it.
#[derive(Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    entries: Vec<(usize, usize)>,
}

impl Adjacency {
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.entries[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }
}

impl Graph {
    /// Builds a graph, validating indices, self-loops, costs and
    /// connectivity of the underlying undirected graph.
    pub fn new(node_count: usize, edges: &[(usize, usize)], cost: Vec<f64>) -> Result<Self> {
        let g = Self::new_unchecked_connectivity(node_count, edges, cost)?;
        let components = g.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    /// Unit cost on every edge.
    pub fn with_unit_costs(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(node_count, edges, vec![1.0; edges.len()])
    }

    /// Same validation as [`Graph::new`] except connectivity. Used by readers
    /// that extract components themselves.
    pub(crate) fn new_unchecked_connectivity(
        node_count: usize,
        edges: &[(usize, usize)],
        cost: Vec<f64>,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Graph("graph must have at least one node".into()));
        }
        check_len(edges.len(), cost.len())?;
        let mut tails = Vec::with_capacity(edges.len());
        let mut heads = Vec::with_capacity(edges.len());
        for (e, &(t, h)) in edges.iter().enumerate() {
            if t >= node_count || h >= node_count {
                return Err(Error::Graph(format!(
                    "edge {e} = ({t}, {h}) references a node outside [0, {node_count})"
                )));
            }
            if t == h {
                return Err(Error::Graph(format!("edge {e} is a self-loop at node {t}")));
            }
            tails.push(t);
            heads.push(h);
        }
        if let Some(e) = cost.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Graph(format!(
                "edge {e} has cost {}; costs must be finite and non-negative",
                cost[e]
            )));
        }
        Ok(Graph {
            node_count,
            tails,
            heads,
            cost,
            adjacency: OnceLock::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.tails.len()
    }

    pub fn tail(&self, e: usize) -> usize {
        self.tails[e]
    }

    pub fn head(&self, e: usize) -> usize {
        self.heads[e]
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.tails.iter().copied().zip(self.heads.iter().copied())
    }

    pub fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| {
            let mut offsets = vec![0usize; self.node_count + 1];
            for (t, h) in self.edges() {
                offsets[t + 1] += 1;
                offsets[h + 1] += 1;
            }
            for v in 0..self.node_count {
                offsets[v + 1] += offsets[v];
            }
            let mut fill = offsets.clone();
            let mut entries = vec![(0, 0); offsets[self.node_count]];
            for (e, (t, h)) in self.edges().enumerate() {
                entries[fill[t]] = (h, e);
                fill[t] += 1;
                entries[fill[h]] = (t, e);
                fill[h] += 1;
            }
            Adjacency { offsets, entries }
        })
    }

    /// Number of edges incident to every node, regardless of direction.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.node_count];
        for (t, h) in self.edges() {
            deg[t] += 1;
            deg[h] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Row-sum norm of the incidence matrix, which equals the maximum degree.
    pub fn incidence_inf_norm(&self) -> f64 {
        self.max_degree() as f64
    }

    /// Component label for every node of the underlying undirected graph.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut dsu = DisjointSets::new(self.node_count);
        for (t, h) in self.edges() {
            dsu.union(t, h);
        }
        let mut label = vec![usize::MAX; self.node_count];
        let mut count = 0;
        let mut out = vec![0; self.node_count];
        for v in 0..self.node_count {
            let r = dsu.find(v);
            if label[r] == usize::MAX {
                label[r] = count;
                count += 1;
            }
            out[v] = label[r];
        }
        (count, out)
    }

    pub fn component_count(&self) -> usize {
        self.components().0
    }

    /// `A x`: for edge `(v, w)` subtracts `x_e` at `v` and adds it at `w`.
    pub fn incidence_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.edge_count(), x.len())?;
        let mut out = vec![0.0; self.node_count];
        self.incidence_matvec_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn incidence_matvec_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for ((&t, &h), &xe) in self.tails.iter().zip(&self.heads).zip(x) {
            out[t] -= xe;
            out[h] += xe;
        }
    }

    /// `A^T y`: the entry for edge `(v, w)` is `y_w - y_v`.
    pub fn incidence_rmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.node_count, y.len())?;
        let mut out = vec![0.0; self.edge_count()];
        self.incidence_rmatvec_into(y, &mut out);
        Ok(out)
    }

    pub(crate) fn incidence_rmatvec_into(&self, y: &[f64], out: &mut [f64]) {
        for ((o, &t), &h) in out.iter_mut().zip(&self.tails).zip(&self.heads) {
            *o = y[h] - y[t];
        }
    }

    /// Matrix-free `(A diag(w) A^T + delta I) x`.
    pub fn laplacian_apply(&self, w: &EdgeWeights, delta: f64, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(w.len(), self.edge_count());
        for (o, xi) in out.iter_mut().zip(x) {
            *o = delta * xi;
        }
        for ((&t, &h), &we) in self.tails.iter().zip(&self.heads).zip(w.as_slice()) {
            if we != 0.0 {
                let flow = we * (x[h] - x[t]);
                out[h] += flow;
                out[t] -= flow;
            }
        }
    }
}

/// Assembles `A diag(w) A^T + delta I` in lower-triangular compressed-column
/// form. Parallel edges merge into one entry and zero-weight edges add no
/// structural nonzeros.
pub fn weighted_laplacian(g: &Graph, w: &EdgeWeights, delta: f64) -> Result<SparseSymmetric> {
    check_len(g.edge_count(), w.len())?;
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Param(format!(
            "delta must be finite and non-negative, got {delta}"
        )));
    }
    let m = g.node_count();
    let adj = g.adjacency();
    let w = w.as_slice();

    let mut col_ptr = Vec::with_capacity(m + 1);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    let mut slot = vec![usize::MAX; m];
    let mut touched: Vec<usize> = Vec::new();
    col_ptr.push(0);
    for j in 0..m {
        let start = row_idx.len();
        row_idx.push(j);
        values.push(0.0);
        let mut diag = delta;
        touched.clear();
        for &(nbr, e) in adj.neighbors(j) {
            let we = w[e];
            if we == 0.0 {
                continue;
            }
            diag += we;
            if nbr > j {
                if slot[nbr] == usize::MAX {
                    slot[nbr] = touched.len();
                    touched.push(nbr);
                }
            }
        }
        touched.sort_unstable();
        for (k, &r) in touched.iter().enumerate() {
            slot[r] = start + 1 + k;
            row_idx.push(r);
            values.push(0.0);
        }
        for &(nbr, e) in adj.neighbors(j) {
            if nbr > j && w[e] != 0.0 {
                values[slot[nbr]] -= w[e];
            }
        }
        for &r in &touched {
            slot[r] = usize::MAX;
        }
        values[start] = diag;
        col_ptr.push(row_idx.len());
    }
    Ok(SparseSymmetric::from_parts_unchecked(
        m, col_ptr, row_idx, values,
    ))
}

/// Non-negative per-edge weights, e.g. the diagonal of `(Θ^{-1} + ρI)^{-1}`.
/// A zero entry means the edge is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights(Vec<f64>);

impl EdgeWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(i) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Param(format!(
                "edge weight {i} is {}; weights must be finite and non-negative",
                w[i]
            )));
        }
        Ok(EdgeWeights(w))
    }

    pub fn zeros(n: usize) -> Self {
        EdgeWeights(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        EdgeWeights(vec![1.0; n])
    }

    pub(crate) fn from_vec_unchecked(w: Vec<f64>) -> Self {
        debug_assert!(w.iter().all(|v| v.is_finite() && *v >= 0.0));
        EdgeWeights(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Number of strictly positive entries.
    pub fn kept(&self) -> usize {
        self.0.iter().filter(|&&v| v > 0.0).count()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
