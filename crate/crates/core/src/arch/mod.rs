//! Random architecture DAGs.
//!
//! Architecture nodes are numbered `1..=L`; node 1 is the source and node
//! `L` the sink. Edges only go forward (`i < j`), so the adjacency matrix is
//! strictly upper triangular and acyclicity never needs checking.

mod format;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub use format::{deserialize, serialize};

/// Directed architecture edge `from → to` with `from < to`.
///
/// The derived ordering is row-major (by `from`, then `to`), which is the
/// fixed enumeration order of every per-edge random draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn from(&self) -> usize {
        self.0
    }

    pub fn to(&self) -> usize {
        self.1
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchDag {
    num_nodes: usize,
    edges: BTreeSet<Edge>,
    gen_p: f64,
    seed: u64,
    sequential_embedded: bool,
}

impl ArchDag {
    /// Builds a DAG from an explicit edge list, validating every edge.
    pub fn from_edges(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut dag = ArchDag::empty(num_nodes)?;
        for (i, j) in edges {
            dag.check_edge(i, j)?;
            if !dag.edges.insert(Edge(i, j)) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({i},{j})")));
            }
        }
        Ok(dag)
    }

    /// `L` nodes, no edges.
    pub fn empty(num_nodes: usize) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidParameter("an architecture needs at least one node".into()));
        }
        Ok(ArchDag {
            num_nodes,
            edges: BTreeSet::new(),
            gen_p: 0.0,
            seed: 0,
            sequential_embedded: false,
        })
    }

    /// The chain `1 → 2 → … → L`.
    pub fn chain(num_nodes: usize) -> Result<Self> {
        embed_sequential_path(&ArchDag::empty(num_nodes)?).map(|mut d| {
            d.sequential_embedded = false;
            d
        })
    }

    /// Complete upper-triangular DAG (every `i < j` wired); the ResNet case.
    pub fn complete(num_nodes: usize) -> Result<Self> {
        let mut dag = ArchDag::empty(num_nodes)?;
        for i in 1..=num_nodes {
            for j in i + 1..=num_nodes {
                dag.edges.insert(Edge(i, j));
            }
        }
        dag.gen_p = 1.0;
        Ok(dag)
    }

    pub(crate) fn with_metadata(mut self, gen_p: f64, seed: u64, sequential_embedded: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&gen_p) {
            return Err(Error::InvalidParameter(format!("p = {gen_p} is outside [0, 1]")));
        }
        if sequential_embedded && (1..self.num_nodes).any(|i| !self.edges.contains(&Edge(i, i + 1))) {
            return Err(Error::InvalidParameter(
                "sequential flag set but the chain 1→…→L is not fully present".into(),
            ));
        }
        self.gen_p = gen_p;
        self.seed = seed;
        self.sequential_embedded = sequential_embedded;
        Ok(self)
    }

    fn check_edge(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || j == 0 || i > self.num_nodes || j > self.num_nodes {
            return Err(Error::InvalidParameter(format!(
                "edge ({i},{j}) has a node outside 1..={}",
                self.num_nodes
            )));
        }
        if i >= j {
            return Err(Error::InvalidParameter(format!("edge ({i},{j}) does not satisfy i < j")));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&Edge(i, j))
    }

    pub fn gen_p(&self) -> f64 {
        self.gen_p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sequential_embedded(&self) -> bool {
        self.sequential_embedded
    }

    /// Direct predecessors of `j`, ascending.
    pub fn predecessors(&self, j: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == j).map(|e| e.0).collect()
    }

    /// Direct successors of `i`, ascending.
    pub fn successors(&self, i: usize) -> Vec<usize> {
        self.edges.range(Edge(i, 0)..Edge(i + 1, 0)).map(|e| e.1).collect()
    }

    /// Predecessor lists for all nodes, indexed `0..=L` (entry 0 unused).
    pub fn predecessor_lists(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.num_nodes + 1];
        for e in &self.edges {
            preds[e.1].push(e.0);
        }
        preds
    }

    /// Successor lists for all nodes, indexed `0..=L` (entry 0 unused).
    pub fn successor_lists(&self) -> Vec<Vec<usize>> {
        let mut succs = vec![Vec::new(); self.num_nodes + 1];
        for e in &self.edges {
            succs[e.0].push(e.1);
        }
        succs
    }

    pub(crate) fn check_node(&self, node: usize, what: &str) -> Result<()> {
        if node == 0 || node > self.num_nodes {
            return Err(Error::InvalidParameter(format!(
                "{what} node {node} is outside 1..={}",
                self.num_nodes
            )));
        }
        Ok(())
    }
}

/// Samples an Erdős–Rényi DAG: each of the `L(L-1)/2` forward edges is kept
/// independently with probability `p`, drawn in row-major order from the
/// architecture sub-stream of `seed`.
pub fn generate_er_dag(num_nodes: usize, p: f64, seed: u64) -> Result<ArchDag> {
    if num_nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 architecture nodes, got {num_nodes}"
        )));
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let mut rng = rng::stream(seed, Stream::ArchEdges);
    let mut dag = ArchDag::empty(num_nodes)?;
    for i in 1..=num_nodes {
        for j in i + 1..=num_nodes {
            if rng::uniform01(&mut rng) < p {
                dag.edges.insert(Edge(i, j));
            }
        }
    }
    dag.gen_p = p;
    dag.seed = seed;
    Ok(dag)
}

/// Adds the sequential path `1 → 2 → … → L` to `dag`.
pub fn embed_sequential_path(dag: &ArchDag) -> Result<ArchDag> {
    let mut out = dag.clone();
    for i in 1..dag.num_nodes {
        out.edges.insert(Edge(i, i + 1));
    }
    out.sequential_embedded = true;
    Ok(out)
}

/// A DAG plus its terminals: nodes without predecessors read the global
/// input, nodes without successors are averaged into the global output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WiredArch {
    pub dag: ArchDag,
    pub input_nodes: Vec<usize>,
    pub output_nodes: Vec<usize>,
}

pub fn wire_terminals(dag: &ArchDag) -> WiredArch {
    let mut has_pred = vec![false; dag.num_nodes + 1];
    let mut has_succ = vec![false; dag.num_nodes + 1];
    for e in dag.edges() {
        has_succ[e.0] = true;
        has_pred[e.1] = true;
    }
    WiredArch {
        dag: dag.clone(),
        input_nodes: (1..=dag.num_nodes).filter(|&v| !has_pred[v]).collect(),
        output_nodes: (1..=dag.num_nodes).filter(|&v| !has_succ[v]).collect(),
    }
}
