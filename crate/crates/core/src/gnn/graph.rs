use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Supervision attached to a domain graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// One row per domain node.
    Node(Tensor),
    /// One vector per graph.
    GraphValue(Vec<f64>),
    /// Class index per graph.
    GraphClass(usize),
}

/// An undirected data graph. Adjacency is stored symmetrically; every
/// stored direction `(i, j)` with `j ∈ neighbors[i]` is a directed edge, in
/// the order `i` ascending then neighbor-list order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGraph {
    pub neighbors: Vec<Vec<usize>>,
    pub node_features: Tensor,
    /// One row per directed edge, when present.
    pub edge_features: Option<Tensor>,
    pub target: Target,
}

impl DomainGraph {
    /// Builds a graph from undirected edges; each pair is stored in both
    /// directions and neighbor lists are sorted. A self pair `(u, u)` is
    /// stored once.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], node_features: Tensor, target: Target) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!("edge ({u},{v}) out of range for {n} nodes")));
            }
            neighbors[u].push(v);
            if u != v {
                neighbors[v].push(u);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let g = DomainGraph {
            neighbors,
            node_features,
            edge_features: None,
            target,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features.cols()
    }

    pub fn num_directed_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum()
    }

    /// `(receiver, sender)` pairs in storage order.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
            .collect()
    }

    /// Undirected edges `u <= v`, ascending.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        self.directed_edges().into_iter().filter(|(i, j)| i <= j).collect()
    }

    pub fn with_edge_features(mut self, e: Tensor) -> Result<Self> {
        self.edge_features = Some(e);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidParameter("domain graph has no nodes".into()));
        }
        if self.node_features.rows() != n {
            return Err(Error::Shape {
                op: "node_features",
                left: self.node_features.shape().to_vec(),
                right: vec![n],
            });
        }
        for (i, list) in self.neighbors.iter().enumerate() {
            if let Some(&bad) = list.iter().find(|&&j| j >= n) {
                return Err(Error::InvalidParameter(format!("node {i} lists invalid neighbor {bad}")));
            }
            for &j in list {
                if !self.neighbors[j].contains(&i) {
                    return Err(Error::InvalidParameter(format!("edge ({i},{j}) is not stored symmetrically")));
                }
            }
        }
        if let Some(e) = &self.edge_features {
            if e.rows() != self.num_directed_edges() {
                return Err(Error::Shape {
                    op: "edge_features",
                    left: e.shape().to_vec(),
                    right: vec![self.num_directed_edges()],
                });
            }
        }
        if let Target::Node(t) = &self.target {
            if t.rows() != n {
                return Err(Error::Shape {
                    op: "node_target",
                    left: t.shape().to_vec(),
                    right: vec![n],
                });
            }
        }
        Ok(())
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<DomainGraph> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let edges: Vec<(usize, usize)> = self.undirected_edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let features = self.node_features.select_rows(&inv);
        let target = match &self.target {
            Target::Node(t) => Target::Node(t.select_rows(&inv)),
            other => other.clone(),
        };
        let mut g = DomainGraph::from_edges(n, &edges, features, target)?;
        if let Some(e) = &self.edge_features {
            let old: Vec<(usize, usize)> = self.directed_edges();
            let index: std::collections::HashMap<(usize, usize), usize> =
                old.iter().enumerate().map(|(k, &(i, j))| ((perm[i], perm[j]), k)).collect();
            let rows: Vec<usize> = g.directed_edges().iter().map(|key| index[key]).collect();
            g = g.with_edge_features(e.select_rows(&rows))?;
        }
        Ok(g)
    }
}

/// Several graphs merged into one disjoint union, the unit a forward pass
/// consumes.
#[derive(Clone, Debug)]
pub struct GraphBatch {
    pub neighbors: Vec<Vec<usize>>,
    pub node_features: Tensor,
    pub edge_features: Option<Tensor>,
    /// `(receiver, sender)` for every directed edge, in storage order.
    pub edges: Vec<(usize, usize)>,
    /// Node index ranges, one per graph.
    pub graph_nodes: Vec<Vec<usize>>,
    pub targets: Vec<Target>,
}

impl GraphBatch {
    pub fn single(g: &DomainGraph) -> Result<Self> {
        GraphBatch::from_graphs(&[g])
    }

    pub fn from_graphs(graphs: &[&DomainGraph]) -> Result<Self> {
        let Some(first) = graphs.first() else {
            return Err(Error::InvalidParameter("empty batch".into()));
        };
        let d = first.feature_dim();
        let with_edges = first.edge_features.is_some();
        let de = first.edge_features.as_ref().map_or(0, Tensor::cols);
        let mut neighbors = Vec::new();
        let mut feats = Vec::new();
        let mut efeats = Vec::new();
        let mut graph_nodes = Vec::new();
        let mut targets = Vec::new();
        for g in graphs {
            g.validate()?;
            if g.feature_dim() != d {
                return Err(Error::Shape {
                    op: "batch features",
                    left: vec![d],
                    right: vec![g.feature_dim()],
                });
            }
            if g.edge_features.is_some() != with_edges || g.edge_features.as_ref().map_or(0, Tensor::cols) != de {
                return Err(Error::InvalidParameter("graphs in a batch disagree on edge features".into()));
            }
            let offset = neighbors.len();
            graph_nodes.push((offset..offset + g.n()).collect());
            for list in &g.neighbors {
                neighbors.push(list.iter().map(|j| j + offset).collect::<Vec<_>>());
            }
            feats.extend_from_slice(g.node_features.data());
            if let Some(e) = &g.edge_features {
                efeats.extend_from_slice(e.data());
            }
            targets.push(g.target.clone());
        }
        let n = neighbors.len();
        let edges: Vec<(usize, usize)> = neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
            .collect();
        let edge_features = if with_edges && !edges.is_empty() {
            Some(Tensor::matrix(edges.len(), de, efeats)?)
        } else {
            None
        };
        Ok(GraphBatch {
            neighbors,
            node_features: Tensor::matrix(n, d, feats)?,
            edge_features,
            edges,
            graph_nodes,
            targets,
        })
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_graphs(&self) -> usize {
        self.graph_nodes.len()
    }

    pub fn receivers(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.0).collect()
    }

    pub fn senders(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.1).collect()
    }

    /// Dense mean-over-neighbors operator `D⁻¹A` (isolated rows are zero).
    pub fn mean_operator(&self) -> Tensor {
        let n = self.n();
        let mut m = Tensor::zeros(n, n);
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                m.set(i, j, m.get(i, j) + 1.0 / list.len() as f64);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> DomainGraph {
        let x = Tensor::matrix(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        DomainGraph::from_edges(3, &[(0, 1), (1, 2)], x, Target::GraphValue(vec![0.0])).unwrap()
    }

    #[test]
    fn symmetric_storage() {
        let g = path3();
        assert_eq!(g.neighbors, vec![vec![1], vec![0, 2], vec![1]]);
        assert_eq!(g.directed_edges(), vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert_eq!(g.undirected_edges(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn validation() {
        let x = Tensor::zeros(2, 1);
        assert!(DomainGraph::from_edges(2, &[(0, 2)], x.clone(), Target::GraphClass(0)).is_err());
        assert!(DomainGraph::from_edges(3, &[(0, 1)], x.clone(), Target::GraphClass(0)).is_err());
        let g = DomainGraph::from_edges(2, &[(0, 1)], x, Target::GraphClass(0)).unwrap();
        assert!(g.clone().with_edge_features(Tensor::zeros(1, 2)).is_err());
        assert!(g.with_edge_features(Tensor::zeros(2, 2)).is_ok());
    }

    #[test]
    fn batching_offsets() {
        let b = GraphBatch::from_graphs(&[&path3(), &path3()]).unwrap();
        assert_eq!(b.n(), 6);
        assert_eq!(b.neighbors[4], vec![3, 5]);
        assert_eq!(b.graph_nodes[1], vec![3, 4, 5]);
        assert_eq!(b.edges.len(), 8);
        assert_eq!(b.mean_operator().row(1), &[0.5, 0.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn permutation_moves_features() {
        let g = path3();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        // old node 0 is new node 2
        assert_eq!(p.node_features.data(), &[2.0, 3.0, 1.0]);
        assert_eq!(p.neighbors[2], vec![0]);
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }
}
