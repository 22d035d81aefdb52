//! Synthetic k-hop averaging task: a node's target is the mean feature of
//! its `r`-hop ball, so a model needs receptive-field radius `r` to fit it.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::gnn::{Dataset, DomainGraph, Target, Task};
use crate::rng::{standard_normal, substream, uniform01, Stream};
use crate::tensor::Tensor;

const MAX_RETRIES: usize = 1000;

/// `y_i` = mean of column 0 of `x` over nodes within `r` hops of `i`
/// (BFS distance, `i` itself included).
pub fn ball_mean_targets(neighbors: &[Vec<usize>], x: &Tensor, r: usize) -> Tensor {
    let n = neighbors.len();
    let mut y = Tensor::zeros(n, 1);
    let mut dist = vec![usize::MAX; n];
    for i in 0..n {
        dist.fill(usize::MAX);
        dist[i] = 0;
        let mut queue = VecDeque::from([i]);
        let (mut sum, mut count) = (0.0, 0usize);
        while let Some(v) = queue.pop_front() {
            sum += x.get(v, 0);
            count += 1;
            if dist[v] == r {
                continue;
            }
            for &w in &neighbors[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        y.set(i, 0, sum / count as f64);
    }
    y
}

fn connected(neighbors: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; neighbors.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &neighbors[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn sample_connected<R: Rng>(n: usize, edge_prob: f64, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    for _ in 0..MAX_RETRIES {
        let mut edges = Vec::new();
        let mut nb = vec![Vec::new(); n];
        for u in 0..n {
            for v in u + 1..n {
                if uniform01(rng) < edge_prob {
                    edges.push((u, v));
                    nb[u].push(v);
                    nb[v].push(u);
                }
            }
        }
        if connected(&nb) {
            return Ok(edges);
        }
    }
    Err(Error::Generation(format!(
        "no connected graph with {n} nodes at edge probability {edge_prob} after {MAX_RETRIES} attempts"
    )))
}

/// `n_graphs` connected `G(n, edge_prob)` graphs with standard-normal scalar
/// features and `r`-hop ball-mean node targets. Graph `k` uses its own
/// sub-stream, so the first graphs do not depend on `n_graphs`.
pub fn gen_khop_dataset(n_graphs: usize, nodes_per_graph: usize, edge_prob: f64, r: usize, seed: u64) -> Result<Vec<DomainGraph>> {
    if nodes_per_graph == 0 {
        return Err(Error::InvalidParameter("graphs need at least one node".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidParameter(format!("edge probability {edge_prob} outside [0, 1]")));
    }
    (0..n_graphs)
        .map(|k| {
            let mut rng = substream(seed, Stream::Data, k as u64);
            let edges = sample_connected(nodes_per_graph, edge_prob, &mut rng)?;
            let x = Tensor::matrix(nodes_per_graph, 1, (0..nodes_per_graph).map(|_| standard_normal(&mut rng)).collect())?;
            let g = DomainGraph::from_edges(nodes_per_graph, &edges, x, Target::GraphClass(0))?;
            let y = ball_mean_targets(&g.neighbors, &g.node_features, r);
            Ok(DomainGraph {
                target: Target::Node(y),
                ..g
            })
        })
        .collect()
}

/// Consecutive split: the first graphs train, then validation, then test.
pub fn split_dataset(graphs: Vec<DomainGraph>, task: Task, val: usize, test: usize) -> Result<Dataset> {
    if val + test >= graphs.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot hold out {} of {} graphs",
            val + test,
            graphs.len()
        )));
    }
    let mut train = graphs;
    let test_part = train.split_off(train.len() - test);
    let val_part = train.split_off(train.len() - val);
    let ds = Dataset {
        task,
        train,
        val: val_part,
        test: test_part,
    };
    ds.validate()?;
    Ok(ds)
}
