use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use super::RanGnnModel;
use crate::arch::{ArchDag, Edge};
use crate::error::{Error, Result};
use crate::gnn::GraphBatch;
use crate::paths::enumerate_paths;
use crate::rng::{stream, substream, uniform01, Stream};
use crate::tensor::Tensor;

/// Keep/drop decision per architecture edge.
#[derive(Clone, Debug, PartialEq)]
pub struct DropPathMask {
    keep: BTreeMap<Edge, bool>,
    pub seed: u64,
}

impl DropPathMask {
    pub fn from_keep(keep: impl IntoIterator<Item = (Edge, bool)>, seed: u64) -> Self {
        DropPathMask {
            keep: keep.into_iter().collect(),
            seed,
        }
    }

    pub fn all_kept(dag: &ArchDag) -> Self {
        DropPathMask::from_keep(dag.edges().map(|e| (e, true)), 0)
    }

    /// One uniform draw per edge in row-major order; the edge survives when
    /// the draw is below `1 - p_drop`.
    pub fn sample<R: Rng>(dag: &ArchDag, p_drop: f64, rng: &mut R, seed: u64) -> Self {
        let survive = 1.0 - p_drop;
        DropPathMask::from_keep(dag.edges().map(|e| (e, uniform01(rng) < survive)), seed)
    }

    pub fn keeps(&self, e: Edge) -> Result<bool> {
        self.keep
            .get(&e)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("mask has no decision for edge {e}")))
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn num_kept(&self) -> usize {
        self.keep.values().filter(|&&k| k).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, bool)> + '_ {
        self.keep.iter().map(|(e, k)| (*e, *k))
    }
}

fn check_p_drop(p_drop: f64) -> Result<()> {
    if (0.0..1.0).contains(&p_drop) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p_drop must lie in [0, 1), got {p_drop}")))
    }
}

/// Deterministic mask for `seed`.
pub fn sample_droppath_mask(dag: &ArchDag, p_drop: f64, seed: u64) -> Result<DropPathMask> {
    check_p_drop(p_drop)?;
    Ok(DropPathMask::sample(dag, p_drop, &mut stream(seed, Stream::DropPath), seed))
}

/// Mean of `samples` eval-mode predictions, each under an independent mask
/// drawn from sub-stream `k` of `seed`. Samples may run in parallel but are
/// averaged in index order.
pub fn mc_infer(model: &RanGnnModel, batch: &GraphBatch, samples: usize, seed: u64) -> Result<Tensor> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let p_drop = model.config().p_drop;
    let dag = &model.wired().dag;
    let preds: Vec<Tensor> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mask = DropPathMask::sample(dag, p_drop, &mut substream(seed, Stream::DropPath, k as u64), seed);
            model.predict(batch, Some(&mask))
        })
        .collect::<Result<_>>()?;
    let mut mean = Tensor::zeros(preds[0].rows(), preds[0].cols());
    for (k, y) in preds.iter().enumerate() {
        let kf = (k + 1) as f64;
        for (m, &v) in mean.data_mut().iter_mut().zip(y.data()) {
            *m += (v - *m) / kf;
        }
    }
    Ok(mean)
}

/// Empirical covariance of the contributions `λ = Π z ω` of two
/// source→sink paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPairCovariance {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub shared_edges: usize,
    pub covariance: f64,
    pub std_err: f64,
    /// `Π ω · ((1-p)^{|A ∪ B|} - (1-p)^{|A|+|B|})`.
    pub exact: f64,
}

const COV_MAX_NODES: usize = 10;
const COV_MAX_PATHS: usize = 4096;

fn path_edges(path: &[usize]) -> Vec<Edge> {
    path.windows(2).map(|w| Edge(w[0], w[1])).collect()
}

/// Samples `samples` masks and estimates the covariance of every pair of
/// source→sink path contributions. Pairs are listed in enumeration order;
/// `shared_edges` tells overlapping pairs apart.
pub fn droppath_covariance_check(
    dag: &ArchDag,
    omega: &BTreeMap<Edge, f64>,
    p_drop: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<PathPairCovariance>> {
    check_p_drop(p_drop)?;
    if dag.num_nodes() > COV_MAX_NODES {
        return Err(Error::Capacity(format!(
            "covariance check enumerates paths; {} nodes exceeds {COV_MAX_NODES}",
            dag.num_nodes()
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let edges: Vec<Edge> = dag.edges().collect();
    for e in &edges {
        match omega.get(e) {
            Some(w) if *w > 0.0 && *w <= 1.0 => {}
            _ => return Err(Error::InvalidParameter(format!("edge {e} needs a weight in (0, 1]"))),
        }
    }
    let bit: BTreeMap<Edge, usize> = edges.iter().enumerate().map(|(k, e)| (*e, k)).collect();
    let paths = enumerate_paths(dag, 1, dag.num_nodes(), COV_MAX_PATHS)?;
    let path_masks: Vec<u64> = paths
        .iter()
        .map(|p| path_edges(p).iter().map(|e| 1u64 << bit[e]).fold(0, |a, b| a | b))
        .collect();
    let coef: Vec<f64> = paths.iter().map(|p| path_edges(p).iter().map(|e| omega[e]).product()).collect();

    // kept[p] is a bitset over samples: path p survives sample s
    let words = samples.div_ceil(64);
    let mut kept = vec![vec![0u64; words]; paths.len()];
    let mut rng = stream(seed, Stream::DropPath);
    let survive = 1.0 - p_drop;
    for s in 0..samples {
        let mut m = 0u64;
        for k in 0..edges.len() {
            if uniform01(&mut rng) < survive {
                m |= 1 << k;
            }
        }
        for (pk, &pm) in kept.iter_mut().zip(&path_masks) {
            if m & pm == pm {
                pk[s / 64] |= 1 << (s % 64);
            }
        }
    }
    let count = |v: &[u64]| v.iter().map(|w| w.count_ones() as u64).sum::<u64>();
    let singles: Vec<u64> = kept.iter().map(|v| count(v)).collect();

    let pairs: Vec<(usize, usize)> = (0..paths.len()).flat_map(|a| (a + 1..paths.len()).map(move |b| (a, b))).collect();
    let sn = samples as u64;
    let out = pairs
        .par_iter()
        .map(|&(a, b)| {
            let nab: u64 = kept[a].iter().zip(&kept[b]).map(|(x, y)| (x & y).count_ones() as u64).sum();
            let (na, nb) = (singles[a], singles[b]);
            // exact integer numerator: zero whenever the indicators are
            // degenerate
            let num = sn as i128 * nab as i128 - na as i128 * nb as i128;
            let cov_ind = num as f64 / (sn as f64 * (sn - 1) as f64);
            let (ma, mb) = (na as f64 / sn as f64, nb as f64 / sn as f64);
            let cells = [
                (nab, (1.0 - ma) * (1.0 - mb)),
                (na - nab, (1.0 - ma) * -mb),
                (nb - nab, -ma * (1.0 - mb)),
                (sn + nab - na - nb, ma * mb),
            ];
            let mean_q = cells.iter().map(|(n, q)| *n as f64 * q).sum::<f64>() / sn as f64;
            let var_q = cells.iter().map(|(n, q)| *n as f64 * (q - mean_q).powi(2)).sum::<f64>() / (sn - 1) as f64;
            let c = coef[a] * coef[b];
            let (ea, eb) = (path_masks[a], path_masks[b]);
            let shared = (ea & eb).count_ones();
            let exact = c * (survive.powi((ea | eb).count_ones() as i32) - survive.powi((ea.count_ones() + eb.count_ones()) as i32));
            PathPairCovariance {
                first: paths[a].clone(),
                second: paths[b].clone(),
                shared_edges: shared as usize,
                covariance: c * cov_ind,
                std_err: c * (var_q / sn as f64).sqrt(),
                exact,
            }
        })
        .collect();
    Ok(out)
}
