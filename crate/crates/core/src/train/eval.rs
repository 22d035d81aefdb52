use rand::RngCore;

use crate::error::{Error, Result};
use crate::gnn::{DomainGraph, GraphBatch, Target, Task};
use crate::model::{mc_infer, RanGnnModel};
use crate::rng::{substream, Stream};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Mae,
    Mse,
    Accuracy,
}

impl Metric {
    pub fn fits(self, task: Task) -> bool {
        (self == Metric::Accuracy) == (task == Task::GraphClassification)
    }

    pub fn default_for(task: Task) -> Self {
        match task {
            Task::GraphClassification => Metric::Accuracy,
            _ => Metric::Mae,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(Metric::Mae),
            "mse" => Ok(Metric::Mse),
            "accuracy" => Ok(Metric::Accuracy),
            other => Err(Error::InvalidParameter(format!("unknown metric '{other}'"))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Mae => "mae",
            Metric::Mse => "mse",
            Metric::Accuracy => "accuracy",
        })
    }
}

fn graph_score(metric: Metric, pred: &Tensor, target: &Target) -> Result<f64> {
    let err = |a: f64, b: f64| match metric {
        Metric::Mae => (a - b).abs(),
        _ => (a - b).powi(2),
    };
    match target {
        Target::Node(_) | Target::GraphValue(_) if metric == Metric::Accuracy => {
            Err(Error::InvalidParameter("accuracy needs class targets".into()))
        }
        Target::GraphClass(_) if metric != Metric::Accuracy => {
            Err(Error::InvalidParameter(format!("{metric} needs real-valued targets")))
        }
        Target::Node(y) => {
            if y.shape() != pred.shape() {
                return Err(Error::Shape {
                    op: "evaluate",
                    left: pred.shape().to_vec(),
                    right: y.shape().to_vec(),
                });
            }
            Ok(pred.data().iter().zip(y.data()).map(|(a, b)| err(*a, *b)).sum::<f64>() / y.numel() as f64)
        }
        Target::GraphValue(v) => {
            if pred.numel() != v.len() {
                return Err(Error::Shape {
                    op: "evaluate",
                    left: pred.shape().to_vec(),
                    right: vec![v.len()],
                });
            }
            Ok(pred.data().iter().zip(v).map(|(a, b)| err(*a, *b)).sum::<f64>() / v.len() as f64)
        }
        Target::GraphClass(c) => {
            let row = pred.row(0);
            // first maximum wins ties
            let arg = row
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
                .0;
            Ok(if arg == *c { 1.0 } else { 0.0 })
        }
    }
}

/// Seed of MonteCarlo inference on the `k`-th graph of a split.
pub fn graph_mc_seed(seed: u64, k: usize) -> u64 {
    substream(seed, Stream::DropPath, k as u64).next_u64()
}

/// Metric averaged over graphs (node tasks average over nodes within each
/// graph first). With `mc = Some((samples, seed))` predictions come from
/// MonteCarlo DropPath inference, graph `k` using a seed derived from
/// `(seed, k)`.
pub fn evaluate(model: &RanGnnModel, graphs: &[DomainGraph], metric: Metric, mc: Option<(usize, u64)>) -> Result<f64> {
    let task = model.config().task;
    if !metric.fits(task) {
        return Err(Error::InvalidParameter(format!("metric {metric} does not fit task {task}")));
    }
    if graphs.is_empty() {
        return Err(Error::InvalidParameter("nothing to evaluate".into()));
    }
    let mut total = 0.0;
    for (k, g) in graphs.iter().enumerate() {
        let batch = GraphBatch::single(g)?;
        let pred = match mc {
            None => model.predict(&batch, None)?,
            Some((samples, seed)) => {
                mc_infer(model, &batch, samples, graph_mc_seed(seed, k))?
            }
        };
        total += graph_score(metric, &pred, &g.target)?;
    }
    Ok(total / graphs.len() as f64)
}
