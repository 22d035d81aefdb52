use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{GraphBatch, Target};
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    NodeRegression,
    GraphRegression,
    GraphClassification,
}

impl Task {
    pub fn is_node_level(self) -> bool {
        self == Task::NodeRegression
    }

    /// Whether `target` has the shape this task expects.
    pub fn accepts(self, target: &Target) -> bool {
        matches!(
            (self, target),
            (Task::NodeRegression, Target::Node(_))
                | (Task::GraphRegression, Target::GraphValue(_))
                | (Task::GraphClassification, Target::GraphClass(_))
        )
    }

    /// Regression targets stacked into one matrix (one row per node or per
    /// graph).
    pub fn regression_targets(self, batch: &GraphBatch) -> Result<Tensor> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for t in &batch.targets {
            match (self, t) {
                (Task::NodeRegression, Target::Node(m)) => rows.extend((0..m.rows()).map(|r| m.row(r).to_vec())),
                (Task::GraphRegression, Target::GraphValue(v)) => rows.push(v.clone()),
                _ => return Err(Error::InvalidParameter(format!("target does not fit task {self}"))),
            }
        }
        Tensor::from_rows(&rows)
    }

    pub fn class_labels(self, batch: &GraphBatch) -> Result<Vec<usize>> {
        batch
            .targets
            .iter()
            .map(|t| match t {
                Target::GraphClass(c) if self == Task::GraphClassification => Ok(*c),
                _ => Err(Error::InvalidParameter(format!("target does not fit task {self}"))),
            })
            .collect()
    }

    /// MSE for regression, softmax cross-entropy for classification.
    pub fn loss(self, tape: &mut Tape, pred: Var, batch: &GraphBatch) -> Result<Var> {
        match self {
            Task::GraphClassification => {
                let labels = self.class_labels(batch)?;
                tape.cross_entropy(pred, &labels)
            }
            _ => {
                let y = self.regression_targets(batch)?;
                tape.mse(pred, &y)
            }
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node-regression" => Ok(Task::NodeRegression),
            "graph-regression" => Ok(Task::GraphRegression),
            "graph-classification" => Ok(Task::GraphClassification),
            other => Err(Error::InvalidParameter(format!("unknown task '{other}'"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::NodeRegression => "node-regression",
            Task::GraphRegression => "graph-regression",
            Task::GraphClassification => "graph-classification",
        })
    }
}

/// Linear prediction head `x W + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub w: ParamId,
    pub b: ParamId,
}

impl Head {
    pub fn init<R: Rng>(store: &mut ParamStore, rng: &mut R, name: &str, in_dim: usize, out_dim: usize) -> Self {
        Head {
            w: store.add_uniform(format!("{name}.w"), in_dim, out_dim, rng),
            b: store.add(format!("{name}.b"), Tensor::zeros(1, out_dim)),
        }
    }
}

/// Applies `heads[k]` to `outputs[k]` and sums the results. Node tasks keep
/// one row per node; graph tasks mean-pool each graph first. A single
/// output/head pair is the plain readout, several pairs the
/// jumping-knowledge readout.
pub fn readout(tape: &mut Tape, vars: &[Var], outputs: &[Var], heads: &[Head], task: Task, batch: &GraphBatch) -> Result<Var> {
    if outputs.is_empty() || outputs.len() != heads.len() {
        return Err(Error::InvalidParameter(format!(
            "readout got {} outputs for {} heads",
            outputs.len(),
            heads.len()
        )));
    }
    let mut total: Option<Var> = None;
    for (&h, head) in outputs.iter().zip(heads) {
        if tape.value(h).rows() != batch.n() {
            return Err(Error::Shape {
                op: "readout",
                left: tape.value(h).shape().to_vec(),
                right: vec![batch.n()],
            });
        }
        let x = if task.is_node_level() {
            h
        } else {
            tape.aggregate_rows(h, &batch.graph_nodes, true)?
        };
        let y = tape.matmul(x, vars[head.w.0])?;
        let y = tape.add_row(y, vars[head.b.0])?;
        total = Some(match total {
            None => y,
            Some(acc) => tape.add(acc, y)?,
        });
    }
    Ok(total.expect("at least one head"))
}
