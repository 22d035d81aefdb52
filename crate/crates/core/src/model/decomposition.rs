//! Jacobian of a linear-mode model against its path expansion: the
//! input→output Jacobian equals the sum over architecture paths of the
//! path weight times the composed per-node linear maps.

use super::{NodeMode, RanGnnModel};
use crate::arch::Edge;
use crate::error::{Error, Result};
use crate::gnn::{BnMode, ConvParams, GraphBatch};
use crate::paths::enumerate_paths;
use crate::tensor::{Tape, Tensor};

const MAX_PATHS: usize = 1 << 16;

/// Eval-mode Jacobian of the prediction with respect to the node features.
/// Row `r·o + b` is prediction entry `(r, b)`; column `c·d + e` is feature
/// entry `(c, e)`.
pub fn jacobian(model: &RanGnnModel, batch: &GraphBatch) -> Result<Tensor> {
    let x0 = &batch.node_features;
    let shape = model.predict(batch, None)?;
    let (r, c) = (shape.rows(), shape.cols());
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(r * c);
    for k in 0..r * c {
        let mut tape = Tape::new();
        let vars = model.params().bind(&mut tape);
        let x = tape.leaf(x0.clone().with_grad(true));
        let pass = model.forward_on(&mut tape, &vars, batch, x, None, BnMode::Eval)?;
        let mut seed = Tensor::zeros(r, c);
        seed.data_mut()[k] = 1.0;
        let grads = tape.backward_seeded(pass.prediction, seed)?;
        rows.push(grads.get_or_zeros(x, x0).into_data());
    }
    Tensor::from_rows(&rows)
}

/// The same Jacobian assembled from architecture paths. Only defined for
/// linear-mode models.
pub fn path_sum_jacobian(model: &RanGnnModel, batch: &GraphBatch) -> Result<Tensor> {
    if model.config().node_mode != NodeMode::Linear {
        return Err(Error::InvalidState("path decomposition needs a linear-mode model".into()));
    }
    let params = model.params();
    let wired = model.wired();
    let omega = model.omega();
    let n = batch.n();
    let d = model.config().input_dim;
    let o = model.config().output_dim;
    let head = model.heads()[0];

    let pool = if model.config().task.is_node_level() {
        Tensor::eye(n)
    } else {
        let mut r = Tensor::zeros(batch.num_graphs(), n);
        for (g, nodes) in batch.graph_nodes.iter().enumerate() {
            for &v in nodes {
                r.set(g, v, 1.0 / nodes.len() as f64);
            }
        }
        r
    };
    let m = batch.mean_operator();
    // left[k] = pool · M^k
    let mut left = vec![pool];
    let weight = |v: usize| -> Result<&Tensor> {
        match &model.node_layer(v).conv {
            ConvParams::Gcn { w } => Ok(params.get(*w)),
            _ => Err(Error::InvalidState("linear mode expects gcn layers".into())),
        }
    };

    let rows_out = left[0].rows();
    let mut jac = Tensor::zeros(rows_out * o, n * d);
    let scale = 1.0 / wired.output_nodes.len() as f64;
    for &a in &wired.input_nodes {
        for &b in &wired.output_nodes {
            for path in enumerate_paths(&wired.dag, a, b, MAX_PATHS)? {
                let k = path.len();
                while left.len() <= k {
                    let next = left.last().expect("non-empty").matmul(&m)?;
                    left.push(next);
                }
                let coef = scale * path.windows(2).map(|w| omega[&Edge(w[0], w[1])]).product::<f64>();
                let mut right = params.get(model.input_embed().w).clone();
                for &v in &path {
                    right = right.matmul(weight(v)?)?;
                }
                let right = right.matmul(params.get(head.w))?;
                let l = &left[k];
                for r in 0..rows_out {
                    for bo in 0..o {
                        let row = r * o + bo;
                        for c in 0..n {
                            let lc = coef * l.get(r, c);
                            if lc == 0.0 {
                                continue;
                            }
                            for e in 0..d {
                                let col = c * d + e;
                                jac.set(row, col, jac.get(row, col) + lc * right.get(e, bo));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(jac)
}

/// Largest absolute entry-wise gap between the autodiff Jacobian and the
/// path sum.
pub fn path_decomposition_check(model: &RanGnnModel, batch: &GraphBatch) -> Result<f64> {
    let paths = path_sum_jacobian(model, batch)?;
    let auto = jacobian(model, batch)?;
    Ok(auto.max_abs_diff(&paths))
}
