//! Randomly wired GNN: an architecture DAG whose nodes are GNN layers,
//! combined by sigmoid-weighted sums along architecture edges.

mod checkpoint;
mod config;
mod decomposition;
mod droppath;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{ModelConfig, NodeMode};
pub use decomposition::{jacobian, path_decomposition_check, path_sum_jacobian};
pub use droppath::{droppath_covariance_check, mc_infer, sample_droppath_mask, DropPathMask, PathPairCovariance};
pub use crate::gnn::Task;

use crate::arch::{embed_sequential_path, generate_er_dag, wire_terminals, Edge, WiredArch};
use crate::error::{Error, Result};
use crate::gnn::{batch_norm, readout, BnMode, BnState, BnStats, ConvParams, ConvType, GraphBatch, Head, ParamId, ParamStore};
use crate::rng::{stream, Stream};
use crate::tensor::{Gradients, Tape, Tensor, Var};

/// Parameters of one architecture node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLayer {
    pub conv: ConvParams,
    pub gamma: ParamId,
    pub beta: ParamId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RanGnnModel {
    config: ModelConfig,
    wired: WiredArch,
    params: ParamStore,
    /// One logit per architecture edge, row-major.
    edge_logits: Vec<(Edge, ParamId)>,
    input_embed: Head,
    edge_embed: Option<Head>,
    /// Indexed by architecture node minus one.
    node_layers: Vec<NodeLayer>,
    /// One head, or one per architecture node for jumping-knowledge readout.
    heads: Vec<Head>,
    bn: Vec<BnState>,
}

/// Tape handles produced by one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub prediction: Var,
    /// Output of every architecture node, indexed by node minus one.
    pub node_outputs: Vec<Var>,
    /// Batch statistics per architecture node (train mode only).
    pub bn_stats: Vec<Option<BnStats>>,
}

/// Generates the architecture from `config.seed` and initializes weights
/// from `init_seed`. Edge logits start at 0, i.e. every ω is 0.5.
pub fn build_model(config: &ModelConfig, init_seed: u64) -> Result<RanGnnModel> {
    config.validate()?;
    let mut dag = generate_er_dag(config.num_nodes, config.p, config.seed)?;
    if config.sequential_path {
        dag = embed_sequential_path(&dag)?;
    }
    RanGnnModel::from_wired(config, wire_terminals(&dag), init_seed)
}

impl RanGnnModel {
    /// Builds a model on a given architecture.
    pub fn from_wired(config: &ModelConfig, wired: WiredArch, init_seed: u64) -> Result<Self> {
        config.validate()?;
        if wired.dag.num_nodes() != config.num_nodes {
            return Err(Error::InvalidParameter(format!(
                "architecture has {} nodes, config says {}",
                wired.dag.num_nodes(),
                config.num_nodes
            )));
        }
        let mut rng = stream(init_seed, Stream::WeightInit);
        let mut params = ParamStore::new();
        let h = config.hidden_dim;
        let edge_logits = wired
            .dag
            .edges()
            .map(|e| (e, params.add(format!("omega{e}"), Tensor::scalar(0.0))))
            .collect();
        let input_embed = Head::init(&mut params, &mut rng, "embed", config.input_dim, h);
        let edge_embed = (config.conv_type == ConvType::Gated && config.edge_dim > 0)
            .then(|| Head::init(&mut params, &mut rng, "edge_embed", config.edge_dim, h));
        let conv_type = match config.node_mode {
            NodeMode::Standard => config.conv_type,
            NodeMode::Linear => ConvType::Gcn,
        };
        let mut node_layers = Vec::with_capacity(config.num_nodes);
        for v in 1..=config.num_nodes {
            let prefix = format!("node{v}");
            let conv = ConvParams::init(conv_type, &mut params, &mut rng, &prefix, h, h, h)?;
            node_layers.push(NodeLayer {
                conv,
                gamma: params.add(format!("{prefix}.bn_gamma"), Tensor::full(1, h, 1.0)),
                beta: params.add(format!("{prefix}.bn_beta"), Tensor::zeros(1, h)),
            });
        }
        let jk = config.conv_type == ConvType::Gin && config.node_mode == NodeMode::Standard;
        let heads = (0..if jk { config.num_nodes } else { 1 })
            .map(|k| Head::init(&mut params, &mut rng, &format!("head{k}"), h, config.output_dim))
            .collect();
        Ok(RanGnnModel {
            config: config.clone(),
            wired,
            params,
            edge_logits,
            input_embed,
            edge_embed,
            node_layers,
            heads,
            bn: vec![BnState::new(h); config.num_nodes],
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn wired(&self) -> &WiredArch {
        &self.wired
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn node_layer(&self, node: usize) -> &NodeLayer {
        &self.node_layers[node - 1]
    }

    pub fn input_embed(&self) -> &Head {
        &self.input_embed
    }

    pub fn heads(&self) -> &[Head] {
        &self.heads
    }

    pub fn bn_states(&self) -> &[BnState] {
        &self.bn
    }

    pub fn num_edge_logits(&self) -> usize {
        self.edge_logits.len()
    }

    pub fn edge_logit(&self, e: Edge) -> Option<ParamId> {
        self.edge_logits.iter().find(|(k, _)| *k == e).map(|(_, id)| *id)
    }

    /// Current aggregation weights `ω = sigmoid(w)`.
    pub fn omega(&self) -> BTreeMap<Edge, f64> {
        self.edge_logits
            .iter()
            .map(|(e, id)| (*e, crate::tensor::sigmoid(self.params.get(*id).item())))
            .collect()
    }

    /// Sets the logit of edge `e` so that its weight becomes `w ∈ (0, 1)`.
    pub fn set_omega(&mut self, e: Edge, w: f64) -> Result<()> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::InvalidParameter(format!("weight {w} is outside (0, 1)")));
        }
        let id = self
            .edge_logit(e)
            .ok_or_else(|| Error::InvalidParameter(format!("{e} is not an architecture edge")))?;
        self.params.get_mut(id).data_mut()[0] = (w / (1.0 - w)).ln();
        Ok(())
    }

    /// Folds training-mode batch statistics into the running statistics.
    pub fn update_bn(&mut self, stats: &[Option<BnStats>]) {
        for (state, s) in self.bn.iter_mut().zip(stats) {
            if let Some(s) = s {
                state.update(s);
            }
        }
    }

    fn check_batch(&self, batch: &GraphBatch) -> Result<()> {
        let d = batch.node_features.cols();
        if d != self.config.input_dim {
            return Err(Error::Shape {
                op: "model input",
                left: vec![batch.n(), d],
                right: vec![self.config.input_dim],
            });
        }
        let de = batch.edge_features.as_ref().map_or(0, Tensor::cols);
        if self.edge_embed.is_some() && batch.edge_features.is_some() && de != self.config.edge_dim {
            return Err(Error::Shape {
                op: "edge features",
                left: vec![de],
                right: vec![self.config.edge_dim],
            });
        }
        Ok(())
    }

    /// Records one forward pass on `tape`. `vars` must come from
    /// `self.params().bind(tape)` and `x` holds the node features.
    pub fn forward_on(&self, tape: &mut Tape, vars: &[Var], batch: &GraphBatch, x: Var, mask: Option<&DropPathMask>, mode: BnMode) -> Result<ForwardPass> {
        self.check_batch(batch)?;
        let linear = self.config.node_mode == NodeMode::Linear;
        let h = self.config.hidden_dim;
        let n = batch.n();
        let p = |id: ParamId| vars[id.0];

        let g = tape.matmul(x, p(self.input_embed.w))?;
        let g = tape.add_row(g, p(self.input_embed.b))?;
        let e0 = match (&self.edge_embed, &batch.edge_features) {
            (Some(head), Some(ef)) => {
                let ev = tape.constant(ef.clone());
                let e = tape.matmul(ev, p(head.w))?;
                Some(tape.add_row(e, p(head.b))?)
            }
            _ => None,
        };

        let mut weights: BTreeMap<Edge, Var> = BTreeMap::new();
        for &(e, id) in &self.edge_logits {
            let keep = match mask {
                Some(m) => m.keeps(e)?,
                None => true,
            };
            if keep {
                let w = tape.sigmoid(p(id));
                weights.insert(e, w);
            }
        }

        let preds = self.wired.dag.predecessor_lists();
        let is_input: Vec<bool> = (0..=self.config.num_nodes).map(|v| self.wired.input_nodes.contains(&v)).collect();
        let mut node_out: Vec<Var> = Vec::with_capacity(self.config.num_nodes);
        let mut edge_out: Vec<Option<Var>> = Vec::with_capacity(self.config.num_nodes);
        let mut bn_stats = Vec::with_capacity(self.config.num_nodes);
        for v in 1..=self.config.num_nodes {
            let (agg, eagg) = if is_input[v] {
                (g, e0)
            } else {
                let mut acc: Option<Var> = None;
                let mut eacc: Option<Var> = None;
                for &u in &preds[v] {
                    let Some(&w) = weights.get(&Edge(u, v)) else { continue };
                    let term = tape.scalar_mul(w, node_out[u - 1])?;
                    acc = Some(match acc {
                        None => term,
                        Some(a) => tape.add(a, term)?,
                    });
                    if let Some(eu) = edge_out[u - 1] {
                        let et = tape.scalar_mul(w, eu)?;
                        eacc = Some(match eacc {
                            None => et,
                            Some(a) => tape.add(a, et)?,
                        });
                    }
                }
                // every incoming edge dropped: the layer still runs on zeros
                let acc = match acc {
                    Some(a) => a,
                    None => tape.constant(Tensor::zeros(n, h)),
                };
                (acc, eacc)
            };
            let act = if linear { agg } else { tape.relu(agg) };
            let layer = &self.node_layers[v - 1];
            let (conv, e_new) = layer.conv.apply(tape, vars, act, eagg, batch)?;
            let (out, stats) = if linear {
                (conv, None)
            } else {
                batch_norm(tape, conv, p(layer.gamma), p(layer.beta), &self.bn[v - 1], mode)?
            };
            node_out.push(out);
            edge_out.push(e_new);
            bn_stats.push(stats);
        }

        let prediction = if self.heads.len() == 1 {
            let outs = &self.wired.output_nodes;
            let mut sum = node_out[outs[0] - 1];
            for &o in &outs[1..] {
                sum = tape.add(sum, node_out[o - 1])?;
            }
            let avg = tape.scale(sum, 1.0 / outs.len() as f64);
            readout(tape, vars, &[avg], &self.heads, self.config.task, batch)?
        } else {
            readout(tape, vars, &node_out, &self.heads, self.config.task, batch)?
        };
        Ok(ForwardPass {
            prediction,
            node_outputs: node_out,
            bn_stats,
        })
    }

    /// Eval-mode prediction.
    pub fn predict(&self, batch: &GraphBatch, mask: Option<&DropPathMask>) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let x = tape.constant(batch.node_features.clone());
        let out = self.forward_on(&mut tape, &vars, batch, x, mask, BnMode::Eval)?;
        Ok(tape.value(out.prediction).clone())
    }

    /// Task loss, parameter gradients (indexed like the store) and batch
    /// statistics for one pass.
    pub fn loss_and_grads(&self, batch: &GraphBatch, mask: Option<&DropPathMask>, mode: BnMode) -> Result<(f64, Vec<Tensor>, Vec<Option<BnStats>>)> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let x = tape.constant(batch.node_features.clone());
        let out = self.forward_on(&mut tape, &vars, batch, x, mask, mode)?;
        let loss = self.config.task.loss(&mut tape, out.prediction, batch)?;
        let value = tape.value(loss).item();
        let grads: Gradients = tape.backward(loss)?;
        let g = self
            .params
            .ids()
            .map(|id| grads.get_or_zeros(vars[id.0], self.params.get(id)))
            .collect();
        Ok((value, g, out.bn_stats))
    }

    pub fn task_loss(&self, batch: &GraphBatch, mask: Option<&DropPathMask>) -> Result<f64> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let x = tape.constant(batch.node_features.clone());
        let out = self.forward_on(&mut tape, &vars, batch, x, mask, BnMode::Eval)?;
        let loss = self.config.task.loss(&mut tape, out.prediction, batch)?;
        Ok(tape.value(loss).item())
    }
}
