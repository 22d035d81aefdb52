use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{ConvType, Task};

/// How architecture nodes transform their aggregated input.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeMode {
    /// ReLU → conv → batch norm.
    #[default]
    Standard,
    /// Identity activation, GCN conv, no normalization: the whole network
    /// is linear in its input.
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub conv_type: ConvType,
    pub hidden_dim: usize,
    /// Number of architecture nodes `L`.
    pub num_nodes: usize,
    /// Edge probability of the architecture generator.
    pub p: f64,
    /// Architecture seed.
    pub seed: u64,
    pub sequential_path: bool,
    pub p_drop: f64,
    pub mc_samples: usize,
    pub task: Task,
    pub input_dim: usize,
    pub output_dim: usize,
    /// Width of dataset edge features, 0 when the data has none.
    #[serde(default)]
    pub edge_dim: usize,
    #[serde(default)]
    pub node_mode: NodeMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            conv_type: ConvType::Gcn,
            hidden_dim: 16,
            num_nodes: 8,
            p: 0.6,
            seed: 0,
            sequential_path: true,
            p_drop: 0.0,
            mc_samples: 10,
            task: Task::NodeRegression,
            input_dim: 1,
            output_dim: 1,
            edge_dim: 0,
            node_mode: NodeMode::Standard,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.num_nodes < 2 {
            return bad(format!("num_nodes must be at least 2, got {}", self.num_nodes));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p must lie in [0, 1], got {}", self.p));
        }
        if !(0.0..1.0).contains(&self.p_drop) {
            return bad(format!("p_drop must lie in [0, 1), got {}", self.p_drop));
        }
        if self.mc_samples == 0 {
            return bad("mc_samples must be at least 1".into());
        }
        if self.hidden_dim == 0 || self.input_dim == 0 || self.output_dim == 0 {
            return bad("hidden, input and output widths must be positive".into());
        }
        if self.node_mode == NodeMode::Linear && self.conv_type != ConvType::Gcn {
            return bad(format!("linear mode uses the gcn conv, not {}", self.conv_type));
        }
        Ok(())
    }
}
