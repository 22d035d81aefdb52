//! JSON checkpoints with a versioned header.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RanGnnModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "ranwire-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

impl RanGnnModel {
    pub fn to_checkpoint_string(&self) -> Result<String> {
        let env = Envelope {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            model: self,
        };
        serde_json::to_string_pretty(&env).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_checkpoint_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("unreadable header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("not a checkpoint (format '{}')", header.format)));
        }
        if header.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                header.version
            )));
        }
        let env: Envelope<RanGnnModel> = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let m = env.model;
        m.config.validate()?;
        if m.edge_logits.len() != m.wired.dag.num_edges() || m.node_layers.len() != m.config.num_nodes || m.bn.len() != m.config.num_nodes {
            return Err(Error::Checkpoint("model parts disagree with the architecture".into()));
        }
        if m.bn.iter().any(|s| s.running_var.iter().any(|&v| !(v > 0.0))) {
            return Err(Error::Checkpoint("non-positive running variance".into()));
        }
        Ok(m)
    }
}

pub fn save_checkpoint(path: &Path, model: &RanGnnModel) -> Result<()> {
    fs::write(path, model.to_checkpoint_string()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<RanGnnModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RanGnnModel::from_checkpoint_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::ConvType;
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn round_trip_is_exact() {
        for conv in [ConvType::Gcn, ConvType::Gin, ConvType::Gated, ConvType::Sage] {
            let c = ModelConfig {
                conv_type: conv,
                num_nodes: 6,
                ..ModelConfig::default()
            };
            let m = build_model(&c, 17).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            save_checkpoint(&path, &m).unwrap();
            assert_eq!(load_checkpoint(&path).unwrap(), m);
        }
    }

    #[test]
    fn header_is_checked() {
        let m = build_model(&ModelConfig::default(), 0).unwrap();
        let s = m.to_checkpoint_string().unwrap();
        let bumped = s.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(RanGnnModel::from_checkpoint_str(&bumped), Err(Error::Checkpoint(m)) if m.contains("version 2")));
        let other = s.replacen(CHECKPOINT_FORMAT, "something-else", 1);
        assert!(RanGnnModel::from_checkpoint_str(&other).is_err());
        assert!(RanGnnModel::from_checkpoint_str("{").is_err());
        assert!(load_checkpoint(Path::new("/nonexistent/ckpt.json")).is_err());
    }
}
