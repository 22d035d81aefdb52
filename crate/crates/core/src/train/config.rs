use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_min: f64,
    pub decay_factor: f64,
    /// Non-improving epochs before each decay.
    pub plateau_patience: usize,
    /// Non-improving epochs at the minimum rate before stopping.
    pub stop_patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr_init: 1e-3,
            lr_min: 1e-5,
            decay_factor: 0.5,
            plateau_patience: 10,
            stop_patience: 5,
            max_epochs: 200,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lr_min > 0.0 && self.lr_min < self.lr_init && self.lr_init.is_finite()) {
            return bad(format!("need 0 < lr_min < lr_init, got {} and {}", self.lr_min, self.lr_init));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor < 1.0) {
            return bad(format!("decay_factor must lie in (0, 1), got {}", self.decay_factor));
        }
        if self.plateau_patience == 0 || self.stop_patience == 0 {
            return bad("patience values must be at least 1".into());
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return bad("max_epochs and batch_size must be positive".into());
        }
        Ok(())
    }
}
