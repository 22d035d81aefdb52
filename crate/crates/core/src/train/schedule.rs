use serde::{Deserialize, Serialize};

use super::TrainConfig;

/// What happened after reporting one epoch's validation loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleEvent {
    Improved,
    Waiting,
    Decayed,
    Stop,
}

/// Plateau learning-rate schedule with a terminal stop rule.
///
/// After `plateau_patience` consecutive epochs without a strict improvement
/// the rate is multiplied by `decay_factor`, as long as the result does not
/// fall below `lr_min`. Once no further decay fits, the rate is at its floor
/// and `stop_patience` non-improving epochs end training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauSchedule {
    lr: f64,
    lr_min: f64,
    factor: f64,
    patience: usize,
    stop_patience: usize,
    best: f64,
    bad_epochs: usize,
    decays: usize,
}

impl PlateauSchedule {
    pub fn new(cfg: &TrainConfig) -> Self {
        PlateauSchedule {
            lr: cfg.lr_init,
            lr_min: cfg.lr_min,
            factor: cfg.decay_factor,
            patience: cfg.plateau_patience,
            stop_patience: cfg.stop_patience,
            best: f64::INFINITY,
            bad_epochs: 0,
            decays: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn decays(&self) -> usize {
        self.decays
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    /// True when another decay would undershoot `lr_min`.
    pub fn at_floor(&self) -> bool {
        self.lr * self.factor < self.lr_min * (1.0 - 1e-12)
    }

    pub fn step(&mut self, val_loss: f64) -> ScheduleEvent {
        if val_loss < self.best {
            self.best = val_loss;
            self.bad_epochs = 0;
            return ScheduleEvent::Improved;
        }
        self.bad_epochs += 1;
        if self.at_floor() {
            if self.bad_epochs >= self.stop_patience {
                return ScheduleEvent::Stop;
            }
        } else if self.bad_epochs >= self.patience {
            self.lr = (self.lr * self.factor).max(self.lr_min);
            self.decays += 1;
            self.bad_epochs = 0;
            return ScheduleEvent::Decayed;
        }
        ScheduleEvent::Waiting
    }
}
