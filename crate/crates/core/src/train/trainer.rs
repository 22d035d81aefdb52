use std::time::Instant;

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{evaluate, Adam, Metric, PlateauSchedule, ScheduleEvent, TrainConfig};
use crate::error::{Error, Result};
use crate::gnn::{BnMode, Dataset, DomainGraph, GraphBatch};
use crate::model::{DropPathMask, RanGnnModel};
use crate::rng::{substream, Stream};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Rate used during this epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub final_lr: f64,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub test_metric: Option<(String, f64)>,
    /// Not serialized, so run artifacts stay byte-identical across runs.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

pub struct TrainOutcome {
    pub metrics: RunMetrics,
    /// Parameters from the epoch with the lowest validation loss.
    pub best: RanGnnModel,
}

/// `epoch,train_loss,val_loss,lr` lines with a header.
pub fn metrics_csv(m: &RunMetrics) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,lr\n");
    for r in &m.epochs {
        s += &format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, r.lr);
    }
    s
}

fn batch_of(graphs: &[DomainGraph], idx: &[usize]) -> Result<GraphBatch> {
    let refs: Vec<&DomainGraph> = idx.iter().map(|&i| &graphs[i]).collect();
    GraphBatch::from_graphs(&refs)
}

fn check_dims(model: &RanGnnModel, ds: &Dataset) -> Result<()> {
    let c = model.config();
    if c.task != ds.task {
        return Err(Error::InvalidParameter(format!("model task {} but dataset task {}", c.task, ds.task)));
    }
    if ds.feature_dim() != c.input_dim {
        return Err(Error::InvalidParameter(format!(
            "dataset features have width {}, model expects {}",
            ds.feature_dim(),
            c.input_dim
        )));
    }
    if ds.output_dim() > c.output_dim || (c.task != crate::gnn::Task::GraphClassification && ds.output_dim() != c.output_dim) {
        return Err(Error::InvalidParameter(format!(
            "dataset targets need output width {}, model has {}",
            ds.output_dim(),
            c.output_dim
        )));
    }
    Ok(())
}

/// Adam with the plateau schedule until the stop rule fires or
/// `max_epochs` pass. Each epoch shuffles the training graphs, and every
/// forward pass draws a fresh DropPath mask when `p_drop > 0`. Validation
/// loss is the eval-mode loss over the whole validation split.
pub fn train(mut model: RanGnnModel, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    ds.validate()?;
    check_dims(&model, ds)?;
    if ds.train.is_empty() || ds.val.is_empty() {
        return Err(Error::InvalidParameter("training needs non-empty train and validation splits".into()));
    }
    let start = Instant::now();
    let task = model.config().task;
    let p_drop = model.config().p_drop;
    let val_idx: Vec<usize> = (0..ds.val.len()).collect();
    let val_batch = batch_of(&ds.val, &val_idx)?;
    let mut opt = Adam::new(model.params());
    let mut sched = PlateauSchedule::new(cfg);
    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    let mut epochs = Vec::new();
    let mut best = model.clone();
    let (mut best_epoch, mut best_val) = (0, f64::INFINITY);
    let mut stopped_early = false;
    let mut step: u64 = 0;

    for epoch in 1..=cfg.max_epochs {
        let lr = sched.lr();
        order.sort_unstable();
        order.shuffle(&mut substream(cfg.seed, Stream::Shuffle, epoch as u64));
        let mut loss_sum = 0.0;
        let mut nb = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = batch_of(&ds.train, chunk)?;
            let mask = (p_drop > 0.0).then(|| {
                let mut rng = substream(cfg.seed, Stream::DropPath, step);
                DropPathMask::sample(&model.wired().dag, p_drop, &mut rng, step)
            });
            step += 1;
            let (loss, grads, stats) = model.loss_and_grads(&batch, mask.as_ref(), BnMode::Train)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.all_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite loss or gradient at epoch {epoch}, lr {lr}, batch {b}"
                )));
            }
            opt.step(model.params_mut(), &grads, lr)?;
            model.update_bn(&stats);
            loss_sum += loss;
            nb += 1;
        }
        let val_loss = model.task_loss(&val_batch, None)?;
        if !val_loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite validation loss at epoch {epoch}, lr {lr}")));
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / nb as f64,
            val_loss,
            lr,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best = model.clone();
        }
        if sched.step(val_loss) == ScheduleEvent::Stop {
            stopped_early = true;
            break;
        }
    }

    let test_metric = if ds.test.is_empty() {
        None
    } else {
        let metric = Metric::default_for(task);
        Some((metric.to_string(), evaluate(&best, &ds.test, metric, None)?))
    };
    let metrics = RunMetrics {
        epochs_run: epochs.len(),
        epochs,
        best_epoch,
        best_val_loss: best_val,
        final_lr: sched.lr(),
        stopped_early,
        test_metric,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome { metrics, best })
}
