//! `make-data`, `train`, `eval`, `mc-infer` and `sweep`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use ranwire_core::gnn::{read_dataset, write_dataset, Dataset, DomainGraph, GraphBatch};
use ranwire_core::model::{build_model, load_checkpoint, mc_infer, save_checkpoint, ModelConfig, NodeMode};
use ranwire_core::train::{
    evaluate, gen_khop_dataset, graph_mc_seed, metrics_csv, split_dataset, sweep, train, Metric, SweepAxis,
    TrainConfig,
};
use ranwire_core::{ConvType, RanGnnModel, Task};

use crate::error::CliError;
use crate::io::{create_dir, emit, write_text};
use crate::settings::{echo, parse_switch, resolve};

fn parse_node_mode(s: &str) -> Result<NodeMode, String> {
    match s {
        "standard" => Ok(NodeMode::Standard),
        "linear" => Ok(NodeMode::Linear),
        _ => Err(format!("expected standard or linear, got `{s}`")),
    }
}

fn parse_metric(s: &str) -> Result<Metric, CliError> {
    s.parse().map_err(|e: ranwire_core::Error| CliError::Usage(e.to_string()))
}

fn load_data(dir: &Path) -> Result<Dataset, CliError> {
    let ds = read_dataset(dir).map_err(CliError::data)?;
    ds.validate().map_err(CliError::data)?;
    Ok(ds)
}

fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    value.as_ref().ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct MakeDataFlags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Total number of graphs.
    #[arg(long)]
    pub graphs: Option<usize>,
    /// Nodes per graph.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Edge probability of each domain graph.
    #[arg(long)]
    pub edge_prob: Option<f64>,
    /// Hop radius r of the target ball mean.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Graphs held out for validation.
    #[arg(long)]
    pub val: Option<usize>,
    /// Graphs held out for testing.
    #[arg(long)]
    pub test: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct MakeDataSettings {
    pub graphs: usize,
    pub nodes: usize,
    pub edge_prob: f64,
    pub radius: usize,
    pub seed: u64,
    pub val: usize,
    pub test: usize,
    pub out: Option<PathBuf>,
}

impl Default for MakeDataSettings {
    fn default() -> Self {
        MakeDataSettings {
            graphs: 200,
            nodes: 20,
            edge_prob: 0.15,
            radius: 2,
            seed: 0,
            val: 40,
            test: 40,
            out: None,
        }
    }
}

pub fn make_data_settings(flags: &MakeDataFlags) -> Result<MakeDataSettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

pub fn make_data(s: &MakeDataSettings) -> Result<(), CliError> {
    let out = require(&s.out, "out")?;
    let graphs = gen_khop_dataset(s.graphs, s.nodes, s.edge_prob, s.radius, s.seed)?;
    let ds = split_dataset(graphs, Task::NodeRegression, s.val, s.test)?;
    create_dir(out)?;
    write_dataset(out, &ds)?;
    Ok(())
}

/// Model and training flags shared by `train` and `sweep`.
#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct RunFlags {
    /// gcn, sage, gin or gated.
    #[arg(long)]
    pub conv: Option<ConvType>,
    /// Hidden width.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Number of architecture nodes L.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Architecture edge probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Seeds the architecture, initialization and training order.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Embed the sequential path (on/off).
    #[arg(long, value_parser = parse_switch)]
    pub sequential: Option<bool>,
    /// DropPath probability.
    #[arg(long)]
    pub pdrop: Option<f64>,
    /// MonteCarlo samples at inference.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// standard or linear.
    #[arg(long, value_parser = parse_node_mode)]
    pub node_mode: Option<NodeMode>,
    #[arg(long)]
    pub lr_init: Option<f64>,
    #[arg(long)]
    pub lr_min: Option<f64>,
    #[arg(long)]
    pub decay_factor: Option<f64>,
    /// Non-improving epochs before each decay.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Non-improving epochs at the minimum rate before stopping.
    #[arg(long)]
    pub stop_patience: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
#[serde(rename_all = "kebab-case", default)]
pub struct RunSettings {
    pub conv: ConvType,
    pub hidden: usize,
    pub nodes: usize,
    pub p: f64,
    pub seed: u64,
    pub sequential: bool,
    pub pdrop: f64,
    pub mc_samples: usize,
    pub node_mode: NodeMode,
    pub lr_init: f64,
    pub lr_min: f64,
    pub decay_factor: f64,
    pub patience: usize,
    pub stop_patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        let m = ModelConfig::default();
        let t = TrainConfig::default();
        RunSettings {
            conv: m.conv_type,
            hidden: m.hidden_dim,
            nodes: m.num_nodes,
            p: m.p,
            seed: m.seed,
            sequential: m.sequential_path,
            pdrop: m.p_drop,
            mc_samples: m.mc_samples,
            node_mode: m.node_mode,
            lr_init: t.lr_init,
            lr_min: t.lr_min,
            decay_factor: t.decay_factor,
            patience: t.plateau_patience,
            stop_patience: t.stop_patience,
            max_epochs: t.max_epochs,
            batch_size: t.batch_size,
        }
    }
}

impl RunSettings {
    /// Model configuration with data-dependent widths taken from `ds`.
    pub fn model_config(&self, ds: &Dataset) -> ModelConfig {
        ModelConfig {
            conv_type: self.conv,
            hidden_dim: self.hidden,
            num_nodes: self.nodes,
            p: self.p,
            seed: self.seed,
            sequential_path: self.sequential,
            p_drop: self.pdrop,
            mc_samples: self.mc_samples,
            task: ds.task,
            input_dim: ds.feature_dim(),
            output_dim: ds.output_dim(),
            edge_dim: ds.edge_feature_dim(),
            node_mode: self.node_mode,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr_init: self.lr_init,
            lr_min: self.lr_min,
            decay_factor: self.decay_factor,
            plateau_patience: self.patience,
            stop_patience: self.stop_patience,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct TrainFlags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Dataset directory written by `make-data`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory for config, metrics, checkpoint and summary.
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunFlags,
}

#[derive(Serialize, Deserialize, Debug, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct TrainSettings {
    pub data: Option<PathBuf>,
    pub run_dir: Option<PathBuf>,
    #[serde(flatten)]
    pub run: RunSettings,
}

pub const RUN_CONFIG: &str = "config.toml";
pub const RUN_METRICS: &str = "metrics.csv";
pub const RUN_CHECKPOINT: &str = "checkpoint.json";
pub const RUN_SUMMARY: &str = "summary.json";

pub fn train_settings(flags: &TrainFlags) -> Result<TrainSettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

pub fn train_cmd(s: &TrainSettings) -> Result<(), CliError> {
    let data = require(&s.data, "data")?;
    let run_dir = require(&s.run_dir, "run-dir")?;
    let ds = load_data(data)?;
    let cfg = s.run.model_config(&ds);
    let model = build_model(&cfg, s.run.seed)?;
    let tcfg = s.run.train_config();
    tcfg.validate()?;
    create_dir(run_dir)?;
    write_text(&run_dir.join(RUN_CONFIG), &echo(s)?)?;

    let start = Instant::now();
    let out = train(model, &ds, &tcfg)?;
    let secs = start.elapsed().as_secs_f64();

    write_text(&run_dir.join(RUN_METRICS), &metrics_csv(&out.metrics))?;
    save_checkpoint(&run_dir.join(RUN_CHECKPOINT), &out.best)?;
    let summary = serde_json::to_string_pretty(&out.metrics).map_err(|e| CliError::Data(e.to_string()))?;
    write_text(&run_dir.join(RUN_SUMMARY), &(summary + "\n"))?;

    let m = &out.metrics;
    eprintln!(
        "epochs run {}, best epoch {}, best val loss {}, final lr {}{}",
        m.epochs_run,
        m.best_epoch,
        m.best_val_loss,
        m.final_lr,
        if m.stopped_early { ", stopped early" } else { "" }
    );
    if let Some((name, v)) = &m.test_metric {
        eprintln!("test {name} {v}");
    }
    eprintln!("wall clock {secs:.2} s");
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

fn split(ds: &Dataset, which: Split) -> &[DomainGraph] {
    match which {
        Split::Train => &ds.train,
        Split::Val => &ds.val,
        Split::Test => &ds.test,
    }
}

fn check_data_fits(model: &RanGnnModel, ds: &Dataset) -> Result<(), CliError> {
    let c = model.config();
    if c.task != ds.task || c.input_dim != ds.feature_dim() {
        return Err(CliError::Data(format!(
            "dataset ({}, {} features) does not match the model ({}, {} features)",
            ds.task,
            ds.feature_dim(),
            c.task,
            c.input_dim
        )));
    }
    Ok(())
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct EvalFlags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Checkpoint file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub split: Option<Split>,
    /// mae, mse or accuracy (task default when absent).
    #[arg(long)]
    pub metric: Option<String>,
    /// Use MonteCarlo DropPath inference (on/off).
    #[arg(long, value_parser = parse_switch, num_args = 0..=1, default_missing_value = "on")]
    pub mc: Option<bool>,
    /// MonteCarlo samples (model default when absent).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Result CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct EvalSettings {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub split: Split,
    pub metric: Option<String>,
    pub mc: bool,
    pub samples: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            model: None,
            data: None,
            split: Split::Test,
            metric: None,
            mc: false,
            samples: None,
            seed: 0,
            out: None,
        }
    }
}

pub fn eval_settings(flags: &EvalFlags) -> Result<EvalSettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

pub fn eval_cmd(s: &EvalSettings) -> Result<(), CliError> {
    let model = load_checkpoint(require(&s.model, "model")?).map_err(CliError::data)?;
    let ds = load_data(require(&s.data, "data")?)?;
    check_data_fits(&model, &ds)?;
    let metric = match &s.metric {
        Some(m) => parse_metric(m)?,
        None => Metric::default_for(model.config().task),
    };
    let samples = s.samples.unwrap_or(model.config().mc_samples);
    let value = evaluate(&model, split(&ds, s.split), metric, s.mc.then_some((samples, s.seed)))?;
    emit(s.out.as_deref(), &format!("metric,value\n{metric},{value}\n"))
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct McInferFlags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Checkpoint file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub split: Option<Split>,
    /// MonteCarlo samples (model default when absent).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Predictions CSV (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct McInferSettings {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub split: Split,
    pub samples: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for McInferSettings {
    fn default() -> Self {
        McInferSettings {
            model: None,
            data: None,
            split: Split::Test,
            samples: None,
            seed: 0,
            out: None,
        }
    }
}

pub fn mc_infer_settings(flags: &McInferFlags) -> Result<McInferSettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

/// Writes `graph,row,output,value` rows of the averaged predictions.
pub fn mc_infer_cmd(s: &McInferSettings) -> Result<(), CliError> {
    let model = load_checkpoint(require(&s.model, "model")?).map_err(CliError::data)?;
    let ds = load_data(require(&s.data, "data")?)?;
    check_data_fits(&model, &ds)?;
    let samples = s.samples.unwrap_or(model.config().mc_samples);
    let mut csv = String::from("graph,row,output,value\n");
    for (k, g) in split(&ds, s.split).iter().enumerate() {
        let batch = GraphBatch::single(g)?;
        let pred = mc_infer(&model, &batch, samples, graph_mc_seed(s.seed, k))?;
        for r in 0..pred.rows() {
            for (c, v) in pred.row(r).iter().enumerate() {
                let _ = writeln!(csv, "{k},{r},{c},{v}");
            }
        }
    }
    emit(s.out.as_deref(), &csv)
}

#[derive(Args, Serialize, Debug)]
#[serde(rename_all = "kebab-case")]
pub struct SweepFlags {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory for the tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One axis: `p=0.2,0.4`, `p_drop=0,0.1`, `nodes=2,8` or `sequential=on,off`.
    #[arg(long)]
    pub axis: Option<String>,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// mae, mse or accuracy (task default when absent).
    #[arg(long)]
    pub metric: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunFlags,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(rename_all = "kebab-case", default)]
pub struct SweepSettings {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub axis: Option<String>,
    pub seeds: Vec<u64>,
    pub metric: Option<String>,
    #[serde(flatten)]
    pub run: RunSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            data: None,
            out: None,
            axis: None,
            seeds: vec![0, 1, 2, 3],
            metric: None,
            run: RunSettings::default(),
        }
    }
}

pub const SWEEP_ROWS: &str = "rows.csv";
pub const SWEEP_SUMMARY: &str = "summary.csv";

pub fn sweep_settings(flags: &SweepFlags) -> Result<SweepSettings, CliError> {
    resolve(flags, flags.config.as_deref())
}

pub fn sweep_cmd(s: &SweepSettings) -> Result<(), CliError> {
    let ds = load_data(require(&s.data, "data")?)?;
    let out = require(&s.out, "out")?;
    let axis = SweepAxis::parse(require(&s.axis, "axis")?).map_err(|e| CliError::Usage(e.to_string()))?;
    let metric = match &s.metric {
        Some(m) => parse_metric(m)?,
        None => Metric::default_for(ds.task),
    };
    let base = s.run.model_config(&ds);
    let table = sweep(&ds, &base, &s.run.train_config(), &axis, &s.seeds, metric)?;
    create_dir(out)?;
    write_text(&out.join(RUN_CONFIG), &echo(s)?)?;
    write_text(&out.join(SWEEP_ROWS), &table.rows_csv())?;
    write_text(&out.join(SWEEP_SUMMARY), &table.summary_csv())?;
    eprint!("{}", table.summary_csv());
    Ok(())
}
