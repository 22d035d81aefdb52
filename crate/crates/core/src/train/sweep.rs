use rayon::prelude::*;

use super::{evaluate, train, Metric, TrainConfig};
use crate::error::{Error, Result};
use crate::gnn::Dataset;
use crate::model::{build_model, ModelConfig};

/// The configuration axis a sweep varies.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepAxis {
    P(Vec<f64>),
    PDrop(Vec<f64>),
    Nodes(Vec<usize>),
    Sequential(Vec<bool>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::P(_) => "p",
            SweepAxis::PDrop(_) => "p_drop",
            SweepAxis::Nodes(_) => "nodes",
            SweepAxis::Sequential(_) => "sequential",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::P(v) | SweepAxis::PDrop(v) => v.len(),
            SweepAxis::Nodes(v) => v.len(),
            SweepAxis::Sequential(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, k: usize) -> String {
        match self {
            SweepAxis::P(v) | SweepAxis::PDrop(v) => v[k].to_string(),
            SweepAxis::Nodes(v) => v[k].to_string(),
            SweepAxis::Sequential(v) => if v[k] { "on" } else { "off" }.to_string(),
        }
    }

    fn apply(&self, k: usize, base: &ModelConfig) -> ModelConfig {
        let mut c = base.clone();
        match self {
            SweepAxis::P(v) => c.p = v[k],
            SweepAxis::PDrop(v) => c.p_drop = v[k],
            SweepAxis::Nodes(v) => c.num_nodes = v[k],
            SweepAxis::Sequential(v) => c.sequential_path = v[k],
        }
        c
    }

    /// Parses `p=0.2,0.4`, `p_drop=…`, `nodes=2,8` or `sequential=on,off`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::parse("axis", format!("expected <name>=<v1>,<v2>,… in '{spec}'")))?;
        let items: Vec<&str> = values.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if items.is_empty() {
            return Err(Error::parse("axis", "no values"));
        }
        let floats = || -> Result<Vec<f64>> {
            items
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::parse("axis", format!("'{s}': {e}"))))
                .collect()
        };
        Ok(match name.trim() {
            "p" => SweepAxis::P(floats()?),
            "p_drop" => SweepAxis::PDrop(floats()?),
            "nodes" | "L" => SweepAxis::Nodes(
                items
                    .iter()
                    .map(|s| s.parse::<usize>().map_err(|e| Error::parse("axis", format!("'{s}': {e}"))))
                    .collect::<Result<_>>()?,
            ),
            "sequential" => SweepAxis::Sequential(
                items
                    .iter()
                    .map(|s| match *s {
                        "on" | "true" | "1" => Ok(true),
                        "off" | "false" | "0" => Ok(false),
                        other => Err(Error::parse("axis", format!("'{other}' is not on/off"))),
                    })
                    .collect::<Result<_>>()?,
            ),
            other => return Err(Error::parse("axis", format!("unknown axis '{other}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis_value: String,
    pub seed: u64,
    pub metric: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub axis_value: String,
    pub mean: f64,
    pub sd: f64,
    pub runs: usize,
    /// `(mean - baseline mean) / baseline sd`, the baseline being the first
    /// axis value; absent when the baseline has no spread.
    pub baseline_sds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axis: String,
    pub metric: Metric,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SweepSummary>,
}

impl SweepTable {
    pub fn rows_csv(&self) -> String {
        let mut s = String::from("axis_value,seed,metric\n");
        for r in &self.rows {
            s += &format!("{},{},{}\n", r.axis_value, r.seed, r.metric);
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("axis_value,mean,sd,runs,baseline_sds\n");
        for r in &self.summary {
            let dev = r.baseline_sds.map_or(String::new(), |d| d.to_string());
            s += &format!("{},{},{},{},{}\n", r.axis_value, r.mean, r.sd, r.runs, dev);
        }
        s
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Trains one model per (axis value, seed) and scores the best checkpoint
/// on the validation split. The seed drives the architecture, the weight
/// initialization and the training stream (each on its own sub-stream).
/// Cells run in parallel; rows come back in (value, seed) order.
pub fn sweep(ds: &Dataset, base: &ModelConfig, tcfg: &TrainConfig, axis: &SweepAxis, seeds: &[u64], metric: Metric) -> Result<SweepTable> {
    if axis.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one value and one seed".into()));
    }
    if !metric.fits(base.task) {
        return Err(Error::InvalidParameter(format!("metric {metric} does not fit task {}", base.task)));
    }
    for k in 0..axis.len() {
        axis.apply(k, base).validate()?;
    }
    let cells: Vec<(usize, u64)> = (0..axis.len()).flat_map(|k| seeds.iter().map(move |&s| (k, s))).collect();
    let rows = cells
        .par_iter()
        .map(|&(k, seed)| {
            let mut c = axis.apply(k, base);
            c.seed = seed;
            let model = build_model(&c, seed)?;
            let t = TrainConfig { seed, ..tcfg.clone() };
            let out = train(model, ds, &t)?;
            Ok(SweepRow {
                axis_value: axis.label(k),
                seed,
                metric: evaluate(&out.best, &ds.val, metric, None)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary: Vec<SweepSummary> = Vec::new();
    for (k, chunk) in rows.chunks(seeds.len()).enumerate() {
        let vals: Vec<f64> = chunk.iter().map(|r| r.metric).collect();
        let (mean, sd) = mean_sd(&vals);
        summary.push(SweepSummary {
            axis_value: axis.label(k),
            mean,
            sd,
            runs: vals.len(),
            baseline_sds: None,
        });
    }
    let (bm, bsd) = (summary[0].mean, summary[0].sd);
    for s in &mut summary {
        s.baseline_sds = (bsd > 0.0).then(|| (s.mean - bm) / bsd);
    }
    Ok(SweepTable {
        axis: axis.name().to_string(),
        metric,
        rows,
        summary,
    })
}
