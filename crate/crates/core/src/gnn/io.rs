//! Plain-text dataset files: one file per graph plus an `index.txt`
//! manifest naming the task and the files of each split.
//!
//! Graph file:
//! ```text
//! n=3
//! feat_dim=1
//! edge_feat_dim=0
//! target=node 1
//! [edges]
//! 0 1
//! 1 2
//! [features]
//! 0.5
//! -1.25
//! 2
//! [target]
//! 0.1
//! 0.2
//! 0.3
//! ```
//! `target=graph-value K` is followed by one line of K values and
//! `target=graph-class` by one line holding the class. Edge features, when
//! present, are listed one row per directed edge in `[edge_features]`.

use std::fs;
use std::path::Path;

use super::graph::{DomainGraph, Target};
use super::readout::Task;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Graphs of the train / validation / test splits.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub train: Vec<DomainGraph>,
    pub val: Vec<DomainGraph>,
    pub test: Vec<DomainGraph>,
}

impl Dataset {
    pub fn feature_dim(&self) -> usize {
        self.train.first().map_or(0, DomainGraph::feature_dim)
    }

    pub fn edge_feature_dim(&self) -> usize {
        self.train
            .first()
            .and_then(|g| g.edge_features.as_ref())
            .map_or(0, Tensor::cols)
    }

    /// Output width implied by the targets (number of classes for
    /// classification).
    pub fn output_dim(&self) -> usize {
        let all = self.train.iter().chain(&self.val).chain(&self.test);
        match self.task {
            Task::GraphClassification => all
                .filter_map(|g| match g.target {
                    Target::GraphClass(c) => Some(c + 1),
                    _ => None,
                })
                .max()
                .unwrap_or(1),
            _ => match self.train.first().map(|g| &g.target) {
                Some(Target::Node(t)) => t.cols(),
                Some(Target::GraphValue(v)) => v.len(),
                _ => 1,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.feature_dim();
        let de = self.edge_feature_dim();
        for g in self.train.iter().chain(&self.val).chain(&self.test) {
            g.validate()?;
            if !self.task.accepts(&g.target) {
                return Err(Error::InvalidParameter(format!("graph target does not fit task {}", self.task)));
            }
            if g.feature_dim() != d || g.edge_features.as_ref().map_or(0, Tensor::cols) != de {
                return Err(Error::InvalidParameter("graphs disagree on feature widths".into()));
            }
        }
        Ok(())
    }
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_graph(g: &DomainGraph) -> String {
    let mut s = String::new();
    let de = g.edge_features.as_ref().map_or(0, Tensor::cols);
    s += &format!("n={}\nfeat_dim={}\nedge_feat_dim={}\n", g.n(), g.feature_dim(), de);
    s += &match &g.target {
        Target::Node(t) => format!("target=node {}\n", t.cols()),
        Target::GraphValue(v) => format!("target=graph-value {}\n", v.len()),
        Target::GraphClass(_) => "target=graph-class\n".to_string(),
    };
    s += "[edges]\n";
    for (u, v) in g.undirected_edges() {
        s += &format!("{u} {v}\n");
    }
    s += "[features]\n";
    for r in 0..g.n() {
        s += &fmt_row(g.node_features.row(r));
        s.push('\n');
    }
    if let Some(e) = &g.edge_features {
        s += "[edge_features]\n";
        for r in 0..e.rows() {
            s += &fmt_row(e.row(r));
            s.push('\n');
        }
    }
    s += "[target]\n";
    match &g.target {
        Target::Node(t) => {
            for r in 0..t.rows() {
                s += &fmt_row(t.row(r));
                s.push('\n');
            }
        }
        Target::GraphValue(v) => {
            s += &fmt_row(v);
            s.push('\n');
        }
        Target::GraphClass(c) => s += &format!("{c}\n"),
    }
    s
}

fn parse_usize(field: &str, v: &str) -> Result<usize> {
    v.trim().parse().map_err(|e| Error::parse(field, format!("'{v}': {e}")))
}

fn parse_floats(field: &str, line: &str, width: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::parse(field, format!("'{t}': {e}"))))
        .collect::<Result<_>>()?;
    if vals.len() != width {
        return Err(Error::parse(field, format!("expected {width} values, found {}", vals.len())));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::parse(field, "non-finite value"));
    }
    Ok(vals)
}

pub fn read_graph(text: &str) -> Result<DomainGraph> {
    let mut n = None;
    let mut d = None;
    let mut de = 0;
    let mut target_kind: Option<(String, usize)> = None;
    let mut section = String::new();
    let mut edges = Vec::new();
    let mut feats: Vec<Vec<f64>> = Vec::new();
    let mut efeats: Vec<Vec<f64>> = Vec::new();
    let mut target_rows: Vec<String> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            section = line.trim_matches(|c| c == '[' || c == ']').to_string();
            continue;
        }
        match section.as_str() {
            "" => {
                let (k, v) = line.split_once('=').ok_or_else(|| Error::parse("header", format!("line {}: '{line}'", lineno + 1)))?;
                match k.trim() {
                    "n" => n = Some(parse_usize("n", v)?),
                    "feat_dim" => d = Some(parse_usize("feat_dim", v)?),
                    "edge_feat_dim" => de = parse_usize("edge_feat_dim", v)?,
                    "target" => {
                        let mut parts = v.split_whitespace();
                        let kind = parts.next().unwrap_or("").to_string();
                        let width = match parts.next() {
                            Some(w) => parse_usize("target", w)?,
                            None => 1,
                        };
                        target_kind = Some((kind, width));
                    }
                    other => return Err(Error::parse(other, "unknown key")),
                }
            }
            "edges" => {
                let field = format!("edge line {}", lineno + 1);
                let mut it = line.split_whitespace();
                let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                    return Err(Error::parse(&field, "expected two indices"));
                };
                edges.push((parse_usize(&field, a)?, parse_usize(&field, b)?));
            }
            "features" => feats.push(parse_floats("features", line, d.ok_or_else(|| Error::parse("feat_dim", "missing"))?)?),
            "edge_features" => efeats.push(parse_floats("edge_features", line, de)?),
            "target" => target_rows.push(line.to_string()),
            other => return Err(Error::parse(other, "unknown section")),
        }
    }
    let n = n.ok_or_else(|| Error::parse("n", "missing"))?;
    let d = d.ok_or_else(|| Error::parse("feat_dim", "missing"))?;
    if feats.len() != n {
        return Err(Error::parse("features", format!("expected {n} rows, found {}", feats.len())));
    }
    let (kind, width) = target_kind.ok_or_else(|| Error::parse("target", "missing"))?;
    let target = match kind.as_str() {
        "node" => {
            if target_rows.len() != n {
                return Err(Error::parse("target", format!("expected {n} rows, found {}", target_rows.len())));
            }
            let rows = target_rows.iter().map(|l| parse_floats("target", l, width)).collect::<Result<Vec<_>>>()?;
            Target::Node(Tensor::from_rows(&rows)?)
        }
        "graph-value" => match target_rows.as_slice() {
            [l] => Target::GraphValue(parse_floats("target", l, width)?),
            _ => return Err(Error::parse("target", "expected one row")),
        },
        "graph-class" => match target_rows.as_slice() {
            [l] => Target::GraphClass(parse_usize("target", l)?),
            _ => return Err(Error::parse("target", "expected one row")),
        },
        other => return Err(Error::parse("target", format!("unknown kind '{other}'"))),
    };
    let x = Tensor::from_rows(&feats).map_err(|_| Error::parse("features", "ragged rows"))?;
    if x.cols() != d {
        return Err(Error::parse("features", "width mismatch"));
    }
    let g = DomainGraph::from_edges(n, &edges, x, target).map_err(|e| Error::parse("edges", e.to_string()))?;
    if de > 0 {
        if efeats.len() != g.num_directed_edges() {
            return Err(Error::parse(
                "edge_features",
                format!("expected {} rows, found {}", g.num_directed_edges(), efeats.len()),
            ));
        }
        return g.with_edge_features(Tensor::from_rows(&efeats)?);
    }
    Ok(g)
}

const SPLITS: [&str; 3] = ["train", "val", "test"];

/// Writes `index.txt` and one `<split>_<k>.txt` per graph under `dir`.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut index = format!("task={}\n", ds.task);
    for (name, graphs) in SPLITS.iter().zip([&ds.train, &ds.val, &ds.test]) {
        for (k, g) in graphs.iter().enumerate() {
            let file = format!("{name}_{k:05}.txt");
            let path = dir.join(&file);
            fs::write(&path, write_graph(g)).map_err(|e| Error::io(&path, e))?;
            index += &format!("{name} {file}\n");
        }
    }
    let path = dir.join("index.txt");
    fs::write(&path, index).map_err(|e| Error::io(&path, e))
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join("index.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut task = None;
    let mut splits: [Vec<DomainGraph>; 3] = Default::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(t) = line.strip_prefix("task=") {
            task = Some(t.parse::<Task>().map_err(|e| Error::parse("task", e.to_string()))?);
            continue;
        }
        let field = format!("index line {}", lineno + 1);
        let (split, file) = line.split_once(' ').ok_or_else(|| Error::parse(&field, "expected '<split> <file>'"))?;
        let slot = SPLITS
            .iter()
            .position(|s| *s == split)
            .ok_or_else(|| Error::parse(&field, format!("unknown split '{split}'")))?;
        let gpath = dir.join(file.trim());
        let gtext = fs::read_to_string(&gpath).map_err(|e| Error::io(&gpath, e))?;
        let g = read_graph(&gtext).map_err(|e| Error::parse(gpath.display().to_string(), e.to_string()))?;
        splits[slot].push(g);
    }
    let [train, val, test] = splits;
    let ds = Dataset {
        task: task.ok_or_else(|| Error::parse("task", "missing"))?,
        train,
        val,
        test,
    };
    if ds.train.is_empty() {
        return Err(Error::parse("train", "no training graphs"));
    }
    ds.validate()?;
    Ok(ds)
}
