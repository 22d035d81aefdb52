//! Plain-text architecture files.
//!
//! ```text
//! L=4
//! p=0.6
//! seed=7
//! sequential=1
//! 1 2
//! 1 4
//! 2 3
//! 3 4
//! ```
//!
//! Header keys may appear in any order but each exactly once; edge lines
//! follow and are written in ascending row-major order.

use std::fmt::Write as _;

use super::{ArchDag, Edge};
use crate::error::{Error, Result};

pub fn serialize(dag: &ArchDag) -> String {
    let mut out = String::new();
    writeln!(out, "L={}", dag.num_nodes).unwrap();
    writeln!(out, "p={}", dag.gen_p).unwrap();
    writeln!(out, "seed={}", dag.seed).unwrap();
    writeln!(out, "sequential={}", u8::from(dag.sequential_embedded)).unwrap();
    for e in dag.edges() {
        writeln!(out, "{} {}", e.0, e.1).unwrap();
    }
    out
}

pub fn deserialize(text: &str) -> Result<ArchDag> {
    let mut num_nodes: Option<usize> = None;
    let mut p: Option<f64> = None;
    let mut seed: Option<u64> = None;
    let mut sequential: Option<bool> = None;
    let mut edges = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            if !edges.is_empty() {
                return Err(Error::parse(key.trim(), format!("header key after edge list (line {})", lineno + 1)));
            }
            let (key, value) = (key.trim(), value.trim());
            let dup = || Error::parse(key, "given more than once");
            match key {
                "L" => {
                    let v = value.parse::<usize>().map_err(|e| Error::parse("L", e.to_string()))?;
                    if v == 0 {
                        return Err(Error::parse("L", "must be positive"));
                    }
                    if num_nodes.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                "p" => {
                    let v = value.parse::<f64>().map_err(|e| Error::parse("p", e.to_string()))?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::parse("p", format!("{v} is outside [0, 1]")));
                    }
                    if p.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                "seed" => {
                    let v = value.parse::<u64>().map_err(|e| Error::parse("seed", e.to_string()))?;
                    if seed.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                "sequential" => {
                    let v = match value {
                        "0" => false,
                        "1" => true,
                        other => return Err(Error::parse("sequential", format!("expected 0 or 1, got `{other}`"))),
                    };
                    if sequential.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                other => return Err(Error::parse(other, "unknown header key")),
            }
            continue;
        }
        let field = format!("edge line {}", lineno + 1);
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(field, format!("expected `i j`, got `{line}`")));
        };
        let i = a.parse::<usize>().map_err(|e| Error::parse(&field, e.to_string()))?;
        let j = b.parse::<usize>().map_err(|e| Error::parse(&field, e.to_string()))?;
        edges.push((field, i, j));
    }

    let num_nodes = num_nodes.ok_or_else(|| Error::parse("L", "missing"))?;
    let p = p.ok_or_else(|| Error::parse("p", "missing"))?;
    let seed = seed.ok_or_else(|| Error::parse("seed", "missing"))?;
    let sequential = sequential.ok_or_else(|| Error::parse("sequential", "missing"))?;

    let mut dag = ArchDag::empty(num_nodes)?;
    for (field, i, j) in edges {
        if i == 0 || j == 0 || i > num_nodes || j > num_nodes {
            return Err(Error::parse(field, format!("edge ({i},{j}) has a node outside 1..={num_nodes}")));
        }
        if i >= j {
            return Err(Error::parse(field, format!("edge ({i},{j}) violates i < j")));
        }
        if !dag.edges.insert(Edge(i, j)) {
            return Err(Error::parse(field, format!("duplicate edge ({i},{j})")));
        }
    }
    dag.with_metadata(p, seed, sequential)
        .map_err(|e| Error::parse("sequential", e.to_string()))
}
