use std::collections::BTreeMap;

use crate::arch::{ArchDag, Edge};
use crate::error::{Error, Result};

/// Receptive-field radius distribution: `mass[l]` is the sum over
/// source→sink paths of length `l` of the product of their edge weights.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusDistribution {
    pub mass: BTreeMap<usize, f64>,
    pub normalized: bool,
}

impl RadiusDistribution {
    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn mean(&self) -> f64 {
        let total = self.total();
        self.mass.iter().map(|(l, m)| *l as f64 * m).sum::<f64>() / total
    }
}

/// Weight 1.0 (or `w`) on every edge of `dag`.
pub fn uniform_weights(dag: &ArchDag, w: f64) -> BTreeMap<Edge, f64> {
    dag.edges().map(|e| (e, w)).collect()
}

/// Weighted per-length DP from node 1 to node `L`; never enumerates paths.
pub fn radius_distribution(
    dag: &ArchDag,
    weights: &BTreeMap<Edge, f64>,
    normalized: bool,
) -> Result<RadiusDistribution> {
    for (e, &w) in weights {
        if !dag.contains(e.0, e.1) {
            return Err(Error::InvalidParameter(format!("weight given for non-edge {e}")));
        }
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::InvalidParameter(format!("weight {w} on edge {e} is outside (0, 1]")));
        }
    }
    let n = dag.num_nodes();
    // acc[v][l]: weighted mass of 1 → v paths with l nodes.
    let mut acc = vec![vec![0.0f64; n + 1]; n + 1];
    acc[1][1] = 1.0;
    for e in dag.edges() {
        // Row-major order finishes every edge into `from` (rows < from)
        // before any edge out of it.
        let w = *weights
            .get(&e)
            .ok_or_else(|| Error::InvalidParameter(format!("missing weight for edge {e}")))?;
        let (from, to) = (e.0, e.1);
        for l in 2..=n {
            let add = acc[from][l - 1] * w;
            if add != 0.0 {
                acc[to][l] += add;
            }
        }
    }
    let mut mass: BTreeMap<usize, f64> = (2..=n).map(|l| (l, acc[n][l])).collect();
    if n == 1 {
        mass.clear();
    }
    if normalized {
        let total: f64 = mass.values().sum();
        if total == 0.0 {
            return Err(Error::Degenerate("no source→sink path; cannot normalize".into()));
        }
        mass.values_mut().for_each(|m| *m /= total);
    }
    Ok(RadiusDistribution { mass, normalized })
}

/// Reads `i j w` lines (blank lines and `#` comments skipped).
pub fn parse_edge_weights(text: &str) -> Result<BTreeMap<Edge, f64>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = format!("weight line {}", lineno + 1);
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [i, j, w] = parts.as_slice() else {
            return Err(Error::parse(field, format!("expected `i j w`, got `{line}`")));
        };
        let i = i.parse::<usize>().map_err(|e| Error::parse(&field, e.to_string()))?;
        let j = j.parse::<usize>().map_err(|e| Error::parse(&field, e.to_string()))?;
        let w = w.parse::<f64>().map_err(|e| Error::parse(&field, e.to_string()))?;
        if out.insert(Edge(i, j), w).is_some() {
            return Err(Error::parse(field, format!("duplicate weight for ({i},{j})")));
        }
    }
    Ok(out)
}
