use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// `n choose k` in double precision (exact while the result fits 53 bits).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Expected path statistics from node `k` to the sink of an Erdős–Rényi DAG.
#[derive(Clone, Debug, PartialEq)]
pub struct PathExpectations {
    /// `E[N_l] = C(L-k-1, l-2) p^(l-1)` for `2 <= l <= L-k+1`.
    pub by_length: BTreeMap<usize, f64>,
    /// `E[N] = p (1+p)^(L-k-1)`.
    pub total: f64,
    /// `p/(1+p) (L-k-1) + 2`, the ratio `sum_l l E[N_l] / E[N]`.
    pub mean_length: f64,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    Ok(())
}

pub fn expected_path_stats(num_nodes: usize, p: f64, k: usize) -> Result<PathExpectations> {
    check_p(p)?;
    if k == 0 || k >= num_nodes {
        return Err(Error::InvalidParameter(format!(
            "start node {k} must lie in 1..{num_nodes}"
        )));
    }
    let free = num_nodes - k - 1;
    let by_length = (2..=num_nodes - k + 1)
        .map(|l| (l, binomial(free, l - 2) * p.powi(l as i32 - 1)))
        .collect();
    Ok(PathExpectations {
        by_length,
        total: p * (1.0 + p).powi(free as i32),
        mean_length: p / (1.0 + p) * free as f64 + 2.0,
    })
}

/// `p/(1+p) (L - (j-i) - 3) + 4`: average source→sink path length through
/// the edge `i → j`.
pub fn expected_edge_path_length(num_nodes: usize, p: f64, i: usize, j: usize) -> Result<f64> {
    check_p(p)?;
    if i >= j {
        return Err(Error::InvalidParameter(format!("edge ({i},{j}) does not satisfy i < j")));
    }
    if i == 0 || j > num_nodes {
        return Err(Error::InvalidParameter(format!(
            "edge ({i},{j}) has a node outside 1..={num_nodes}"
        )));
    }
    let gap = num_nodes as f64 - (j - i) as f64 - 3.0;
    Ok(p / (1.0 + p) * gap + 4.0)
}
