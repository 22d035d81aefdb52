//! Brute-force expectations over the Erdős–Rényi DAG distribution.
//!
//! Exact mode walks every one of the `2^(L(L-1)/2)` edge subsets and weights
//! each by `p^|S| (1-p)^(m-|S|)`. Monte-Carlo mode samples DAGs instead and
//! reports a standard error. Both evaluate statistics on the realised DAG by
//! plain per-length path counting, independently of the closed forms.
//!
//! Work is split into fixed-size chunks whose partial sums are combined in
//! chunk order, so results are bit-identical for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Largest `L` for full subset enumeration (`2^21` subsets).
pub const EXACT_MAX_NODES: usize = 7;
/// Largest `L` accepted in Monte-Carlo mode.
pub const MC_MAX_NODES: usize = 10;
/// Fewest samples accepted in Monte-Carlo mode.
pub const MC_MIN_SAMPLES: usize = 100_000;

const EXACT_CHUNK: u64 = 1 << 14;
const MC_CHUNK: usize = 1 << 12;
const SLOTS: usize = MC_MAX_NODES + 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    /// Number of `src → dst` paths.
    PathCount,
    /// Number of `src → dst` paths with the given length.
    CountOfLength(usize),
    /// `E[sum_l l N_l] / E[N]` over `src → dst` paths.
    MeanLengthRatio,
    /// Same ratio restricted to `src → dst` paths through the edge `i → j`.
    EdgeMeanLength(usize, usize),
}

impl Statistic {
    fn is_ratio(&self) -> bool {
        matches!(self, Statistic::MeanLengthRatio | Statistic::EdgeMeanLength(..))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Zero in exact mode.
    pub std_err: f64,
    /// Realisations visited (subsets in exact mode, samples otherwise).
    pub realizations: u64,
    /// Monte-Carlo only, ratio statistics only: the sample mean of the
    /// per-DAG ratio over DAGs that have at least one qualifying path, with
    /// its standard error. Differs from `value` by the ratio-of-expectations
    /// approximation.
    pub mean_of_ratio: Option<(f64, f64)>,
}

/// One sampled DAG as successor bitmasks (bit `j` of `succ[i]` ⇔ `i → j`).
struct Realization {
    n: usize,
    succ: [u16; SLOTS],
}

type Counts = [[f64; SLOTS]; SLOTS];

impl Realization {
    fn from_bits(n: usize, edges: &[(usize, usize)], bits: u64) -> Self {
        let mut succ = [0u16; SLOTS];
        for (idx, &(i, j)) in edges.iter().enumerate() {
            if bits >> idx & 1 == 1 {
                succ[i] |= 1 << j;
            }
        }
        Realization { n, succ }
    }

    fn has_edge(&self, i: usize, j: usize) -> bool {
        self.succ[i] >> j & 1 == 1
    }

    /// `c[v][l]`: paths `v → dst` with `l` nodes.
    fn paths_to(&self, dst: usize) -> Counts {
        let mut c = [[0.0; SLOTS]; SLOTS];
        c[dst][1] = 1.0;
        for v in (1..dst).rev() {
            let mut row = [0.0; SLOTS];
            for w in v + 1..=dst {
                if self.has_edge(v, w) {
                    for l in 2..SLOTS {
                        row[l] += c[w][l - 1];
                    }
                }
            }
            c[v] = row;
        }
        c
    }

    /// `c[v][l]`: paths `src → v` with `l` nodes.
    fn paths_from(&self, src: usize) -> Counts {
        let mut c = [[0.0; SLOTS]; SLOTS];
        c[src][1] = 1.0;
        for v in src + 1..=self.n {
            let mut row = [0.0; SLOTS];
            for u in src..v {
                if self.has_edge(u, v) {
                    for l in 2..SLOTS {
                        row[l] += c[u][l - 1];
                    }
                }
            }
            c[v] = row;
        }
        c
    }
}

fn edge_order(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect()
}

fn length_moments(counts: &[f64; SLOTS]) -> (f64, f64) {
    counts
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(num, den), (l, &c)| (num + l as f64 * c, den + c))
}

/// Per-DAG values of a statistic: one entry, or (numerator, denominator)
/// for ratios.
fn evaluate(stat: Statistic, r: &Realization, src: usize, dst: usize, out: &mut [f64]) {
    match stat {
        Statistic::PathCount => out[0] = r.paths_to(dst)[src].iter().sum(),
        Statistic::CountOfLength(l) => out[0] = if l < SLOTS { r.paths_to(dst)[src][l] } else { 0.0 },
        Statistic::MeanLengthRatio => {
            let (num, den) = length_moments(&r.paths_to(dst)[src]);
            out[0] = num;
            out[1] = den;
        }
        Statistic::EdgeMeanLength(i, j) => {
            if !r.has_edge(i, j) {
                out[0] = 0.0;
                out[1] = 0.0;
                return;
            }
            let head = r.paths_from(src)[i];
            let tail = r.paths_to(dst)[j];
            let mut through = [0.0; SLOTS];
            for (a, &ca) in head.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                for (b, &cb) in tail.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                    if a + b < SLOTS {
                        through[a + b] += ca * cb;
                    }
                }
            }
            let (num, den) = length_moments(&through);
            out[0] = num;
            out[1] = den;
        }
    }
}

fn validate(num_nodes: usize, p: f64, stat: Statistic, src: usize, dst: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    if num_nodes < 2 {
        return Err(Error::InvalidParameter("need at least 2 architecture nodes".into()));
    }
    if src == 0 || dst > num_nodes || src >= dst {
        return Err(Error::InvalidParameter(format!(
            "endpoints {src} → {dst} invalid for L = {num_nodes}"
        )));
    }
    if let Statistic::EdgeMeanLength(i, j) = stat {
        if i >= j || i < src || j > dst {
            return Err(Error::InvalidParameter(format!(
                "edge ({i},{j}) does not lie between {src} and {dst}"
            )));
        }
    }
    Ok(())
}

/// Expectation of `stat` over DAGs drawn with edge probability `p`.
///
/// Exact mode requires `L <= 7` unless `p` is 0 or 1, where the
/// distribution is a single DAG. Monte-Carlo mode accepts `L <= 10` with at
/// least [`MC_MIN_SAMPLES`] samples.
pub fn exact_er_expectation(
    num_nodes: usize,
    p: f64,
    stat: Statistic,
    src: usize,
    dst: usize,
    mode: OracleMode,
) -> Result<Estimate> {
    validate(num_nodes, p, stat, src, dst)?;
    let width = if stat.is_ratio() { 2 } else { 1 };
    let edges = edge_order(num_nodes);
    match mode {
        OracleMode::Exact => {
            let sums = if p == 0.0 || p == 1.0 {
                if num_nodes > MC_MAX_NODES {
                    return Err(Error::Capacity(format!("L = {num_nodes} exceeds {MC_MAX_NODES}")));
                }
                let bits = if p == 1.0 { (1u64 << edges.len()) - 1 } else { 0 };
                let mut out = vec![0.0; width];
                evaluate(stat, &Realization::from_bits(num_nodes, &edges, bits), src, dst, &mut out);
                vec![out]
            } else {
                if num_nodes > EXACT_MAX_NODES {
                    return Err(Error::Capacity(format!(
                        "exact enumeration is capped at L = {EXACT_MAX_NODES} (got {num_nodes}); \
                         use Monte-Carlo mode for L <= {MC_MAX_NODES}"
                    )));
                }
                enumerate_weighted(num_nodes, &[p], width, |r, out| evaluate(stat, r, src, dst, out))
            };
            let realizations = if p == 0.0 || p == 1.0 { 1 } else { 1u64 << edges.len() };
            let s = &sums[0];
            let value = if stat.is_ratio() {
                if s[1] == 0.0 {
                    return Err(Error::Degenerate(format!(
                        "no {src} → {dst} paths occur with p = {p}; the length ratio is undefined"
                    )));
                }
                s[0] / s[1]
            } else {
                s[0]
            };
            Ok(Estimate {
                value,
                std_err: 0.0,
                realizations,
                mean_of_ratio: None,
            })
        }
        OracleMode::MonteCarlo { samples, seed } => {
            if num_nodes > MC_MAX_NODES {
                return Err(Error::Capacity(format!(
                    "Monte-Carlo mode is capped at L = {MC_MAX_NODES} (got {num_nodes})"
                )));
            }
            if samples < MC_MIN_SAMPLES {
                return Err(Error::InvalidParameter(format!(
                    "Monte-Carlo mode needs at least {MC_MIN_SAMPLES} samples, got {samples}"
                )));
            }
            let values = sample_values(num_nodes, p, samples, seed, width, |r, out| {
                evaluate(stat, r, src, dst, out)
            });
            Ok(summarize(&values, width, stat.is_ratio(), samples))
        }
    }
}

fn sample_values<F>(num_nodes: usize, p: f64, samples: usize, seed: u64, width: usize, eval: F) -> Vec<f64>
where
    F: Fn(&Realization, &mut [f64]) + Sync,
{
    let edges = edge_order(num_nodes);
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::substream(seed, Stream::Oracle, c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut vals = vec![0.0; count * width];
            for s in 0..count {
                let mut bits = 0u64;
                for idx in 0..edges.len() {
                    if rng::uniform01(&mut rng) < p {
                        bits |= 1 << idx;
                    }
                }
                eval(
                    &Realization::from_bits(num_nodes, &edges, bits),
                    &mut vals[s * width..(s + 1) * width],
                );
            }
            vals
        })
        .collect();
    parts.concat()
}

fn summarize(values: &[f64], width: usize, ratio: bool, samples: usize) -> Estimate {
    let n = samples as f64;
    let col = |k: usize| values.iter().skip(k).step_by(width);
    if !ratio {
        let mean = col(0).sum::<f64>() / n;
        let var = col(0).map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        return Estimate {
            value: mean,
            std_err: (var / n).sqrt(),
            realizations: samples as u64,
            mean_of_ratio: None,
        };
    }
    let num_mean = col(0).sum::<f64>() / n;
    let den_mean = col(1).sum::<f64>() / n;
    let value = num_mean / den_mean;
    // Delta method for a ratio of means.
    let resid_var = col(0)
        .zip(col(1))
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let std_err = (resid_var / n).sqrt() / den_mean;

    let ratios: Vec<f64> = col(0).zip(col(1)).filter(|(_, d)| **d > 0.0).map(|(a, d)| a / d).collect();
    let mean_of_ratio = if ratios.len() > 1 {
        let m = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / m;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0);
        Some((mean, (var / m).sqrt()))
    } else {
        None
    };
    Estimate {
        value,
        std_err,
        realizations: samples as u64,
        mean_of_ratio,
    }
}

/// Sums `weight(S) * eval(S)` over every edge subset `S`, for each `p`.
fn enumerate_weighted<F>(num_nodes: usize, ps: &[f64], width: usize, eval: F) -> Vec<Vec<f64>>
where
    F: Fn(&Realization, &mut [f64]) + Sync,
{
    let edges = edge_order(num_nodes);
    let m = edges.len();
    let total = 1u64 << m;
    // weights[q][s] = p^s (1-p)^(m-s)
    let weights: Vec<Vec<f64>> = ps
        .iter()
        .map(|&p| (0..=m).map(|s| p.powi(s as i32) * (1.0 - p).powi((m - s) as i32)).collect())
        .collect();
    let chunks = total.div_ceil(EXACT_CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; ps.len() * width];
            let mut vals = vec![0.0; width];
            let end = ((c + 1) * EXACT_CHUNK).min(total);
            for bits in c * EXACT_CHUNK..end {
                let r = Realization::from_bits(num_nodes, &edges, bits);
                eval(&r, &mut vals);
                if vals.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let s = bits.count_ones() as usize;
                for (q, w) in weights.iter().enumerate() {
                    let w = w[s];
                    for (slot, &v) in acc[q * width..(q + 1) * width].iter_mut().zip(&vals) {
                        *slot += w * v;
                    }
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![0.0; ps.len() * width];
    for part in partials {
        for (s, v) in sums.iter_mut().zip(part) {
            *s += v;
        }
    }
    sums.chunks(width).map(<[f64]>::to_vec).collect()
}

/// Exact `E[N_l^(k)]` (paths from `k` to the sink with `l` nodes) for every
/// `k` and `l`, one table per `p`, from a single pass over all subsets.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub num_nodes: usize,
    pub p: f64,
    /// `expected[k][l]`, zero outside `1 <= k < L`, `2 <= l <= L-k+1`.
    expected: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn count(&self, k: usize, l: usize) -> f64 {
        self.expected.get(k).and_then(|row| row.get(l)).copied().unwrap_or(0.0)
    }

    pub fn total(&self, k: usize) -> f64 {
        self.expected[k].iter().sum()
    }

    /// `sum_l l E[N_l] / E[N]`; `None` when `E[N] = 0`.
    pub fn mean_length_ratio(&self, k: usize) -> Option<f64> {
        let den = self.total(k);
        (den > 0.0).then(|| {
            self.expected[k].iter().enumerate().map(|(l, c)| l as f64 * c).sum::<f64>() / den
        })
    }
}

pub fn er_moment_table(num_nodes: usize, ps: &[f64]) -> Result<Vec<MomentTable>> {
    if !(2..=EXACT_MAX_NODES).contains(&num_nodes) {
        return Err(Error::Capacity(format!(
            "exact enumeration needs 2 <= L <= {EXACT_MAX_NODES}, got {num_nodes}"
        )));
    }
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let slots: Vec<(usize, usize)> = (1..num_nodes)
        .flat_map(|k| (2..=num_nodes - k + 1).map(move |l| (k, l)))
        .collect();
    let sums = enumerate_weighted(num_nodes, ps, slots.len(), |r, out| {
        let c = r.paths_to(num_nodes);
        for (slot, &(k, l)) in out.iter_mut().zip(&slots) {
            *slot = c[k][l];
        }
    });
    Ok(ps
        .iter()
        .zip(sums)
        .map(|(&p, vals)| {
            let mut expected = vec![vec![0.0; num_nodes + 2]; num_nodes + 1];
            for (&(k, l), v) in slots.iter().zip(vals) {
                expected[k][l] = v;
            }
            MomentTable {
                num_nodes,
                p,
                expected,
            }
        })
        .collect())
}

/// Exact pooled path-length ratio through every edge `i → j`, for paths
/// from node 1 to the sink. `numerator` is `E[sum of lengths]` and
/// `denominator` is `E[count]` over those paths.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLengthTable {
    pub num_nodes: usize,
    pub p: f64,
    /// `(i, j, numerator, denominator)` in row-major edge order.
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl EdgeLengthTable {
    /// `None` when no path can use the edge.
    pub fn ratio(&self, i: usize, j: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.0 == i && e.1 == j)
            .and_then(|&(_, _, num, den)| (den > 0.0).then(|| num / den))
    }
}

/// Count and length-sum of paths `1 → v` (`from`) and `v → L` (`to`).
fn path_moments(r: &Realization) -> ([[f64; 2]; SLOTS], [[f64; 2]; SLOTS]) {
    let n = r.n;
    let mut from = [[0.0; 2]; SLOTS];
    from[1] = [1.0, 1.0];
    for v in 2..=n {
        for u in 1..v {
            if r.has_edge(u, v) {
                from[v][0] += from[u][0];
                from[v][1] += from[u][1] + from[u][0];
            }
        }
    }
    let mut to = [[0.0; 2]; SLOTS];
    to[n] = [1.0, 1.0];
    for v in (1..n).rev() {
        for w in v + 1..=n {
            if r.has_edge(v, w) {
                to[v][0] += to[w][0];
                to[v][1] += to[w][1] + to[w][0];
            }
        }
    }
    (from, to)
}

pub fn er_edge_length_table(num_nodes: usize, ps: &[f64]) -> Result<Vec<EdgeLengthTable>> {
    if !(2..=EXACT_MAX_NODES).contains(&num_nodes) {
        return Err(Error::Capacity(format!(
            "exact enumeration needs 2 <= L <= {EXACT_MAX_NODES}, got {num_nodes}"
        )));
    }
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let edges = edge_order(num_nodes);
    let sums = enumerate_weighted(num_nodes, ps, 2 * edges.len(), |r, out| {
        let (from, to) = path_moments(r);
        for (k, &(i, j)) in edges.iter().enumerate() {
            if r.has_edge(i, j) {
                out[2 * k] = from[i][1] * to[j][0] + from[i][0] * to[j][1];
                out[2 * k + 1] = from[i][0] * to[j][0];
            } else {
                out[2 * k] = 0.0;
                out[2 * k + 1] = 0.0;
            }
        }
    });
    Ok(ps
        .iter()
        .zip(sums)
        .map(|(&p, vals)| EdgeLengthTable {
            num_nodes,
            p,
            entries: edges
                .iter()
                .zip(vals.chunks(2))
                .map(|(&(i, j), v)| (i, j, v[0], v[1]))
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(n: usize, p: f64, stat: Statistic, src: usize, dst: usize) -> f64 {
        exact_er_expectation(n, p, stat, src, dst, OracleMode::Exact).unwrap().value
    }

    #[test]
    fn complete_dag_is_a_single_realisation() {
        assert_eq!(exact(4, 1.0, Statistic::PathCount, 1, 4), 4.0);
        let e = exact_er_expectation(9, 1.0, Statistic::PathCount, 1, 9, OracleMode::Exact).unwrap();
        assert_eq!((e.value, e.realizations), (128.0, 1));
    }

    #[test]
    fn five_nodes_half_probability() {
        // Values computed by hand from the enumeration definition:
        // E[N] = 0.5 * 1.5^3, E[N_3] = 3 * 0.25, E[len] = 0.5/1.5 * 3 + 2.
        assert!((exact(5, 0.5, Statistic::PathCount, 1, 5) - 1.6875).abs() < 1e-12);
        assert!((exact(5, 0.5, Statistic::CountOfLength(3), 1, 5) - 0.75).abs() < 1e-12);
        assert!((exact(5, 0.5, Statistic::MeanLengthRatio, 1, 5) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_case_by_hand() {
        // L = 3: paths 1→3 (edge (1,3)) and 1→2→3 (edges (1,2),(2,3)).
        let p: f64 = 0.3;
        assert!((exact(3, p, Statistic::PathCount, 1, 3) - (p + p * p)).abs() < 1e-15);
        assert!((exact(3, p, Statistic::CountOfLength(2), 1, 3) - p).abs() < 1e-15);
        let ratio = (2.0 * p + 3.0 * p * p) / (p + p * p);
        assert!((exact(3, p, Statistic::MeanLengthRatio, 1, 3) - ratio).abs() < 1e-15);
    }

    #[test]
    fn capacity_limits() {
        let err = exact_er_expectation(8, 0.5, Statistic::PathCount, 1, 8, OracleMode::Exact).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
        assert!(err.to_string().contains("Monte-Carlo"));
        let mc = OracleMode::MonteCarlo { samples: MC_MIN_SAMPLES, seed: 0 };
        assert!(matches!(
            exact_er_expectation(11, 0.5, Statistic::PathCount, 1, 11, mc),
            Err(Error::Capacity(_))
        ));
        let few = OracleMode::MonteCarlo { samples: 10, seed: 0 };
        assert!(exact_er_expectation(8, 0.5, Statistic::PathCount, 1, 8, few).is_err());
    }

    #[test]
    fn degenerate_ratio() {
        let err = exact_er_expectation(4, 0.0, Statistic::MeanLengthRatio, 1, 4, OracleMode::Exact);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn invalid_edge_statistic() {
        let r = exact_er_expectation(5, 0.5, Statistic::EdgeMeanLength(3, 2), 1, 5, OracleMode::Exact);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn monte_carlo_brackets_exact_value() {
        let mc = OracleMode::MonteCarlo { samples: MC_MIN_SAMPLES, seed: 5 };
        let est = exact_er_expectation(7, 0.5, Statistic::PathCount, 1, 7, mc).unwrap();
        let truth = exact(7, 0.5, Statistic::PathCount, 1, 7);
        assert!((est.value - truth).abs() < 4.0 * est.std_err, "{est:?} vs {truth}");
        let again = exact_er_expectation(7, 0.5, Statistic::PathCount, 1, 7, mc).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn moment_table_agrees_with_single_statistics() {
        let tables = er_moment_table(5, &[0.3, 0.8]).unwrap();
        for t in &tables {
            for k in 1..5 {
                let direct = exact(5, t.p, Statistic::PathCount, k, 5);
                assert!((t.total(k) - direct).abs() < 1e-12);
                for l in 2..=6 - k {
                    let direct = exact(5, t.p, Statistic::CountOfLength(l), k, 5);
                    assert!((t.count(k, l) - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn enumeration_is_thread_count_independent() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| er_moment_table(6, &[0.37]).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn edge_table_matches_single_edge_oracle() {
        let table = &er_edge_length_table(5, &[0.4]).unwrap()[0];
        for &(i, j, _, _) in &table.entries {
            let direct = exact_er_expectation(5, 0.4, Statistic::EdgeMeanLength(i, j), 1, 5, OracleMode::Exact)
                .unwrap()
                .value;
            assert!((table.ratio(i, j).unwrap() - direct).abs() < 1e-12, "({i},{j})");
        }
        let empty = &er_edge_length_table(4, &[0.0]).unwrap()[0];
        assert_eq!(empty.ratio(2, 3), None);
    }
}
