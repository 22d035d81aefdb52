use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::arch::ArchDag;
use crate::error::{Error, Result};

/// Exact number of `src → dst` paths per length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathLengthHistogram {
    pub src: usize,
    pub dst: usize,
    /// Non-zero counts only, keyed by length.
    pub counts: BTreeMap<usize, BigUint>,
}

impl PathLengthHistogram {
    pub fn count(&self, length: usize) -> BigUint {
        self.counts.get(&length).cloned().unwrap_or_default()
    }

    pub fn total(&self) -> BigUint {
        self.counts.values().sum()
    }

    /// Longest length a `src → dst` path can have.
    pub fn max_length(&self) -> usize {
        self.dst - self.src + 1
    }

    /// Counts as `f64` for every length `2..=max_length`, zeros included.
    pub fn dense_f64(&self) -> Vec<(usize, f64)> {
        (2..=self.max_length())
            .map(|l| {
                let c = self.count(l);
                (l, c.to_string().parse::<f64>().unwrap_or(f64::INFINITY))
            })
            .collect()
    }
}

/// Per-length path counts by dynamic programming in index order.
///
/// `counts[v][l]` holds the number of `src → v` paths with `l` nodes; the
/// source itself carries the single one-node path. Every edge `u → v` shifts
/// the counts at `u` up by one length.
pub fn path_length_histogram(dag: &ArchDag, src: usize, dst: usize) -> Result<PathLengthHistogram> {
    dag.check_node(src, "source")?;
    dag.check_node(dst, "destination")?;
    if src >= dst {
        return Err(Error::InvalidParameter(format!("source {src} must precede destination {dst}")));
    }
    let span = dst - src + 1;
    let preds = dag.predecessor_lists();
    let mut counts: Vec<Vec<BigUint>> = vec![vec![BigUint::zero(); span + 1]; span];
    counts[0][1] = BigUint::one();
    for v in src + 1..=dst {
        let mut row = vec![BigUint::zero(); span + 1];
        for &u in preds[v].iter().filter(|&&u| u >= src) {
            let from = &counts[u - src];
            for l in 2..=span {
                if !from[l - 1].is_zero() {
                    row[l] += &from[l - 1];
                }
            }
        }
        counts[v - src] = row;
    }
    let last = counts.pop().expect("span >= 2");
    Ok(PathLengthHistogram {
        src,
        dst,
        counts: last
            .into_iter()
            .enumerate()
            .filter(|(l, c)| *l >= 2 && !c.is_zero())
            .collect(),
    })
}

/// All `src → dst` paths as node sequences, depth-first in ascending
/// successor order. Fails once more than `limit` paths exist.
pub fn enumerate_paths(dag: &ArchDag, src: usize, dst: usize, limit: usize) -> Result<Vec<Vec<usize>>> {
    dag.check_node(src, "source")?;
    dag.check_node(dst, "destination")?;
    let succs = dag.successor_lists();
    let mut out = Vec::new();
    let mut stack = vec![src];
    fn walk(
        succs: &[Vec<usize>],
        dst: usize,
        limit: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        let v = *stack.last().unwrap();
        if v == dst {
            if out.len() == limit {
                return Err(Error::Capacity(format!("more than {limit} paths to enumerate")));
            }
            out.push(stack.clone());
            return Ok(());
        }
        for &w in succs[v].iter().filter(|&&w| w <= dst) {
            stack.push(w);
            walk(succs, dst, limit, stack, out)?;
            stack.pop();
        }
        Ok(())
    }
    walk(&succs, dst, limit, &mut stack, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::generate_er_dag;

    fn hist_u64(h: &PathLengthHistogram) -> Vec<(usize, u64)> {
        h.counts.iter().map(|(l, c)| (*l, c.to_string().parse().unwrap())).collect()
    }

    #[test]
    fn complete_dag_of_four() {
        let h = path_length_histogram(&ArchDag::complete(4).unwrap(), 1, 4).unwrap();
        assert_eq!(hist_u64(&h), vec![(2, 1), (3, 2), (4, 1)]);
        assert_eq!(h.total(), BigUint::from(4u32));
    }

    #[test]
    fn chain_has_single_path() {
        let h = path_length_histogram(&ArchDag::chain(3).unwrap(), 1, 3).unwrap();
        assert_eq!(hist_u64(&h), vec![(3, 1)]);
    }

    #[test]
    fn rejects_reversed_endpoints() {
        let dag = ArchDag::complete(4).unwrap();
        assert!(matches!(path_length_histogram(&dag, 3, 3), Err(Error::InvalidParameter(_))));
        assert!(matches!(path_length_histogram(&dag, 4, 2), Err(Error::InvalidParameter(_))));
        assert!(path_length_histogram(&dag, 1, 5).is_err());
    }

    #[test]
    fn big_counts_do_not_overflow() {
        // 2^(L-2) paths exceed u64 at L = 70.
        let h = path_length_histogram(&ArchDag::complete(70).unwrap(), 1, 70).unwrap();
        assert_eq!(h.total(), BigUint::one() << 68u32);
    }

    #[test]
    fn interior_endpoints() {
        let dag = ArchDag::complete(6).unwrap();
        let h = path_length_histogram(&dag, 2, 5).unwrap();
        // Nodes 3 and 4 may each be skipped: binom(2, l - 2).
        assert_eq!(hist_u64(&h), vec![(2, 1), (3, 2), (4, 1)]);
    }

    #[test]
    fn enumeration_matches_dp_on_seeded_dag() {
        let dag = generate_er_dag(6, 0.5, 11).unwrap();
        let paths = enumerate_paths(&dag, 1, 6, 1 << 20).unwrap();
        let mut by_len = BTreeMap::new();
        for p in &paths {
            *by_len.entry(p.len()).or_insert(0u64) += 1;
        }
        let h = path_length_histogram(&dag, 1, 6).unwrap();
        assert_eq!(hist_u64(&h), by_len.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn enumeration_respects_limit() {
        let dag = ArchDag::complete(8).unwrap();
        assert_eq!(enumerate_paths(&dag, 1, 8, 64).unwrap().len(), 64);
        assert!(matches!(enumerate_paths(&dag, 1, 8, 63), Err(Error::Capacity(_))));
    }
}
