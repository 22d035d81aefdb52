use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnMode {
    Train,
    Eval,
}

/// Running statistics of one batch-norm layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnState {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

/// Batch statistics observed in a training-mode pass.
#[derive(Clone, Debug, PartialEq)]
pub struct BnStats {
    pub mean: Vec<f64>,
    /// Biased variance (what the normalization used).
    pub var: Vec<f64>,
    pub rows: usize,
}

impl BnState {
    pub fn new(dim: usize) -> Self {
        BnState {
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.running_mean.len()
    }

    /// Exponential moving update; the running variance uses the unbiased
    /// estimate and is left alone for single-row batches.
    pub fn update(&mut self, stats: &BnStats) {
        let m = BN_MOMENTUM;
        for (r, &v) in self.running_mean.iter_mut().zip(&stats.mean) {
            *r = (1.0 - m) * *r + m * v;
        }
        if stats.rows > 1 {
            let corr = stats.rows as f64 / (stats.rows - 1) as f64;
            for (r, &v) in self.running_var.iter_mut().zip(&stats.var) {
                *r = (1.0 - m) * *r + m * v * corr;
            }
        }
    }
}

/// Per-feature normalization over rows followed by `gamma ⊙ x̂ + beta`.
/// Train mode normalizes with batch statistics and returns them; eval mode
/// uses the running statistics.
pub fn batch_norm(tape: &mut Tape, h: Var, gamma: Var, beta: Var, state: &BnState, mode: BnMode) -> Result<(Var, Option<BnStats>)> {
    let (n, d) = (tape.value(h).rows(), tape.value(h).cols());
    if d != state.dim() || tape.value(gamma).shape() != [1, d] || tape.value(beta).shape() != [1, d] {
        return Err(Error::Shape {
            op: "batch_norm",
            left: tape.value(h).shape().to_vec(),
            right: vec![state.dim()],
        });
    }
    let (xhat, stats) = match mode {
        BnMode::Train => {
            let mean = tape.mean_rows(h);
            let neg = tape.scale(mean, -1.0);
            let centered = tape.add_row(h, neg)?;
            let sq = tape.mul(centered, centered)?;
            let var = tape.mean_rows(sq);
            let stats = BnStats {
                mean: tape.value(mean).data().to_vec(),
                var: tape.value(var).data().to_vec(),
                rows: n,
            };
            let std = tape.add_scalar(var, BN_EPS);
            let std = tape.sqrt(std);
            let ones = tape.constant(Tensor::full(1, d, 1.0));
            let inv = tape.div(ones, std)?;
            (tape.mul_row(centered, inv)?, Some(stats))
        }
        BnMode::Eval => {
            let shift = tape.constant(Tensor::matrix(1, d, state.running_mean.iter().map(|m| -m).collect())?);
            let inv = tape.constant(Tensor::matrix(1, d, state.running_var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect())?);
            let centered = tape.add_row(h, shift)?;
            (tape.mul_row(centered, inv)?, None)
        }
    };
    let scaled = tape.mul_row(xhat, gamma)?;
    Ok((tape.add_row(scaled, beta)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::finite_diff_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn run(h: &Tensor, state: &BnState, mode: BnMode) -> (Tensor, Option<BnStats>) {
        let d = h.cols();
        let mut t = Tape::new();
        let hv = t.constant(h.clone());
        let g = t.constant(Tensor::full(1, d, 1.0));
        let b = t.constant(Tensor::zeros(1, d));
        let (out, stats) = batch_norm(&mut t, hv, g, b, state, mode).unwrap();
        (t.value(out).clone(), stats)
    }

    #[test]
    fn constant_column_is_zero() {
        let h = Tensor::matrix(4, 1, vec![3.0; 4]).unwrap();
        let (out, _) = run(&h, &BnState::new(1), BnMode::Train);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardized_column_unchanged() {
        // unit variance once the epsilon is included in the denominator
        let a = (1.0 - BN_EPS).sqrt();
        let h = Tensor::matrix(4, 1, vec![-a, a, -a, a]).unwrap();
        let (out, _) = run(&h, &BnState::new(1), BnMode::Train);
        assert!(out.max_abs_diff(&h) < 1e-6);
        // a plain ±1 column moves only by the epsilon shrinkage
        let h = Tensor::matrix(4, 1, vec![-1.0, 1.0, -1.0, 1.0]).unwrap();
        let (out, stats) = run(&h, &BnState::new(1), BnMode::Eval);
        assert!(stats.is_none());
        assert!(out.max_abs_diff(&h) < 1e-5);
    }

    #[test]
    fn matches_two_pass_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (n, d) = (9, 3);
        let h = Tensor::matrix(n, d, (0..n * d).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
        let (out, stats) = run(&h, &BnState::new(d), BnMode::Train);
        let stats = stats.unwrap();
        for c in 0..d {
            let col: Vec<f64> = (0..n).map(|r| h.get(r, c)).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((stats.mean[c] - mean).abs() < 1e-10);
            assert!((stats.var[c] - var).abs() < 1e-10);
            for r in 0..n {
                let expect = (col[r] - mean) / (var + BN_EPS).sqrt();
                assert!((out.get(r, c) - expect).abs() < 1e-10);
            }
        }
        let mut state = BnState::new(d);
        state.update(&stats);
        let corr = n as f64 / (n - 1) as f64;
        assert!((state.running_mean[0] - 0.1 * stats.mean[0]).abs() < 1e-12);
        assert!((state.running_var[0] - (0.9 + 0.1 * stats.var[0] * corr)).abs() < 1e-12);
    }

    #[test]
    fn train_mode_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = Tensor::matrix(5, 2, (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let w = Tensor::matrix(5, 2, (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let state = BnState::new(2);
        let err = finite_diff_check(
            |t, x| {
                let g = t.constant(Tensor::matrix(1, 2, vec![1.5, 0.5])?);
                let b = t.constant(Tensor::matrix(1, 2, vec![0.1, -0.2])?);
                let (y, _) = batch_norm(t, x, g, b, &state, BnMode::Train)?;
                let wv = t.constant(w.clone());
                let p = t.mul(y, wv)?;
                Ok(t.sum(p))
            },
            &h,
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn rejects_width_mismatch() {
        let h = Tensor::zeros(2, 3);
        let mut t = Tape::new();
        let hv = t.constant(h);
        let g = t.constant(Tensor::full(1, 2, 1.0));
        let b = t.constant(Tensor::zeros(1, 2));
        assert!(batch_norm(&mut t, hv, g, b, &BnState::new(2), BnMode::Eval).is_err());
    }
}
