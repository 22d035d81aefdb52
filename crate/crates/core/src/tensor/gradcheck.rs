//! Central finite-difference gradient checks.

use super::{Tape, Tensor, Var};
use crate::error::Result;

/// `(f(x + εe_k) - f(x - εe_k)) / 2ε` for every coordinate `k`.
pub fn numeric_gradient<F>(f: F, x: &Tensor, eps: f64) -> Result<Tensor>
where
    F: Fn(&Tensor) -> Result<f64>,
{
    let mut grad = Tensor::zeros(x.rows(), x.cols());
    let mut probe = x.clone();
    for k in 0..x.numel() {
        let orig = probe.data()[k];
        probe.data_mut()[k] = orig + eps;
        let up = f(&probe)?;
        probe.data_mut()[k] = orig - eps;
        let down = f(&probe)?;
        probe.data_mut()[k] = orig;
        grad.data_mut()[k] = (up - down) / (2.0 * eps);
    }
    Ok(grad)
}

fn max_relative_error(analytic: &Tensor, numeric: &Tensor) -> f64 {
    analytic
        .data()
        .iter()
        .zip(numeric.data())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

/// Compares a value-and-gradient function against central differences and
/// returns the largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn check_gradient<F>(value_and_grad: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&Tensor) -> Result<(f64, Tensor)>,
{
    let (_, analytic) = value_and_grad(x)?;
    let numeric = numeric_gradient(|t| value_and_grad(t).map(|(v, _)| v), x, eps)?;
    Ok(max_relative_error(&analytic, &numeric))
}

/// Finite-difference check of a scalar function built on a tape. `f`
/// receives a fresh tape and the variable holding `x`.
pub fn finite_diff_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let eval = |t: &Tensor, grad: bool| -> Result<(f64, Option<Tensor>)> {
        let mut tape = Tape::new();
        let xv = tape.leaf(t.clone().with_grad(grad));
        let y = f(&mut tape, xv)?;
        let value = tape.value(y).item();
        if !grad {
            return Ok((value, None));
        }
        let g = tape.backward(y)?;
        Ok((value, Some(g.get_or_zeros(xv, t))))
    };
    let (_, analytic) = eval(x, true)?;
    let numeric = numeric_gradient(|t| eval(t, false).map(|(v, _)| v), x, eps)?;
    Ok(max_relative_error(&analytic.expect("gradient requested"), &numeric))
}
