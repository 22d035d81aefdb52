//! Operation tape.
//!
//! Each primitive evaluates eagerly, appends its result to the tape and
//! returns a [`Var`] handle. Operands always precede their results, so
//! [`Tape::backward`] is a single reverse sweep.

use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    ScalarMul(Var, Var),
    ConcatCols(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Sqrt(Var),
    Aggregate { input: Var, sets: Vec<Vec<usize>>, mean: bool },
    Gather { input: Var, idx: Vec<usize> },
    ScatterSum { input: Var, idx: Vec<usize> },
    MeanRows(Var),
    SumAll(Var),
    Mse { pred: Var, target: Tensor },
    CrossEntropy { logits: Var, labels: Vec<usize> },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    nan_check: bool,
}

/// Gradients of a scalar with respect to every leaf that required one.
#[derive(Debug, Default)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient, or zeros shaped like `like` if `v` did not influence the
    /// output.
    pub fn get_or_zeros(&self, v: Var, like: &Tensor) -> Tensor {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(like.rows(), like.cols()))
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Shape {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn col_sums(t: &Tensor) -> Tensor {
    let c = t.cols();
    let mut out = Tensor::zeros(1, c);
    for r in 0..t.rows() {
        for (o, v) in out.data_mut().iter_mut().zip(t.row(r)) {
            *o += v;
        }
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// A tape that debug-asserts every recorded value is finite.
    pub fn with_nan_check() -> Self {
        Tape {
            nodes: Vec::new(),
            nan_check: true,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        debug_assert!(
            !self.nan_check || value.all_finite(),
            "non-finite value produced by {op:?}"
        );
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Records `t`; it receives a gradient iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let needs = t.requires_grad();
        self.push(t, Op::Leaf, needs)
    }

    pub fn param(&mut self, t: Tensor) -> Var {
        self.leaf(t.with_grad(true))
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.leaf(t.with_grad(false))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::MatMul(a, b), ng))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(op, ta, tb));
        }
        Ok(())
    }

    fn binary(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let out = self.value(a).zip_map(self.value(b), f);
        let ng = self.ng(a) || self.ng(b);
        self.push(out, op, ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        Ok(self.binary(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        Ok(self.binary(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        Ok(self.binary(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    /// Elementwise quotient.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("div", a, b)?;
        Ok(self.binary(a, b, Op::Div(a, b), |x, y| x / y))
    }

    fn row_operand(&self, op: &'static str, a: Var, row: Var) -> Result<()> {
        let (ta, tr) = (self.value(a), self.value(row));
        if tr.rows() != 1 || tr.cols() != ta.cols() {
            return Err(shape_err(op, ta, tr));
        }
        Ok(())
    }

    /// `a + row`, with the `1 × d` row broadcast over every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.row_operand("add_row", a, row)?;
        let (ta, tr) = (self.value(a), self.value(row));
        let c = ta.cols();
        let mut out = ta.clone().with_grad(false);
        for (k, v) in out.data_mut().iter_mut().enumerate() {
            *v += tr.data()[k % c];
        }
        let ng = self.ng(a) || self.ng(row);
        Ok(self.push(out, Op::AddRow(a, row), ng))
    }

    /// `a ⊙ row`, with the `1 × d` row broadcast over every row of `a`.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.row_operand("mul_row", a, row)?;
        let (ta, tr) = (self.value(a), self.value(row));
        let c = ta.cols();
        let mut out = ta.clone().with_grad(false);
        for (k, v) in out.data_mut().iter_mut().enumerate() {
            *v *= tr.data()[k % c];
        }
        let ng = self.ng(a) || self.ng(row);
        Ok(self.push(out, Op::MulRow(a, row), ng))
    }

    /// Multiplication by a constant.
    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).scale(c);
        let ng = self.ng(a);
        self.push(out, Op::Scale(a, c), ng)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|v| v + c);
        let ng = self.ng(a);
        self.push(out, Op::AddScalar(a), ng)
    }

    /// `s · a` for a `1 × 1` variable `s`.
    pub fn scalar_mul(&mut self, s: Var, a: Var) -> Result<Var> {
        let ts = self.value(s);
        if ts.numel() != 1 {
            return Err(shape_err("scalar_mul", ts, self.value(a)));
        }
        let k = ts.item();
        let out = self.value(a).scale(k);
        let ng = self.ng(s) || self.ng(a);
        Ok(self.push(out, Op::ScalarMul(s, a), ng))
    }

    /// `[a | b]` along the column axis.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rows() != tb.rows() {
            return Err(shape_err("concat_cols", ta, tb));
        }
        let (n, ca, cb) = (ta.rows(), ta.cols(), tb.cols());
        let mut data = Vec::with_capacity(n * (ca + cb));
        for r in 0..n {
            data.extend_from_slice(ta.row(r));
            data.extend_from_slice(tb.row(r));
        }
        let out = Tensor::matrix(n, ca + cb, data)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(out, Op::ConcatCols(a, b), ng))
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let out = self.value(a).map(f);
        let ng = self.ng(a);
        self.push(out, op, ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |v| v.max(0.0))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sqrt(a), f64::sqrt)
    }

    /// Row `i` of the output sums (or averages) the rows of `a` listed in
    /// `sets[i]`. An empty set yields a zero row.
    pub fn aggregate_rows(&mut self, a: Var, sets: &[Vec<usize>], mean: bool) -> Result<Var> {
        let ta = self.value(a);
        let (n, c) = (ta.rows(), ta.cols());
        if let Some(bad) = sets.iter().flatten().find(|&&j| j >= n) {
            return Err(Error::InvalidParameter(format!("aggregate index {bad} out of range for {n} rows")));
        }
        let mut out = Tensor::zeros(sets.len(), c);
        for (i, set) in sets.iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            let scale = if mean { 1.0 / set.len() as f64 } else { 1.0 };
            let orow = &mut out.data_mut()[i * c..(i + 1) * c];
            for &j in set {
                for (o, v) in orow.iter_mut().zip(ta.row(j)) {
                    *o += v * scale;
                }
            }
        }
        let ng = self.ng(a);
        Ok(self.push(
            out,
            Op::Aggregate {
                input: a,
                sets: sets.to_vec(),
                mean,
            },
            ng,
        ))
    }

    /// `out[k] = a[idx[k]]`.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let ta = self.value(a);
        if let Some(bad) = idx.iter().find(|&&j| j >= ta.rows()) {
            return Err(Error::InvalidParameter(format!("gather index {bad} out of range")));
        }
        let out = if idx.is_empty() {
            // Zero-row tensors are not representable; callers never consume
            // this value when there are no edges.
            Tensor::zeros(1, ta.cols())
        } else {
            ta.select_rows(idx)
        };
        let ng = self.ng(a);
        Ok(self.push(
            out,
            Op::Gather {
                input: a,
                idx: idx.to_vec(),
            },
            ng,
        ))
    }

    /// `out[idx[k]] += a[k]` into `n` rows.
    pub fn scatter_sum(&mut self, a: Var, idx: &[usize], n: usize) -> Result<Var> {
        let ta = self.value(a);
        if !idx.is_empty() && idx.len() != ta.rows() {
            return Err(Error::InvalidParameter(format!(
                "scatter has {} targets for {} rows",
                idx.len(),
                ta.rows()
            )));
        }
        if let Some(bad) = idx.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidParameter(format!("scatter index {bad} out of range")));
        }
        let c = ta.cols();
        let mut out = Tensor::zeros(n, c);
        for (k, &i) in idx.iter().enumerate() {
            let src = ta.row(k).to_vec();
            for (o, v) in out.data_mut()[i * c..(i + 1) * c].iter_mut().zip(src) {
                *o += v;
            }
        }
        let ng = self.ng(a);
        Ok(self.push(
            out,
            Op::ScatterSum {
                input: a,
                idx: idx.to_vec(),
            },
            ng,
        ))
    }

    /// Column means as a `1 × d` row.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let out = col_sums(ta).scale(1.0 / ta.rows() as f64);
        let ng = self.ng(a);
        self.push(out, Op::MeanRows(a), ng)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        let ng = self.ng(a);
        self.push(out, Op::SumAll(a), ng)
    }

    /// Mean squared error against a constant target.
    pub fn mse(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let tp = self.value(pred);
        if tp.shape() != target.shape() {
            return Err(shape_err("mse", tp, target));
        }
        let n = tp.numel() as f64;
        let loss = tp.data().iter().zip(target.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
        let ng = self.ng(pred);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Mse {
                pred,
                target: target.clone().with_grad(false),
            },
            ng,
        ))
    }

    /// Mean softmax cross-entropy over rows.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let tl = self.value(logits);
        if tl.rows() != labels.len() {
            return Err(Error::Shape {
                op: "cross_entropy",
                left: tl.shape().to_vec(),
                right: vec![labels.len()],
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= tl.cols()) {
            return Err(Error::InvalidParameter(format!("class {bad} out of range")));
        }
        let mut loss = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = tl.row(r);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - row[y];
        }
        loss /= labels.len() as f64;
        let ng = self.ng(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                labels: labels.to_vec(),
            },
            ng,
        ))
    }

    /// Gradients of the scalar `loss`; the tape is cleared afterwards.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        let t = self.value(loss);
        if t.numel() != 1 {
            return Err(Error::InvalidParameter(format!(
                "backward needs a scalar loss, got shape {:?}",
                t.shape()
            )));
        }
        self.backward_seeded(loss, Tensor::scalar(1.0))
    }

    /// Vector–Jacobian product: propagates `seed` (shaped like `out`) back
    /// to every leaf. The tape is cleared afterwards.
    pub fn backward_seeded(&mut self, out: Var, seed: Tensor) -> Result<Gradients> {
        if self.value(out).shape() != seed.shape() {
            return Err(shape_err("backward", self.value(out), &seed));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(seed);
        for id in (0..=out.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            if !self.nodes[id].needs_grad {
                continue;
            }
            if matches!(self.nodes[id].op, Op::Leaf) {
                grads[id] = Some(g);
                continue;
            }
            self.propagate(id, &g, &mut grads);
        }
        // Only leaves keep their gradient.
        for (id, node) in self.nodes.iter().enumerate() {
            if !matches!(node.op, Op::Leaf) || !node.needs_grad {
                grads[id] = None;
            }
        }
        self.nodes.clear();
        Ok(Gradients { grads })
    }

    fn propagate(&self, id: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[id];
        let val = |v: Var| &self.nodes[v.0].value;
        let mut acc = |v: Var, d: Tensor| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&d),
                slot @ None => *slot = Some(d),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.ng(*a) {
                    acc(*a, g.matmul(&val(*b).transpose()).expect("shapes checked"));
                }
                if self.ng(*b) {
                    acc(*b, val(*a).transpose().matmul(g).expect("shapes checked"));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.scale(-1.0));
            }
            Op::Mul(a, b) => {
                acc(*a, g.zip_map(val(*b), |x, y| x * y));
                acc(*b, g.zip_map(val(*a), |x, y| x * y));
            }
            Op::Div(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                acc(*a, g.zip_map(tb, |x, y| x / y));
                let mut gb = g.zip_map(ta, |x, y| x * y);
                gb = gb.zip_map(tb, |x, y| -x / (y * y));
                acc(*b, gb);
            }
            Op::AddRow(a, row) => {
                acc(*a, g.clone());
                acc(*row, col_sums(g));
            }
            Op::MulRow(a, row) => {
                let tr = val(*row);
                let c = tr.cols();
                let mut ga = g.clone();
                for (k, v) in ga.data_mut().iter_mut().enumerate() {
                    *v *= tr.data()[k % c];
                }
                acc(*a, ga);
                acc(*row, col_sums(&g.zip_map(val(*a), |x, y| x * y)));
            }
            Op::Scale(a, c) => acc(*a, g.scale(*c)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::ScalarMul(s, a) => {
                acc(*a, g.scale(val(*s).item()));
                let ds = g.data().iter().zip(val(*a).data()).map(|(x, y)| x * y).sum();
                acc(*s, Tensor::scalar(ds));
            }
            Op::ConcatCols(a, b) => {
                let (ca, cb) = (val(*a).cols(), val(*b).cols());
                let n = g.rows();
                let mut da = Vec::with_capacity(n * ca);
                let mut db = Vec::with_capacity(n * cb);
                for r in 0..n {
                    let row = g.row(r);
                    da.extend_from_slice(&row[..ca]);
                    db.extend_from_slice(&row[ca..]);
                }
                acc(*a, Tensor::matrix(n, ca, da).expect("shape"));
                acc(*b, Tensor::matrix(n, cb, db).expect("shape"));
            }
            Op::Relu(a) => acc(*a, g.zip_map(val(*a), |x, y| if y > 0.0 { x } else { 0.0 })),
            Op::Sigmoid(a) => acc(*a, g.zip_map(&node.value, |x, y| x * y * (1.0 - y))),
            Op::Tanh(a) => acc(*a, g.zip_map(&node.value, |x, y| x * (1.0 - y * y))),
            Op::Sqrt(a) => acc(*a, g.zip_map(&node.value, |x, y| x / (2.0 * y))),
            Op::Aggregate { input, sets, mean } => {
                let ti = val(*input);
                let c = ti.cols();
                let mut d = Tensor::zeros(ti.rows(), c);
                for (i, set) in sets.iter().enumerate() {
                    if set.is_empty() {
                        continue;
                    }
                    let scale = if *mean { 1.0 / set.len() as f64 } else { 1.0 };
                    let grow = g.row(i);
                    for &j in set {
                        for (o, v) in d.data_mut()[j * c..(j + 1) * c].iter_mut().zip(grow) {
                            *o += v * scale;
                        }
                    }
                }
                acc(*input, d);
            }
            Op::Gather { input, idx } => {
                let ti = val(*input);
                let c = ti.cols();
                let mut d = Tensor::zeros(ti.rows(), c);
                for (k, &j) in idx.iter().enumerate() {
                    for (o, v) in d.data_mut()[j * c..(j + 1) * c].iter_mut().zip(g.row(k)) {
                        *o += v;
                    }
                }
                acc(*input, d);
            }
            Op::ScatterSum { input, idx } => {
                let ti = val(*input);
                if idx.is_empty() {
                    acc(*input, Tensor::zeros(ti.rows(), ti.cols()));
                } else {
                    acc(*input, g.select_rows(idx));
                }
            }
            Op::MeanRows(a) => {
                let ta = val(*a);
                let n = ta.rows();
                let mut d = Tensor::zeros(n, ta.cols());
                for r in 0..n {
                    let c = ta.cols();
                    for (o, v) in d.data_mut()[r * c..(r + 1) * c].iter_mut().zip(g.data()) {
                        *o = v / n as f64;
                    }
                }
                acc(*a, d);
            }
            Op::SumAll(a) => {
                let ta = val(*a);
                acc(*a, Tensor::full(ta.rows(), ta.cols(), g.item()));
            }
            Op::Mse { pred, target } => {
                let tp = val(*pred);
                let k = 2.0 * g.item() / tp.numel() as f64;
                acc(*pred, tp.zip_map(target, |p, t| k * (p - t)));
            }
            Op::CrossEntropy { logits, labels } => {
                let tl = val(*logits);
                let (n, c) = (tl.rows(), tl.cols());
                let k = g.item() / n as f64;
                let mut d = Tensor::zeros(n, c);
                for (r, &y) in labels.iter().enumerate() {
                    let row = tl.row(r);
                    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
                    for (j, v) in row.iter().enumerate() {
                        let soft = (v - m).exp() / z;
                        d.set(r, j, k * (soft - if j == y { 1.0 } else { 0.0 }));
                    }
                }
                acc(*logits, d);
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::scalar(0.0));
        let y = tape.sigmoid(x);
        assert_eq!(tape.value(y).item(), 0.5);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn sum_gradient_is_ones() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::matrix(1, 5, vec![1.0, -2.0, 3.0, 0.5, 9.0]).unwrap());
        let loss = tape.sum(x);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[1.0; 5]);
        assert!(tape.is_empty());
    }

    #[test]
    fn half_square_gradient_is_identity() {
        let xs = vec![1.0, -2.0, 3.0, 0.5];
        let mut tape = Tape::new();
        let x = tape.param(Tensor::matrix(2, 2, xs.clone()).unwrap());
        let sq = tape.mul(x, x).unwrap();
        let s = tape.sum(sq);
        let loss = tape.scale(s, 0.5);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap().data(), xs.as_slice());
    }

    #[test]
    fn reuse_accumulates_both_branches() {
        // f = sum(3x) + sum(x ⊙ w): df/dx = 3 + w.
        let mut tape = Tape::new();
        let x = tape.param(Tensor::matrix(1, 3, vec![0.1, 0.2, 0.3]).unwrap());
        let w = tape.constant(Tensor::matrix(1, 3, vec![1.0, 2.0, 3.0]).unwrap());
        let a = tape.scale(x, 3.0);
        let b = tape.mul(x, w).unwrap();
        let sa = tape.sum(a);
        let sb = tape.sum(b);
        let loss = tape.add(sa, sb).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[4.0, 5.0, 6.0]);
        assert!(g.get(w).is_none());
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::zeros(2, 2));
        assert!(matches!(tape.backward(x), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn shape_errors_name_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 2));
        let err = tape.matmul(a, b).unwrap_err();
        assert!(err.to_string().contains("[2, 3]") && err.to_string().contains("[2, 2]"), "{err}");
        assert!(tape.add(a, b).is_err());
        let row = tape.constant(Tensor::zeros(1, 2));
        assert!(tape.add_row(a, row).is_err());
    }

    #[test]
    fn empty_aggregation_is_zero_row() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        let agg = tape.aggregate_rows(a, &[vec![], vec![0, 1]], true).unwrap();
        assert_eq!(tape.value(agg).data(), &[0.0, 0.0, 2.0, 3.0]);
        let s = tape.sum(agg);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(a).unwrap().data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn cross_entropy_value() {
        let mut tape = Tape::new();
        let l = tape.param(Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap());
        let ce = tape.cross_entropy(l, &[1]).unwrap();
        assert!((tape.value(ce).item() - 2f64.ln()).abs() < 1e-15);
        let g = tape.backward(ce).unwrap();
        assert_eq!(g.get(l).unwrap().data(), &[0.5, -0.5]);
    }
}
