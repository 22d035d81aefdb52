use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::GraphBatch;
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Tape, Tensor, Var};

const GATE_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvType {
    Gcn,
    Sage,
    Gin,
    Gated,
}

impl std::str::FromStr for ConvType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(ConvType::Gcn),
            "sage" | "graphsage" => Ok(ConvType::Sage),
            "gin" => Ok(ConvType::Gin),
            "gated" | "gatedgcn" => Ok(ConvType::Gated),
            other => Err(Error::InvalidParameter(format!("unknown conv type '{other}'"))),
        }
    }
}

impl std::fmt::Display for ConvType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConvType::Gcn => "gcn",
            ConvType::Sage => "sage",
            ConvType::Gin => "gin",
            ConvType::Gated => "gated",
        })
    }
}

/// Bound GIN parameters.
#[derive(Clone, Copy, Debug)]
pub struct GinWeights {
    pub eps: Var,
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

/// Bound GatedGCN parameters; `e` maps edge features to gate width.
#[derive(Clone, Copy, Debug)]
pub struct GatedWeights {
    pub a: Var,
    pub b: Var,
    pub c: Var,
    pub d: Var,
    pub e: Var,
    pub gate_bias: Var,
}

/// Parameter layout of one conv layer inside a [`ParamStore`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConvParams {
    Gcn { w: ParamId },
    Sage { w: ParamId },
    Gin { eps: ParamId, w1: ParamId, b1: ParamId, w2: ParamId, b2: ParamId },
    Gated { a: ParamId, b: ParamId, c: ParamId, d: ParamId, e: ParamId, gate_bias: ParamId },
}

impl ConvParams {
    pub fn init<R: Rng>(
        kind: ConvType,
        store: &mut ParamStore,
        rng: &mut R,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        edge_dim: usize,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidParameter("layer widths must be positive".into()));
        }
        let name = |s: &str| format!("{prefix}.{s}");
        Ok(match kind {
            ConvType::Gcn => ConvParams::Gcn {
                w: store.add_uniform(name("w"), in_dim, out_dim, rng),
            },
            ConvType::Sage => ConvParams::Sage {
                w: store.add_uniform(name("w"), 2 * in_dim, out_dim, rng),
            },
            ConvType::Gin => ConvParams::Gin {
                eps: store.add(name("eps"), Tensor::scalar(0.0)),
                w1: store.add_uniform(name("w1"), in_dim, out_dim, rng),
                b1: store.add(name("b1"), Tensor::zeros(1, out_dim)),
                w2: store.add_uniform(name("w2"), out_dim, out_dim, rng),
                b2: store.add(name("b2"), Tensor::zeros(1, out_dim)),
            },
            ConvType::Gated => {
                if edge_dim == 0 {
                    return Err(Error::InvalidParameter("gated conv needs a positive edge-feature width".into()));
                }
                ConvParams::Gated {
                    a: store.add_uniform(name("a"), in_dim, out_dim, rng),
                    b: store.add_uniform(name("b"), in_dim, out_dim, rng),
                    c: store.add_uniform(name("c"), in_dim, out_dim, rng),
                    d: store.add_uniform(name("d"), in_dim, out_dim, rng),
                    e: store.add_uniform(name("e"), edge_dim, out_dim, rng),
                    gate_bias: store.add(name("gate_bias"), Tensor::zeros(1, out_dim)),
                }
            }
        })
    }

    pub fn kind(&self) -> ConvType {
        match self {
            ConvParams::Gcn { .. } => ConvType::Gcn,
            ConvParams::Sage { .. } => ConvType::Sage,
            ConvParams::Gin { .. } => ConvType::Gin,
            ConvParams::Gated { .. } => ConvType::Gated,
        }
    }

    /// Applies the layer. `edges` is only read (and replaced) by the gated
    /// variant.
    pub fn apply(&self, tape: &mut Tape, vars: &[Var], h: Var, edges: Option<Var>, graph: &GraphBatch) -> Result<(Var, Option<Var>)> {
        let v = |id: &ParamId| vars[id.0];
        match self {
            ConvParams::Gcn { w } => Ok((gcn_conv(tape, h, v(w), graph)?, edges)),
            ConvParams::Sage { w } => Ok((sage_conv(tape, h, v(w), graph)?, edges)),
            ConvParams::Gin { eps, w1, b1, w2, b2 } => {
                let gw = GinWeights {
                    eps: v(eps),
                    w1: v(w1),
                    b1: v(b1),
                    w2: v(w2),
                    b2: v(b2),
                };
                Ok((gin_conv(tape, h, &gw, graph)?, edges))
            }
            ConvParams::Gated { a, b, c, d, e, gate_bias } => {
                let gw = GatedWeights {
                    a: v(a),
                    b: v(b),
                    c: v(c),
                    d: v(d),
                    e: v(e),
                    gate_bias: v(gate_bias),
                };
                let (out, new_e) = gated_conv(tape, h, edges, &gw, graph)?;
                Ok((out, new_e))
            }
        }
    }
}

fn check_rows(tape: &Tape, h: Var, graph: &GraphBatch, op: &'static str) -> Result<()> {
    let rows = tape.value(h).rows();
    if rows != graph.n() {
        return Err(Error::Shape {
            op,
            left: tape.value(h).shape().to_vec(),
            right: vec![graph.n()],
        });
    }
    Ok(())
}

/// `out_i = mean_{j ∈ N(i)} h_j W`; isolated nodes give a zero row.
pub fn gcn_conv(tape: &mut Tape, h: Var, w: Var, graph: &GraphBatch) -> Result<Var> {
    check_rows(tape, h, graph, "gcn_conv")?;
    let agg = tape.aggregate_rows(h, &graph.neighbors, true)?;
    tape.matmul(agg, w)
}

/// `out_i = [h_i, mean_{j ∈ N(i)} h_j] W`.
pub fn sage_conv(tape: &mut Tape, h: Var, w: Var, graph: &GraphBatch) -> Result<Var> {
    check_rows(tape, h, graph, "sage_conv")?;
    let agg = tape.aggregate_rows(h, &graph.neighbors, true)?;
    let cat = tape.concat_cols(h, agg)?;
    tape.matmul(cat, w)
}

/// `out_i = MLP((1 + eps) h_i + sum_{j ∈ N(i)} h_j)` with a two-layer ReLU MLP.
pub fn gin_conv(tape: &mut Tape, h: Var, p: &GinWeights, graph: &GraphBatch) -> Result<Var> {
    check_rows(tape, h, graph, "gin_conv")?;
    let sum = tape.aggregate_rows(h, &graph.neighbors, false)?;
    let eh = tape.scalar_mul(p.eps, h)?;
    let selfpart = tape.add(h, eh)?;
    let x = tape.add(selfpart, sum)?;
    let z = tape.matmul(x, p.w1)?;
    let z = tape.add_row(z, p.b1)?;
    let z = tape.relu(z);
    let z = tape.matmul(z, p.w2)?;
    tape.add_row(z, p.b2)
}

/// Normalized-gate GatedGCN. Gates are `sigmoid(C h_i + D h_j + E e_ij + bias)`
/// and the returned edge features are the gate pre-activations. With
/// `edges = None` the edge input is treated as zeros.
pub fn gated_conv(tape: &mut Tape, h: Var, edges: Option<Var>, p: &GatedWeights, graph: &GraphBatch) -> Result<(Var, Option<Var>)> {
    check_rows(tape, h, graph, "gated_conv")?;
    let ah = tape.matmul(h, p.a)?;
    if graph.edges.is_empty() {
        return Ok((ah, None));
    }
    if let Some(e) = edges {
        let (er, ec) = (tape.value(e).rows(), tape.value(e).cols());
        if er != graph.edges.len() || ec != tape.value(p.e).rows() {
            return Err(Error::Shape {
                op: "gated_conv edges",
                left: vec![er, ec],
                right: vec![graph.edges.len(), tape.value(p.e).rows()],
            });
        }
    }
    let recv = graph.receivers();
    let send = graph.senders();
    let n = graph.n();
    let bh = tape.matmul(h, p.b)?;
    let ch = tape.matmul(h, p.c)?;
    let dh = tape.matmul(h, p.d)?;
    let ci = tape.gather_rows(ch, &recv)?;
    let dj = tape.gather_rows(dh, &send)?;
    let mut pre = tape.add(ci, dj)?;
    if let Some(e) = edges {
        let ee = tape.matmul(e, p.e)?;
        pre = tape.add(pre, ee)?;
    }
    let pre = tape.add_row(pre, p.gate_bias)?;
    let eta = tape.sigmoid(pre);
    let bj = tape.gather_rows(bh, &send)?;
    let msg = tape.mul(eta, bj)?;
    let num = tape.scatter_sum(msg, &recv, n)?;
    let den = tape.scatter_sum(eta, &recv, n)?;
    let den = tape.add_scalar(den, GATE_EPS);
    let agg = tape.div(num, den)?;
    let out = tape.add(ah, agg)?;
    Ok((out, Some(pre)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{DomainGraph, Target};
    use crate::tensor::finite_diff_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DomainGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(0.35) {
                    edges.push((u, v));
                }
            }
        }
        DomainGraph::from_edges(n, &edges, random_tensor(rng, n, d), Target::GraphValue(vec![0.0])).unwrap()
    }

    fn adjacency(g: &GraphBatch) -> Tensor {
        let mut a = Tensor::zeros(g.n(), g.n());
        for &(i, j) in &g.edges {
            a.set(i, j, a.get(i, j) + 1.0);
        }
        a
    }

    fn concat(a: &Tensor, b: &Tensor) -> Tensor {
        let rows: Vec<Vec<f64>> = (0..a.rows()).map(|r| [a.row(r), b.row(r)].concat()).collect();
        Tensor::from_rows(&rows).unwrap()
    }

    #[test]
    fn gcn_trivial_cases() {
        let g = DomainGraph::from_edges(1, &[], Tensor::matrix(1, 2, vec![3.0, 4.0]).unwrap(), Target::GraphClass(0)).unwrap();
        let b = GraphBatch::single(&g).unwrap();
        let mut t = Tape::new();
        let h = t.constant(b.node_features.clone());
        let w = t.constant(Tensor::eye(2));
        let out = gcn_conv(&mut t, h, w, &b).unwrap();
        assert_eq!(t.value(out).data(), &[0.0, 0.0]);

        let g = DomainGraph::from_edges(2, &[(0, 1)], Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap(), Target::GraphClass(0)).unwrap();
        let b = GraphBatch::single(&g).unwrap();
        let mut t = Tape::new();
        let h = t.constant(b.node_features.clone());
        let w = t.constant(Tensor::eye(1));
        let out = gcn_conv(&mut t, h, w, &b).unwrap();
        assert_eq!(t.value(out).data(), &[2.0, 1.0]);
    }

    #[test]
    fn convs_match_dense_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(1..=12);
            let g = random_graph(&mut rng, n, 3);
            let b = GraphBatch::single(&g).unwrap();
            let x = &b.node_features;
            let mean_ax = b.mean_operator().matmul(x).unwrap();
            let ax = adjacency(&b).matmul(x).unwrap();

            let w = random_tensor(&mut rng, 3, 4);
            let mut t = Tape::new();
            let (h, wv) = (t.constant(x.clone()), t.constant(w.clone()));
            let out = gcn_conv(&mut t, h, wv, &b).unwrap();
            assert!(t.value(out).max_abs_diff(&mean_ax.matmul(&w).unwrap()) < 1e-10);

            let ws = random_tensor(&mut rng, 6, 4);
            let mut t = Tape::new();
            let (h, wv) = (t.constant(x.clone()), t.constant(ws.clone()));
            let out = sage_conv(&mut t, h, wv, &b).unwrap();
            let expect = concat(x, &mean_ax).matmul(&ws).unwrap();
            assert!(t.value(out).max_abs_diff(&expect) < 1e-10);

            let eps = rng.gen_range(-0.5..0.5);
            let (w1, b1, w2, b2) = (random_tensor(&mut rng, 3, 4), random_tensor(&mut rng, 1, 4), random_tensor(&mut rng, 4, 4), random_tensor(&mut rng, 1, 4));
            let mut t = Tape::new();
            let h = t.constant(x.clone());
            let gw = GinWeights {
                eps: t.constant(Tensor::scalar(eps)),
                w1: t.constant(w1.clone()),
                b1: t.constant(b1.clone()),
                w2: t.constant(w2.clone()),
                b2: t.constant(b2.clone()),
            };
            let out = gin_conv(&mut t, h, &gw, &b).unwrap();
            let mut pre = x.scale(1.0 + eps);
            pre.add_assign(&ax);
            let mut z = pre.matmul(&w1).unwrap();
            for r in 0..n {
                for c in 0..4 {
                    z.set(r, c, (z.get(r, c) + b1.get(0, c)).max(0.0));
                }
            }
            let mut expect = z.matmul(&w2).unwrap();
            for r in 0..n {
                for c in 0..4 {
                    expect.set(r, c, expect.get(r, c) + b2.get(0, c));
                }
            }
            assert!(t.value(out).max_abs_diff(&expect) < 1e-10);
        }
    }

    fn naive_gated(x: &Tensor, e: &Tensor, m: &[Tensor; 6], g: &GraphBatch) -> (Tensor, Tensor) {
        let [a, b, c, d, ew, bias] = m;
        let dout = a.cols();
        let mut out = x.matmul(a).unwrap();
        let bx = x.matmul(b).unwrap();
        let cx = x.matmul(c).unwrap();
        let dx = x.matmul(d).unwrap();
        let ee = e.matmul(ew).unwrap();
        let mut pre = Tensor::zeros(g.edges.len().max(1), dout);
        for i in 0..g.n() {
            let mut num = vec![0.0; dout];
            let mut den = vec![0.0; dout];
            for (k, &(r, s)) in g.edges.iter().enumerate() {
                if r != i {
                    continue;
                }
                for f in 0..dout {
                    let p = cx.get(r, f) + dx.get(s, f) + ee.get(k, f) + bias.get(0, f);
                    pre.set(k, f, p);
                    let eta = 1.0 / (1.0 + (-p).exp());
                    num[f] += eta * bx.get(s, f);
                    den[f] += eta;
                }
            }
            for f in 0..dout {
                out.set(i, f, out.get(i, f) + num[f] / (den[f] + 1e-6));
            }
        }
        (out, pre)
    }

    #[test]
    fn gated_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 6 {
            let n = rng.gen_range(2..=10);
            let g = random_graph(&mut rng, n, 3);
            let b = GraphBatch::single(&g).unwrap();
            if b.edges.is_empty() {
                continue;
            }
            checked += 1;
            let e = random_tensor(&mut rng, b.edges.len(), 2);
            let m = [
                random_tensor(&mut rng, 3, 4),
                random_tensor(&mut rng, 3, 4),
                random_tensor(&mut rng, 3, 4),
                random_tensor(&mut rng, 3, 4),
                random_tensor(&mut rng, 2, 4),
                random_tensor(&mut rng, 1, 4),
            ];
            let mut t = Tape::new();
            let h = t.constant(b.node_features.clone());
            let ev = t.constant(e.clone());
            let gw = GatedWeights {
                a: t.constant(m[0].clone()),
                b: t.constant(m[1].clone()),
                c: t.constant(m[2].clone()),
                d: t.constant(m[3].clone()),
                e: t.constant(m[4].clone()),
                gate_bias: t.constant(m[5].clone()),
            };
            let (out, pre) = gated_conv(&mut t, h, Some(ev), &gw, &b).unwrap();
            let (eo, ep) = naive_gated(&b.node_features, &e, &m, &b);
            assert!(t.value(out).max_abs_diff(&eo) < 1e-10);
            assert!(t.value(pre.unwrap()).max_abs_diff(&ep) < 1e-10);
        }
    }

    #[test]
    fn gated_saturated_gates_give_mean() {
        let x = Tensor::matrix(3, 1, vec![1.0, 2.0, 4.0]).unwrap();
        let g = DomainGraph::from_edges(3, &[(0, 1), (0, 2)], x, Target::GraphClass(0)).unwrap();
        let b = GraphBatch::single(&g).unwrap();
        let mut t = Tape::new();
        let h = t.constant(b.node_features.clone());
        let gw = GatedWeights {
            a: t.constant(Tensor::scalar(0.0)),
            b: t.constant(Tensor::scalar(1.0)),
            c: t.constant(Tensor::scalar(0.0)),
            d: t.constant(Tensor::scalar(0.0)),
            e: t.constant(Tensor::scalar(0.0)),
            gate_bias: t.constant(Tensor::scalar(50.0)),
        };
        let (out, _) = gated_conv(&mut t, h, None, &gw, &b).unwrap();
        let o = t.value(out);
        assert!((o.get(0, 0) - 3.0).abs() < 1e-5);
        assert!((o.get(1, 0) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn gated_isolated_node() {
        let x = Tensor::matrix(1, 2, vec![1.0, -1.0]).unwrap();
        let g = DomainGraph::from_edges(1, &[], x, Target::GraphClass(0)).unwrap();
        let b = GraphBatch::single(&g).unwrap();
        let mut t = Tape::new();
        let h = t.constant(b.node_features.clone());
        let a = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let gw = GatedWeights {
            a: t.constant(a),
            b: t.constant(Tensor::eye(2)),
            c: t.constant(Tensor::eye(2)),
            d: t.constant(Tensor::eye(2)),
            e: t.constant(Tensor::eye(2)),
            gate_bias: t.constant(Tensor::zeros(1, 2)),
        };
        let (out, e) = gated_conv(&mut t, h, None, &gw, &b).unwrap();
        assert_eq!(t.value(out).data(), &[-2.0, -2.0]);
        assert!(e.is_none());
    }

    #[test]
    fn gin_star_and_isolated() {
        let x = Tensor::matrix(4, 1, vec![5.0, 1.0, 1.0, 1.0]).unwrap();
        let g = DomainGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], x, Target::GraphClass(0)).unwrap();
        let b = GraphBatch::single(&g).unwrap();
        let mut t = Tape::new();
        let h = t.constant(b.node_features.clone());
        let gw = GinWeights {
            eps: t.constant(Tensor::scalar(0.0)),
            w1: t.constant(Tensor::eye(1)),
            b1: t.constant(Tensor::zeros(1, 1)),
            w2: t.constant(Tensor::eye(1)),
            b2: t.constant(Tensor::zeros(1, 1)),
        };
        let out = gin_conv(&mut t, h, &gw, &b).unwrap();
        assert_eq!(t.value(out).get(0, 0), 8.0);
        assert_eq!(t.value(out).get(1, 0), 6.0);
    }

    #[test]
    fn conv_gradients_pass_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_graph(&mut rng, 7, 3);
        let b = GraphBatch::single(&g).unwrap();
        let x = b.node_features.clone();
        let mut store = ParamStore::new();
        let mut layers = Vec::new();
        for kind in [ConvType::Gcn, ConvType::Sage, ConvType::Gin, ConvType::Gated] {
            layers.push(ConvParams::init(kind, &mut store, &mut rng, "l", 3, 3, 3).unwrap());
        }
        // gradient w.r.t. the input features through every layer kind
        for layer in &layers {
            let err = finite_diff_check(
                |t, h| {
                    let vars = store.bind(t);
                    let e = (!b.edges.is_empty()).then(|| t.constant(Tensor::full(b.edges.len(), 3, 0.3)));
                    let (out, _) = layer.apply(t, &vars, h, e, &b)?;
                    let sq = t.mul(out, out)?;
                    Ok(t.sum(sq))
                },
                &x,
                1e-6,
            )
            .unwrap();
            assert!(err < 1e-5, "{:?}: {err}", layer.kind());
        }
    }

    #[test]
    fn gated_requires_edge_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::new();
        assert!(ConvParams::init(ConvType::Gated, &mut store, &mut rng, "g", 2, 2, 0).is_err());
        assert_eq!("GraphSage".parse::<ConvType>().unwrap(), ConvType::Sage);
        assert!("gat".parse::<ConvType>().is_err());
    }
}
