//! Acceptance suite. Runs every criterion in order, prints one line per
//! criterion and exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- <substring>` runs only the matching
//! criteria.

// `ensure!` negates its condition so that NaN comparisons fail the criterion.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ranwire_core::arch::{generate_er_dag, ArchDag, Edge};
use ranwire_core::gnn::{BnMode, ConvParams, Dataset, ParamStore};
use ranwire_core::lemmas::decomposition_instance;
use ranwire_core::model::{build_model, droppath_covariance_check, mc_infer, path_decomposition_check};
use ranwire_core::paths::{
    enumerate_paths, er_edge_length_table, er_moment_table, exact_er_expectation, expected_edge_path_length,
    expected_path_stats, path_length_histogram, radius_distribution, uniform_weights, OracleMode, Statistic,
};
use ranwire_core::tensor::finite_diff_check;
use ranwire_core::train::{evaluate, gen_khop_dataset, split_dataset, sweep, train, Metric, PlateauSchedule, ScheduleEvent, SweepAxis};
use ranwire_core::{ConvType, DomainGraph, GraphBatch, ModelConfig, Tape, Target, Task, Tensor, TrainConfig, Var};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Fails the criterion with a formatted message unless `cond` holds.
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {:.1?}, limit {:?}", took, limit);
    Ok(took)
}

/// Pascal's triangle, exact.
fn exact_binomial(n: usize, k: usize) -> BigUint {
    let mut row = vec![BigUint::from(1u32)];
    for _ in 0..n {
        let mut next = vec![BigUint::from(1u32); row.len() + 1];
        for i in 1..row.len() {
            next[i] = &row[i - 1] + &row[i];
        }
        row = next;
    }
    row.get(k).cloned().unwrap_or_default()
}

const GRID_P: [f64; 6] = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];

fn expected_path_counts() -> Outcome {
    const TOL: f64 = 1e-9;
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for l in 3..=7 {
        let tables = ok(er_moment_table(l, &GRID_P))?;
        for (table, &p) in tables.iter().zip(&GRID_P) {
            for k in 1..l {
                let closed = ok(expected_path_stats(l, p, k))?;
                let total = ok(exact_er_expectation(l, p, Statistic::PathCount, k, l, OracleMode::Exact))?;
                let err = (total.value - closed.total).abs().max((table.total(k) - closed.total).abs());
                ensure!(err <= TOL, "L={l} p={p} k={k}: path count off by {err:e}");
                worst = worst.max(err);
                checked += 1;
                for len in 2..=l - k + 1 {
                    let err = (table.count(k, len) - closed.by_length[&len]).abs();
                    ensure!(err <= TOL, "L={l} p={p} k={k} l={len}: off by {err:e}");
                    worst = worst.max(err);
                    checked += 1;
                }
            }
        }
    }
    let took = within_time(start, Duration::from_secs(60))?;
    Ok(format!("{checked} expectations, max error {worst:.1e}, {took:.1?}"))
}

fn complete_dag_counts() -> Outcome {
    for l in 3..=12usize {
        let dag = ok(generate_er_dag(l, 1.0, l as u64))?;
        ensure!(dag.edges().eq(ok(ArchDag::complete(l))?.edges()), "L={l}: p=1 sample is not complete");
        let hist = ok(path_length_histogram(&dag, 1, l))?;
        let total = BigUint::from(1u32) << (l - 2);
        ensure!(hist.total() == total, "L={l}: {} paths, expected {total}", hist.total());
        ensure!(ok(enumerate_paths(&dag, 1, l, usize::MAX))?.len() as u64 == 1u64 << (l - 2), "L={l}: enumeration disagrees");
        for len in 1..=l {
            let want = if len >= 2 { exact_binomial(l - 2, len - 2) } else { BigUint::default() };
            ensure!(hist.count(len) == want, "L={l} l={len}: {} paths, expected {want}", hist.count(len));
        }
    }
    Ok("L = 3..12 exact".into())
}

fn mean_length_ratio() -> Outcome {
    const TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    for l in 3..=7 {
        let tables = ok(er_moment_table(l, &GRID_P))?;
        for (table, &p) in tables.iter().zip(&GRID_P) {
            for k in 1..l {
                let closed = p / (1.0 + p) * (l - k - 1) as f64 + 2.0;
                let oracle = table.mean_length_ratio(k).ok_or(format!("L={l} p={p} k={k}: no paths"))?;
                let err = (oracle - closed).abs();
                ensure!(err <= TOL, "L={l} p={p} k={k}: {oracle} vs {closed}");
                worst = worst.max(err);
            }
        }
    }
    let mut gaps = Vec::new();
    for &p in &GRID_P[..5] {
        let est = ok(exact_er_expectation(7, p, Statistic::MeanLengthRatio, 1, 7, OracleMode::MonteCarlo { samples: 100_000, seed: 0 }))?;
        let (mor, se) = est.mean_of_ratio.ok_or("missing mean-of-ratio")?;
        let closed = ok(expected_path_stats(7, p, 1))?.mean_length;
        gaps.push(format!("p={p}: {:+.4}±{:.4}", mor - closed, se));
    }
    Ok(format!("max error {worst:.1e}; mean-of-ratio gap at L=7 (info) {}", gaps.join(", ")))
}

fn edge_mean_lengths() -> Outcome {
    const SPOT_TOL: f64 = 1e-9;
    let mut worst_band = 0.0f64;
    let mut boundary = 0.0f64;
    let mut checked = 0;
    for l in [6usize, 8] {
        for p in [0.5, 1.0] {
            let exact_table = if l <= 7 { Some(ok(er_edge_length_table(l, &[p]))?.remove(0)) } else { None };
            for i in 1..l {
                for j in i + 1..=l {
                    let closed = ok(expected_edge_path_length(l, p, i, j))?;
                    let (value, se) = match &exact_table {
                        Some(t) => (t.ratio(i, j).ok_or(format!("L={l} ({i},{j}): no paths"))?, 0.0),
                        None => {
                            let mode = if p == 1.0 {
                                OracleMode::Exact
                            } else {
                                OracleMode::MonteCarlo { samples: 100_000, seed: (i * 100 + j) as u64 }
                            };
                            let est = ok(exact_er_expectation(l, p, Statistic::EdgeMeanLength(i, j), 1, l, mode))?;
                            (est.value, est.std_err)
                        }
                    };
                    let dev = (value - closed).abs();
                    if i == 1 || j == l {
                        boundary = boundary.max(dev);
                        continue;
                    }
                    let band = 0.15f64.max(3.0 * se);
                    ensure!(dev <= band, "L={l} p={p} edge ({i},{j}): oracle {value}, closed form {closed}, band {band}");
                    worst_band = worst_band.max(dev);
                    checked += 1;
                }
            }
        }
    }
    for (l, want) in [(8usize, 5.0), (6, 4.0)] {
        let closed = ok(expected_edge_path_length(l, 1.0, 2, 5))?;
        let oracle = ok(exact_er_expectation(l, 1.0, Statistic::EdgeMeanLength(2, 5), 1, l, OracleMode::Exact))?.value;
        ensure!((closed - want).abs() <= SPOT_TOL && (oracle - want).abs() <= SPOT_TOL, "L={l} edge (2,5): closed {closed}, oracle {oracle}, want {want}");
    }
    Ok(format!("{checked} interior edges, max deviation {worst_band:.2e}; boundary max deviation (info) {boundary:.3}"))
}

fn path_decomposition() -> Outcome {
    const TOL: f64 = 1e-8;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        for l in 3..=8 {
            for p in [0.5, 1.0] {
                let (model, batch) = ok(decomposition_instance(l, p, seed))?;
                let dev = ok(path_decomposition_check(&model, &batch))?;
                ensure!(dev <= TOL, "seed {seed} L={l} p={p}: deviation {dev:e}");
                worst = worst.max(dev);
            }
        }
    }
    Ok(format!("240 models, max deviation {worst:.1e}"))
}

fn radius_consistency() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let l = rng.gen_range(2..=10);
        let dag = ok(generate_er_dag(l, rng.gen_range(0.2..=1.0), trial))?;
        let weights: BTreeMap<Edge, f64> = dag.edges().map(|e| (e, rng.gen_range(0.05..=1.0))).collect();
        let rho = ok(radius_distribution(&dag, &weights, false))?;
        let mut brute: BTreeMap<usize, f64> = BTreeMap::new();
        for path in ok(enumerate_paths(&dag, 1, l, usize::MAX))? {
            let prod: f64 = path.windows(2).map(|w| weights[&Edge(w[0], w[1])]).product();
            *brute.entry(path.len()).or_default() += prod;
        }
        for len in 1..=l {
            let (a, b) = (rho.mass.get(&len).copied().unwrap_or(0.0), brute.get(&len).copied().unwrap_or(0.0));
            ensure!((a - b).abs() <= TOL, "DAG {trial} length {len}: {a} vs {b}");
            worst = worst.max((a - b).abs());
        }
        let unit = ok(radius_distribution(&dag, &uniform_weights(&dag, 1.0), false))?;
        let hist = ok(path_length_histogram(&dag, 1, l))?;
        for len in 1..=l {
            let want: f64 = hist.count(len).to_string().parse().unwrap();
            ensure!(unit.mass.get(&len).copied().unwrap_or(0.0) == want, "DAG {trial} length {len}: unit weights differ from counts");
        }
    }
    Ok(format!("100 DAGs, max deviation {worst:.1e}"))
}

fn droppath_decorrelation() -> Outcome {
    const NODES: usize = 5;
    const OMEGA: f64 = 0.5;
    const SAMPLES: usize = 100_000;
    let start = Instant::now();
    let dag = ok(ArchDag::complete(NODES))?;
    let omega = uniform_weights(&dag, OMEGA);
    let mut violations = Vec::new();
    let mut overlapping = 0;
    let mut shared = 0;
    for p_drop in [0.1, 0.2] {
        let pairs = ok(droppath_covariance_check(&dag, &omega, p_drop, SAMPLES, 0))?;
        // every source→sink pair overlaps at least in the terminals
        for pair in &pairs {
            overlapping += 1;
            shared += usize::from(pair.shared_edges > 0);
            if pair.covariance.abs() > 3.0 * pair.std_err {
                violations.push(format!(
                    "p_drop={p_drop} {:?}/{:?}: cov {:.3e} = {:.1} SE",
                    pair.first,
                    pair.second,
                    pair.covariance,
                    pair.covariance / pair.std_err
                ));
            }
        }
    }
    within_time(start, Duration::from_secs(30))?;
    ensure!(shared > 0, "no overlapping pair shares an edge");
    ensure!(
        violations.is_empty(),
        "{} of {overlapping} overlapping pairs outside 3 SE of zero, e.g. {}",
        violations.len(),
        violations[0]
    );
    Ok(format!("{overlapping} overlapping pairs within 3 SE"))
}

fn random_graph(rng: &mut ChaCha8Rng, d: usize, edge_dim: usize) -> Result<DomainGraph, String> {
    let n = rng.gen_range(3..=8);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.4) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    let x = ok(Tensor::matrix(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()))?;
    let g = ok(DomainGraph::from_edges(n, &edges, x, Target::Node(Tensor::zeros(n, 1))))?;
    if edge_dim == 0 {
        return Ok(g);
    }
    let m = g.num_directed_edges();
    let e = ok(Tensor::matrix(m, edge_dim, (0..m * edge_dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))?;
    ok(g.with_edge_features(e))
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn weighted(tape: &mut Tape, out: Var, w: &Tensor) -> ranwire_core::Result<Var> {
    let c = tape.constant(w.clone());
    let prod = tape.mul(out, c)?;
    Ok(tape.sum(prod))
}

fn gradient_integrity() -> Outcome {
    const TOL: f64 = 1e-4;
    const EPS: f64 = 1e-6;
    const EDGE_DIM: usize = 2;
    let mut worst = 0.0f64;
    let mut checks = 0;
    for kind in [ConvType::Gcn, ConvType::Sage, ConvType::Gin, ConvType::Gated] {
        for inst in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * kind as u64 + inst);
            let edge_dim = if kind == ConvType::Gated { EDGE_DIM } else { 0 };
            let g = random_graph(&mut rng, 3, edge_dim)?;
            let batch = ok(GraphBatch::single(&g))?;
            let mut store = ParamStore::new();
            let conv = ok(ConvParams::init(kind, &mut store, &mut rng, "c", 3, 4, edge_dim))?;
            let wn = random_matrix(&mut rng, g.n(), 4);
            let we = random_matrix(&mut rng, g.num_directed_edges(), 4);
            // slot None differentiates the node features, Some(k) parameter k
            let ids: Vec<_> = store.ids().collect();
            let slots = std::iter::once(None).chain(ids.iter().map(|&id| Some(id)));
            for slot in slots {
                let f = |t: &mut Tape, x: Var| {
                    let mut vars = store.bind(t);
                    let h = match slot {
                        None => x,
                        Some(id) => {
                            vars[id.0] = x;
                            t.constant(batch.node_features.clone())
                        }
                    };
                    let e = batch.edge_features.clone().filter(|_| edge_dim > 0).map(|f| t.constant(f));
                    let (out, eout) = conv.apply(t, &vars, h, e, &batch)?;
                    let mut s = weighted(t, out, &wn)?;
                    if let Some(eo) = eout {
                        let se = weighted(t, eo, &we)?;
                        s = t.add(s, se)?;
                    }
                    Ok(s)
                };
                let x = match slot {
                    None => batch.node_features.clone(),
                    Some(id) => store.get(id).clone(),
                };
                let err = ok(finite_diff_check(f, &x, EPS))?;
                let what = slot.map_or("input".to_string(), |id| store.name(id).to_string());
                ensure!(err < TOL, "{kind} instance {inst} {what}: relative error {err:e}");
                worst = worst.max(err);
                checks += 1;
            }
        }
    }
    for inst in 0..10u64 {
        let cfg = ModelConfig {
            conv_type: ConvType::Gcn,
            num_nodes: 4,
            hidden_dim: 4,
            p: 0.6,
            input_dim: 3,
            seed: inst,
            ..ModelConfig::default()
        };
        let mut model = ok(build_model(&cfg, inst))?;
        let mut rng = ChaCha8Rng::seed_from_u64(inst);
        for (e, _) in model.omega() {
            ok(model.set_omega(e, rng.gen_range(0.2..0.8)))?;
        }
        let g = random_graph(&mut rng, 3, 0)?;
        let batch = ok(GraphBatch::single(&g))?;
        let w = random_matrix(&mut rng, g.n(), 1);
        for mode in [BnMode::Train, BnMode::Eval] {
            let f = |t: &mut Tape, x: Var| {
                let vars = model.params().bind(t);
                let fp = model.forward_on(t, &vars, &batch, x, None, mode)?;
                weighted(t, fp.prediction, &w)
            };
            let err = ok(finite_diff_check(f, &batch.node_features, EPS))?;
            ensure!(err < TOL, "RAN-GCN instance {inst} {mode:?}: relative error {err:e}");
            worst = worst.max(err);
            checks += 1;
        }
        let ids: Vec<_> = model.params().ids().collect();
        for id in ids {
            let f = |t: &mut Tape, x: Var| {
                let mut vars = model.params().bind(t);
                vars[id.0] = x;
                let input = t.constant(batch.node_features.clone());
                let fp = model.forward_on(t, &vars, &batch, input, None, BnMode::Eval)?;
                weighted(t, fp.prediction, &w)
            };
            let err = ok(finite_diff_check(f, model.params().get(id), EPS))?;
            ensure!(err < TOL, "RAN-GCN instance {inst} {}: relative error {err:e}", model.params().name(id));
            worst = worst.max(err);
            checks += 1;
        }
    }
    Ok(format!("{checks} gradient checks, max relative error {worst:.1e}"))
}

fn receptive_field() -> Outcome {
    let start = Instant::now();
    let graphs = ok(gen_khop_dataset(200, 20, 0.15, 4, 0))?;
    let ds: Dataset = ok(split_dataset(graphs, Task::NodeRegression, 40, 40))?;
    let base = ModelConfig {
        conv_type: ConvType::Gcn,
        p: 0.6,
        sequential_path: true,
        ..ModelConfig::default()
    };
    let seeds = [0u64, 1, 2, 3];
    let table = ok(sweep(&ds, &base, &TrainConfig::default(), &SweepAxis::Nodes(vec![2, 8]), &seeds, Metric::Mse))?;
    let (shallow, deep) = table.rows.split_at(seeds.len());
    let wins = shallow.iter().zip(deep).filter(|(s, d)| d.metric < s.metric).count();
    let pairs: Vec<String> = shallow.iter().zip(deep).map(|(s, d)| format!("{:.4}/{:.4}", d.metric, s.metric)).collect();
    let took = within_time(start, Duration::from_secs(600))?;
    ensure!(wins >= 3, "L=8 beat L=2 in {wins} of 4 seeds (val MSE deep/shallow: {})", pairs.join(", "));
    Ok(format!("L=8 beat L=2 in {wins} of 4 seeds (val MSE deep/shallow: {}), {took:.0?}", pairs.join(", ")))
}

fn training_protocol() -> Outcome {
    // Scripted validation losses under the default schedule: an improvement
    // at epochs 1 and 8, flat afterwards.
    let cfg = TrainConfig::default();
    let mut sched = PlateauSchedule::new(&cfg);
    let decay_epochs = [18, 28, 38, 48, 58, 68];
    let mut epoch = 0;
    loop {
        epoch += 1;
        ensure!(epoch <= 200, "schedule never stopped");
        let decays_before = decay_epochs.iter().filter(|&&d| d < epoch).count();
        let want_lr = cfg.lr_init * 0.5f64.powi(decays_before as i32);
        ensure!(sched.lr() == want_lr, "epoch {epoch}: lr {} expected {want_lr}", sched.lr());
        let val = match epoch {
            1..=7 => 1.0,
            _ => 0.9,
        };
        let event = sched.step(val);
        let want = match epoch {
            1 | 8 => ScheduleEvent::Improved,
            e if decay_epochs.contains(&e) => ScheduleEvent::Decayed,
            73 => ScheduleEvent::Stop,
            _ => ScheduleEvent::Waiting,
        };
        ensure!(event == want, "epoch {epoch}: {event:?}, expected {want:?}");
        if event == ScheduleEvent::Stop {
            break;
        }
    }
    ensure!(sched.lr() == 1.5625e-5 && sched.decays() == 6, "final lr {} after {} decays", sched.lr(), sched.decays());

    // The trainer's recorded rates replay from its own validation losses.
    let graphs = ok(gen_khop_dataset(30, 12, 0.2, 2, 1))?;
    let ds = ok(split_dataset(graphs, Task::NodeRegression, 5, 5))?;
    let mcfg = ModelConfig {
        num_nodes: 4,
        hidden_dim: 8,
        ..ModelConfig::default()
    };
    let tcfg = TrainConfig {
        lr_init: 2e-3,
        lr_min: 1e-4,
        plateau_patience: 2,
        stop_patience: 2,
        max_epochs: 150,
        ..TrainConfig::default()
    };
    let run = ok(train(ok(build_model(&mcfg, 0))?, &ds, &tcfg))?;
    let mut replay = PlateauSchedule::new(&tcfg);
    for (k, rec) in run.metrics.epochs.iter().enumerate() {
        ensure!(rec.lr == replay.lr(), "epoch {}: trainer lr {} replay {}", rec.epoch, rec.lr, replay.lr());
        let ev = replay.step(rec.val_loss);
        let last = k + 1 == run.metrics.epochs.len();
        ensure!((ev == ScheduleEvent::Stop) == (last && run.metrics.stopped_early), "epoch {}: stop rule mismatch", rec.epoch);
    }

    // MC inference without DropPath equals deterministic inference.
    let model = ok(build_model(&ModelConfig { p_drop: 0.0, ..mcfg }, 4))?;
    let refs: Vec<&DomainGraph> = ds.test.iter().collect();
    let batch = ok(GraphBatch::from_graphs(&refs))?;
    let det = ok(model.predict(&batch, None))?;
    for (samples, seed) in [(1, 0), (10, 3), (64, 99)] {
        let mc = ok(mc_infer(&model, &batch, samples, seed))?;
        ensure!(mc.data().iter().map(|v| v.to_bits()).eq(det.data().iter().map(|v| v.to_bits())), "{samples} samples: not bit-identical");
    }
    let a = ok(evaluate(&model, &ds.test, Metric::Mse, None))?;
    let b = ok(evaluate(&model, &ds.test, Metric::Mse, Some((16, 7))))?;
    ensure!(a.to_bits() == b.to_bits(), "evaluate differs: {a} vs {b}");
    Ok(format!("73-epoch scripted replay, {}-epoch trainer replay, MC bit-identical", run.metrics.epochs.len()))
}

fn ranwire(args: &[&str]) -> Result<std::process::Output, String> {
    ok(Command::new(env!("CARGO_BIN_EXE_ranwire")).args(args).output())
}

fn dir_bytes(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in ok(std::fs::read_dir(dir))? {
        let entry = ok(entry)?;
        out.insert(entry.file_name().to_string_lossy().into_owned(), ok(std::fs::read(entry.path()))?);
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let tmp = ok(tempfile::tempdir())?;
    let root = tmp.path();
    let mut reports = Vec::new();
    let path = root.join("report.csv");
    for _ in 0..2 {
        let out = ranwire(&["verify-lemmas", "--out", path.to_str().unwrap()])?;
        // exit 3 marks failing rows, which does not bear on determinism
        ensure!(matches!(out.status.code(), Some(0) | Some(3)), "verify-lemmas exited {:?}", out.status.code());
        reports.push((ok(std::fs::read(&path))?, out.stdout));
    }
    ensure!(!reports[0].0.is_empty(), "empty report");
    ensure!(reports[0] == reports[1], "verify-lemmas reports differ");

    let data = root.join("data");
    let out = ranwire(&["make-data", "--graphs", "40", "--nodes", "12", "--val", "8", "--test", "8", "--out", data.to_str().unwrap()])?;
    ensure!(out.status.success(), "make-data failed: {}", String::from_utf8_lossy(&out.stderr));
    let mut runs = Vec::new();
    // same directory both times: the resolved config records its path
    let dir = root.join("run");
    for _ in 0..2 {
        if dir.exists() {
            ok(std::fs::remove_dir_all(&dir))?;
        }
        let out = ranwire(&[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--run-dir",
            dir.to_str().unwrap(),
            "--nodes",
            "4",
            "--hidden",
            "8",
            "--pdrop",
            "0.1",
            "--seed",
            "5",
            "--max-epochs",
            "20",
        ])?;
        ensure!(out.status.success(), "train failed: {}", String::from_utf8_lossy(&out.stderr));
        runs.push((dir_bytes(&dir)?, out.stdout));
    }
    ensure!(runs[0].0.len() >= 4, "run directory has {} files", runs[0].0.len());
    for (name, bytes) in &runs[0].0 {
        ensure!(runs[1].0.get(name) == Some(bytes), "{name} differs between runs");
    }
    ensure!(runs[0].1 == runs[1].1, "train stdout differs");
    Ok(format!("report of {} bytes and {} run files identical", reports[0].0.len(), runs[0].0.len()))
}

const CRITERIA: &[Criterion] = &[
    ("expected_path_counts", expected_path_counts),
    ("complete_dag_counts", complete_dag_counts),
    ("mean_length_ratio", mean_length_ratio),
    ("edge_mean_lengths", edge_mean_lengths),
    ("path_decomposition", path_decomposition),
    ("radius_consistency", radius_consistency),
    ("droppath_decorrelation", droppath_decorrelation),
    ("gradient_integrity", gradient_integrity),
    ("receptive_field", receptive_field),
    ("training_protocol", training_protocol),
    ("determinism", determinism),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = CRITERIA
        .iter()
        .filter(|(name, _)| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str())))
        .collect();
    let mut failed = 0;
    for (name, check) in &selected {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("acceptance {name}: PASS ({detail}) [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("acceptance {name}: FAIL ({why}) [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", selected.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
