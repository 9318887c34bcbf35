//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness: `cargo test --test acceptance`.
//! Set `CDC_ACCEPT_ONLY=<substring>` to run a subset.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use cdc::baselines::Algorithm;
use cdc::diffcore::{gumbel_softmax, LstmCell, ParamStore, Tape, Var};
use cdc::envs::{one_hot, reward, step, target_points, Env, EnvConfig, Task, WorldState, ACTIONS};
use cdc::harness::{aggregate, aggregate_dirs, evaluate_checkpoint, threshold_sweep, train_manifest, train_seed, RunManifest, SWEEP_DELTAS};
use cdc::policy::{stack_rows, CdcActor, Mode};
use cdc::spectral::{
    heat_at_frozen_times, heat_kernel_at, heat_kernel_pade, normalized_laplacian, stable_heat, stable_heat_vjp,
    sym_eigendecompose, HeatConfig, WeightedGraph,
};
use cdc::training::{TrainConfig, DEFAULT_SEEDS};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_graph(n: usize, r: &mut ChaCha8Rng) -> WeightedGraph {
    let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| r.gen_range(0.05..0.95)).collect();
    WeightedGraph::from_upper(n, &upper).expect("valid strengths")
}

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn heat_identity() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = 2 + k % 9;
        let g = random_graph(n, &mut r);
        let es = sym_eigendecompose(&normalized_laplacian(&g).matrix).map_err(|e| e.to_string())?;
        let h = heat_kernel_at(&es, 0.0).map_err(|e| e.to_string())?;
        worst = worst.max(frob(&(h - Array2::<f64>::eye(n))));
    }
    ensure(worst <= 1e-12, || format!("max |H(0) − I|_F = {worst:e}"))?;
    Ok(format!("50 graphs, max |H(0) − I|_F = {worst:.1e}"))
}

fn two_node_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for w in [0.1, 0.5, 0.9] {
        let g = WeightedGraph::from_upper(2, &[w]).map_err(|e| e.to_string())?;
        let es = sym_eigendecompose(&normalized_laplacian(&g).matrix).map_err(|e| e.to_string())?;
        for p in [0.1, 1.0, 10.0] {
            let h = heat_kernel_at(&es, p).map_err(|e| e.to_string())?;
            let expected = (1.0 - (-2.0 * p).exp()) / 2.0;
            worst = worst.max((h[[0, 1]] - expected).abs()).max((h[[1, 0]] - expected).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn spectral_matches_pade() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = 2 + k % 7;
        let lap = normalized_laplacian(&random_graph(n, &mut r)).matrix;
        let es = sym_eigendecompose(&lap).map_err(|e| e.to_string())?;
        for p in [0.1, 1.0, 10.0] {
            let a = heat_kernel_at(&es, p).map_err(|e| e.to_string())?;
            let b = heat_kernel_pade(&lap, p).map_err(|e| e.to_string())?;
            worst = worst.max(frob(&(a - b)));
        }
    }
    ensure(worst <= 1e-8, || format!("max Frobenius gap {worst:e}"))?;
    Ok(format!("20 graphs × 3 times, max Frobenius gap {worst:.1e}"))
}

fn heat_vjp_vs_fd() -> Outcome {
    let cfg = HeatConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let mut r = rng(300 + seed);
        let n = 5;
        let g = random_graph(n, &mut r);
        let fwd = stable_heat(&g, &cfg.grid, cfg.delta).map_err(|e| e.to_string())?;
        let upstream = Array2::from_shape_simple_fn((n, n), || r.gen_range(-1.0..1.0));
        let grad = stable_heat_vjp(&g, &fwd.stable, &upstream).map_err(|e| e.to_string())?;
        let loss = |s: Array2<f64>| {
            let gg = WeightedGraph::new(s).expect("perturbed strengths stay in range");
            (&heat_at_frozen_times(&gg, &fwd.stable).expect("frozen heat") * &upstream).sum()
        };
        let h = 1e-6;
        for u in 0..n {
            for v in u + 1..n {
                let mut plus = g.strengths().clone();
                plus[[u, v]] += h;
                plus[[v, u]] += h;
                let mut minus = g.strengths().clone();
                minus[[u, v]] -= h;
                minus[[v, u]] -= h;
                let numeric = (loss(plus) - loss(minus)) / (2.0 * h);
                // the symmetric perturbation moves both (u, v) and (v, u)
                let analytic = grad[[u, v]] + grad[[v, u]];
                worst = worst.max(rel(analytic, numeric, 1e-6));
            }
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("20 graphs n=5, max relative error {worst:.1e}"))
}

fn actor_gradient_check() -> Outcome {
    let (n, w) = (3, 6);
    let mut r = rng(11);
    let actor = CdcActor::new(w, HeatConfig::default(), &mut rng(11));
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..w).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let obs = stack_rows(&rows).map_err(|e| e.to_string())?;
    let weights = Array2::from_shape_fn((n, ACTIONS), |_| r.gen_range(-1.0..1.0));

    let mut tape = Tape::new();
    let bound = tape.bind(&actor.params, true);
    let fwd = actor.forward_on_tape(&mut tape, &bound, &obs, n).map_err(|e| e.to_string())?;
    let frozen = fwd.graphs.stable.clone();
    let wv = tape.constant(weights.clone());
    let prod = tape.mul(fwd.logits, wv).map_err(|e| e.to_string())?;
    let loss = tape.sum(prod);
    tape.backward(loss).map_err(|e| e.to_string())?;
    let grads = tape.grads(&bound);

    let probe = |store: &ParamStore| {
        let mut a = actor.clone();
        a.params = store.clone();
        let mut t = Tape::new();
        let b = t.bind(&a.params, false);
        let f = a.forward_frozen(&mut t, &b, &obs, n, Some(&frozen)).expect("frozen forward");
        (t.value(f.logits) * &weights).sum()
    };
    let h = 1e-6;
    let mut pick = rng(12);
    let mut worst: (f64, String) = (0.0, String::new());
    for (id, g) in actor.params.ids().zip(&grads) {
        let entries: Vec<usize> = if g.len() <= 48 {
            (0..g.len()).collect()
        } else {
            (0..48).map(|_| pick.gen_range(0..g.len())).collect()
        };
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for e in entries {
            let (i, j) = (e / g.ncols(), e % g.ncols());
            let mut plus = actor.params.clone();
            plus.get_mut(id)[[i, j]] += h;
            let mut minus = actor.params.clone();
            minus.get_mut(id)[[i, j]] -= h;
            let numeric = (probe(&plus) - probe(&minus)) / (2.0 * h);
            diff += (numeric - g[[i, j]]).powi(2);
            scale = scale.max(numeric.abs()).max(g[[i, j]].abs());
        }
        let err = diff.sqrt() / scale.max(1e-8);
        if err > worst.0 {
            worst = (err, actor.params.name(id).to_string());
        }
    }
    ensure(worst.0 < 1e-3, || format!("{}: relative error {:e}", worst.1, worst.0))?;
    Ok(format!("{} tensors, worst {} at {:.1e}", grads.len(), worst.1, worst.0))
}

/// Largest relative deviation between tape gradients and central differences of a scalar graph.
fn op_fd(inputs: &[Array2<f64>], build: &dyn Fn(&mut Tape, &[Var]) -> Var) -> f64 {
    let eval = |xs: &[Array2<f64>]| {
        let mut t = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| t.leaf(x.clone(), true)).collect();
        let out = build(&mut t, &vars);
        t.value(out)[[0, 0]]
    };
    let mut t = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| t.leaf(x.clone(), true)).collect();
    let out = build(&mut t, &vars);
    t.backward(out).expect("scalar loss");
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, x) in inputs.iter().enumerate() {
        let analytic = t.grad(vars[k]).cloned().unwrap_or_else(|| Array2::zeros(x.raw_dim()));
        for idx in 0..x.len() {
            let (i, j) = (idx / x.ncols(), idx % x.ncols());
            let mut plus = inputs.to_vec();
            plus[k][[i, j]] += h;
            let mut minus = inputs.to_vec();
            minus[k][[i, j]] -= h;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
            worst = worst.max(rel(analytic[[i, j]], numeric, 1e-6));
        }
    }
    worst
}

fn weighted(t: &mut Tape, x: Var, seed: u64) -> Var {
    let [r, c] = t.shape(x);
    let mut g = rng(seed);
    let w = t.constant(Array2::from_shape_simple_fn((r, c), || g.gen_range(-1.0..1.0)));
    let p = t.mul(x, w).expect("same shape");
    t.sum(p)
}

fn autodiff_suite() -> Outcome {
    let mut r = rng(4);
    let mut m = |rows, cols| Array2::from_shape_simple_fn((rows, cols), || r.gen_range(-1.0..1.0));
    let (x, y, row, col, sq) = (m(4, 3), m(4, 3), m(1, 3), m(4, 1), m(3, 2));
    type Build = Box<dyn Fn(&mut Tape, &[Var]) -> Var>;
    let cases: Vec<(&str, Vec<Array2<f64>>, Build)> = vec![
        ("matmul", vec![x.clone(), sq], Box::new(|t, v| { let o = t.matmul(v[0], v[1]).unwrap(); weighted(t, o, 1) })),
        ("add", vec![x.clone(), y.clone()], Box::new(|t, v| { let o = t.add(v[0], v[1]).unwrap(); weighted(t, o, 2) })),
        ("sub", vec![x.clone(), y.clone()], Box::new(|t, v| { let o = t.sub(v[0], v[1]).unwrap(); weighted(t, o, 3) })),
        ("mul", vec![x.clone(), y.clone()], Box::new(|t, v| { let o = t.mul(v[0], v[1]).unwrap(); weighted(t, o, 4) })),
        ("add_row", vec![x.clone(), row.clone()], Box::new(|t, v| { let o = t.add_row(v[0], v[1]).unwrap(); weighted(t, o, 5) })),
        ("mul_col", vec![x.clone(), col.clone()], Box::new(|t, v| { let o = t.mul_col(v[0], v[1]).unwrap(); weighted(t, o, 6) })),
        ("scale", vec![x.clone()], Box::new(|t, v| { let o = t.scale(v[0], 2.3); weighted(t, o, 7) })),
        ("add_scalar", vec![x.clone()], Box::new(|t, v| { let o = t.add_scalar(v[0], -0.4); weighted(t, o, 8) })),
        ("sigmoid", vec![x.clone()], Box::new(|t, v| { let o = t.sigmoid(v[0]).unwrap(); weighted(t, o, 9) })),
        ("tanh", vec![x.clone()], Box::new(|t, v| { let o = t.tanh(v[0]).unwrap(); weighted(t, o, 10) })),
        ("relu", vec![x.clone()], Box::new(|t, v| { let o = t.relu(v[0]).unwrap(); weighted(t, o, 11) })),
        ("exp", vec![x.clone()], Box::new(|t, v| { let o = t.exp(v[0]).unwrap(); weighted(t, o, 12) })),
        ("neg", vec![x.clone()], Box::new(|t, v| { let o = t.neg(v[0]).unwrap(); weighted(t, o, 13) })),
        ("sum", vec![x.clone()], Box::new(|t, v| { let o = t.mul(v[0], v[0]).unwrap(); t.sum(o) })),
        ("mean", vec![x.clone()], Box::new(|t, v| { let o = t.mul(v[0], v[0]).unwrap(); t.mean(o) })),
        ("concat_cols", vec![x.clone(), col], Box::new(|t, v| { let o = t.concat_cols(&[v[0], v[1]]).unwrap(); weighted(t, o, 14) })),
        ("concat_rows", vec![x.clone(), row], Box::new(|t, v| { let o = t.concat_rows(&[v[0], v[1]]).unwrap(); weighted(t, o, 15) })),
        ("slice_cols", vec![x.clone()], Box::new(|t, v| { let o = t.slice_cols(v[0], 1, 2).unwrap(); weighted(t, o, 16) })),
        ("gather_rows", vec![x.clone()], Box::new(|t, v| { let o = t.gather_rows(v[0], vec![2, 0, 2, 3]).unwrap(); weighted(t, o, 17) })),
        ("group_sum_rows", vec![x.clone()], Box::new(|t, v| { let o = t.group_sum_rows(v[0], 2).unwrap(); weighted(t, o, 18) })),
        ("softmax_rows", vec![x], Box::new(|t, v| { let o = t.softmax_rows(v[0]).unwrap(); weighted(t, o, 19) })),
    ];
    let mut worst = (0.0f64, "");
    for (name, inputs, build) in &cases {
        let e = op_fd(inputs, &**build);
        if e > worst.0 {
            worst = (e, name);
        }
    }
    ensure(worst.0 < 1e-4, || format!("{}: relative error {:e}", worst.1, worst.0))?;

    // zero parameters: every gate is σ(0) = ½ and the candidate is tanh(0) = 0
    let mut store = ParamStore::new();
    let cell = LstmCell::new(&mut store, "lstm", 3, 4, &mut rng(5));
    for v in store.values_mut() {
        v.fill(0.0);
    }
    let mut g = rng(6);
    let c_prev = Array2::from_shape_simple_fn((2, 4), || g.gen_range(-2.0..2.0));
    let mut t = Tape::new();
    let bound = t.bind(&store, false);
    let xi = t.constant(Array2::from_shape_simple_fn((2, 3), || g.gen_range(-1.0..1.0)));
    let hi = t.constant(Array2::from_shape_simple_fn((2, 4), || g.gen_range(-1.0..1.0)));
    let ci = t.constant(c_prev.clone());
    let (h1, c1) = cell.forward(&mut t, &bound, xi, hi, ci).map_err(|e| e.to_string())?;
    let mut lstm_err: f64 = 0.0;
    for ((h, c), cp) in t.value(h1).iter().zip(t.value(c1)).zip(&c_prev) {
        lstm_err = lstm_err.max((c - 0.5 * cp).abs()).max((h - 0.5 * (0.5 * cp).tanh()).abs());
    }
    ensure(lstm_err <= 1e-12, || format!("LSTM closed form off by {lstm_err:e}"))?;
    Ok(format!("{} ops, worst {} at {:.1e}; LSTM closed form {lstm_err:.1e}", cases.len(), worst.1, worst.0))
}

fn gumbel_marginals() -> Outcome {
    let logits = [0.5, -1.0, 1.2, 0.0, -0.3];
    let draws = 100_000;
    let mut t = Tape::new();
    let l = t.constant(Array2::from_shape_fn((draws, 5), |(_, c)| logits[c]));
    let y = gumbel_softmax(&mut t, l, 1.0, true, &mut rng(13)).map_err(|e| e.to_string())?;
    let samples = t.value(y);
    for (i, row) in samples.outer_iter().enumerate() {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        ensure(ones == 1 && zeros == 4, || format!("sample {i} is not one-hot: {row}"))?;
    }
    let z: f64 = logits.iter().map(|v: &f64| v.exp()).sum();
    let mut worst: f64 = 0.0;
    for (c, l) in logits.iter().enumerate() {
        let p = l.exp() / z;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let freq = samples.column(c).sum() / draws as f64;
        worst = worst.max((freq - p).abs() / se);
    }
    ensure(worst < 3.0, || format!("a marginal is {worst:.2} standard errors off"))?;
    Ok(format!("1e5 draws, all one-hot, worst marginal {worst:.2} SE"))
}

fn environment_oracles() -> Outcome {
    let cfg = EnvConfig::new(Task::Formation, 1);
    let mut s = WorldState::from_layout(&cfg, vec![[0.0, 0.0]], vec![[1.0, 1.0]]).map_err(|e| e.to_string())?;
    step(&cfg, &mut s, &[one_hot(1)], &mut rng(0)).map_err(|e| e.to_string())?;
    ensure(s.positions[0] == [0.05, 0.0], || format!("first step moved to {:?}", s.positions[0]))?;

    for n in 2..=8 {
        let cfg = EnvConfig::new(Task::Formation, n);
        let centre = [0.1, -0.2];
        let pos = (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                [centre[0] + 0.5 * a.cos(), centre[1] + 0.5 * a.sin()]
            })
            .collect();
        let s = WorldState::from_layout(&cfg, pos, vec![centre]).map_err(|e| e.to_string())?;
        let r = reward(&cfg, &s);
        ensure(r.reward.abs() < 1e-12 && r.success, || format!("n={n}: reward {} success {}", r.reward, r.success))?;
    }

    for task in Task::ALL {
        let roll = || -> cdc::Result<Vec<(Vec<Vec<f64>>, f64)>> {
            let mut env = Env::new(EnvConfig::new(task, 4).with_seed(21))?;
            let mut acts = rng(22);
            let mut out = vec![(env.reset()?, 0.0)];
            loop {
                let a: Vec<usize> = (0..4).map(|_| acts.gen_range(0..ACTIONS)).collect();
                let r = env.step(&a)?;
                out.push((r.observations, r.reward));
                if r.done {
                    break;
                }
            }
            Ok(out)
        };
        let (a, b) = (roll().map_err(|e| e.to_string())?, roll().map_err(|e| e.to_string())?);
        ensure(a == b, || format!("{task} replay diverged"))?;
    }

    let cfg = EnvConfig::new(Task::Line, 4);
    let s = WorldState::from_layout(&cfg, vec![[0.0; 2]; 4], vec![[0.0, 0.0], [1.0, 0.0]]).map_err(|e| e.to_string())?;
    let targets = target_points(&cfg, &s);
    let fractions: Vec<f64> = targets.iter().map(|t| t[0]).collect();
    ensure(fractions == [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0] && targets.iter().all(|t| t[1] == 0.0), || {
        format!("line fractions {fractions:?}")
    })?;
    Ok("first step (0.05, 0); Formation vertices n=2..8; replay on 4 tasks; Line fractions".into())
}

fn permutation_equivariance() -> Outcome {
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let mut r = rng(500 + trial);
        let n = r.gen_range(2..=7);
        let actor = CdcActor::new(8, HeatConfig::default(), &mut rng(trial));
        let obs: Vec<Vec<f64>> = (0..n).map(|_| (0..8).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| obs[i].clone()).collect();
        let base = actor.step(&obs, Mode::Eval, 1.0, &mut r).map_err(|e| e.to_string())?;
        let moved = actor.step(&permuted, Mode::Eval, 1.0, &mut r).map_err(|e| e.to_string())?;
        let (s0, s1) = (base.strengths.strengths(), moved.strengths.strengths());
        for i in 0..n {
            ensure(moved.actions[i] == base.actions[perm[i]], || format!("trial {trial}: action of agent {i} changed"))?;
            for j in 0..n {
                ensure(s1[[i, j]] == s1[[j, i]], || format!("trial {trial}: S not symmetric"))?;
                ensure(s1[[i, j]] == s0[[perm[i], perm[j]]], || format!("trial {trial}: S not conjugated"))?;
                worst = worst.max((moved.stable.heat[[i, j]] - base.stable.heat[[perm[i], perm[j]]]).abs());
            }
            let dl = (&moved.logits.row(i) - &base.logits.row(perm[i])).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            worst = worst.max(dl);
        }
    }
    ensure(worst <= 1e-10, || format!("heat or logits off by {worst:e}"))?;
    Ok(format!("20 trials, S exact, max H/logit deviation {worst:.1e}"))
}

fn desk_config(episodes: usize) -> TrainConfig {
    TrainConfig {
        episodes,
        batch_size: 128,
        eval_every: episodes,
        eval_episodes: 5,
        final_eval_episodes: 20,
        ..TrainConfig::default()
    }
}

fn threshold_study(root: &Path) -> Outcome {
    let base = RunManifest::new(Task::Formation, 3, Algorithm::Cdc, desk_config(12), vec![1, 2001], root.join("sweep"));
    let rows = threshold_sweep(&base, &SWEEP_DELTAS, 2).map_err(|e| e.to_string())?;
    let deltas: Vec<f64> = rows.iter().map(|r| r.key.delta).collect();
    ensure(deltas == SWEEP_DELTAS, || format!("sweep rows cover {deltas:?}"))?;
    ensure(rows.iter().all(|r| r.runs == 2 && r.values == 40), || "each row should pool 2 runs × 20 episodes".into())?;
    let csv = std::fs::read_to_string(base.out_dir.join("threshold_sweep.csv")).map_err(|e| e.to_string())?;
    ensure(csv.lines().count() == 1 + SWEEP_DELTAS.len(), || "threshold_sweep.csv row count".into())?;
    print!("{}", aggregate::to_table(&rows));
    Ok(format!("{} thresholds trained, table written", rows.len()))
}

fn random_policy_mean(episodes: usize) -> f64 {
    let mut env = Env::new(EnvConfig::new(Task::Navigation, 3).with_seed(77)).expect("valid env");
    let mut acts = rng(78);
    let mut total = 0.0;
    for _ in 0..episodes {
        env.reset().expect("reset");
        loop {
            let a: Vec<usize> = (0..3).map(|_| acts.gen_range(0..ACTIONS)).collect();
            let r = env.step(&a).expect("step");
            total += r.reward;
            if r.done {
                break;
            }
        }
    }
    total / episodes as f64
}

fn learning_trend(root: &Path) -> Outcome {
    let cfg = TrainConfig {
        episodes: 5000,
        seed: 1,
        final_eval_episodes: 0,
        ..TrainConfig::default()
    };
    let out = train_seed(Algorithm::Cdc, Task::Navigation, 3, &cfg, Some(&root.join("trend"))).map_err(|e| e.to_string())?;
    let mean = |s: &[cdc::envs::EpisodeMetrics]| s.iter().map(|m| m.reward).sum::<f64>() / s.len() as f64;
    let first = mean(&out.episodes[..500]);
    let last = mean(&out.episodes[out.episodes.len() - 500..]);
    let random = random_policy_mean(500);
    let gain = (last - first) / (0.0 - first);
    let summary = format!("first-500 {first:.2}, final-500 {last:.2}, gap closed {:.1}%, random {random:.2}", 100.0 * gain);
    ensure(gain >= 0.2 && last > random, || summary.clone())?;
    Ok(summary)
}

fn varying_agents(root: &Path) -> Outcome {
    let dir = root.join("pack");
    train_seed(Algorithm::Cdc, Task::DynamicPack, 4, &desk_config(40), Some(&dir)).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for n in 3..=8 {
        let report = evaluate_checkpoint(&dir.join("checkpoint_best.txt"), Some(n), 10, 1).map_err(|e| format!("n={n}: {e}"))?;
        let far = report.summary.get("farthest").ok_or("no farthest metric")?;
        ensure(report.n_agents == n && far.mean.is_finite() && far.mean > 0.0, || format!("n={n}: farthest {}", far.mean))?;
        parts.push(format!("{n}:{:.2}", far.mean));
    }
    Ok(format!("farthest distance by n {}", parts.join(" ")))
}

fn aggregation_count(root: &Path) -> Outcome {
    let cfg = TrainConfig {
        episodes: 2,
        final_eval_episodes: 100,
        eval_every: 100,
        ..TrainConfig::default()
    };
    let dir = root.join("pool");
    let manifest = RunManifest::new(Task::Navigation, 3, Algorithm::Cdc, cfg, DEFAULT_SEEDS.to_vec(), dir.clone());
    let runs = train_manifest(&manifest, 5).map_err(|e| e.to_string())?;
    let rows = aggregate_dirs(&[dir]).map_err(|e| e.to_string())?;
    ensure(rows.len() == 1, || format!("{} groups", rows.len()))?;
    let row = &rows[0];
    let rewards: Vec<f64> = runs.iter().flat_map(|r| r.outcome.final_eval.iter().map(|m| m.reward)).collect();
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    let got = row.get("reward").ok_or("no reward column")?;
    ensure(row.runs == 5 && row.values == 500 && rewards.len() == 500, || format!("{} runs, {} values", row.runs, row.values))?;
    ensure(rel(got.mean, mean, 1e-9) < 1e-12, || format!("pooled mean {} vs {mean}", got.mean))?;
    Ok(format!("{} runs → {} values per cell", row.runs, row.values))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("heat kernel identity at p=0", Box::new(heat_identity)),
        ("two-node closed form", Box::new(two_node_closed_form)),
        ("spectral vs Padé heat kernel", Box::new(spectral_matches_pade)),
        ("heat VJP vs finite differences", Box::new(heat_vjp_vs_fd)),
        ("end-to-end actor gradients", Box::new(actor_gradient_check)),
        ("autodiff ops and LSTM closed form", Box::new(autodiff_suite)),
        ("Gumbel-Softmax marginals", Box::new(gumbel_marginals)),
        ("environment oracles", Box::new(environment_oracles)),
        ("permutation equivariance", Box::new(permutation_equivariance)),
        ("threshold study harness", Box::new(|| threshold_study(root))),
        ("learning trend on Navigation n=3", Box::new(|| learning_trend(root))),
        ("varying-N execution", Box::new(|| varying_agents(root))),
        ("aggregation arithmetic", Box::new(|| aggregation_count(root))),
    ];
    let only = std::env::var("CDC_ACCEPT_ONLY").ok();
    let mut failed = 0;
    for (name, check) in &criteria {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<36} {secs:>7.1}s  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<36} {secs:>7.1}s  {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
