//! Finite-difference checks for every differentiable op on random shapes,
//! 64-bit. Each op is checked on a requested number of pairwise-distinct
//! shape configurations.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::param_errors;
use super::{Graph, ParamId, ParamSet, PoolMode, Tensor, Var};
use crate::{Error, Result};

pub const OPS: [&str; 15] = [
    "conv1d",
    "max_pool",
    "max_pool_global",
    "avg_pool",
    "avg_pool_global",
    "relu",
    "dense",
    "batch_norm_train",
    "batch_norm_eval",
    "attention",
    "l2_normalize",
    "clip_loss",
    "contrastive_head",
    "text_pipeline",
    "residual_plumbing",
];

#[derive(Debug, Clone, PartialEq)]
pub struct OpReport {
    pub op: &'static str,
    /// Distinct shape configurations checked.
    pub shapes: usize,
    /// Largest relative error over all cases and parameters.
    pub worst: f64,
    /// `case/param` of the worst error.
    pub worst_at: String,
}

type Build = Box<dyn for<'g> Fn(&mut Graph<'g, f64>) -> Result<Var>>;

struct Instance {
    key: Vec<usize>,
    params: ParamSet<f64>,
    build: Build,
}

fn gaussian(shape: &[usize], r: &mut ChaCha8Rng) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| r.random_range(-1.0..1.0))
}

/// Values at least 0.04 apart and at least 0.02 away from zero, so max and
/// ReLU kinks stay outside the finite-difference step.
fn separated(shape: &[usize], r: &mut ChaCha8Rng) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(r);
    let half = n as f64 / 2.0;
    let data = perm
        .iter()
        .map(|&p| (p as f64 - half).floor() * 0.05 + 0.02 + r.random_range(0.0..0.01))
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches data")
}

fn p(i: usize) -> ParamId {
    ParamId(i)
}

fn pool_instance(r: &mut ChaCha8Rng, mode: PoolMode, global: bool) -> Instance {
    let (b, c) = (r.random_range(1..=2), r.random_range(1..=3));
    let (win, stride) = (r.random_range(1..=4), r.random_range(1..=3));
    let l = win + r.random_range(0..=7);
    let mut params = ParamSet::new();
    params.add("x", separated(&[b, c, l], r));
    let key = if global { vec![b, c, l] } else { vec![b, c, l, win, stride] };
    Instance {
        key,
        params,
        build: Box::new(move |g| {
            let x = g.param(p(0));
            if global {
                g.global_pool(x, mode)
            } else {
                g.pool1d(x, mode, win, stride)
            }
        }),
    }
}

fn bn_instance(r: &mut ChaCha8Rng, training: bool) -> Instance {
    let b = r.random_range(2..=4);
    let c = r.random_range(1..=3);
    let shape: Vec<usize> = if r.random_bool(0.3) {
        vec![b, c]
    } else {
        vec![b, c, r.random_range(1..=5)]
    };
    let mut params = ParamSet::new();
    params.add("x", gaussian(&shape, r));
    params.add("gamma", gaussian(&[c], r));
    params.add("beta", gaussian(&[c], r));
    let mean = params.add_buffer("mean", gaussian(&[c], r));
    let var = params.add_buffer("var", Tensor::from_fn(&[c], |_| r.random_range(0.5..2.0)));
    Instance {
        key: shape,
        params,
        build: Box::new(move |g| {
            let (x, ga, be) = (g.param(p(0)), g.param(p(1)), g.param(p(2)));
            g.batch_norm(x, ga, be, mean, var, 0.1, 1e-5, training)
        }),
    }
}

fn instance(op: &str, r: &mut ChaCha8Rng) -> Result<Instance> {
    let mut params = ParamSet::new();
    Ok(match op {
        "conv1d" => {
            let (b, cin, cout) = (r.random_range(1..=3), r.random_range(1..=3), r.random_range(1..=3));
            let (k, s) = (r.random_range(1..=4), r.random_range(1..=3));
            let l = k + r.random_range(0..=8);
            params.add("x", gaussian(&[b, cin, l], r));
            params.add("w", gaussian(&[cout, cin, k], r));
            params.add("b", gaussian(&[cout], r));
            Instance {
                key: vec![b, cin, cout, k, s, l],
                params,
                build: Box::new(move |g| {
                    let (x, w, bb) = (g.param(p(0)), g.param(p(1)), g.param(p(2)));
                    g.conv1d(x, w, Some(bb), s)
                }),
            }
        }
        "max_pool" => pool_instance(r, PoolMode::Max, false),
        "max_pool_global" => pool_instance(r, PoolMode::Max, true),
        "avg_pool" => pool_instance(r, PoolMode::Avg, false),
        "avg_pool_global" => pool_instance(r, PoolMode::Avg, true),
        "relu" => {
            let shape = vec![r.random_range(1..=3), r.random_range(1..=4), r.random_range(1..=6)];
            params.add("x", separated(&shape, r));
            Instance {
                key: shape,
                params,
                build: Box::new(|g| {
                    let x = g.param(p(0));
                    Ok(g.relu(x))
                }),
            }
        }
        "dense" => {
            let (n, m) = (r.random_range(1..=5), r.random_range(1..=5));
            let mut xs: Vec<usize> = if r.random_bool(0.5) {
                vec![r.random_range(1..=4)]
            } else {
                vec![r.random_range(1..=3), r.random_range(1..=3)]
            };
            xs.push(n);
            params.add("x", gaussian(&xs, r));
            params.add("w", gaussian(&[n, m], r));
            params.add("b", gaussian(&[m], r));
            xs.push(m);
            Instance {
                key: xs,
                params,
                build: Box::new(|g| {
                    let (x, w, b) = (g.param(p(0)), g.param(p(1)), g.param(p(2)));
                    g.linear(x, w, Some(b))
                }),
            }
        }
        "batch_norm_train" => bn_instance(r, true),
        "batch_norm_eval" => bn_instance(r, false),
        "attention" => {
            let (b, t) = (r.random_range(1..=2), r.random_range(1..=5));
            let heads = r.random_range(1..=3);
            let d = heads * r.random_range(1..=3);
            let mut mask: Vec<bool> = (0..b * t).map(|_| r.random_bool(0.7)).collect();
            for s in 0..b {
                mask[s * t] = true;
            }
            for name in ["q", "k", "v"] {
                params.add(name, gaussian(&[b, t, d], r));
            }
            Instance {
                key: vec![b, t, heads, d],
                params,
                build: Box::new(move |g| {
                    let (q, k, v) = (g.param(p(0)), g.param(p(1)), g.param(p(2)));
                    g.attention(q, k, v, heads, &mask)
                }),
            }
        }
        "l2_normalize" => {
            let shape = vec![r.random_range(1..=5), r.random_range(1..=8)];
            params.add("x", gaussian(&shape, r));
            Instance {
                key: shape,
                params,
                build: Box::new(|g| {
                    let x = g.param(p(0));
                    Ok(g.l2_normalize(x))
                }),
            }
        }
        "clip_loss" => {
            let n = r.random_range(1..=24);
            params.add("sim", Tensor::from_fn(&[n, n], |_| r.random_range(-3.0..3.0)));
            Instance {
                key: vec![n],
                params,
                build: Box::new(|g| {
                    let sim = g.param(p(0));
                    g.clip_loss(sim)
                }),
            }
        }
        "contrastive_head" => {
            let (n, d) = (r.random_range(1..=8), r.random_range(2..=6));
            params.add("c", gaussian(&[n, d], r));
            params.add("t", gaussian(&[n, d], r));
            params.add("s", Tensor::scalar(r.random_range(0.0..2.0)));
            Instance {
                key: vec![n, d],
                params,
                build: Box::new(|g| {
                    let c = g.param(p(0));
                    let c = g.l2_normalize(c);
                    let t = g.param(p(1));
                    let t = g.l2_normalize(t);
                    let sim = g.matmul_nt(c, t)?;
                    let s = g.param(p(2));
                    let logits = g.scale_by_exp(sim, s, 100.0)?;
                    g.clip_loss(logits)
                }),
            }
        }
        "text_pipeline" => {
            let (b, t, d, v) = (r.random_range(1..=3), r.random_range(1..=4), r.random_range(1..=4), 6);
            let idx: Vec<usize> = (0..b * t).map(|_| r.random_range(0..v)).collect();
            let mut mask: Vec<bool> = (0..b * t).map(|_| r.random_bool(0.6)).collect();
            for s in 0..b {
                mask[s * t] = true;
            }
            params.add("tok", gaussian(&[v, d], r));
            params.add("pos", gaussian(&[t + 2, d], r));
            Instance {
                key: vec![b, t, d],
                params,
                build: Box::new(move |g| {
                    let tok = g.param(p(0));
                    let pos = g.param(p(1));
                    let e = g.embedding(tok, &idx, &[b, t])?;
                    let x = g.add_positions(e, pos)?;
                    g.masked_mean(x, &mask)
                }),
            }
        }
        "residual_plumbing" => {
            let (b, c, k) = (r.random_range(1..=2), r.random_range(1..=3), r.random_range(2..=3));
            let l = 2 * k + r.random_range(0..=4);
            params.add("x", gaussian(&[b, c, l], r));
            params.add("w", gaussian(&[c, c, k], r));
            params.add("s", gaussian(&[c, c, 1], r));
            Instance {
                key: vec![b, c, k, l],
                params,
                build: Box::new(move |g| {
                    let (x, w, s) = (g.param(p(0)), g.param(p(1)), g.param(p(2)));
                    let main = g.conv1d(x, w, None, 1)?;
                    let short = g.conv1d(x, s, None, 1)?;
                    let len = g.shape(main)[2];
                    let short = g.crop(short, (k - 1) / 2, len)?;
                    let sum = g.add(main, short)?;
                    g.flatten(sum)
                }),
            }
        }
        other => return Err(Error::Shape(format!("no gradient case for op {other:?}"))),
    })
}

/// Checks `op` on `shapes` distinct random shape configurations.
pub fn check_op(op: &str, shapes: usize, seed: u64) -> Result<OpReport> {
    let name = OPS
        .iter()
        .copied()
        .find(|o| *o == op)
        .ok_or_else(|| Error::Shape(format!("no gradient case for op {op:?}")))?;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut report = OpReport {
        op: name,
        shapes: 0,
        worst: 0.0,
        worst_at: String::new(),
    };
    let mut draws = 0;
    while report.shapes < shapes {
        draws += 1;
        if draws > 200 * shapes {
            return Err(Error::Shape(format!("{op}: only {} distinct shapes found", report.shapes)));
        }
        let inst = instance(op, &mut r)?;
        if !seen.insert(inst.key.clone()) {
            continue;
        }
        let case = report.shapes;
        for (param, err) in param_errors(&inst.params, &inst.build, seed ^ case as u64)? {
            if !(err <= report.worst) {
                report.worst = err;
                report.worst_at = format!("{:?}/{param}", inst.key);
            }
        }
        report.shapes += 1;
    }
    Ok(report)
}

/// Every op in [`OPS`].
pub fn run_suite(shapes: usize, seed: u64) -> Result<Vec<OpReport>> {
    OPS.iter().map(|op| check_op(op, shapes, seed)).collect()
}
