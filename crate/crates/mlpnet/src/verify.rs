//! Verification suites: realization identities, gadget accuracy, compiler
//! agreement with the direct estimator, and PDE accuracy against oracles.
//!
//! Every check is deterministic in its seed and reports the measured value,
//! the threshold it is gated on, and a short detail string.

use std::path::PathBuf;
use std::time::Instant;

use mlpnet_core::calculus::{self, identity_net, IdentityNet};
use mlpnet_core::compiler::{
    self, compile_fixed_time, compile_space_time, fixed_time_depth_bound, fixed_time_width_bound, grid_hat,
    interpolation_bound,
};
use mlpnet_core::gadgets::{self, envelope, GadgetBudget, HatSpec};
use mlpnet_core::mlp::{mlp_estimate, mlp_estimate_with, MlpParams, MultiIndex, RandomField};
use mlpnet_core::net::Scratch;
use mlpnet_core::problem::{MeasureSpec, Nonlinearity, ProblemSpec, TerminalData};
use mlpnet_core::schedule::{brownian_moment, brownian_moment_bound};
use mlpnet_core::{Activation, Csr, Layer, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bench::{self, BenchConfig};
use crate::format::{self, NetworkFile};
use crate::oracle::{self, FdGrid};
use crate::par::{self, Parallel};

type Fallible<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

/// Outcome of one gated measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Calculus,
    Gadgets,
    Compiler,
    Pde,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Calculus, Suite::Gadgets, Suite::Compiler, Suite::Pde];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Calculus => "calculus",
            Suite::Gadgets => "gadgets",
            Suite::Compiler => "compiler",
            Suite::Pde => "pde",
        }
    }
}

struct Outcome {
    measured: f64,
    threshold: f64,
    passed: bool,
    detail: String,
}

impl Outcome {
    fn at_most(measured: f64, threshold: f64, detail: String) -> Self {
        Outcome { measured, threshold, passed: measured <= threshold, detail }
    }
}

fn run(name: &str, f: impl FnOnce() -> Fallible<Outcome>) -> CheckResult {
    let start = Instant::now();
    let out = f();
    let seconds = start.elapsed().as_secs_f64();
    match out {
        Ok(o) => CheckResult {
            name: name.to_string(),
            passed: o.passed && o.measured.is_finite(),
            measured: o.measured,
            threshold: o.threshold,
            detail: o.detail,
            seconds,
        },
        Err(e) => CheckResult {
            name: name.to_string(),
            passed: false,
            measured: f64::NAN,
            threshold: f64::NAN,
            detail: format!("error: {e}"),
            seconds,
        },
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Deviation of `a` from `b` relative to `max{1, |b|}`.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn leaky() -> Activation {
    Activation::LeakyRelu { alpha: 0.5 }
}

/// Dense network with `depth` layers, hidden widths in `1..=max_width` and
/// entries uniform in `[-1, 1]`.
pub fn random_network<R: Rng>(rng: &mut R, input: usize, output: usize, depth: usize, max_width: usize) -> Network {
    let mut widths = vec![input];
    for _ in 1..depth {
        widths.push(rng.random_range(1..=max_width));
    }
    widths.push(output);
    let layers = widths
        .windows(2)
        .map(|w| {
            let (cols, rows) = (w[0], w[1]);
            let m: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let b: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..=1.0)).collect();
            Layer::new(Csr::from_dense(rows, cols, &m), b).expect("consistent shapes")
        })
        .collect();
    Network::new(layers).expect("consistent chain")
}

/// The three activation families, with a random leaky slope.
pub fn random_activation<R: Rng>(rng: &mut R, k: usize) -> Activation {
    match k % 3 {
        0 => Activation::Relu,
        1 => Activation::LeakyRelu { alpha: rng.random_range(0.05..0.95) },
        _ => Activation::Softplus,
    }
}

fn random_point<R: Rng>(rng: &mut R, d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-r..=r)).collect()
}

// ---------------------------------------------------------------- calculus

/// Realization identities and structural bookkeeping of the network calculus
/// on `trials` random tuples.
pub fn calculus_algebra(trials: usize, seed: u64) -> CheckResult {
    run("calculus_algebra", || {
        let mut worst: f64 = 0.0;
        let mut structural = Vec::new();
        let mut evaluations = 0usize;
        for trial in 0..trials {
            let mut rng = rng_for(seed, trial as u64);
            let act = random_activation(&mut rng, trial);
            let tol = if act == Activation::Softplus { 1e-7 } else { 1e-10 };
            let j = identity_net(act)?;
            let mut note = |ok: bool, what: &str| {
                if !ok {
                    structural.push(format!("trial {trial} ({act}): {what}"));
                }
            };
            let mut track = |a: f64, b: f64| {
                worst = worst.max(rel_dev(a, b) / tol);
                evaluations += 1;
            };
            let depth = |rng: &mut ChaCha8Rng| rng.random_range(1..=4);
            let d = rng.random_range(1..=3);

            // compose
            let mid = rng.random_range(1..=3);
            let out = rng.random_range(1..=2);
            let (lp, lq) = (depth(&mut rng), depth(&mut rng));
            let psi = random_network(&mut rng, d, mid, lp, 6);
            let phi = random_network(&mut rng, mid, out, lq, 6);
            let c = calculus::compose(&phi, &psi)?;
            note(c.depth() == phi.depth() + psi.depth() - 1, "compose depth");
            for _ in 0..3 {
                let x = random_point(&mut rng, d, 5.0);
                let inner = psi.realize(act, &x)?;
                let expect = phi.realize(act, &inner)?;
                for (a, b) in c.realize(act, &x)?.iter().zip(&expect) {
                    track(*a, *b);
                }
            }

            // parallel_same
            let l = depth(&mut rng);
            let (d1, d2) = (rng.random_range(1..=3), rng.random_range(1..=3));
            let (o1, o2) = (rng.random_range(1..=2), rng.random_range(1..=2));
            let p1 = random_network(&mut rng, d1, o1, l, 6);
            let p2 = random_network(&mut rng, d2, o2, l, 6);
            let p = calculus::parallel_same(&[p1.clone(), p2.clone()])?;
            note(p.param_count() <= 4 * (p1.param_count() + p2.param_count()), "parallel size");
            for _ in 0..3 {
                let x1 = random_point(&mut rng, d1, 5.0);
                let x2 = random_point(&mut rng, d2, 5.0);
                let both: Vec<f64> = x1.iter().chain(&x2).copied().collect();
                let mut expect = p1.realize(act, &x1)?;
                expect.extend(p2.realize(act, &x2)?);
                for (a, b) in p.realize(act, &both)?.iter().zip(&expect) {
                    track(*a, *b);
                }
            }

            // sum_same
            let l = depth(&mut rng);
            let o = rng.random_range(1..=2);
            let s1 = random_network(&mut rng, d, o, l, 6);
            let s2 = random_network(&mut rng, d, o, l, 6);
            let s = calculus::sum_same(&[s1.clone(), s2.clone()])?;
            note(s.depth() == l, "sum_same depth");

            // sum_diff, parallel_general and extend on scalar members
            let count = rng.random_range(2..=4);
            let members: Vec<Network> = (0..count).map(|_| {
                let l = depth(&mut rng);
                random_network(&mut rng, d, 1, l, 6)
            }).collect();
            let sd = calculus::sum_diff(&members, &j)?;
            let max_depth = members.iter().map(Network::depth).max().unwrap_or(1);
            let member_width = members.iter().map(|m| m.dims().max_width()).max().unwrap_or(0);
            note(sd.depth() == max_depth, "sum_diff depth");
            note(sd.dims().max_width() <= count * j.width().max(member_width), "sum_diff width");
            let pg = calculus::parallel_general(&members[..2], &j)?;
            note(pg.depth() == members[0].depth().max(members[1].depth()), "parallel_general depth");
            let target = members[0].depth() + rng.random_range(0..=3);
            let ext = calculus::extend(&members[0], target, &j)?;
            note(ext.depth() == target, "extend depth");
            note(ext.dims().max_width() <= j.width().max(members[0].dims().max_width()), "extend width");
            let lambda = rng.random_range(-3.0..=3.0);
            let sc = calculus::scale(lambda, &members[1])?;
            note(sc.param_count() == members[1].param_count(), "scale size");

            for _ in 0..3 {
                let x = random_point(&mut rng, d, 5.0);
                let a1 = s1.realize(act, &x)?;
                let a2 = s2.realize(act, &x)?;
                for (k, v) in s.realize(act, &x)?.iter().enumerate() {
                    track(*v, a1[k] + a2[k]);
                }
                let vals: Vec<f64> = members.iter().map(|m| m.realize_scalar(act, &x)).collect::<Result<_, _>>()?;
                let folded = vals.iter().fold(0.0, |a, b| a + b);
                track(sd.realize_scalar(act, &x)?, folded);
                let both: Vec<f64> = x.iter().chain(&x).copied().collect();
                let pv = pg.realize(act, &both)?;
                track(pv[0], vals[0]);
                track(pv[1], vals[1]);
                track(ext.realize_scalar(act, &x)?, vals[0]);
                track(sc.realize_scalar(act, &x)?, lambda * vals[1]);
            }
        }
        let passed = worst <= 1.0 && structural.is_empty();
        let mut detail = format!("{trials} tuples, {evaluations} comparisons, worst deviation / tolerance {worst:.3e}");
        if !structural.is_empty() {
            detail.push_str(&format!("; {} structural failures, first: {}", structural.len(), structural[0]));
        }
        Ok(Outcome { measured: worst, threshold: 1.0, passed, detail })
    })
}

/// The identity networks realize `id` on `[-100, 100]`.
pub fn identity_nets() -> CheckResult {
    run("identity_nets", || {
        let mut worst: f64 = 0.0;
        for act in [Activation::Relu, leaky(), Activation::LeakyRelu { alpha: 0.1 }, Activation::Softplus] {
            let j = identity_net(act)?;
            for i in 0..=2000 {
                let x = -100.0 + 0.1 * i as f64;
                worst = worst.max((j.net.realize_scalar(act, &[x])? - x).abs());
            }
        }
        Ok(Outcome::at_most(worst, 1e-9, "relu, leaky 0.5 and 0.1, softplus on 2001 points".into()))
    })
}

/// The leaky-to-ReLU conversion on `[-10, 10]`.
pub fn relu_conversion() -> CheckResult {
    run("relu_from_leaky", || {
        let mut worst: f64 = 0.0;
        for alpha in [0.1, 0.5, -0.5, 2.0] {
            let (_, net) = calculus::relu_from_leaky(1, alpha)?;
            let act = Activation::LeakyRelu { alpha };
            for i in 0..=2000 {
                let x = -10.0 + 0.01 * i as f64;
                worst = worst.max((net.realize_scalar(act, &[x])? - x.max(0.0)).abs());
            }
        }
        Ok(Outcome::at_most(worst, 1e-12, "alpha in {0.1, 0.5, -0.5, 2}".into()))
    })
}

// ----------------------------------------------------------------- gadgets

/// Exactness and shape of the hat network on random knot triples.
pub fn hat_exactness(triples: usize, seed: u64) -> CheckResult {
    run("hat_exactness", || {
        let mut worst: f64 = 0.0;
        let mut shape_failures = 0;
        for k in 0..triples {
            let mut rng = rng_for(seed, 1000 + k as u64);
            let t0 = rng.random_range(-2.0..2.0);
            let t1 = t0 + rng.random_range(0.1..2.0);
            let t2 = t1 + rng.random_range(0.1..2.0);
            let spec = HatSpec::new(t0, t1, t2)?;
            for alpha in [0.1, 0.5] {
                let act = Activation::LeakyRelu { alpha };
                let h = gadgets::hat_net(&spec, act, 1.0, 3.0)?;
                if h.widths() != [1, 6, 1] || h.param_count() != 19 {
                    shape_failures += 1;
                }
                let (lo, hi) = (t0 - 1.0, t2 + 1.0);
                for i in 0..1000 {
                    let t = lo + (hi - lo) * i as f64 / 999.0;
                    worst = worst.max((h.realize_scalar(act, &[t])? - spec.eval(t)).abs());
                }
            }
        }
        Ok(Outcome {
            measured: worst,
            threshold: 1e-12,
            passed: worst <= 1e-12 && shape_failures == 0,
            detail: format!("{triples} triples x 2 slopes x 1000 points; {shape_failures} shape mismatches"),
        })
    })
}

/// Grid supremum of the product gadget's relative error and its size against
/// the closed-form allowance. `side` is the number of grid points per axis.
pub fn product_gadget(eps: f64, q: f64, act: Activation, side: usize) -> CheckResult {
    run(&format!("product_gadget[eps={eps},q={q},{act}]"), || {
        let budget = GadgetBudget::new(eps, q)?;
        let net = gadgets::product_net(&budget, act)?;
        let bound = gadgets::product_param_bound(eps, q, act);
        let step = 6.0 / (side - 1) as f64;
        let worst = (0..side)
            .into_par_iter()
            .map_init(Scratch::default, |s, i| {
                let v = -3.0 + step * i as f64;
                let mut w_max: f64 = 0.0;
                for k in 0..side {
                    let w = -3.0 + step * k as f64;
                    let y = net.realize_with(act, &[v, w], s).map(|y| y[0]).unwrap_or(f64::NAN);
                    let e = (y - v * w).abs() / envelope(v, q).max(envelope(w, q));
                    w_max = if e.is_nan() { f64::NAN } else { w_max.max(e) };
                }
                w_max
            })
            .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
        let params = net.param_count() as f64;
        Ok(Outcome {
            measured: worst,
            threshold: eps,
            passed: worst <= eps && params <= bound,
            detail: format!("{side}^2 grid on [-3,3]^2; params {params} vs allowance {bound:.3e}; depth {}", net.depth()),
        })
    })
}

/// The full product-gadget gate over its six configurations.
pub fn product_gadget_all(side: usize) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (eps, q) in [(0.5, 3.0), (0.25, 3.0), (0.1, 4.0)] {
        for act in [leaky(), Activation::Softplus] {
            out.push(product_gadget(eps, q, act, side));
        }
    }
    out
}

/// The square gadget within `eps max{1, |x|^q}` on `[-10, 10]`.
pub fn square_gadget() -> CheckResult {
    run("square_gadget", || {
        let mut worst: f64 = 0.0;
        for (eps, q) in [(0.5, 3.0), (0.1, 4.0)] {
            for act in [Activation::Relu, leaky(), Activation::Softplus] {
                let net = gadgets::square_net(&GadgetBudget::new(eps, q)?, act)?;
                for i in 0..=4000 {
                    let x = -10.0 + 0.005 * i as f64;
                    let e = (net.realize_scalar(act, &[x])? - x * x).abs() / envelope(x, q);
                    worst = worst.max(e / eps);
                }
            }
        }
        Ok(Outcome::at_most(worst, 1.0, "worst error / eps over (0.5,3), (0.1,4) and three activations".into()))
    })
}

// ---------------------------------------------------------------- compiler

fn ridge_and_sine(d: usize, act: Activation) -> Fallible<(Network, Network, IdentityNet)> {
    let g = TerminalData::Ridge { a: 1.0 }.network(d, act, 1e-9, 4.0, 41)?;
    let f = Nonlinearity::Sine.network(act, 1e-9, 3.0, 13)?;
    Ok((g, f, identity_net(act)?))
}

/// Compiled fixed-time networks against the direct estimator with shared draws,
/// over every `(n, M, d, t)` in the given sets.
pub fn fixed_time_agreement(ns: &[u32], ms: &[u32], dims: &[usize], points: usize, seed: u64) -> CheckResult {
    run("fixed_time_vs_direct", || {
        let act = leaky();
        let horizon = 1.0;
        let mut worst: f64 = 0.0;
        let mut configs = 0;
        let mut bound_failures = 0;
        for &d in dims {
            let (g, f, j) = ridge_and_sine(d, act)?;
            let gf = |x: &[f64]| g.realize_scalar(act, x).expect("terminal input");
            let ff = |u: f64| f.realize_scalar(act, &[u]).expect("scalar input");
            for &n in ns {
                for &m in ms {
                    for t in [0.0, horizon / 3.0, horizon] {
                        configs += 1;
                        let params = MlpParams { n, m, horizon, t, d };
                        let field = RandomField::new(seed ^ (configs as u64) << 8, d, horizon);
                        let theta = MultiIndex::root();
                        let c = compile_fixed_time(&params, &theta, &g, &f, &j, act, &field)?;
                        if c.net.depth() > fixed_time_depth_bound(n, &g, &f, &j)
                            || c.net.dims().max_width() as f64 > fixed_time_width_bound(n, m, &g, &f, &j)
                        {
                            bound_failures += 1;
                        }
                        let mut rng = rng_for(seed, 5000 + configs as u64);
                        let xs: Vec<Vec<f64>> = (0..points).map(|_| random_point(&mut rng, d, 2.0)).collect();
                        let compiled = par::realize_points(&c.net, act, &xs)?;
                        for (x, a) in xs.iter().zip(&compiled) {
                            let b = mlp_estimate(&params, x, &gf, &ff, &field, &theta)?;
                            worst = worst.max(rel_dev(*a, b));
                        }
                    }
                }
            }
        }
        Ok(Outcome {
            measured: worst,
            threshold: 1e-8,
            passed: worst <= 1e-8 && bound_failures == 0,
            detail: format!("{configs} configurations x {points} points; {bound_failures} depth/width bound violations"),
        })
    })
}

/// Space-time network against the hat interpolation of directly computed
/// grid values, gated on the interpolation allowance with measured `|U|`.
pub fn space_time_bound(points: usize, seed: u64) -> CheckResult {
    run("space_time_interpolation", || {
        let (n, m, big_k, d, gamma, q, horizon) = (2, 2, 4, 2, 1e-3, 3.0, 1.0);
        let act = leaky();
        let (g, f, j) = ridge_and_sine(d, act)?;
        let gf = |x: &[f64]| g.realize_scalar(act, x).expect("terminal input");
        let ff = |u: f64| f.realize_scalar(act, &[u]).expect("scalar input");
        let field = RandomField::new(seed, d, horizon);
        let theta = MultiIndex::root();
        let params = MlpParams { n, m, horizon, t: 0.0, d };
        let c = compile_space_time(&params, big_k, gamma, q, &theta, &g, &f, &j, act, &field)?;
        let hats: Vec<HatSpec> = (0..=big_k).map(|k| grid_hat(k, big_k, horizon)).collect::<Result<_, _>>()?;
        let pts = oracle::sample_points(&MeasureSpec::new(-1.0, 1.0)?, horizon, d, points, seed ^ 0xa5);
        let mut worst_ratio: f64 = 0.0;
        let mut worst_dev: f64 = 0.0;
        for p in &pts {
            let (t, x) = (p[0], &p[1..]);
            let u: Vec<f64> = c
                .grid
                .iter()
                .map(|&tk| mlp_estimate(&MlpParams { t: tk, ..params }, x, &gf, &ff, &field, &theta))
                .collect::<Result<_, _>>()?;
            let direct: f64 = hats.iter().zip(&u).map(|(h, v)| h.eval(t) * v).sum();
            let dev = (c.net.realize_scalar(act, p)? - direct).abs();
            let allowance = interpolation_bound(gamma, q, horizon, &u);
            worst_dev = worst_dev.max(dev);
            worst_ratio = worst_ratio.max(dev / allowance);
        }
        Ok(Outcome::at_most(
            worst_ratio,
            1.0,
            format!("{points} points; worst deviation {worst_dev:.3e}; ratio to allowance reported"),
        ))
    })
}

/// Clock maps of `time_shift` and `to_initial_value` and their size allowances.
pub fn transform_identities(probes: usize, seed: u64) -> CheckResult {
    run("transform_identities", || {
        let horizon = 1.0;
        let diffusion = 0.5;
        let mut worst: f64 = 0.0;
        let mut size_failures = Vec::new();
        for (k, act) in [Activation::Relu, leaky(), Activation::Softplus].into_iter().enumerate() {
            let j = identity_net(act)?;
            let w = j.width() as f64;
            for d in 1..=3usize {
                let mut rng = rng_for(seed, 9000 + (10 * k + d) as u64);
                let l = rng.random_range(1..=4);
                let f = random_network(&mut rng, d + 1, 1, l, 6);
                let shifted = calculus::time_shift(&f, horizon, -1.0, &j)?;
                let allowance = 96.0 * w * w * (d * d) as f64 * f.param_count() as f64;
                if shifted.param_count() as f64 > allowance {
                    size_failures.push(format!("time_shift {act} d={d}"));
                }
                let iv = compiler::to_initial_value(&f, horizon, diffusion, &j)?;
                if iv.param_count() as f64 > compiler::initial_value_param_bound(&f, d, &j) {
                    size_failures.push(format!("to_initial_value {act} d={d}"));
                }
                for _ in 0..probes {
                    let s = rng.random_range(0.0..=horizon);
                    let x = random_point(&mut rng, d, 1.0);
                    let at = |time: f64| -> Fallible<f64> {
                        let mut p = vec![time];
                        p.extend_from_slice(&x);
                        Ok(f.realize_scalar(act, &p)?)
                    };
                    let mut p = vec![s];
                    p.extend_from_slice(&x);
                    worst = worst.max(rel_dev(shifted.realize_scalar(act, &p)?, at(horizon - s)?));
                    let clock = 2.0 * diffusion * (horizon - s);
                    worst = worst.max(rel_dev(iv.realize_scalar(act, &p)?, at(clock)?));
                }
            }
        }
        Ok(Outcome {
            measured: worst,
            threshold: 1e-10,
            passed: worst <= 1e-10 && size_failures.is_empty(),
            detail: format!("{probes} probes per (activation, d); size violations: {size_failures:?}"),
        })
    })
}

/// Parameter counts of the benchmark family: fitted slope, adjacent growth and
/// recount from a serialized file.
pub fn parameter_scaling(dims: &[usize], seed: u64) -> CheckResult {
    run("parameter_scaling", || {
        let cfg = BenchConfig { seed, error_samples: 0, timing: false, ..BenchConfig::default() };
        let rows = bench::cod_benchmark(dims, &cfg)?;
        let slope = bench::param_slope(&rows);
        let growth = rows
            .windows(2)
            .filter(|w| w[1].d == 2 * w[0].d)
            .map(|w| w[1].params as f64 / w[0].params as f64)
            .fold(0.0, f64::max);
        let last = dims.last().copied().ok_or("no dimensions")?;
        let net = bench::build(last, &cfg)?.net;
        let path = scratch_path(&format!("cod_d{last}_{seed}.json"));
        format::save_network(&path, &net, cfg.act)?;
        let recount = format::read_network_file(&path)?.param_count();
        let (reloaded, _) = NetworkFile::to_network(&format::read_network_file(&path)?)?;
        let _ = std::fs::remove_file(&path);
        let row = rows.last().ok_or("no rows")?;
        let consistent = recount == row.params && reloaded.dims().param_count == row.params;
        let counts: Vec<String> = rows.iter().map(|r| format!("d={}:{}", r.d, r.params)).collect();
        Ok(Outcome {
            measured: slope,
            threshold: 3.1,
            passed: slope <= 3.1 && growth <= 8.5 && consistent,
            detail: format!(
                "params {}; max doubling factor {growth:.3}; file recount {recount} vs {} ({})",
                counts.join(" "),
                row.params,
                if consistent { "match" } else { "MISMATCH" }
            ),
        })
    })
}

fn scratch_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("mlpnet-{}-{name}", std::process::id()))
}

// --------------------------------------------------------------------- pde

fn bump_problem(f: Nonlinearity) -> ProblemSpec {
    ProblemSpec::new(1, 1.0, f, TerminalData::GaussianBump { a: 1.0 })
}

/// Median over seeds of the relative error of the direct estimator at `(0, 0)`
/// on the linear problem.
pub fn mlp_linear_accuracy(seeds: u64, level: u32) -> CheckResult {
    run("mlp_linear_accuracy", || {
        let spec = bump_problem(Nonlinearity::Linear { c: 1.0 });
        let exact = oracle::oracle_linear(&spec, 0.0, &[0.0])?.value;
        let gf = |x: &[f64]| spec.g.eval(x);
        let ff = |u: f64| u;
        let params = MlpParams { n: level, m: level, horizon: 1.0, t: 0.0, d: 1 };
        let mut errs = Vec::new();
        for s in 0..seeds {
            let field = RandomField::new(s, 1, 1.0);
            let v = mlp_estimate_with(&params, &[0.0], &gf, &ff, &field, &MultiIndex::root(), &Parallel)?;
            errs.push((v - exact).abs() / exact.abs());
        }
        let med = median(&mut errs);
        let q = |p: f64| errs[((errs.len() - 1) as f64 * p).round() as usize];
        Ok(Outcome::at_most(
            med,
            0.05,
            format!(
                "oracle {exact:.12}; relative error over {seeds} seeds: min {:.4} q25 {:.4} median {med:.4} q75 {:.4} max {:.4}",
                q(0.0),
                q(0.25),
                q(0.75),
                q(1.0)
            ),
        ))
    })
}

/// `L^2` error of a compiled space-time network on the linear problem over the
/// uniform measure on `[0, T] x [-1, 1]`, gated at threshold plus three
/// standard errors.
pub fn space_time_l2(samples: usize, seed: u64) -> CheckResult {
    run("space_time_l2_error", || {
        let act = leaky();
        let spec = bump_problem(Nonlinearity::Linear { c: 1.0 });
        let g = spec.g.network(1, act, 1e-6, 6.0, 241)?;
        let f = spec.f.network(act, 1e-6, 6.0, 241)?;
        let j = identity_net(act)?;
        let field = RandomField::new(seed, 1, 1.0);
        let params = MlpParams { n: 3, m: 3, horizon: 1.0, t: 0.0, d: 1 };
        let c = compile_space_time(&params, 8, 1e-3, 3.0, &MultiIndex::root(), &g, &f, &j, act, &field)?;
        let measure = MeasureSpec::new(-1.0, 1.0)?;
        let pts = oracle::sample_points(&measure, 1.0, 1, samples, seed ^ 0x12);
        let approx = par::realize_points(&c.net, act, &pts)?;
        let exact: Vec<f64> = pts
            .iter()
            .map(|p| oracle::oracle_linear(&spec, p[0], &p[1..]).map(|v| v.value))
            .collect::<Result<_, _>>()?;
        let e: Vec<f64> = approx.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).collect();
        let est = oracle::jackknife_power_mean(&e, 2.0);
        Ok(Outcome {
            measured: est.value,
            threshold: 0.1,
            passed: est.value <= 0.1 + 3.0 * est.std_err,
            detail: format!(
                "{samples} points, jackknife SE {:.3e}; network params {}",
                est.std_err,
                c.net.param_count()
            ),
        })
    })
}

/// Median over seeds of the direct estimator's error at `(0, 0)` for
/// `f = sin` against the Crank-Nicolson reference.
pub fn mlp_sine_accuracy(seeds: u64, level: u32) -> CheckResult {
    run("mlp_sine_accuracy", || {
        let spec = bump_problem(Nonlinearity::Sine);
        let fd = oracle::oracle_fd_1d(&spec, FdGrid { h: 0.01, tau: 0.01, radius: 8.0 })?;
        let wide = oracle::oracle_fd_1d(&spec, FdGrid { h: 0.01, tau: 0.01, radius: 16.0 })?;
        let reference = fd.eval(0.0, 0.0);
        let truncation = (reference - wide.eval(0.0, 0.0)).abs();
        let gf = |x: &[f64]| spec.g.eval(x);
        let ff = |u: f64| u.sin();
        let params = MlpParams { n: level, m: level, horizon: 1.0, t: 0.0, d: 1 };
        let mut errs = Vec::new();
        for s in 0..seeds {
            let field = RandomField::new(s, 1, 1.0);
            let v = mlp_estimate_with(&params, &[0.0], &gf, &ff, &field, &MultiIndex::root(), &Parallel)?;
            errs.push((v - reference).abs());
        }
        let med = median(&mut errs);
        Ok(Outcome {
            measured: med,
            threshold: 0.08,
            passed: med <= 0.08 && truncation < 1e-6,
            detail: format!("reference {reference:.10}; radius-doubling change {truncation:.2e}; {seeds} seeds"),
        })
    })
}

/// Monte Carlo `E|W_s|^k` against its closed-form allowance with 3-sigma slack.
pub fn brownian_moments(samples: usize, seed: u64) -> CheckResult {
    run("brownian_moment_bound", || {
        let horizon = 1.0;
        let mut worst: f64 = 0.0;
        let mut worst_exact: f64 = 0.0;
        let mut stream = 0;
        for d in [1usize, 5, 10] {
            for k in [2.0, 4.0] {
                for s in [horizon / 2.0, horizon] {
                    let s: f64 = s;
                    stream += 1;
                    let mut rng = rng_for(seed, 20_000 + stream);
                    let rs = s.sqrt();
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for _ in 0..samples {
                        let r2: f64 = (0..d)
                            .map(|_| {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                rs * rs * z * z
                            })
                            .sum();
                        let v = r2.powf(0.5 * k);
                        s1 += v;
                        s2 += v * v;
                    }
                    let n = samples as f64;
                    let mean = s1 / n;
                    let se = ((s2 / n - mean * mean).max(0.0) / (n - 1.0)).sqrt();
                    let bound = brownian_moment_bound(d, k, horizon);
                    worst = worst.max((mean - 3.0 * se) / bound);
                    let exact = brownian_moment(d, k, s);
                    worst_exact = worst_exact.max((mean - exact).abs() / se.max(f64::MIN_POSITIVE));
                }
            }
        }
        Ok(Outcome::at_most(
            worst,
            1.0,
            format!("largest (mean - 3 SE) / allowance; MC vs exact moment within {worst_exact:.2} SE"),
        ))
    })
}

/// Crank-Nicolson against the closed form on the linear problem over a grid
/// in `[0, T] x [-2, 2]`.
pub fn oracle_agreement() -> CheckResult {
    run("oracle_agreement", || {
        let spec = bump_problem(Nonlinearity::Linear { c: 1.0 });
        let fd = oracle::oracle_fd_1d(&spec, FdGrid { h: 0.01, tau: 0.01, radius: 8.0 })?;
        let mut worst: f64 = 0.0;
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            for k in 0..=40 {
                let x = -2.0 + 0.1 * k as f64;
                worst = worst.max((fd.eval(t, x) - oracle::oracle_linear(&spec, t, &[x])?.value).abs());
            }
        }
        Ok(Outcome::at_most(worst, 1e-3, "11 x 41 grid".into()))
    })
}

// ------------------------------------------------------------------ suites

/// Runs one suite at full size.
pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Calculus => vec![calculus_algebra(1000, seed), identity_nets(), relu_conversion()],
        Suite::Gadgets => {
            let mut v = vec![hat_exactness(20, seed), square_gadget()];
            v.extend(product_gadget_all(2001));
            v
        }
        Suite::Compiler => vec![
            fixed_time_agreement(&[1, 2, 3], &[1, 2, 3], &[1, 2, 5], 50, seed),
            space_time_bound(200, seed),
            transform_identities(100, seed),
            parameter_scaling(&[1, 2, 4, 8, 16], seed),
        ],
        Suite::Pde => vec![
            oracle_agreement(),
            mlp_linear_accuracy(20, 4),
            space_time_l2(10_000, seed),
            mlp_sine_accuracy(20, 4),
            brownian_moments(100_000, seed),
        ],
    };
    SuiteReport { suite: suite.name().to_string(), passed: checks.iter().all(|c| c.passed), seed, checks }
}
