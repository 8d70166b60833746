//! Parameter-count scaling of compiled space-time networks across dimensions.

use std::io::Write;
use std::time::Instant;

use mlpnet_core::calculus::identity_net;
use mlpnet_core::compiler::{compile_space_time, CompileError, CompiledSpaceTime};
use mlpnet_core::mlp::{MlpParams, MultiIndex, RandomField};
use mlpnet_core::problem::{MeasureSpec, Nonlinearity, ProblemError, ProblemSpec, TerminalData};
use mlpnet_core::Activation;
use serde::Serialize;

use crate::oracle::{self, oracle_linear};
use crate::par;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("dimension {0} is outside 1..=32")]
    Dimension(usize),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Calc(#[from] mlpnet_core::CalcError),
    #[error(transparent)]
    Net(#[from] mlpnet_core::NetError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Fixed knobs of the benchmark family.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub n: u32,
    pub m: u32,
    pub k: usize,
    pub gamma: f64,
    pub q: f64,
    pub horizon: f64,
    pub act: Activation,
    pub seed: u64,
    /// Error sample count per dimension; zero skips the error column.
    pub error_samples: usize,
    pub profile_radius: f64,
    pub profile_knots: usize,
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 2,
            m: 2,
            k: 4,
            gamma: 0.1,
            q: 3.0,
            horizon: 1.0,
            act: Activation::LeakyRelu { alpha: 0.5 },
            seed: 0,
            error_samples: 200,
            profile_radius: 6.0,
            profile_knots: 121,
            timing: true,
        }
    }
}

/// One benchmark row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub d: usize,
    pub params: u64,
    pub nonzeros: u64,
    pub depth: usize,
    pub max_width: usize,
    pub build_seconds: f64,
    pub eval_seconds: f64,
    pub l2_error: f64,
    pub l2_std_err: f64,
}

/// The linear test problem `f(u) = u`, `g` a Gaussian ridge, used for every `d`.
pub fn bench_problem(d: usize, horizon: f64) -> ProblemSpec {
    ProblemSpec::new(d, horizon, Nonlinearity::Linear { c: 1.0 }, TerminalData::Ridge { a: 1.0 })
}

/// Compiles the benchmark network for dimension `d`.
pub fn build(d: usize, cfg: &BenchConfig) -> Result<CompiledSpaceTime, BenchError> {
    if !(1..=32).contains(&d) {
        return Err(BenchError::Dimension(d));
    }
    let spec = bench_problem(d, cfg.horizon);
    let tol = 0.1 * cfg.gamma;
    let g = spec.g.network(d, cfg.act, tol, cfg.profile_radius, cfg.profile_knots)?;
    let f = spec.f.network(cfg.act, tol, cfg.profile_radius, cfg.profile_knots)?;
    let j = identity_net(cfg.act)?;
    let field = RandomField::new(cfg.seed, d, cfg.horizon);
    let params = MlpParams { n: cfg.n, m: cfg.m, horizon: cfg.horizon, t: 0.0, d };
    Ok(compile_space_time(&params, cfg.k, cfg.gamma, cfg.q, &MultiIndex::root(), &g, &f, &j, cfg.act, &field)?)
}

/// Builds, counts and measures the network for every dimension in `dims`.
pub fn cod_benchmark(dims: &[usize], cfg: &BenchConfig) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::with_capacity(dims.len());
    for &d in dims {
        let start = Instant::now();
        let c = build(d, cfg)?;
        let build_seconds = start.elapsed().as_secs_f64();
        let spec = bench_problem(d, cfg.horizon);
        let (mut l2, mut se, mut eval_seconds) = (f64::NAN, f64::NAN, 0.0);
        if cfg.error_samples > 0 {
            let pts = oracle::sample_points(&MeasureSpec::unit(), cfg.horizon, d, cfg.error_samples, cfg.seed ^ 0x5eed);
            let start = Instant::now();
            let approx = par::realize_points(&c.net, cfg.act, &pts)?;
            eval_seconds = start.elapsed().as_secs_f64();
            let exact = pts
                .iter()
                .map(|p| oracle_linear(&spec, p[0], &p[1..]).map(|v| v.value))
                .collect::<Result<Vec<_>, _>>()?;
            let e: Vec<f64> = approx.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).collect();
            let est = oracle::jackknife_power_mean(&e, 2.0);
            l2 = est.value;
            se = est.std_err;
        }
        let dims = c.net.dims();
        rows.push(BenchRow {
            d,
            params: dims.param_count,
            nonzeros: c.net.nonzero_count(),
            depth: dims.depth,
            max_width: dims.max_width(),
            build_seconds: if cfg.timing { build_seconds } else { 0.0 },
            eval_seconds: if cfg.timing { eval_seconds } else { 0.0 },
            l2_error: l2,
            l2_std_err: se,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope of the parameter count against `d`.
pub fn param_slope(rows: &[BenchRow]) -> f64 {
    let x: Vec<f64> = rows.iter().map(|r| r.d as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.params as f64).collect();
    log_log_slope(&x, &y)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
