//! Reference solutions and error measurement.

use gauss_quad::hermite::GaussHermite;
use mlpnet_core::problem::{MeasureSpec, Nonlinearity, ProblemSpec, TerminalData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Nodes per dimension of the tensor Gauss-Hermite rule.
pub const GH_NODES: usize = 64;
/// Largest dimension handled by the tensor rule.
pub const GH_MAX_DIM: usize = 3;
/// Sample count of the Monte Carlo fallback.
pub const MC_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle needs f(u) = c u, got another nonlinearity")]
    NotLinear,
    #[error("time {0} lies outside [0, T]")]
    Time(f64),
    #[error("point has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("finite-difference grid: {0}")]
    Grid(&'static str),
    #[error("finite-difference solution blew up at step {0}")]
    Blowup(usize),
}

/// Oracle value with its Monte Carlo standard error (zero for quadrature).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub std_err: f64,
}

fn gh_rule() -> GaussHermite {
    GaussHermite::new(GH_NODES.try_into().expect("nonzero"))
}

/// `E[h(Z)]` for a standard normal `Z` by Gauss-Hermite quadrature.
pub fn gaussian_expectation_1d(rule: &GaussHermite, h: impl Fn(f64) -> f64) -> f64 {
    rule.integrate(|y| h(std::f64::consts::SQRT_2 * y)) / PI.sqrt()
}

fn tensor_expectation(rule: &GaussHermite, d: usize, h: &(dyn Fn(&[f64]) -> f64 + Sync)) -> f64 {
    let pairs = rule.as_node_weight_pairs();
    let n = pairs.len();
    let total = n.pow(d as u32);
    let norm = PI.powf(0.5 * d as f64);
    let parts: Vec<f64> = (0..total)
        .into_par_iter()
        .with_min_len(256)
        .map(|mut idx| {
            let mut z = [0.0; GH_MAX_DIM];
            let mut w = 1.0;
            for zi in z.iter_mut().take(d) {
                let (node, weight) = pairs[idx % n];
                *zi = std::f64::consts::SQRT_2 * node;
                w *= weight;
                idx /= n;
            }
            w * h(&z[..d])
        })
        .collect();
    mlpnet_core::math::sum(&parts) / norm
}

/// `E[g(x + W_s)]` for the terminal data of a problem.
pub fn heat_semigroup(g: &TerminalData, x: &[f64], s: f64, seed: u64) -> OracleValue {
    let d = x.len();
    if s == 0.0 {
        return OracleValue { value: g.eval(x), std_err: 0.0 };
    }
    let rs = s.sqrt();
    let rule = gh_rule();
    match g {
        TerminalData::Constant { c } => OracleValue { value: *c, std_err: 0.0 },
        TerminalData::Ridge { a } => {
            let m = mlpnet_core::problem::ridge_coordinate(x);
            let v = gaussian_expectation_1d(&rule, |z| {
                let y = m + rs * z;
                (-a * y * y).exp()
            });
            OracleValue { value: v, std_err: 0.0 }
        }
        TerminalData::GaussianBump { a } if d > GH_MAX_DIM => {
            let v = x
                .iter()
                .map(|&xi| {
                    gaussian_expectation_1d(&rule, |z| {
                        let y = xi + rs * z;
                        (-a * y * y).exp()
                    })
                })
                .product();
            OracleValue { value: v, std_err: 0.0 }
        }
        _ if d <= GH_MAX_DIM => {
            let h = |z: &[f64]| {
                let y: Vec<f64> = x.iter().zip(z).map(|(a, b)| a + rs * b).collect();
                g.eval(&y)
            };
            OracleValue { value: tensor_expectation(&rule, d, &h), std_err: 0.0 }
        }
        _ => monte_carlo_expectation(g, x, s, MC_SAMPLES, seed),
    }
}

fn monte_carlo_expectation(g: &TerminalData, x: &[f64], s: f64, samples: usize, seed: u64) -> OracleValue {
    let rs = s.sqrt();
    let chunk = 4096;
    let chunks = samples.div_ceil(chunk);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = chunk.min(samples - c * chunk);
            let mut y = vec![0.0; x.len()];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                for (yi, xi) in y.iter_mut().zip(x) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *yi = xi + rs * z;
                }
                let v = g.eval(&y);
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let n = samples as f64;
    let s1: f64 = sums.iter().map(|p| p.0).sum();
    let s2: f64 = sums.iter().map(|p| p.1).sum();
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    OracleValue { value: mean, std_err: (var / n).sqrt() }
}

/// Solution of `u_t + Δu/2 + c u = 0`, `u(T) = g`: `e^{c(T-t)} E[g(x + W_{T-t})]`.
pub fn oracle_linear(spec: &ProblemSpec, t: f64, x: &[f64]) -> Result<OracleValue, OracleError> {
    let c = match spec.f {
        Nonlinearity::Zero => 0.0,
        Nonlinearity::Linear { c } => c,
        _ => return Err(OracleError::NotLinear),
    };
    if !(0.0..=spec.horizon).contains(&t) {
        return Err(OracleError::Time(t));
    }
    if x.len() != spec.d {
        return Err(OracleError::Dimension { expected: spec.d, found: x.len() });
    }
    let s = spec.horizon - t;
    let v = heat_semigroup(&spec.g, x, s, 0x6f72_6163_6c65);
    let e = (c * s).exp();
    Ok(OracleValue { value: e * v.value, std_err: e * v.std_err })
}

/// Grid of the Crank-Nicolson reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdGrid {
    pub h: f64,
    pub tau: f64,
    pub radius: f64,
}

/// Finite-difference solution on `[0, T] x [-R, R]`, stored at every time step.
#[derive(Clone, Debug)]
pub struct FdSolution {
    grid: FdGrid,
    horizon: f64,
    /// `values[k]` holds `u(T - k tau, .)`.
    values: Vec<Vec<f64>>,
    steps: usize,
}

fn thomas(lower: f64, diag: f64, upper: f64, rhs: &mut [f64], scratch: &mut [f64]) {
    // Constant tridiagonal system; first and last rows are identities (Dirichlet).
    let n = rhs.len();
    scratch[0] = 0.0;
    for i in 1..n - 1 {
        let m = diag - lower * scratch[i - 1];
        scratch[i] = upper / m;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / m;
    }
    for i in (1..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// Crank-Nicolson solver for `u_t + Δu/2 + f(u) = 0`, `u(T) = g`, `d = 1`.
/// The nonlinearity is treated by the trapezoidal rule with fixed-point
/// iteration; boundary values follow the ODE `v' = f(v)`.
pub fn oracle_fd_1d(spec: &ProblemSpec, grid: FdGrid) -> Result<FdSolution, OracleError> {
    if spec.d != 1 {
        return Err(OracleError::Grid("finite differences need d = 1"));
    }
    if !(grid.h > 0.0 && grid.tau > 0.0 && grid.radius > 0.0) {
        return Err(OracleError::Grid("steps and radius must be positive"));
    }
    if grid.tau > grid.h {
        return Err(OracleError::Grid("time step must not exceed space step"));
    }
    let nx = (2.0 * grid.radius / grid.h).round() as usize + 1;
    let steps = (spec.horizon / grid.tau).round().max(1.0) as usize;
    let tau = spec.horizon / steps as f64;
    let h = 2.0 * grid.radius / (nx - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|i| -grid.radius + i as f64 * h).collect();
    let f = |u: f64| spec.f.eval(u);
    let r = 0.5 * tau / (h * h);
    let (lower, diag, upper) = (-0.5 * r, 1.0 + r, -0.5 * r);

    let mut values = Vec::with_capacity(steps + 1);
    let mut v: Vec<f64> = xs.iter().map(|&x| spec.g.eval(&[x])).collect();
    values.push(v.clone());
    let mut base = vec![0.0; nx];
    let mut next = vec![0.0; nx];
    let mut scratch = vec![0.0; nx];
    for step in 1..=steps {
        for i in 1..nx - 1 {
            let lap = v[i - 1] - 2.0 * v[i] + v[i + 1];
            base[i] = v[i] + 0.5 * r * lap + 0.5 * tau * f(v[i]);
        }
        next.copy_from_slice(&v);
        for _ in 0..100 {
            let mut rhs: Vec<f64> = (0..nx).map(|i| base[i] + 0.5 * tau * f(next[i])).collect();
            for &b in &[0, nx - 1] {
                rhs[b] = v[b] + 0.5 * tau * (f(v[b]) + f(next[b]));
            }
            thomas(lower, diag, upper, &mut rhs, &mut scratch);
            let change = rhs.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            next.copy_from_slice(&rhs);
            if change <= 1e-14 * (1.0 + next.iter().map(|a| a.abs()).fold(0.0, f64::max)) {
                break;
            }
        }
        if next.iter().any(|a| !a.is_finite() || a.abs() > 1e12) {
            return Err(OracleError::Blowup(step));
        }
        std::mem::swap(&mut v, &mut next);
        values.push(v.clone());
    }
    Ok(FdSolution { grid: FdGrid { h, tau, radius: grid.radius }, horizon: spec.horizon, values, steps })
}

impl FdSolution {
    fn slice_at(&self, k: usize, x: f64) -> f64 {
        let row = &self.values[k];
        let pos = ((x + self.grid.radius) / self.grid.h).clamp(0.0, (row.len() - 1) as f64);
        let i = (pos.floor() as usize).min(row.len() - 2);
        let lam = pos - i as f64;
        row[i] + lam * (row[i + 1] - row[i])
    }

    /// `u(t, x)` by linear interpolation in time and space.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let back = ((self.horizon - t) / self.grid.tau).clamp(0.0, self.steps as f64);
        let k = (back.floor() as usize).min(self.steps.saturating_sub(1));
        let lam = back - k as f64;
        let a = self.slice_at(k, x);
        if lam == 0.0 {
            return a;
        }
        a + lam * (self.slice_at(k + 1, x) - a)
    }

    pub fn grid(&self) -> FdGrid {
        self.grid
    }
}

/// Error estimate with its jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorEstimate {
    pub value: f64,
    pub std_err: f64,
}

/// Monte Carlo `L^qnorm(nu)` distance between `a` and `b` over points `(t, x)`
/// drawn from `measure`, with a leave-one-out jackknife standard error.
pub fn lq_error(
    a: &(dyn Fn(&[f64]) -> f64 + Sync),
    b: &(dyn Fn(&[f64]) -> f64 + Sync),
    measure: &MeasureSpec,
    horizon: f64,
    d: usize,
    qnorm: f64,
    samples: usize,
    seed: u64,
) -> ErrorEstimate {
    assert!(qnorm >= 1.0, "qnorm must be at least 1");
    let points = sample_points(measure, horizon, d, samples, seed);
    let e: Vec<f64> = points.par_iter().map(|p| (a(p) - b(p)).abs().powf(qnorm)).collect();
    jackknife_power_mean(&e, qnorm)
}

/// Points `(t, x)` from the measure, deterministic in `seed`.
pub fn sample_points(measure: &MeasureSpec, horizon: f64, d: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let u: Vec<f64> = (0..=d).map(|_| rng.random::<f64>()).collect();
            measure.point(horizon, &u)
        })
        .collect()
}

/// `(mean e)^{1/q}` with its jackknife standard error.
pub fn jackknife_power_mean(e: &[f64], qnorm: f64) -> ErrorEstimate {
    let n = e.len();
    let total = mlpnet_core::math::sum(e);
    let value = (total / n as f64).powf(1.0 / qnorm);
    if n < 2 {
        return ErrorEstimate { value, std_err: f64::INFINITY };
    }
    let loo: Vec<f64> = e.iter().map(|v| (((total - v) / (n - 1) as f64).max(0.0)).powf(1.0 / qnorm)).collect();
    let mean = mlpnet_core::math::sum(&loo) / n as f64;
    let ss: Vec<f64> = loo.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = (n - 1) as f64 / n as f64 * mlpnet_core::math::sum(&ss);
    ErrorEstimate { value, std_err: var.sqrt() }
}
