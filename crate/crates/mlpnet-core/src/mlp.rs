//! Multilevel Picard estimator with index-keyed randomness.
//!
//! Every random object is a pure function of `(master seed, index path, tag)`:
//! a 64-bit mix of the path seeds a ChaCha8 generator, and Brownian paths are
//! built by midpoint (Lévy–Ciesielski) refinement where the normal at each
//! dyadic node is read from its own generator stream. Queries for one index at
//! any set of times therefore lie on a single path, independent of query order
//! or thread.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::math;

/// Dyadic refinement depth of Brownian paths; the finest spacing is `T / 2^40`.
pub const BRIDGE_LEVELS: u32 = 40;

/// Magnitude above which an estimate is reported as overflowed.
pub const OVERFLOW_LIMIT: f64 = 1e15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlpError {
    #[error("time {time} lies outside [0, {horizon}]")]
    TimeRange { time: f64, horizon: f64 },
    #[error("query times must be increasing")]
    Unsorted,
    #[error("invalid parameters: {0}")]
    Params(&'static str),
    #[error("point has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("estimate {0} exceeds the overflow limit")]
    Overflow(f64),
}

/// Index path `theta` of the Picard tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(path: Vec<i64>) -> Self {
        assert!(!path.is_empty(), "index path must be nonempty");
        MultiIndex(path)
    }

    /// The root index `(0)`.
    pub fn root() -> Self {
        MultiIndex(vec![0])
    }

    /// `(theta, a, b)`.
    pub fn child(&self, a: i64, b: i64) -> Self {
        let mut p = Vec::with_capacity(self.0.len() + 2);
        p.extend_from_slice(&self.0);
        p.push(a);
        p.push(b);
        MultiIndex(p)
    }

    pub fn path(&self) -> &[i64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tag {
    Brownian = 0x4252_4f57,
    Uniform = 0x554e_4946,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Indexed family of Brownian motions and uniform variables.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomField {
    pub seed: u64,
    pub d: usize,
    pub horizon: f64,
}

impl RandomField {
    pub fn new(seed: u64, d: usize, horizon: f64) -> Self {
        assert!(d >= 1 && horizon > 0.0, "field needs d >= 1 and a positive horizon");
        RandomField { seed, d, horizon }
    }

    fn key(&self, theta: &MultiIndex, tag: Tag) -> [u8; 32] {
        let mut h = mix64(tag as u64 ^ GOLDEN);
        h = mix64(h ^ theta.0.len() as u64);
        for &v in &theta.0 {
            h = mix64(h.wrapping_add(GOLDEN) ^ v as u64);
        }
        let mut state = mix64(self.seed) ^ h;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        key
    }

    fn node_normals(key: &[u8; 32], node: u64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::from_seed(*key);
        rng.set_stream(node);
        for v in out.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    }

    fn path_point(&self, key: &[u8; 32], s: f64, out: &mut [f64]) {
        let d = self.d;
        let t_end = self.horizon;
        if s == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let mut z = vec![0.0; d];
        let mut wl = vec![0.0; d];
        let mut wr = vec![0.0; d];
        Self::node_normals(key, 0, &mut z);
        let st = math::sqrt(t_end);
        for i in 0..d {
            wr[i] = st * z[i];
        }
        if s == t_end {
            out.copy_from_slice(&wr);
            return;
        }
        let (mut left, mut right) = (0.0, t_end);
        let mut node: u64 = 1;
        for _ in 0..BRIDGE_LEVELS {
            let mid = 0.5 * (left + right);
            let sd = math::sqrt(0.25 * (right - left));
            Self::node_normals(key, node, &mut z);
            let wm: Vec<f64> = (0..d).map(|i| 0.5 * (wl[i] + wr[i]) + sd * z[i]).collect();
            if s == mid {
                out.copy_from_slice(&wm);
                return;
            }
            if s < mid {
                right = mid;
                wr = wm;
                node *= 2;
            } else {
                left = mid;
                wl = wm;
                node = 2 * node + 1;
            }
        }
        let lam = (s - left) / (right - left);
        for i in 0..d {
            out[i] = wl[i] + lam * (wr[i] - wl[i]);
        }
    }

    /// Brownian motion `W^theta` at increasing times in `[0, T]`.
    pub fn brownian_at(&self, theta: &MultiIndex, times: &[f64]) -> Result<Vec<Vec<f64>>, MlpError> {
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(MlpError::Unsorted);
        }
        let key = self.key(theta, Tag::Brownian);
        times
            .iter()
            .map(|&s| {
                self.check_time(s)?;
                let mut out = vec![0.0; self.d];
                self.path_point(&key, s, &mut out);
                Ok(out)
            })
            .collect()
    }

    /// `W^theta_s` for a single time.
    pub fn brownian(&self, theta: &MultiIndex, s: f64) -> Result<Vec<f64>, MlpError> {
        self.check_time(s)?;
        let key = self.key(theta, Tag::Brownian);
        let mut out = vec![0.0; self.d];
        self.path_point(&key, s, &mut out);
        Ok(out)
    }

    /// The uniform variable attached to `theta`, in `[0, 1)`.
    pub fn uniform(&self, theta: &MultiIndex) -> f64 {
        let mut rng = ChaCha8Rng::from_seed(self.key(theta, Tag::Uniform));
        rng.random::<f64>()
    }

    /// `t + (T - t) u^theta`.
    pub fn time_sample(&self, theta: &MultiIndex, t: f64) -> Result<f64, MlpError> {
        self.check_time(t)?;
        Ok(t + (self.horizon - t) * self.uniform(theta))
    }

    fn check_time(&self, s: f64) -> Result<(), MlpError> {
        if !(0.0..=self.horizon).contains(&s) {
            return Err(MlpError::TimeRange { time: s, horizon: self.horizon });
        }
        Ok(())
    }
}

/// Level, branching and evaluation time of an estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MlpParams {
    pub n: u32,
    pub m: u32,
    pub horizon: f64,
    pub t: f64,
    pub d: usize,
}

impl MlpParams {
    pub fn validate(&self) -> Result<(), MlpError> {
        if self.m < 1 {
            return Err(MlpError::Params("M must be at least 1"));
        }
        if !(self.horizon > 0.0) {
            return Err(MlpError::Params("horizon must be positive"));
        }
        if !(0.0..=self.horizon).contains(&self.t) {
            return Err(MlpError::TimeRange { time: self.t, horizon: self.horizon });
        }
        if self.d < 1 {
            return Err(MlpError::Params("d must be at least 1"));
        }
        Ok(())
    }
}

/// Evaluates a batch of independent terms; implementations may run them in
/// parallel but must return them in index order.
pub trait TermMap {
    fn map(&self, count: usize, term: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>;
}

/// In-order sequential evaluation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl TermMap for Sequential {
    fn map(&self, count: usize, term: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..count).map(term).collect()
    }
}

pub type Terminal<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;
pub type Nonlinear<'a> = dyn Fn(f64) -> f64 + Sync + 'a;

struct Recursion<'a> {
    m: u64,
    horizon: f64,
    g: &'a Terminal<'a>,
    f: &'a Nonlinear<'a>,
    field: &'a RandomField,
}

impl Recursion<'_> {
    fn shifted(&self, x: &[f64], theta: &MultiIndex, s: f64) -> Vec<f64> {
        let w = self.field.brownian(theta, s).expect("time inside horizon");
        x.iter().zip(&w).map(|(a, b)| a + b).collect()
    }

    fn terminal_term(&self, n: u32, t: f64, x: &[f64], theta: &MultiIndex, k: usize) -> f64 {
        let idx = theta.child(0, -(k as i64 + 1));
        let _ = n;
        (self.g)(&self.shifted(x, &idx, self.horizon - t))
    }

    fn level_term(&self, i: u32, t: f64, x: &[f64], theta: &MultiIndex, k: usize) -> f64 {
        let idx = theta.child(i as i64, k as i64 + 1);
        let u = self.field.time_sample(&idx, t).expect("time inside horizon");
        let y = self.shifted(x, &idx, u - t);
        let mut v = (self.f)(self.eval(i, u, &y, &idx));
        if i >= 1 {
            let neg = theta.child(-(i as i64), k as i64 + 1);
            v -= (self.f)(self.eval(i - 1, u, &y, &neg));
        }
        v
    }

    fn eval(&self, n: u32, t: f64, x: &[f64], theta: &MultiIndex) -> f64 {
        self.eval_with(n, t, x, theta, &Sequential)
    }

    fn eval_with(&self, n: u32, t: f64, x: &[f64], theta: &MultiIndex, exec: &dyn TermMap) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let count = self.m.pow(n) as usize;
        let terms = exec.map(count, &|k| self.terminal_term(n, t, x, theta, k));
        let mut total = terms.iter().fold(0.0, |a, b| a + b) / count as f64;
        for i in 0..n {
            let count = self.m.pow(n - i) as usize;
            let terms = exec.map(count, &|k| self.level_term(i, t, x, theta, k));
            let s = terms.iter().fold(0.0, |a, b| a + b);
            total += (self.horizon - t) / count as f64 * s;
        }
        total
    }
}

/// `U_n^theta(t, x)` for closed-form or network-backed `g` and `f`.
pub fn mlp_estimate(
    params: &MlpParams,
    x: &[f64],
    g: &Terminal<'_>,
    f: &Nonlinear<'_>,
    field: &RandomField,
    theta: &MultiIndex,
) -> Result<f64, MlpError> {
    mlp_estimate_with(params, x, g, f, field, theta, &Sequential)
}

/// As [`mlp_estimate`], with the top-level sums evaluated through `exec`.
pub fn mlp_estimate_with(
    params: &MlpParams,
    x: &[f64],
    g: &Terminal<'_>,
    f: &Nonlinear<'_>,
    field: &RandomField,
    theta: &MultiIndex,
    exec: &dyn TermMap,
) -> Result<f64, MlpError> {
    params.validate()?;
    if x.len() != params.d || field.d != params.d {
        return Err(MlpError::Dimension { expected: params.d, found: x.len() });
    }
    if field.horizon != params.horizon {
        return Err(MlpError::Params("field horizon differs from the estimate horizon"));
    }
    let rec = Recursion { m: params.m as u64, horizon: params.horizon, g, f, field };
    let v = rec.eval_with(params.n, params.t, x, theta, exec);
    if !v.is_finite() || v.abs() > OVERFLOW_LIMIT {
        return Err(MlpError::Overflow(v));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_basics() {
        let field = RandomField::new(7, 3, 2.0);
        let th = MultiIndex::root().child(1, 2);
        let w = field.brownian_at(&th, &[0.0, 0.5, 2.0]).unwrap();
        assert_eq!(w[0], vec![0.0; 3]);
        let a = field.brownian_at(&th, &[1.0, 2.0]).unwrap();
        let b = field.brownian_at(&th, &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(a[0], b[1]);
        assert_eq!(a[1], b[2]);
        let c = field.brownian_at(&th, &[0.123, 1.7]).unwrap();
        let e = field.brownian_at(&th, &[1.7]).unwrap();
        assert_eq!(c[1], e[0]);
        assert!(field.brownian_at(&th, &[2.5]).is_err());
        assert!(field.brownian_at(&th, &[1.0, 0.5]).is_err());
        let other = field.brownian(&MultiIndex::root().child(1, 3), 2.0).unwrap();
        assert_ne!(other, a[1]);
    }

    #[test]
    fn brownian_variance() {
        let field = RandomField::new(11, 1, 1.5);
        let n = 100_000;
        let mut s2 = 0.0;
        for k in 0..n {
            let w = field.brownian(&MultiIndex::new(vec![k]), 1.5).unwrap();
            s2 += w[0] * w[0];
        }
        let var = s2 / n as f64;
        assert!((var / 1.5 - 1.0).abs() <= 0.02, "variance {var}");
    }

    #[test]
    fn increments_are_consistent() {
        let field = RandomField::new(3, 1, 1.0);
        let n = 20_000;
        let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let w = field.brownian_at(&MultiIndex::new(vec![k]), &[0.3, 0.7]).unwrap();
            let i1 = w[0][0];
            let i2 = w[1][0] - w[0][0];
            a += i1 * i1;
            b += i2 * i2;
            ab += i1 * i2;
        }
        let nf = n as f64;
        assert!((a / nf / 0.3 - 1.0).abs() < 0.05);
        assert!((b / nf / 0.4 - 1.0).abs() < 0.05);
        assert!((ab / nf).abs() < 0.01);
    }

    #[test]
    fn time_samples() {
        let field = RandomField::new(5, 2, 1.0);
        let th = MultiIndex::root();
        assert_eq!(field.time_sample(&th, 1.0).unwrap(), 1.0);
        let u = field.time_sample(&th, 0.25).unwrap();
        assert!((0.25..=1.0).contains(&u));
        assert_eq!(u, field.time_sample(&th, 0.25).unwrap());
        let n = 100_000;
        let mean: f64 = (0..n).map(|k| field.time_sample(&MultiIndex::new(vec![k]), 0.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean / 0.5 - 1.0).abs() <= 0.02);
        assert!(field.time_sample(&th, 1.5).is_err());
    }

    #[test]
    fn level_zero_and_one() {
        let field = RandomField::new(1, 2, 1.0);
        let g = |x: &[f64]| x[0] + 2.0 * x[1];
        let f = |_u: f64| 0.0;
        let x = [0.5, -0.25];
        let th = MultiIndex::root();
        let p0 = MlpParams { n: 0, m: 2, horizon: 1.0, t: 0.0, d: 2 };
        assert_eq!(mlp_estimate(&p0, &x, &g, &f, &field, &th).unwrap(), 0.0);
        let p1 = MlpParams { n: 1, ..p0 };
        let v = mlp_estimate(&p1, &x, &g, &f, &field, &th).unwrap();
        let w1 = field.brownian(&th.child(0, -1), 1.0).unwrap();
        let w2 = field.brownian(&th.child(0, -2), 1.0).unwrap();
        let want = 0.5 * (g(&[x[0] + w1[0], x[1] + w1[1]]) + g(&[x[0] + w2[0], x[1] + w2[1]]));
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn overflow_and_validation() {
        let field = RandomField::new(1, 1, 1.0);
        let g = |_x: &[f64]| 1e16;
        let f = |_u: f64| 0.0;
        let p = MlpParams { n: 1, m: 1, horizon: 1.0, t: 0.0, d: 1 };
        assert!(matches!(mlp_estimate(&p, &[0.0], &g, &f, &field, &MultiIndex::root()), Err(MlpError::Overflow(_))));
        let bad = MlpParams { m: 0, ..p };
        assert!(mlp_estimate(&bad, &[0.0], &g, &f, &field, &MultiIndex::root()).is_err());
        assert!(mlp_estimate(&p, &[0.0, 1.0], &g, &f, &field, &MultiIndex::root()).is_err());
    }

    #[test]
    fn unbiased_at_level_one() {
        // E[exp(-(x + W_s)^2)] = exp(-x^2 / (1 + 2s)) / sqrt(1 + 2s).
        let g = |x: &[f64]| math::exp(-x[0] * x[0]);
        let f = |_u: f64| 0.0;
        let p = MlpParams { n: 1, m: 1, horizon: 1.0, t: 0.25, d: 1 };
        let x = 0.3;
        let s = 0.75;
        let want = math::exp(-x * x / (1.0 + 2.0 * s)) / math::sqrt(1.0 + 2.0 * s);
        let n = 10_000;
        let field = RandomField::new(99, 1, 1.0);
        let vals: Vec<f64> = (0..n)
            .map(|k| mlp_estimate(&p, &[x], &g, &f, &field, &MultiIndex::new(vec![k])).unwrap())
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let se = math::sqrt(var / n as f64);
        assert!((mean - want).abs() <= 3.0 * se, "mean {mean} want {want} se {se}");
    }

    #[test]
    fn deterministic_across_calls() {
        let field = RandomField::new(42, 2, 1.0);
        let g = |x: &[f64]| math::exp(-x[0] * x[0] - x[1] * x[1]);
        let f = |u: f64| math::sin(u);
        let p = MlpParams { n: 3, m: 2, horizon: 1.0, t: 0.1, d: 2 };
        let a = mlp_estimate(&p, &[0.1, 0.2], &g, &f, &field, &MultiIndex::root()).unwrap();
        let b = mlp_estimate(&p, &[0.1, 0.2], &g, &f, &field, &MultiIndex::root()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
