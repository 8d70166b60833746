//! Resolution schedules: level, grid size, gadget tolerances and the
//! constants they are built from.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::math;
use crate::problem::ProblemSpec;

/// Largest level `choose_level` will scan.
pub const LEVEL_CAP: u32 = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("tolerance must lie in (0, 1], got {0}")]
    Tolerance(f64),
    #[error("no level up to {cap} meets the tolerance")]
    Infeasible { cap: u32 },
    #[error("invalid schedule input: {0}")]
    Invalid(&'static str),
}

/// Branching sequence `m_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MRule {
    /// `m_k = k`.
    Linear,
    /// `m_k = max{1, floor(k^e)}`.
    Power { e: f64 },
    /// `m_k = c k`.
    Scaled { c: u64 },
}

impl MRule {
    pub fn m(&self, k: u32) -> u64 {
        match *self {
            MRule::Linear => k as u64,
            MRule::Power { e } => (math::floor(math::powf(k as f64, e)) as u64).max(1),
            MRule::Scaled { c } => c.max(1) * k as u64,
        }
    }
}

/// `ln` of `[(1 + lt) m^{-1/2} exp(m^{pexp/2} / n)]^n` at `m = m_n`.
pub fn ln_level_quantity(n: u32, growth: f64, pexp: f64, rule: MRule) -> f64 {
    let m = rule.m(n) as f64;
    let nf = n as f64;
    nf * math::ln(growth) - 0.5 * nf * math::ln(m) + math::powf(m, 0.5 * pexp)
}

/// Smallest `n` with `[(1 + L T) m_n^{-1/2} exp(m_n^{pexp/2} / n)]^n <= eps`.
pub fn choose_level(eps: f64, l: f64, t: f64, pexp: f64, rule: MRule) -> Result<u32, ScheduleError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ScheduleError::Tolerance(eps));
    }
    if !(l >= 0.0) || !(t > 0.0) || !(pexp > 0.0) {
        return Err(ScheduleError::Invalid("level scan needs L >= 0, T > 0, exponent > 0"));
    }
    let target = math::ln(eps);
    let growth = 1.0 + l * t;
    (1..=LEVEL_CAP)
        .find(|&n| ln_level_quantity(n, growth, pexp, rule) <= target)
        .ok_or(ScheduleError::Infeasible { cap: LEVEL_CAP })
}

/// Smallest integer `n` with `n >= eps^{-2}`.
pub fn choose_grid(eps: f64) -> Result<u64, ScheduleError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(ScheduleError::Tolerance(eps));
    }
    let target = 1.0 / (eps * eps);
    let mut n = math::ceil(target).max(1.0) as u64;
    while n > 1 && (n - 1) as f64 >= target {
        n -= 1;
    }
    while (n as f64) < target {
        n += 1;
    }
    Ok(n)
}

/// Exact `E |W_s|^k` for a `d`-dimensional Brownian motion.
pub fn brownian_moment(d: usize, k: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let h = 0.5 * d as f64;
    math::exp(0.5 * k * math::ln(2.0 * s) + math::lgamma(h + 0.5 * k) - math::lgamma(h))
}

/// Upper bound `1 + (1 + 2T)^k (d/2 + k)^k` on `E |W_s|^k`, `s <= T`.
pub fn brownian_moment_bound(d: usize, k: f64, horizon: f64) -> f64 {
    1.0 + math::powf(1.0 + 2.0 * horizon, k) * math::powf(0.5 * d as f64 + k, k)
}

/// How the moment integral `c_d` is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CdMethod {
    /// Closed bound from the measure moment hypothesis.
    Bound,
    /// Monte Carlo over the measure for the spatial moment; the Brownian
    /// moment is exact.
    MonteCarlo { samples: u32, seed: u64 },
}

fn moment_power(spec: &ProblemSpec) -> f64 {
    spec.p * spec.p * spec.q * spec.qnorm
}

/// `ln c_d` by the requested method.
pub fn ln_moment_constant(spec: &ProblemSpec, method: CdMethod) -> f64 {
    let k = moment_power(spec);
    let d = spec.d as f64;
    let ln_integral = match method {
        CdMethod::Bound => {
            let inner = 2.0 + math::exp(2.0 * k * (math::ln(1.0 + 2.0 * spec.horizon) + math::ln(0.5 + 2.0 * k)));
            math::ln(spec.kappa) + math::ln(inner) + (spec.r + 2.0) * k * math::ln(d)
        }
        CdMethod::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = spec.measure;
            let n = samples.max(1);
            let mut acc = 0.0;
            for _ in 0..n {
                let mut r2 = 0.0;
                for _ in 0..spec.d {
                    let x = m.lo + (m.hi - m.lo) * rng.random::<f64>();
                    r2 += x * x;
                }
                acc += math::powf(r2, 0.5 * k);
            }
            let mean = acc / n as f64;
            math::ln(1.0 + mean + brownian_moment(spec.d, 2.0 * k, spec.horizon))
        }
    };
    ln_integral / spec.qnorm
}

/// Schedule constants and resolutions for one `(d, eps)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub eps: f64,
    pub rule: MRule,
    /// Level from the theorem-side quantity (growth `1 + 2LT`, exponent `q qnorm`).
    pub n_eps: Option<u32>,
    /// Level from the lemma form (growth `1 + LT`, exponent `p`), when `p >= 2`.
    pub n_eps_lemma: Option<u32>,
    pub k_eps: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c_d: f64,
    pub delta: f64,
    pub gamma: f64,
    pub ln_delta: f64,
    pub ln_gamma: f64,
}

fn ln_sum(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + math::ln(terms.iter().map(|t| math::exp(t - m)).sum::<f64>())
}

/// Constants, levels and tolerances for `spec` at accuracy `eps`.
pub fn compute_schedule(spec: &ProblemSpec, eps: f64, rule: MRule, method: CdMethod) -> Result<Schedule, ScheduleError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(ScheduleError::Tolerance(eps));
    }
    let (l, t, kappa, p, q) = (spec.lipschitz, spec.horizon, spec.kappa, spec.p, spec.q);
    let d = spec.d as f64;
    let ln_d = math::ln(d);
    let ln_kdp = math::ln(kappa) + p * ln_d;
    let kdp = math::exp(ln_kdp);

    // ln of the three proof constants.
    let ln_a = 2.0 * l * t
        + 2.0 * math::ln(t + 1.0)
        + math::ln(l + 1.0)
        + math::ln(kdp + 1.0)
        + (p + 2.0) * math::ln(8.0)
        + 0.5 * ln_d;
    let ln_b = (p - 1.0) * math::ln(2.0)
        + ln_kdp
        + (p + 1.0) * (l * t + math::ln(t + 1.0))
        + ln_sum(&[p * ln_kdp, 0.0])
        + (p * p - 1.0) * math::ln(3.0);
    let ln_c = p * math::ln(2.0) + ln_kdp + math::ln(t + 1.0) + l * t + 0.5 * math::ln(q * spec.qnorm - 1.0);
    let ln_cd = ln_moment_constant(spec, method);

    let ln_delta = math::ln(eps)
        - ln_sum(&[0.0, math::ln(180.0 * (t + 1.0)) + p * math::ln(2.0) + ln_sum(&[ln_a, ln_b, ln_c]) + ln_cd]);

    let k_eps = choose_grid(eps)?;
    let ln_tq = q * math::ln(t + 1.0);
    let inner = ln_sum(&[q * ln_c, ln_tq + ln_sum(&[q * ln_a, q * ln_b]), q * math::ln(kappa) + p * q * ln_d]);
    let ln_gamma = math::ln(eps)
        - (math::ln(2.0 * kappa)
            + spec.r * p * p * q * ln_d
            + math::ln(k_eps as f64 + 1.0)
            + q * math::ln(1.0 + math::exp(ln_tq))
            + ln_sum(&[0.0, 3.0 * p * p * q * math::ln(3.0) + ln_cd + inner]));

    let n_eps = choose_level(eps, 2.0 * l, t, q * spec.qnorm, rule).ok();
    let n_eps_lemma = if p >= 2.0 { choose_level(eps, l, t, p, rule).ok() } else { None };
    Ok(Schedule {
        eps,
        rule,
        n_eps,
        n_eps_lemma,
        k_eps,
        a: math::exp(ln_a),
        b: math::exp(ln_b),
        c: math::exp(ln_c),
        c_d: math::exp(ln_cd),
        delta: math::exp(ln_delta),
        gamma: math::exp(ln_gamma),
        ln_delta,
        ln_gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Nonlinearity, TerminalData};

    fn direct_quantity(n: u32, l: f64, t: f64, p: f64, rule: MRule) -> f64 {
        let m = rule.m(n) as f64;
        math::powf((1.0 + l * t) * math::powf(m, -0.5) * math::exp(math::powf(m, p / 2.0) / n as f64), n as f64)
    }

    #[test]
    fn level_golden_value() {
        let n = choose_level(0.5, 1.0, 1.0, 2.0, MRule::Linear).unwrap();
        assert_eq!(n, 31);
        assert!(direct_quantity(31, 1.0, 1.0, 2.0, MRule::Linear) <= 0.5);
        for k in 1..31 {
            assert!(direct_quantity(k, 1.0, 1.0, 2.0, MRule::Linear) > 0.5);
        }
    }

    #[test]
    fn level_first_term_and_errors() {
        // m_1 = 100, exponent 0.1: (1 + 1) 100^{-1/2} exp(100^{0.05}) < 1.
        assert!(direct_quantity(1, 1.0, 1.0, 0.1, MRule::Scaled { c: 100 }) <= 1.0);
        assert_eq!(choose_level(1.0, 1.0, 1.0, 0.1, MRule::Scaled { c: 100 }).unwrap(), 1);
        // m_k = 1 forever never drops below (1 + LT) e^{1/n} > 1.
        let n = choose_level(1.0, 0.0, 1.0, 2.0, MRule::Power { e: 0.0 });
        assert!(matches!(n, Err(ScheduleError::Infeasible { .. })));
        assert!(choose_level(0.0, 1.0, 1.0, 2.0, MRule::Linear).is_err());
        assert!(choose_level(1.5, 1.0, 1.0, 2.0, MRule::Linear).is_err());
    }

    #[test]
    fn level_is_monotone() {
        let mut prev = 0;
        for eps in [1.0, 0.8, 0.5, 0.2, 0.1, 0.01] {
            let n = choose_level(eps, 1.0, 1.0, 2.0, MRule::Linear).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(choose_grid(1.0).unwrap(), 1);
        assert_eq!(choose_grid(0.5).unwrap(), 4);
        assert_eq!(choose_grid(0.1).unwrap(), 100);
        assert_eq!(choose_grid(0.3).unwrap(), 12);
        assert!(choose_grid(0.0).is_err());
        assert!(choose_grid(-1.0).is_err());
    }

    fn spec() -> ProblemSpec {
        let mut s = ProblemSpec::new(1, 1.0, Nonlinearity::Linear { c: 1.0 }, TerminalData::GaussianBump { a: 1.0 });
        s.lipschitz = 1.0;
        s.kappa = 1.0;
        s.p = 1.0;
        s
    }

    #[test]
    fn first_constant_matches_closed_form() {
        let s = compute_schedule(&spec(), 0.5, MRule::Linear, CdMethod::Bound).unwrap();
        let want = math::exp(2.0) * 4.0 * 2.0 * 2.0 * 512.0;
        assert!((s.a / want - 1.0).abs() < 1e-13, "{} vs {}", s.a, want);
        let b = 1.0 * 1.0 * math::powf(math::exp(1.0) * 2.0, 2.0) * 2.0 * 1.0;
        assert!((s.b / b - 1.0).abs() < 1e-13);
        let c = 2.0 * 2.0 * math::exp(1.0) * math::sqrt(5.0);
        assert!((s.c / c - 1.0).abs() < 1e-13);
        assert_eq!(s.k_eps, 4);
    }

    #[test]
    fn tolerances_are_below_eps() {
        for d in [1, 3, 10] {
            for eps in [1.0, 0.5, 0.01] {
                let mut sp = spec();
                sp.d = d;
                for m in [CdMethod::Bound, CdMethod::MonteCarlo { samples: 2000, seed: 1 }] {
                    let s = compute_schedule(&sp, eps, MRule::Linear, m).unwrap();
                    assert!(s.delta <= eps && s.delta > 0.0);
                    assert!(s.gamma <= eps / (2.0 * sp.kappa) && s.gamma > 0.0);
                }
            }
        }
    }

    #[test]
    fn bound_dominates_monte_carlo() {
        let mut sp = spec();
        sp.kappa = 1.0 + math::powf(2.0, 3.0);
        sp.r = 0.5;
        for d in [1, 4] {
            sp.d = d;
            let b = ln_moment_constant(&sp, CdMethod::Bound);
            let m = ln_moment_constant(&sp, CdMethod::MonteCarlo { samples: 5000, seed: 3 });
            assert!(m <= b);
        }
    }

    #[test]
    fn moment_formula() {
        // E|W_s|^2 = d s, E|W_s|^4 = d (d + 2) s^2.
        assert!((brownian_moment(3, 2.0, 0.5) - 1.5).abs() < 1e-12);
        assert!((brownian_moment(3, 4.0, 0.5) - 15.0 * 0.25).abs() < 1e-12);
        for d in [1, 5, 10] {
            for k in [2.0, 4.0] {
                assert!(brownian_moment(d, k, 1.0) <= brownian_moment_bound(d, k, 1.0));
            }
        }
    }
}
