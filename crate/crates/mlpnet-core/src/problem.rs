//! Problem descriptions: nonlinearity, terminal data, constants and the
//! error measure.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{self, CalcError};
use crate::gadgets::{self, GadgetError, InterpSpec};
use crate::math;
use crate::net::{Activation, Network};
use crate::sparse::Csr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("invalid problem: {0}")]
    Invalid(&'static str),
    #[error("Lipschitz constant {given} is below the constant {needed} of the nonlinearity")]
    Lipschitz { given: f64, needed: f64 },
    #[error("no network form is available for this {0}")]
    NoNetwork(&'static str),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Calc(#[from] CalcError),
}

pub type Result<T> = core::result::Result<T, ProblemError>;

/// The scalar nonlinearity `f`.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    Zero,
    Linear { c: f64 },
    Sine,
    /// Piecewise-linear interpolant with constant extension.
    Table(InterpSpec),
    Network { net: Network, act: Activation },
}

impl Nonlinearity {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { c } => c * u,
            Nonlinearity::Sine => math::sin(u),
            Nonlinearity::Table(s) => s.eval(u),
            Nonlinearity::Network { net, act } => net.realize_scalar(*act, &[u]).expect("scalar nonlinearity network"),
        }
    }

    /// Lipschitz constant where it is known in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Nonlinearity::Zero => Some(0.0),
            Nonlinearity::Linear { c } => Some(math::abs(*c)),
            Nonlinearity::Sine => Some(1.0),
            Nonlinearity::Table(s) => Some(s.lipschitz()),
            Nonlinearity::Network { .. } => None,
        }
    }

    /// A network for `f`. Affine forms are exact; the sine is tabulated on
    /// `[-radius, radius]` with `knots` points.
    pub fn network(&self, act: Activation, tol: f64, radius: f64, knots: usize) -> Result<Network> {
        match self {
            Nonlinearity::Zero => Ok(Network::affine_dense(1, 1, &[0.0], &[0.0]).expect("affine")),
            Nonlinearity::Linear { c } => Ok(Network::affine_dense(1, 1, &[*c], &[0.0]).expect("affine")),
            Nonlinearity::Sine => {
                let spec = InterpSpec::sample(-radius, radius, knots, math::sin)?;
                Ok(gadgets::pwl_net(&spec, act, tol)?)
            }
            Nonlinearity::Table(s) => Ok(gadgets::pwl_net(s, act, tol)?),
            Nonlinearity::Network { net, act: a } => {
                if *a != act {
                    return Err(ProblemError::Invalid("nonlinearity network uses a different activation"));
                }
                Ok(net.clone())
            }
        }
    }
}

/// Terminal data `g`.
#[derive(Clone, Debug, PartialEq)]
pub enum TerminalData {
    Constant { c: f64 },
    /// `exp(-a |x|^2)`.
    GaussianBump { a: f64 },
    /// `exp(-a (x_1 + ... + x_d)^2 / d)`.
    Ridge { a: f64 },
    Network { net: Network, act: Activation },
}

impl TerminalData {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TerminalData::Constant { c } => *c,
            TerminalData::GaussianBump { a } => math::exp(-a * x.iter().map(|v| v * v).sum::<f64>()),
            TerminalData::Ridge { a } => {
                let y = ridge_coordinate(x);
                math::exp(-a * y * y)
            }
            TerminalData::Network { net, act } => net.realize_scalar(*act, x).expect("terminal network input"),
        }
    }

    /// A network for `g` on `R^d`. Gaussian profiles are tabulated along the
    /// ridge direction on `[-radius, radius]` with `knots` points; the bump is
    /// available only for `d = 1`, where it coincides with the ridge.
    pub fn network(&self, d: usize, act: Activation, tol: f64, radius: f64, knots: usize) -> Result<Network> {
        match self {
            TerminalData::Constant { c } => {
                Ok(calculus::affine(Csr::zeros(1, d), vec![*c]).expect("affine"))
            }
            TerminalData::GaussianBump { a } if d == 1 => ridge_network(*a, 1, act, tol, radius, knots),
            TerminalData::GaussianBump { .. } => Err(ProblemError::NoNetwork("bump in d > 1")),
            TerminalData::Ridge { a } => ridge_network(*a, d, act, tol, radius, knots),
            TerminalData::Network { net, act: a } => {
                if *a != act {
                    return Err(ProblemError::Invalid("terminal network uses a different activation"));
                }
                if net.input_dim() != d || net.output_dim() != 1 {
                    return Err(ProblemError::Invalid("terminal network must map R^d to R"));
                }
                Ok(net.clone())
            }
        }
    }
}

/// `(x_1 + ... + x_d) / sqrt(d)`.
pub fn ridge_coordinate(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / math::sqrt(x.len() as f64)
}

fn ridge_network(a: f64, d: usize, act: Activation, tol: f64, radius: f64, knots: usize) -> Result<Network> {
    let spec = InterpSpec::sample(-radius, radius, knots, |y| math::exp(-a * y * y))?;
    let profile = gadgets::pwl_net(&spec, act, tol)?;
    let w = vec![1.0 / math::sqrt(d as f64); d];
    let head = calculus::affine(Csr::from_dense(1, d, &w), vec![0.0])?;
    Ok(calculus::compose(&profile, &head)?)
}

/// The error measure: uniform on `[0, T] x [lo, hi]^d`, normalized to mass one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureSpec {
    pub lo: f64,
    pub hi: f64,
}

impl MeasureSpec {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ProblemError::Invalid("measure box needs lo < hi"));
        }
        Ok(MeasureSpec { lo, hi })
    }

    pub fn unit() -> Self {
        MeasureSpec { lo: 0.0, hi: 1.0 }
    }

    /// Maps `d + 1` uniforms in `[0, 1)` to a point `(t, x)`.
    pub fn point(&self, horizon: f64, u: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(u.len());
        out.push(horizon * u[0]);
        out.extend(u[1..].iter().map(|v| self.lo + (self.hi - self.lo) * v));
        out
    }

    /// Largest `|y|` over the support, `y = (t, x)`.
    pub fn radius(&self, horizon: f64, d: usize) -> f64 {
        let m = math::abs(self.lo).max(math::abs(self.hi));
        math::sqrt(horizon * horizon + d as f64 * m * m)
    }

    /// Whether `int (1 + |y|^k) dnu <= kappa d^{r k}` follows from the
    /// support radius bound.
    pub fn moment_hypothesis(&self, horizon: f64, d: usize, k: f64, kappa: f64, r: f64) -> bool {
        1.0 + math::powf(self.radius(horizon, d), k) <= kappa * math::powf(d as f64, r * k)
    }
}

/// Full problem description with the constants entering the schedules.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub d: usize,
    pub horizon: f64,
    /// Diffusion coefficient of the initial-value form `u_t = c Δu + f(u)`.
    pub diffusion: f64,
    pub f: Nonlinearity,
    pub g: TerminalData,
    pub lipschitz: f64,
    pub kappa: f64,
    pub p: f64,
    pub q: f64,
    pub qnorm: f64,
    pub r: f64,
    pub measure: MeasureSpec,
}

impl ProblemSpec {
    /// A problem with default constants `kappa = 1, p = 1, q = 3, qnorm = 2, r = 1`.
    pub fn new(d: usize, horizon: f64, f: Nonlinearity, g: TerminalData) -> Self {
        let lipschitz = f.lipschitz().unwrap_or(1.0);
        ProblemSpec {
            d,
            horizon,
            diffusion: 0.5,
            f,
            g,
            lipschitz,
            kappa: 1.0,
            p: 1.0,
            q: 3.0,
            qnorm: 2.0,
            r: 1.0,
            measure: MeasureSpec::unit(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(ProblemError::Invalid("d must be at least 1"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(ProblemError::Invalid("horizon must be positive"));
        }
        if !(self.diffusion > 0.0) {
            return Err(ProblemError::Invalid("diffusion must be positive"));
        }
        if !(self.q > 2.0) {
            return Err(ProblemError::Invalid("q must exceed 2"));
        }
        if !(self.qnorm >= 2.0) {
            return Err(ProblemError::Invalid("qnorm must be at least 2"));
        }
        if !(self.kappa > 0.0) || !(self.p > 0.0) || !(self.r >= 0.0) || !(self.lipschitz >= 0.0) {
            return Err(ProblemError::Invalid("constants must be positive"));
        }
        if let Some(needed) = self.f.lipschitz() {
            if self.lipschitz < needed {
                return Err(ProblemError::Lipschitz { given: self.lipschitz, needed });
            }
        }
        Ok(())
    }

    /// Whether `max{|f(0)|, identity width, 1} <= kappa`, the normalization
    /// the schedule constants assume.
    pub fn kappa_dominates(&self, identity_width: usize) -> bool {
        math::abs(self.f.eval(0.0)).max(identity_width as f64).max(1.0) <= self.kappa
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluations() {
        assert_eq!(Nonlinearity::Linear { c: 2.0 }.eval(1.5), 3.0);
        assert_eq!(TerminalData::GaussianBump { a: 1.0 }.eval(&[0.0, 0.0]), 1.0);
        let r = TerminalData::Ridge { a: 1.0 }.eval(&[1.0, 1.0]);
        assert!((r - math::exp(-2.0)).abs() < 1e-15);
        let b = TerminalData::GaussianBump { a: 1.0 }.eval(&[0.5]);
        assert_eq!(b, TerminalData::Ridge { a: 1.0 }.eval(&[0.5]));
    }

    #[test]
    fn validation() {
        let mut s = ProblemSpec::new(1, 1.0, Nonlinearity::Linear { c: 2.0 }, TerminalData::Constant { c: 1.0 });
        assert_eq!(s.lipschitz, 2.0);
        s.validate().unwrap();
        s.lipschitz = 1.0;
        assert!(matches!(s.validate(), Err(ProblemError::Lipschitz { .. })));
        s.lipschitz = 2.0;
        s.q = 2.0;
        assert!(s.validate().is_err());
        assert!(MeasureSpec::new(1.0, 0.0).is_err());
    }

    #[test]
    fn networks_match_data() {
        let act = Activation::LeakyRelu { alpha: 0.5 };
        let g = TerminalData::Ridge { a: 1.0 };
        let net = g.network(3, act, 1e-9, 4.0, 801).unwrap();
        for x in [[0.1, -0.3, 0.2], [1.0, 0.5, -0.2]] {
            let v = net.realize_scalar(act, &x).unwrap();
            assert!((v - g.eval(&x)).abs() < 2e-4);
        }
        let f = Nonlinearity::Sine.network(act, 1e-9, 3.0, 301).unwrap();
        assert!((f.realize_scalar(act, &[0.7]).unwrap() - math::sin(0.7)).abs() < 1e-4);
        let c = TerminalData::Constant { c: 2.0 }.network(2, act, 0.0, 1.0, 2).unwrap();
        assert_eq!(c.realize_scalar(act, &[3.0, 4.0]).unwrap(), 2.0);
        assert!(TerminalData::GaussianBump { a: 1.0 }.network(2, act, 1e-9, 4.0, 10).is_err());
    }

    #[test]
    fn unit_box_moment_hypothesis() {
        let m = MeasureSpec::unit();
        let k = 6.0;
        let kappa = 1.0 + math::powf(2.0, k / 2.0) + 1e-9;
        for d in [1, 2, 5, 16, 32] {
            assert!(m.moment_hypothesis(1.0, d, k, kappa, 0.5));
        }
    }
}
