//! Translation of multilevel Picard estimators into explicit networks.
//!
//! The fixed-time network reproduces the estimator for one realization of the
//! random field: Brownian shifts become translations fused into the first
//! layer of each copy of the terminal network, and level corrections are
//! compositions with the nonlinearity network. The space-time network blends
//! fixed-time networks on a uniform time grid with hat functions and product
//! gadgets.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{self, CalcError, IdentityNet};
use crate::gadgets::{self, GadgetBudget, GadgetError, HatSpec};
use crate::math;
use crate::mlp::{MlpError, MlpParams, MultiIndex, RandomField};
use crate::net::{Activation, Network};
use crate::sparse::Csr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("activation mismatch: identity network uses {found}, expected {expected}")]
    Activation { expected: &'static str, found: &'static str },
    #[error("invalid compile input: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

pub type Result<T> = core::result::Result<T, CompileError>;

/// Inputs that determine a compiled network.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub theta: MultiIndex,
    pub n: u32,
    pub m: u32,
    pub t: f64,
    pub horizon: f64,
    pub d: usize,
    pub seed: u64,
    pub activation: Activation,
    pub terminal_id: u64,
    pub nonlinearity_id: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledFixedTime {
    pub net: Network,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompiledSpaceTime {
    pub net: Network,
    pub k: usize,
    pub gamma: f64,
    pub q: f64,
    /// Grid times `kT/K`, `k = 0..=K`.
    pub grid: Vec<f64>,
    pub hats: Vec<Network>,
    pub product: Network,
    /// Fixed-time networks at the grid times.
    pub fixed: Vec<Network>,
    pub provenance: Provenance,
}

struct Builder<'a> {
    g: &'a Network,
    f: &'a Network,
    j: &'a IdentityNet,
    field: &'a RandomField,
    m: u64,
    d: usize,
    horizon: f64,
}

impl Builder<'_> {
    fn zero(&self) -> Network {
        calculus::affine(Csr::zeros(1, self.d), vec![0.0]).expect("zero affine")
    }

    fn shift(&self, theta: &MultiIndex, s: f64) -> Result<Network> {
        let w = self.field.brownian(theta, s)?;
        Ok(calculus::translation(&w))
    }

    fn level_sum(&self, n: u32, i: u32, t: f64, theta: &MultiIndex, correction: bool) -> Result<Network> {
        let count = self.m.pow(n - i);
        let mut members = Vec::with_capacity(count as usize);
        for k in 1..=count as i64 {
            let idx = theta.child(i as i64, k);
            let u = self.field.time_sample(&idx, t)?;
            let inner = if correction {
                let neg = theta.child(-(i as i64), k);
                self.build(i.saturating_sub(1), u, &neg)?
            } else {
                self.build(i, u, &idx)?
            };
            let fu = calculus::compose(self.f, &inner)?;
            members.push(calculus::compose(&fu, &self.shift(&idx, u - t)?)?);
        }
        Ok(calculus::sum_diff(&members, self.j)?)
    }

    fn build(&self, n: u32, t: f64, theta: &MultiIndex) -> Result<Network> {
        if n == 0 {
            return Ok(self.zero());
        }
        let count = self.m.pow(n);
        let inv = 1.0 / count as f64;
        let mut terminal = Vec::with_capacity(count as usize);
        for k in 1..=count as i64 {
            let idx = theta.child(0, -k);
            let copy = calculus::compose(self.g, &self.shift(&idx, self.horizon - t)?)?;
            terminal.push(calculus::scale(inv, &copy)?);
        }
        let block1 = calculus::sum_same(&terminal)?;

        let mut plus = Vec::with_capacity(n as usize);
        let mut minus = Vec::with_capacity(n as usize);
        for i in 0..n {
            let w = 1.0 / self.m.pow(n - i) as f64;
            plus.push(calculus::scale((self.horizon - t) * w, &self.level_sum(n, i, t, theta, false)?)?);
            let ind = if i >= 1 { 1.0 } else { 0.0 };
            minus.push(calculus::scale((t - self.horizon) * ind * w, &self.level_sum(n, i, t, theta, true)?)?);
        }
        let block2 = calculus::sum_diff(&plus, self.j)?;
        let block3 = calculus::sum_diff(&minus, self.j)?;
        let first = calculus::sum_diff(&[block1, block2], self.j)?;
        Ok(calculus::sum_diff(&[first, block3], self.j)?)
    }
}

fn check_inputs(params: &MlpParams, g: &Network, f: &Network, field: &RandomField) -> Result<()> {
    params.validate()?;
    if g.input_dim() != params.d || g.output_dim() != 1 {
        return Err(CompileError::Shape("terminal network must map R^d to R"));
    }
    if f.input_dim() != 1 || f.output_dim() != 1 {
        return Err(CompileError::Shape("nonlinearity network must map R to R"));
    }
    if field.d != params.d || field.horizon != params.horizon {
        return Err(CompileError::Shape("random field does not match (d, T)"));
    }
    Ok(())
}

fn check_activation(act: Activation, j: &IdentityNet) -> Result<()> {
    if j.act != act {
        return Err(CompileError::Activation { expected: act.kind(), found: j.act.kind() });
    }
    Ok(())
}

fn provenance(params: &MlpParams, theta: &MultiIndex, g: &Network, f: &Network, act: Activation, field: &RandomField) -> Provenance {
    Provenance {
        theta: theta.clone(),
        n: params.n,
        m: params.m,
        t: params.t,
        horizon: params.horizon,
        d: params.d,
        seed: field.seed,
        activation: act,
        terminal_id: g.fingerprint(),
        nonlinearity_id: f.fingerprint(),
    }
}

/// Network whose realization is the estimate `U_n^theta(t, .)` with terminal
/// function `R(g)` and nonlinearity `R(f)`, for the draws of `field`.
pub fn compile_fixed_time(
    params: &MlpParams,
    theta: &MultiIndex,
    g: &Network,
    f: &Network,
    j: &IdentityNet,
    act: Activation,
    field: &RandomField,
) -> Result<CompiledFixedTime> {
    check_inputs(params, g, f, field)?;
    check_activation(act, j)?;
    let b = Builder { g, f, j, field, m: params.m as u64, d: params.d, horizon: params.horizon };
    let net = b.build(params.n, params.t, theta)?;
    Ok(CompiledFixedTime { net, provenance: provenance(params, theta, g, f, act, field) })
}

/// Depth allowance `max{w_J, L(g)} + n H(f)` of a fixed-time network.
pub fn fixed_time_depth_bound(n: u32, g: &Network, f: &Network, j: &IdentityNet) -> usize {
    j.width().max(g.depth()) + n as usize * (f.depth() - 1)
}

/// Width allowance `max{w_J, |D(f)|, |D(g)|} (3M)^n` of a fixed-time network.
pub fn fixed_time_width_bound(n: u32, m: u32, g: &Network, f: &Network, j: &IdentityNet) -> f64 {
    let w = j.width().max(f.dims().max_width()).max(g.dims().max_width());
    w as f64 * math::powi(3.0 * m as f64, n as i32)
}

/// Hat on the uniform grid `kT/K` with ghost knots one spacing outside `[0, T]`.
pub fn grid_hat(k: usize, big_k: usize, horizon: f64) -> Result<HatSpec> {
    let h = horizon / big_k as f64;
    let c = k as f64 * h;
    let t0 = if k == 0 { -h } else { (k - 1) as f64 * h };
    let t2 = if k == big_k { horizon + h } else { (k + 1) as f64 * h };
    Ok(HatSpec::new(t0, c, t2)?)
}

/// Space-time network `(t, x) -> sum_k Gamma(H_k(t), U_n(t_k, x))`.
#[allow(clippy::too_many_arguments)]
pub fn compile_space_time(
    params: &MlpParams,
    big_k: usize,
    gamma: f64,
    q: f64,
    theta: &MultiIndex,
    g: &Network,
    f: &Network,
    j: &IdentityNet,
    act: Activation,
    field: &RandomField,
) -> Result<CompiledSpaceTime> {
    check_inputs(params, g, f, field)?;
    check_activation(act, j)?;
    if big_k < 1 {
        return Err(CompileError::Invalid("grid needs K >= 1"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(CompileError::Invalid("gamma must lie in (0, 1]"));
    }
    let budget = GadgetBudget::new(gamma, q)?;
    let product = gadgets::product_net(&budget, act)?;
    let b = Builder { g, f, j, field, m: params.m as u64, d: params.d, horizon: params.horizon };
    let grid: Vec<f64> = (0..=big_k).map(|k| k as f64 * params.horizon / big_k as f64).collect();
    let mut hats = Vec::with_capacity(big_k + 1);
    let mut fixed = Vec::with_capacity(big_k + 1);
    let mut branches = Vec::with_capacity(big_k + 1);
    for (k, &tk) in grid.iter().enumerate() {
        let hat = gadgets::hat_net(&grid_hat(k, big_k, params.horizon)?, act, gamma, q)?;
        let u = b.build(params.n, tk, theta)?;
        let pair = calculus::parallel_general(&[hat.clone(), u.clone()], j)?;
        branches.push(calculus::compose(&product, &pair)?);
        hats.push(hat);
        fixed.push(u);
    }
    let net = calculus::sum_diff(&branches, j)?;
    let mut prov = provenance(params, theta, g, f, act, field);
    prov.t = 0.0;
    Ok(CompiledSpaceTime { net, k: big_k, gamma, q, grid, hats, product, fixed, provenance: prov })
}

/// Deviation allowance `2 gamma (1 + (T+1)^q)^q sum_k (1 + |U_k|^q)` between the
/// space-time network and the linear interpolation of the grid values `u`.
pub fn interpolation_bound(gamma: f64, q: f64, horizon: f64, u: &[f64]) -> f64 {
    let s: f64 = u.iter().map(|v| 1.0 + math::powf(math::abs(*v), q)).sum();
    2.0 * gamma * math::powf(1.0 + math::powf(horizon + 1.0, q), q) * s
}

/// Parameter allowance of the space-time network from measured inputs.
pub fn space_time_param_bound(
    n: u32,
    m: u32,
    big_k: usize,
    g: &Network,
    f: &Network,
    j: &IdentityNet,
    product: &Network,
    hats: &[Network],
) -> f64 {
    let w = j.width() as f64;
    let depth = w.max(g.depth() as f64) + f.depth() as f64;
    let width = w.max(f.dims().max_width() as f64).max(g.dims().max_width() as f64);
    let grow = math::sqrt(n as f64) * math::powi(3.0 * m as f64, n as i32);
    let hat = hats.iter().map(|h| h.param_count()).max().unwrap_or(0) as f64;
    16.0 * depth
        * width
        * width
        * grow
        * grow
        * math::powi(product.param_count() as f64, 3)
        * math::powi(hat, 3)
        * math::powi(big_k as f64 + 1.0, 2)
        * w
        * w
}

/// Wraps a terminal-value space-time network on the internal clock
/// `[0, 2 c T]` as an initial-value network: `out(s, x) = net(2c(T - s), x)`.
pub fn to_initial_value(net: &Network, horizon: f64, diffusion: f64, j: &IdentityNet) -> Result<Network> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(CompileError::Invalid("horizon must be positive"));
    }
    if !(diffusion > 0.0) || !diffusion.is_finite() {
        return Err(CompileError::Invalid("diffusion must be positive"));
    }
    let reversed = calculus::time_shift(net, 2.0 * diffusion * horizon, -1.0, j)?;
    Ok(calculus::time_shift(&reversed, 0.0, 2.0 * diffusion, j)?)
}

/// Parameter allowance `(96 w_J^2 d^2)^2 P(net)` of [`to_initial_value`].
pub fn initial_value_param_bound(net: &Network, d: usize, j: &IdentityNet) -> f64 {
    let w = j.width() as f64;
    let f = 96.0 * w * w * (d * d) as f64;
    f * f * net.param_count() as f64
}
