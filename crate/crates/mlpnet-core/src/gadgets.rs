//! Closed-form gadget networks: piecewise-linear interpolants, hat functions,
//! and approximate squares and products with envelope error guarantees.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{self, CalcError};
use crate::math;
use crate::net::{Activation, Layer, Network};
use crate::sparse::Csr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GadgetError {
    #[error("knots must be finite and strictly increasing")]
    Knots,
    #[error("knot and value counts differ ({knots} vs {values})")]
    Lengths { knots: usize, values: usize },
    #[error("need at least {0} knots")]
    TooFewKnots(usize),
    #[error("knots must start at 0 and end at the horizon {0}")]
    Endpoints(f64),
    #[error("tolerance must lie in (0, 1], got {0}")]
    Tolerance(f64),
    #[error("exponent q = {q} must exceed {min}")]
    Exponent { q: f64, min: f64 },
    #[error("the {0} activation is not supported by this gadget")]
    Activation(&'static str),
    #[error(transparent)]
    Calc(#[from] CalcError),
}

pub type Result<T> = core::result::Result<T, GadgetError>;

/// Piecewise-linear interpolation data, constant outside the knot range.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpSpec {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl InterpSpec {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(GadgetError::Lengths { knots: knots.len(), values: values.len() });
        }
        if knots.is_empty() {
            return Err(GadgetError::TooFewKnots(1));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GadgetError::Knots);
        }
        Ok(InterpSpec { knots, values })
    }

    /// Samples `f` at `count` uniform knots on `[lo, hi]`.
    pub fn sample(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if count < 2 {
            return Err(GadgetError::TooFewKnots(2));
        }
        let h = (hi - lo) / (count - 1) as f64;
        let knots: Vec<f64> = (0..count).map(|i| if i + 1 == count { hi } else { lo + h * i as f64 }).collect();
        let values = knots.iter().map(|&t| f(t)).collect();
        InterpSpec::new(knots, values)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute slope of the interpolant.
    pub fn lipschitz(&self) -> f64 {
        self.slopes().iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    fn slopes(&self) -> Vec<f64> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, f)| (f[1] - f[0]) / (t[1] - t[0]))
            .collect()
    }

    pub fn eval(&self, t: f64) -> f64 {
        interp_eval(self, t)
    }
}

/// Evaluates the interpolant; constant extension outside the knots.
pub fn interp_eval(spec: &InterpSpec, t: f64) -> f64 {
    let k = &spec.knots;
    let f = &spec.values;
    let n = k.len();
    if t <= k[0] {
        return f[0];
    }
    if t >= k[n - 1] {
        return f[n - 1];
    }
    let i = k.partition_point(|&x| x <= t);
    let (a, b) = (k[i - 1], k[i]);
    f[i - 1] + ((t - a) / (b - a)) * (f[i] - f[i - 1])
}

/// Knots of a hat function: zero outside `[t0, t2]`, one at `t1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatSpec {
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
}

impl HatSpec {
    pub fn new(t0: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t2.is_finite()) || !(t0 < t1 && t1 < t2) {
            return Err(GadgetError::Knots);
        }
        Ok(HatSpec { t0, t1, t2 })
    }

    /// Slope changes `(c0, c1, c2)` at the three knots.
    pub fn coefficients(&self) -> [f64; 3] {
        let c0 = 1.0 / (self.t1 - self.t0);
        let c2 = 1.0 / (self.t2 - self.t1);
        [c0, -c2 - c0, c2]
    }

    /// Largest slope magnitude.
    pub fn lipschitz(&self) -> f64 {
        f64::max(1.0 / (self.t1 - self.t0), 1.0 / (self.t2 - self.t1))
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.t0 || t >= self.t2 {
            0.0
        } else if t <= self.t1 {
            (t - self.t0) / (self.t1 - self.t0)
        } else {
            (self.t2 - t) / (self.t2 - self.t1)
        }
    }

    pub fn as_interp(&self) -> InterpSpec {
        InterpSpec { knots: vec![self.t0, self.t1, self.t2], values: vec![0.0, 1.0, 0.0] }
    }
}

/// Writes the interpolant on `[0, horizon]` as `sum_k f_k hat_k(t)` with ghost
/// knots mirrored one spacing beyond each end.
pub fn hat_decompose(spec: &InterpSpec, horizon: f64) -> Result<Vec<(f64, HatSpec)>> {
    let k = &spec.knots;
    let n = k.len();
    if n < 2 {
        return Err(GadgetError::TooFewKnots(2));
    }
    if k[0] != 0.0 || k[n - 1] != horizon {
        return Err(GadgetError::Endpoints(horizon));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i == 0 { k[0] - (k[1] - k[0]) } else { k[i - 1] };
        let right = if i + 1 == n { k[n - 1] + (k[n - 1] - k[n - 2]) } else { k[i + 1] };
        out.push((spec.values[i], HatSpec::new(left, k[i], right)?));
    }
    Ok(out)
}

/// Exact ReLU network `f_0 + sum_j s_j max{t - t_j, 0}` of the interpolant,
/// with dims `(1, K+1, 1)`.
pub fn pwl_relu_net(spec: &InterpSpec) -> Result<Network> {
    let n = spec.knots.len();
    if n < 2 {
        return Err(GadgetError::TooFewKnots(2));
    }
    let slopes = spec.slopes();
    let mut out_w = Vec::with_capacity(n);
    let mut prev = 0.0;
    for j in 0..n {
        let s = if j + 1 < n { slopes[j] } else { 0.0 };
        out_w.push(s - prev);
        prev = s;
    }
    let b: Vec<f64> = spec.knots.iter().map(|&t| -t).collect();
    Ok(Network::new(vec![
        Layer::from_dense(n, 1, &vec![1.0; n], &b).map_err(CalcError::from)?,
        Layer::from_dense(1, n, &out_w, &[spec.values[0]]).map_err(CalcError::from)?,
    ])
    .map_err(CalcError::from)?)
}

/// The interpolant as a network for `act`: exact for ReLU and leaky ReLU,
/// uniformly within `tol` for softplus.
pub fn pwl_net(spec: &InterpSpec, act: Activation, tol: f64) -> Result<Network> {
    let relu = pwl_relu_net(spec)?;
    Ok(calculus::relu_net_for(&relu, act, tol)?)
}

/// Softplus network within `eps * max{1, |t|^q}` of the interpolant on all of R.
pub fn pwl_softplus_approx(target: &InterpSpec, eps: f64, q: f64) -> Result<Network> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(GadgetError::Tolerance(eps));
    }
    if !(q > 1.0) {
        return Err(GadgetError::Exponent { q, min: 1.0 });
    }
    let relu = pwl_relu_net(target)?;
    Ok(calculus::relu_net_to_softplus_within(&relu, eps)?)
}

/// Size allowance for a softplus hat with Lipschitz constant `lip`.
pub fn softplus_hat_param_bound(lip: f64, eps: f64, q: f64) -> f64 {
    let e = q / (q - 1.0);
    12.0 * math::powf(f64::max(1.0, 4.0 * lip), e) * math::powf(2.0, e) * math::powf(eps, -e)
}

/// Exact hat network for `a(x) = max{x, alpha x}` as the sum of six scaled
/// leaky units; dims `(1, 6, 1)` and 19 parameters. `alpha = 0` gives ReLU.
pub fn hat_exact_leaky(spec: &HatSpec, alpha: f64) -> Result<Network> {
    let conv = calculus::ReluFromLeaky::new(alpha)?;
    let c = spec.coefficients();
    let t = [spec.t0, spec.t1, spec.t2];
    let beta = conv.scalings[1];
    let unit = calculus::activation_net(1);
    let mut neg = Vec::with_capacity(3);
    let mut pos = Vec::with_capacity(3);
    for j in 0..3 {
        let inner_neg = Network::affine_dense(1, 1, &[-beta], &[beta * t[j]]).map_err(CalcError::from)?;
        let inner_pos = Network::affine_dense(1, 1, &[beta], &[-beta * t[j]]).map_err(CalcError::from)?;
        neg.push(calculus::scale(conv.coefficients[0] * c[j], &calculus::compose(&unit, &inner_neg)?)?);
        pos.push(calculus::scale(conv.coefficients[1] * c[j], &calculus::compose(&unit, &inner_pos)?)?);
    }
    let h = calculus::sum_same(&[calculus::sum_same(&neg)?, calculus::sum_same(&pos)?])?;
    Ok(h)
}

/// Hat network for `act`: exact for ReLU/leaky, softplus within `eps max{1,|t|^q}`.
pub fn hat_net(spec: &HatSpec, act: Activation, eps: f64, q: f64) -> Result<Network> {
    match act {
        Activation::Relu => hat_exact_leaky(spec, 0.0),
        Activation::LeakyRelu { alpha } => hat_exact_leaky(spec, alpha),
        Activation::Softplus => pwl_softplus_approx(&spec.as_interp(), eps, q),
        Activation::Identity => Err(GadgetError::Activation("identity")),
    }
}

/// How the base approximator of `x^2` on `[0, 1]` (ReLU outside) is built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SquareBase {
    /// One hidden layer: ReLU interpolant of `x^2` at uniform breakpoints.
    Interpolated,
    /// Deep sawtooth expansion `x - sum_s g_s(x) / 4^s` of the same interpolant
    /// at `2^m + 1` breakpoints.
    Sawtooth,
}

/// Accuracy parameters of the square and product gadgets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GadgetBudget {
    pub epsilon: f64,
    pub q: f64,
    pub base: SquareBase,
}

impl GadgetBudget {
    pub fn new(epsilon: f64, q: f64) -> Result<Self> {
        Self::with_base(epsilon, q, SquareBase::Sawtooth)
    }

    pub fn with_base(epsilon: f64, q: f64, base: SquareBase) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(GadgetError::Tolerance(epsilon));
        }
        if !(q > 2.0) || !q.is_finite() {
            return Err(GadgetError::Exponent { q, min: 2.0 });
        }
        Ok(GadgetBudget { epsilon, q, base })
    }

    /// Accuracy demanded of the base approximator by the square gadget.
    pub fn delta(&self) -> f64 {
        let q = self.q;
        0.5 * math::powf(4.0, -2.0 / (q - 2.0)) * math::powf(self.epsilon, q / (q - 2.0))
    }

    /// Input scaling of the two square branches.
    pub fn branch_scale(&self) -> f64 {
        math::powf(self.epsilon / 4.0, 1.0 / (self.q - 2.0))
    }

    /// Budget of the square gadget used inside the product gadget.
    pub fn for_product_square(&self) -> GadgetBudget {
        let e = self.epsilon / (math::powf(2.0, self.q - 1.0) + 1.0);
        GadgetBudget { epsilon: e, ..*self }
    }
}

/// The square base target: `x^2` on `[0, 1]`, `max{x, 0}` elsewhere.
pub fn square_base_target(x: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        x * x
    } else {
        x.max(0.0)
    }
}

/// Interpolated base with `n` uniform intervals on `[0, 1]`; error `1 / (4 n^2)`.
pub fn square_base_interpolated(n: usize) -> Network {
    let h = 1.0 / n as f64;
    let mut w_out = Vec::with_capacity(n + 1);
    let mut bias = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for j in 0..=n {
        let slope = if j < n { (2 * j + 1) as f64 * h } else { 1.0 };
        w_out.push(slope - prev);
        prev = slope;
        bias.push(if j < n { -(j as f64) * h } else { -1.0 });
    }
    Network::new(vec![
        Layer::from_dense(n + 1, 1, &vec![1.0; n + 1], &bias).expect("layer"),
        Layer::from_dense(1, n + 1, &w_out, &[0.0]).expect("layer"),
    ])
    .expect("interpolated square base")
}

/// Sawtooth base with `m >= 1` teeth; error `2^{-2m-2}` on `[0, 1]`, exact outside.
pub fn square_base_sawtooth(m: usize) -> Network {
    assert!(m >= 1, "at least one tooth");
    let mut layers = Vec::with_capacity(m + 1);
    // First hidden layer: r(x), r(x - 1/2), r(x - 1); r(x) doubles as the ReLU pass-through.
    layers.push(Layer::from_dense(3, 1, &[1.0, 1.0, 1.0], &[0.0, -0.5, -1.0]).expect("layer"));
    // Tooth value of the previous layer as (column, coefficient) pairs.
    let mut tooth: Vec<(usize, f64)> = vec![(0, 2.0), (1, -4.0), (2, 2.0)];
    let mut acc_col: Option<usize> = None;
    let mut cols = 3;
    let mut pow4 = 1.0;
    for _s in 2..=m {
        pow4 *= 4.0;
        // Units: [x+, A, r(g), r(g - 1/2)], where A accumulates g_j / 4^j.
        let mut t = vec![(0usize, 0usize, 1.0)];
        if let Some(a) = acc_col {
            t.push((1, a, 1.0));
        }
        for &(c, w) in &tooth {
            t.push((1, c, w / pow4));
            t.push((2, c, w));
            t.push((3, c, w));
        }
        layers.push(Layer::new(Csr::from_triplets(4, cols, t), vec![0.0, 0.0, 0.0, -0.5]).expect("layer"));
        tooth = vec![(2, 2.0), (3, -4.0)];
        acc_col = Some(1);
        cols = 4;
    }
    pow4 *= 4.0;
    let mut t = vec![(0usize, 0usize, 1.0)];
    if let Some(a) = acc_col {
        t.push((0, a, -1.0));
    }
    for &(c, w) in &tooth {
        t.push((0, c, -w / pow4));
    }
    layers.push(Layer::new(Csr::from_triplets(1, cols, t), vec![0.0]).expect("layer"));
    Network::new(layers).expect("sawtooth square base")
}

/// ReLU base within `delta` of [`square_base_target`] on all of R.
pub fn square_base_relu(delta: f64, base: SquareBase) -> Network {
    match base {
        SquareBase::Interpolated => {
            let n = math::ceil(1.0 / (2.0 * math::sqrt(delta))) as usize;
            square_base_interpolated(n.max(1))
        }
        SquareBase::Sawtooth => {
            let m = math::ceil((math::log2(1.0 / delta) - 2.0) / 2.0).max(1.0) as usize;
            square_base_sawtooth(m)
        }
    }
}

/// Base approximator for `act` within `delta` of [`square_base_target`].
pub fn square_base(delta: f64, act: Activation, base: SquareBase) -> Result<Network> {
    match act {
        Activation::Relu => Ok(square_base_relu(delta, base)),
        Activation::LeakyRelu { alpha } => Ok(calculus::relu_net_to_leaky(&square_base_relu(delta, base), alpha)?),
        Activation::Softplus => {
            let relu = square_base_relu(0.5 * delta, base);
            Ok(calculus::relu_net_to_softplus_within(&relu, 0.5 * delta)?)
        }
        Activation::Identity => Err(GadgetError::Activation("identity")),
    }
}

/// Size data of a square or product gadget.
#[derive(Clone, Debug, PartialEq)]
pub struct GadgetInfo {
    pub delta: f64,
    pub base_params: u64,
    pub base_depth: usize,
    /// `c` in `P(base) <= c delta^{-r}`, measured with `r = q / (q - 1)`.
    pub c: f64,
    pub r: f64,
    pub params: u64,
}

/// Approximate square `x -> x^2` within `epsilon * max{1, |x|^q}`.
pub fn square_net(budget: &GadgetBudget, act: Activation) -> Result<Network> {
    square_net_with_info(budget, act).map(|(n, _)| n)
}

pub fn square_net_with_info(budget: &GadgetBudget, act: Activation) -> Result<(Network, GadgetInfo)> {
    let delta = budget.delta();
    let g = square_base(delta, act, budget.base)?;
    let lam = budget.branch_scale();
    let inv = 1.0 / (lam * lam);
    let w1 = Network::affine_dense(2, 1, &[lam, -lam], &[0.0, 0.0]).map_err(CalcError::from)?;
    let w2 = Network::affine_dense(1, 2, &[inv, inv], &[0.0]).map_err(CalcError::from)?;
    let pair = calculus::parallel_same(&[g.clone(), g.clone()])?;
    let phi = calculus::compose(&w2, &calculus::compose(&pair, &w1)?)?;
    let r = budget.q / (budget.q - 1.0);
    let info = GadgetInfo {
        delta,
        base_params: g.param_count(),
        base_depth: g.depth(),
        c: g.param_count() as f64 * math::powf(delta, r),
        r,
        params: phi.param_count(),
    };
    Ok((phi, info))
}

/// Size allowance of the square gadget given the base constants `(c, r)`.
pub fn square_param_bound(budget: &GadgetBudget, c: f64, r: f64) -> f64 {
    let q = budget.q;
    math::powf(2.0, r + 2.0) * math::powf(4.0, 2.0 * r / (q - 2.0)) * c * math::powf(budget.epsilon, -r * q / (q - 2.0))
}

/// Approximate product `(v, w) -> v w` within `epsilon * max{1, |v|^q, |w|^q}`
/// by polarization `(v+w)^2/2 - v^2/2 - w^2/2`.
pub fn product_net(budget: &GadgetBudget, act: Activation) -> Result<Network> {
    product_net_with_info(budget, act).map(|(n, _)| n)
}

pub fn product_net_with_info(budget: &GadgetBudget, act: Activation) -> Result<(Network, GadgetInfo)> {
    let inner = budget.for_product_square();
    let (phi, mut info) = square_net_with_info(&inner, act)?;
    let w1 = Network::affine_dense(3, 2, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0], &[0.0; 3]).map_err(CalcError::from)?;
    let w2 = Network::affine_dense(1, 3, &[0.5, -0.5, -0.5], &[0.0]).map_err(CalcError::from)?;
    let triple = calculus::parallel_same(&[phi.clone(), phi.clone(), phi])?;
    let gamma = calculus::compose(&w2, &calculus::compose(&triple, &w1)?)?;
    info.params = gamma.param_count();
    Ok((gamma, info))
}

/// Size allowance of the product gadget: prefactor 864 for ReLU/leaky, 1728 for softplus.
pub fn product_param_bound(epsilon: f64, q: f64, act: Activation) -> f64 {
    let pre = match act {
        Activation::Softplus => 1728.0,
        _ => 864.0,
    };
    let e1 = (q * q * q + 3.0 * q * q - 2.0 * q) / ((q - 2.0) * (q - 1.0));
    let e2 = -(q * q) / ((q - 2.0) * (q - 1.0));
    pre * math::powf(2.0, e1) * math::powf(epsilon, e2)
}

/// `max{1, |x|^q}`.
pub fn envelope(x: f64, q: f64) -> f64 {
    f64::max(1.0, math::powf(x.abs(), q))
}
