//! Structural operators on networks.
//!
//! Every operator builds the network literally from its definition, so the
//! parameter count of the result is the structural count used by the size
//! bounds. Composition fuses exactly one boundary (the last layer of the
//! inner network with the first layer of the outer one); nothing else is
//! simplified.

use alloc::vec;
use alloc::vec::Vec;

use crate::net::{Activation, Layer, NetError, Network};
use crate::sparse::Csr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalcError {
    #[error("cannot compose: outer network takes {outer_in} inputs, inner network yields {inner_out}")]
    ComposeShape { outer_in: usize, inner_out: usize },
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error("target depth {target} is below the current depth {current}")]
    Depth { target: usize, current: usize },
    #[error("operation needs at least one network")]
    NoMembers,
    #[error("member networks have different depths")]
    UnequalDepth,
    #[error("members must have scalar output")]
    NotScalar,
    #[error("no identity network exists for the {0} activation")]
    NoIdentity(&'static str),
    #[error(transparent)]
    Net(#[from] NetError),
}

pub type Result<T> = core::result::Result<T, CalcError>;

/// Composition `phi • psi`: realizes `phi ∘ psi`.
pub fn compose(phi: &Network, psi: &Network) -> Result<Network> {
    if phi.input_dim() != psi.output_dim() {
        return Err(CalcError::ComposeShape { outer_in: phi.input_dim(), inner_out: psi.output_dim() });
    }
    let pl = psi.layers();
    let fl = phi.layers();
    let inner_last = &pl[pl.len() - 1];
    let outer_first = &fl[0];
    let w = outer_first.weights().matmul(inner_last.weights());
    let mut b = outer_first.weights().matvec(inner_last.bias());
    for (x, &c) in b.iter_mut().zip(outer_first.bias()) {
        *x += c;
    }
    let mut layers = Vec::with_capacity(pl.len() + fl.len() - 1);
    layers.extend(pl[..pl.len() - 1].iter().cloned());
    layers.push(Layer::new(w, b)?);
    layers.extend(fl[1..].iter().cloned());
    Ok(Network::new(layers)?)
}

/// Single-layer network `x -> W x + B`.
pub fn affine(w: Csr, b: Vec<f64>) -> Result<Network> {
    if w.rows() != b.len() {
        return Err(CalcError::Shape("affine bias length differs from weight rows"));
    }
    Ok(Network::new(vec![Layer::new(w, b)?])?)
}

/// `A_{I_n, B}`: translation by `b`.
pub fn translation(b: &[f64]) -> Network {
    affine(Csr::identity(b.len()), b.to_vec()).expect("square identity is well formed")
}

/// `A_{I_n, 0}`.
pub fn identity_affine(n: usize) -> Network {
    translation(&vec![0.0; n])
}

/// `A_{lambda I_n, 0}`.
pub fn scalar_affine(lambda: f64, n: usize) -> Network {
    affine(Csr::diagonal(&vec![lambda; n]), vec![0.0; n]).expect("square diagonal is well formed")
}

/// Activation network `((I, 0), (I, 0))` on `d` coordinates.
pub fn activation_net(d: usize) -> Network {
    Network::new(vec![
        Layer::new(Csr::identity(d), vec![0.0; d]).expect("identity layer"),
        Layer::new(Csr::identity(d), vec![0.0; d]).expect("identity layer"),
    ])
    .expect("activation network")
}

/// `phi^{•n}`; the zeroth power is the affine identity.
pub fn power(phi: &Network, n: usize) -> Result<Network> {
    if phi.input_dim() != phi.output_dim() {
        return Err(CalcError::Shape("power needs equal input and output dimension"));
    }
    let mut out = identity_affine(phi.input_dim());
    for _ in 0..n {
        out = compose(phi, &out)?;
    }
    Ok(out)
}

/// A scalar identity network with one hidden layer of width `width`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityNet {
    pub net: Network,
    pub act: Activation,
}

impl IdentityNet {
    /// Hidden width.
    pub fn width(&self) -> usize {
        self.net.layers()[0].rows()
    }
}

/// Two-unit identity: `x = c (a(x) - a(-x))` with `c` depending on the activation.
pub fn identity_net(act: Activation) -> Result<IdentityNet> {
    let out_scale = match act {
        Activation::Relu | Activation::Softplus => 1.0,
        Activation::LeakyRelu { alpha } => 1.0 / (1.0 + alpha),
        Activation::Identity => return Err(CalcError::NoIdentity("identity")),
    };
    let net = Network::new(vec![
        Layer::from_dense(2, 1, &[1.0, -1.0], &[0.0, 0.0])?,
        Layer::from_dense(1, 2, &[out_scale, -out_scale], &[0.0])?,
    ])?;
    Ok(IdentityNet { net, act })
}

fn check_scalar_identity(j: &IdentityNet) -> Result<()> {
    if j.net.input_dim() != 1 || j.net.output_dim() != 1 || j.net.depth() != 2 {
        return Err(CalcError::Shape("identity network must be scalar with one hidden layer"));
    }
    Ok(())
}

/// Extension to depth `depth` by post-composing powers of the identity network.
pub fn extend(phi: &Network, depth: usize, j: &IdentityNet) -> Result<Network> {
    check_scalar_identity(j)?;
    if phi.output_dim() != 1 {
        return Err(CalcError::NotScalar);
    }
    if depth < phi.depth() {
        return Err(CalcError::Depth { target: depth, current: phi.depth() });
    }
    let pad = power(&j.net, depth - phi.depth())?;
    compose(&pad, phi)
}

/// Parallelization of equal-depth networks: block-diagonal layers, separate inputs.
pub fn parallel_same(nets: &[Network]) -> Result<Network> {
    let first = nets.first().ok_or(CalcError::NoMembers)?;
    let depth = first.depth();
    if nets.iter().any(|n| n.depth() != depth) {
        return Err(CalcError::UnequalDepth);
    }
    let mut layers = Vec::with_capacity(depth);
    for k in 0..depth {
        let blocks: Vec<&Csr> = nets.iter().map(|n| n.layers()[k].weights()).collect();
        let w = Csr::block_diag(&blocks);
        let b: Vec<f64> = nets.iter().flat_map(|n| n.layers()[k].bias().iter().copied()).collect();
        layers.push(Layer::new(w, b)?);
    }
    Ok(Network::new(layers)?)
}

/// Parallelization of scalar-output networks of any depths, padded with `j`.
pub fn parallel_general(nets: &[Network], j: &IdentityNet) -> Result<Network> {
    let depth = nets.iter().map(|n| n.depth()).max().ok_or(CalcError::NoMembers)?;
    let ext = nets.iter().map(|n| extend(n, depth, j)).collect::<Result<Vec<_>>>()?;
    parallel_same(&ext)
}

/// `lambda ⊛ phi`.
pub fn scale(lambda: f64, phi: &Network) -> Result<Network> {
    compose(&scalar_affine(lambda, phi.output_dim()), phi)
}

/// Summation network `A_{(I_m ... I_m), 0}` mapping `R^{mn}` to `R^m`.
pub fn summation(m: usize, n: usize) -> Network {
    let mut t = Vec::with_capacity(m * n);
    for k in 0..n {
        for i in 0..m {
            t.push((i, k * m + i, 1.0));
        }
    }
    affine(Csr::from_triplets(m, m * n, t), vec![0.0; m]).expect("summation network")
}

/// Vectorization network `A_{(I_m ... I_m)^T, 0}` mapping `R^m` to `R^{mn}`.
pub fn vectorization(m: usize, n: usize) -> Network {
    let mut t = Vec::with_capacity(m * n);
    for k in 0..n {
        for i in 0..m {
            t.push((k * m + i, i, 1.0));
        }
    }
    affine(Csr::from_triplets(m * n, m, t), vec![0.0; m * n]).expect("vectorization network")
}

/// Sum of equal-depth networks with shared input: realizes the pointwise sum.
pub fn sum_same(nets: &[Network]) -> Result<Network> {
    let first = nets.first().ok_or(CalcError::NoMembers)?;
    let (i, o) = (first.input_dim(), first.output_dim());
    if nets.iter().any(|n| n.input_dim() != i || n.output_dim() != o) {
        return Err(CalcError::Shape("summands need equal input and output dimensions"));
    }
    let par = parallel_same(nets)?;
    let inner = compose(&par, &vectorization(i, nets.len()))?;
    compose(&summation(o, nets.len()), &inner)
}

/// Sum of scalar-output networks of any depths, each padded with `j` to the maximal depth.
pub fn sum_diff(nets: &[Network], j: &IdentityNet) -> Result<Network> {
    let depth = nets.iter().map(|n| n.depth()).max().ok_or(CalcError::NoMembers)?;
    let ext = nets.iter().map(|n| extend(n, depth, j)).collect::<Result<Vec<_>>>()?;
    sum_same(&ext)
}

/// Coefficients expressing `max{x, 0}` through the leaky unit `a(x) = max{x, alpha x}`:
/// `max{x, 0} = c_0 a(s_0 x) + c_1 a(s_1 x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReluFromLeaky {
    pub alpha: f64,
    pub coefficients: [f64; 2],
    pub scalings: [f64; 2],
}

impl ReluFromLeaky {
    pub fn new(alpha: f64) -> Result<Self> {
        Activation::leaky(alpha)?;
        let beta = (1.0 - alpha).abs() / (1.0 - alpha);
        let pre = (1.0 - alpha).abs() / ((1.0 - alpha) * (1.0 - alpha * alpha));
        Ok(ReluFromLeaky { alpha, coefficients: [pre * alpha, pre], scalings: [-beta, beta] })
    }

    /// Evaluates the combination with the leaky unit directly.
    pub fn eval(&self, x: f64) -> f64 {
        let a = Activation::LeakyRelu { alpha: self.alpha };
        self.coefficients[0] * a.apply(self.scalings[0] * x) + self.coefficients[1] * a.apply(self.scalings[1] * x)
    }

    /// Depth-2 network realizing `max{x, 0}` componentwise under the leaky activation.
    pub fn network(&self, d: usize) -> Network {
        let mut first = Vec::with_capacity(2 * d);
        let mut second = Vec::with_capacity(2 * d);
        for i in 0..d {
            first.push((i, i, self.scalings[0]));
            first.push((d + i, i, self.scalings[1]));
            second.push((i, i, self.coefficients[0]));
            second.push((i, d + i, self.coefficients[1]));
        }
        Network::new(vec![
            Layer::new(Csr::from_triplets(2 * d, d, first), vec![0.0; 2 * d]).expect("layer"),
            Layer::new(Csr::from_triplets(d, 2 * d, second), vec![0.0; d]).expect("layer"),
        ])
        .expect("relu conversion network")
    }
}

/// `relu_from_leaky(d, alpha)`: the conversion coefficients for `d` coordinates.
pub fn relu_from_leaky(d: usize, alpha: f64) -> Result<(ReluFromLeaky, Network)> {
    let c = ReluFromLeaky::new(alpha)?;
    Ok((c, c.network(d)))
}

/// Rewrites a ReLU network as a leaky network with the same realization by
/// splitting every hidden unit into the two leaky units of [`ReluFromLeaky`].
pub fn relu_net_to_leaky(net: &Network, alpha: f64) -> Result<Network> {
    let conv = ReluFromLeaky::new(alpha)?;
    let [ca, cb] = conv.coefficients;
    let [sa, sb] = conv.scalings;
    let depth = net.depth();
    let mut layers = Vec::with_capacity(depth);
    for (k, layer) in net.layers().iter().enumerate() {
        let (m, n) = (layer.rows(), layer.cols());
        let split_in = k > 0;
        let split_out = k + 1 < depth;
        let rows = if split_out { 2 * m } else { m };
        let cols = if split_in { 2 * n } else { n };
        let mut t = Vec::with_capacity(layer.weights().nnz() * 4);
        for (i, j, w) in layer.weights().iter() {
            let ins: &[(usize, f64)] = if split_in { &[(j, ca), (n + j, cb)] } else { &[(j, 1.0)] };
            let outs: &[(usize, f64)] = if split_out { &[(i, sa), (m + i, sb)] } else { &[(i, 1.0)] };
            for &(r, so) in outs {
                for &(c, si) in ins {
                    t.push((r, c, so * (si * w)));
                }
            }
        }
        let b: Vec<f64> = if split_out {
            layer.bias().iter().map(|&v| sa * v).chain(layer.bias().iter().map(|&v| sb * v)).collect()
        } else {
            layer.bias().to_vec()
        };
        layers.push(Layer::new(Csr::from_triplets(rows, cols, t), b)?);
    }
    Ok(Network::new(layers)?)
}

/// Rewrites a ReLU network for the softplus activation by replacing every
/// hidden unit `max{z, 0}` with `softplus(s z) / s`.
pub fn relu_net_to_softplus(net: &Network, s: f64) -> Result<Network> {
    let depth = net.depth();
    let mut layers = Vec::with_capacity(depth);
    for (k, layer) in net.layers().iter().enumerate() {
        let row_scale = if k + 1 < depth { s } else { 1.0 };
        let col_scale = if k > 0 { 1.0 / s } else { 1.0 };
        let w = if k > 0 && k + 1 < depth {
            layer.weights().clone()
        } else {
            let f = row_scale * col_scale;
            layer.weights().scaled(f)
        };
        let b = layer.bias().iter().map(|&v| v * row_scale).collect();
        layers.push(Layer::new(w, b)?);
    }
    Ok(Network::new(layers)?)
}

/// Factor `B` with `sup |softplus version - relu version| <= B ln(2) / s` for
/// the conversion of [`relu_net_to_softplus`].
pub fn softplus_gap_factor(net: &Network) -> f64 {
    let layers = net.layers();
    if layers.len() == 1 {
        return 0.0;
    }
    let mut e = 1.0;
    for layer in &layers[1..layers.len() - 1] {
        e = layer.weights().norm_inf() * e + 1.0;
    }
    layers[layers.len() - 1].weights().norm_inf() * e
}

/// Softplus conversion with the scale chosen so the uniform gap is at most `tol`.
pub fn relu_net_to_softplus_within(net: &Network, tol: f64) -> Result<Network> {
    let factor = softplus_gap_factor(net);
    if factor == 0.0 {
        return Ok(net.clone());
    }
    relu_net_to_softplus(net, factor * core::f64::consts::LN_2 / tol)
}

/// Converts a ReLU network to an equivalent (or, for softplus, `tol`-close)
/// network for `act`.
pub fn relu_net_for(net: &Network, act: Activation, tol: f64) -> Result<Network> {
    match act {
        Activation::Relu => Ok(net.clone()),
        Activation::LeakyRelu { alpha: 0.0 } => Ok(net.clone()),
        Activation::LeakyRelu { alpha } => relu_net_to_leaky(net, alpha),
        Activation::Softplus => relu_net_to_softplus_within(net, tol),
        Activation::Identity => Err(CalcError::NoIdentity("identity")),
    }
}

/// Time-shift head: `G = f • P_{d+1,j}(A_{c,T}, j, ..., j)`, so that
/// `G(s, x) = f(T + c s, x)`.
pub fn time_shift(f: &Network, horizon: f64, c: f64, j: &IdentityNet) -> Result<Network> {
    let dim = f.input_dim();
    if dim < 2 {
        return Err(CalcError::Shape("time shift needs (time, space) input with d >= 1"));
    }
    let mut members = Vec::with_capacity(dim);
    members.push(affine(Csr::from_dense(1, 1, &[c]), vec![horizon])?);
    for _ in 1..dim {
        members.push(j.net.clone());
    }
    let head = parallel_general(&members, j)?;
    compose(f, &head)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1(w: f64, b: f64) -> Network {
        Network::affine_dense(1, 1, &[w], &[b]).unwrap()
    }

    fn leaky() -> Activation {
        Activation::leaky(0.5).unwrap()
    }

    #[test]
    fn compose_affine_fuses() {
        let c = compose(&a1(2.0, 0.0), &a1(3.0, 1.0)).unwrap();
        assert_eq!(c.depth(), 1);
        assert_eq!(c.layers()[0].weights().get(0, 0), 6.0);
        assert_eq!(c.layers()[0].bias(), &[2.0]);
        assert_eq!(c.realize_scalar(Activation::Relu, &[1.0]).unwrap(), 8.0);
    }

    #[test]
    fn compose_activation_net() {
        let c = compose(&activation_net(1), &a1(1.0, 0.0)).unwrap();
        assert_eq!(c.realize_scalar(Activation::Relu, &[-2.0]).unwrap(), 0.0);
    }

    #[test]
    fn compose_depths() {
        let j = identity_net(Activation::Relu).unwrap();
        let p2 = power(&j.net, 1).unwrap();
        let p3 = power(&j.net, 2).unwrap();
        assert_eq!(p2.depth(), 2);
        assert_eq!(p3.depth(), 3);
        assert_eq!(compose(&p2, &p3).unwrap().depth(), 4);
        assert!(compose(&a1(1.0, 0.0), &summation(1, 2)).is_ok());
        assert!(matches!(compose(&summation(1, 2), &a1(1.0, 0.0)), Err(CalcError::ComposeShape { .. })));
    }

    #[test]
    fn affine_examples() {
        let a = Network::affine_dense(1, 2, &[1.0, 1.0], &[0.0]).unwrap();
        assert_eq!(a.realize_scalar(Activation::Relu, &[3.0, 4.0]).unwrap(), 7.0);
        let id = identity_affine(2);
        assert_eq!(id.realize(Activation::Softplus, &[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
        let rev = a1(-1.0, 2.0);
        assert_eq!(rev.realize_scalar(Activation::Relu, &[0.5]).unwrap(), 1.5);
        assert!(affine(Csr::identity(2), vec![0.0]).is_err());
    }

    #[test]
    fn power_examples() {
        let j = identity_net(leaky()).unwrap();
        let p0 = power(&j.net, 0).unwrap();
        assert_eq!(p0.realize_scalar(leaky(), &[3.0]).unwrap(), 3.0);
        let p3 = power(&j.net, 3).unwrap();
        assert_eq!(p3.depth(), 4);
        for x in [-3.0, -0.5, 0.0, 2.0] {
            assert!((p3.realize_scalar(leaky(), &[x]).unwrap() - x).abs() < 1e-14);
        }
        let p = power(&a1(2.0, 0.0), 3).unwrap();
        assert_eq!(p.realize_scalar(Activation::Relu, &[1.5]).unwrap(), 12.0);
        assert!(power(&summation(1, 2), 2).is_err());
    }

    #[test]
    fn identity_nets() {
        let l = identity_net(leaky()).unwrap();
        assert_eq!(l.net.realize_scalar(leaky(), &[1.0]).unwrap(), 1.0);
        let s = identity_net(Activation::Softplus).unwrap();
        assert!((s.net.realize_scalar(Activation::Softplus, &[3.0]).unwrap() - 3.0).abs() < 1e-14);
        let r = identity_net(Activation::Relu).unwrap();
        assert_eq!(r.net.realize_scalar(Activation::Relu, &[-2.0]).unwrap(), -2.0);
        assert_eq!(r.net.dims().param_count, 7);
        assert_eq!(r.net.dims().widths, vec![1, 2, 1]);
        assert_eq!(r.width(), 2);
        assert!(identity_net(Activation::Identity).is_err());
        for act in [Activation::Relu, leaky(), Activation::Softplus] {
            let j = identity_net(act).unwrap();
            for i in 0..=2000 {
                let x = -100.0 + 0.1 * i as f64;
                assert!((j.net.realize_scalar(act, &[x]).unwrap() - x).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn extend_examples() {
        let j = identity_net(leaky()).unwrap();
        let phi = a1(2.0, 1.0);
        let e = extend(&phi, 3, &j).unwrap();
        assert_eq!(e.depth(), 3);
        assert!((e.realize_scalar(leaky(), &[-1.5]).unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(extend(&phi, 1, &j).unwrap(), compose(&identity_affine(1), &phi).unwrap());
        assert!(matches!(extend(&e, 2, &j), Err(CalcError::Depth { .. })));
        assert!(matches!(extend(&identity_affine(2), 2, &j), Err(CalcError::NotScalar)));
    }

    #[test]
    fn parallel_examples() {
        let p = parallel_same(&[a1(2.0, 0.0), a1(2.0, 0.0)]).unwrap();
        assert_eq!(p.realize(Activation::Relu, &[1.0, 5.0]).unwrap(), vec![2.0, 10.0]);
        let j = identity_net(Activation::Relu).unwrap();
        assert_eq!(parallel_same(&[a1(1.0, 0.0), j.net.clone()]), Err(CalcError::UnequalDepth));
        let g = parallel_general(&[a1(3.0, 0.0), j.net.clone()], &j).unwrap();
        assert_eq!(g.depth(), 2);
        assert_eq!(g.realize(Activation::Relu, &[-1.0, -4.0]).unwrap(), vec![-3.0, -4.0]);
        let phi = j.net.clone();
        assert!(parallel_same(&[phi.clone(), phi.clone()]).unwrap().param_count() <= 4 * phi.param_count());
    }

    #[test]
    fn scale_and_sum_examples() {
        let j = identity_net(Activation::Relu).unwrap();
        let z = scale(0.0, &j.net).unwrap();
        assert_eq!(z.realize_scalar(Activation::Relu, &[3.0]).unwrap(), 0.0);
        let s = scale(-2.0, &a1(1.0, 1.0)).unwrap();
        assert_eq!(s.param_count(), 2);
        assert_eq!(s.realize_scalar(Activation::Relu, &[1.0]).unwrap(), -4.0);
        let sum = sum_same(&[a1(2.0, 0.0), a1(3.0, 1.0)]).unwrap();
        assert_eq!(sum.realize_scalar(Activation::Relu, &[2.0]).unwrap(), 11.0);
        let d = sum_diff(&[a1(1.0, 0.0), power(&j.net, 2).unwrap()], &j).unwrap();
        assert_eq!(d.depth(), 3);
        assert_eq!(d.realize_scalar(Activation::Relu, &[-1.5]).unwrap(), -3.0);
    }

    #[test]
    fn relu_from_leaky_examples() {
        let (c, net) = relu_from_leaky(1, 0.5).unwrap();
        let act = leaky();
        assert_eq!(c.eval(-4.0), 0.0);
        assert_eq!(c.eval(3.0), 3.0);
        for i in 0..=2000 {
            let x = -10.0 + 0.01 * i as f64;
            assert!((net.realize_scalar(act, &[x]).unwrap() - x.max(0.0)).abs() <= 1e-12);
        }
        assert!(relu_from_leaky(1, 1.0).is_err());
        assert!(relu_from_leaky(1, -1.0).is_err());
        let (c2, _) = relu_from_leaky(3, 2.0).unwrap();
        for x in [-3.0, -0.1, 0.0, 0.7, 5.0] {
            assert!((c2.eval(x) - f64::max(x, 0.0)).abs() < 1e-12);
        }
        let (_, n3) = relu_from_leaky(3, 0.25).unwrap();
        let y = n3.realize(Activation::leaky(0.25).unwrap(), &[-1.0, 0.5, 2.0]).unwrap();
        assert!((y[0]).abs() < 1e-15 && (y[1] - 0.5).abs() < 1e-15 && (y[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn conversions_preserve_relu_realization() {
        let net = Network::new(vec![
            Layer::from_dense(3, 1, &[1.0, -2.0, 0.5], &[0.1, 0.3, -0.2]).unwrap(),
            Layer::from_dense(2, 3, &[1.0, -1.0, 2.0, 0.5, 0.0, -3.0], &[0.0, 1.0]).unwrap(),
            Layer::from_dense(1, 2, &[1.5, -0.5], &[0.25]).unwrap(),
        ])
        .unwrap();
        let lk = relu_net_to_leaky(&net, 0.3).unwrap();
        assert_eq!(lk.widths(), vec![1, 6, 4, 1]);
        let sp = relu_net_to_softplus_within(&net, 1e-6).unwrap();
        for i in 0..=400 {
            let x = -4.0 + 0.02 * i as f64;
            let r = net.realize_scalar(Activation::Relu, &[x]).unwrap();
            let l = lk.realize_scalar(Activation::leaky(0.3).unwrap(), &[x]).unwrap();
            let s = sp.realize_scalar(Activation::Softplus, &[x]).unwrap();
            assert!((r - l).abs() < 1e-12, "{x}: {r} vs {l}");
            assert!((r - s).abs() <= 1e-6, "{x}: {r} vs {s}");
        }
    }

    #[test]
    fn time_shift_examples() {
        let j = identity_net(Activation::Relu).unwrap();
        let pick_time = Network::affine_dense(1, 2, &[1.0, 0.0], &[0.0]).unwrap();
        let g = time_shift(&pick_time, 1.0, -1.0, &j).unwrap();
        assert_eq!(g.realize_scalar(Activation::Relu, &[0.25, 7.0]).unwrap(), 0.75);
        let f = Network::affine_dense(1, 2, &[2.0, 1.0], &[0.0]).unwrap();
        let g = time_shift(&f, 1.0, 1.0, &j).unwrap();
        assert_eq!(g.realize_scalar(Activation::Relu, &[0.5, -3.0]).unwrap(), 2.0 * 1.5 - 3.0);
        assert!(g.param_count() <= 96 * 4 * f.param_count());
    }
}
