//! Network representation, dimension bookkeeping and forward realization.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::sparse::Csr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("a network needs at least one layer")]
    Empty,
    #[error("layer {layer}: bias has length {bias} but the weight matrix has {rows} rows")]
    BiasLength { layer: usize, bias: usize, rows: usize },
    #[error("layer {layer}: expects {expected} inputs but the previous layer has {found} outputs")]
    LayerMismatch { layer: usize, expected: usize, found: usize },
    #[error("layer {layer} has a zero width")]
    ZeroWidth { layer: usize },
    #[error("input has length {found}, network expects {expected}")]
    InputShape { expected: usize, found: usize },
    #[error("leaky slope must be finite and different from -1 and 1, got {0}")]
    BadSlope(f64),
}

/// Activation applied between layers (never after the last layer).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu { alpha: f64 },
    Softplus,
    Identity,
}

impl Activation {
    pub fn leaky(alpha: f64) -> Result<Self, NetError> {
        if !alpha.is_finite() || alpha == 1.0 || alpha == -1.0 {
            return Err(NetError::BadSlope(alpha));
        }
        Ok(Activation::LeakyRelu { alpha })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { alpha } => {
                let y = alpha * x;
                if x > y {
                    x
                } else {
                    y
                }
            }
            Activation::Softplus => math::softplus(x),
            Activation::Identity => x,
        }
    }

    /// Slope used by the piecewise-linear constructions; ReLU is slope zero.
    pub fn leaky_slope(&self) -> Option<f64> {
        match *self {
            Activation::Relu => Some(0.0),
            Activation::LeakyRelu { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::LeakyRelu { alpha } => write!(f, "leaky_relu({alpha})"),
            other => f.write_str(other.kind()),
        }
    }
}

/// Componentwise activation.
pub fn apply_activation(act: Activation, v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| act.apply(x)).collect()
}

/// One affine layer `x -> W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    w: Csr,
    b: Vec<f64>,
}

impl Layer {
    pub fn new(w: Csr, b: Vec<f64>) -> Result<Self, NetError> {
        if b.len() != w.rows() {
            return Err(NetError::BiasLength { layer: 0, bias: b.len(), rows: w.rows() });
        }
        Ok(Layer { w, b })
    }

    pub fn from_dense(rows: usize, cols: usize, w: &[f64], b: &[f64]) -> Result<Self, NetError> {
        Layer::new(Csr::from_dense(rows, cols, w), b.to_vec())
    }

    pub fn weights(&self) -> &Csr {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn rows(&self) -> usize {
        self.w.rows()
    }

    pub fn cols(&self) -> usize {
        self.w.cols()
    }

    pub fn into_parts(self) -> (Csr, Vec<f64>) {
        (self.w, self.b)
    }
}

/// Dimension bookkeeping of a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkDims {
    /// `(l_0, ..., l_L)`.
    pub widths: Vec<usize>,
    pub depth: usize,
    pub hidden_count: usize,
    pub param_count: u64,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl NetworkDims {
    /// Largest entry of the width vector.
    pub fn max_width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(0)
    }
}

/// A feed-forward network: a nonempty chain of dimension-compatible layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::Empty);
        }
        for (k, l) in layers.iter().enumerate() {
            if l.b.len() != l.rows() {
                return Err(NetError::BiasLength { layer: k + 1, bias: l.b.len(), rows: l.rows() });
            }
            if l.rows() == 0 || l.cols() == 0 {
                return Err(NetError::ZeroWidth { layer: k + 1 });
            }
            if k > 0 && l.cols() != layers[k - 1].rows() {
                return Err(NetError::LayerMismatch {
                    layer: k + 1,
                    expected: l.cols(),
                    found: layers[k - 1].rows(),
                });
            }
        }
        Ok(Network { layers })
    }

    /// Single affine layer from a dense row-major matrix.
    pub fn affine_dense(rows: usize, cols: usize, w: &[f64], b: &[f64]) -> Result<Self, NetError> {
        Network::new(vec![Layer::from_dense(rows, cols, w, b)?])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.layers.len() + 1);
        w.push(self.input_dim());
        w.extend(self.layers.iter().map(|l| l.rows()));
        w
    }

    /// `sum_k l_k (l_{k-1} + 1)`.
    pub fn param_count(&self) -> u64 {
        self.layers.iter().map(|l| l.rows() as u64 * (l.cols() as u64 + 1)).sum()
    }

    /// Number of nonzero weights and biases actually stored.
    pub fn nonzero_count(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| l.w.nnz() as u64 + l.b.iter().filter(|v| **v != 0.0).count() as u64)
            .sum()
    }

    /// FNV-1a hash of the shapes and the bit patterns of all stored entries.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: u64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for layer in &self.layers {
            feed(layer.rows() as u64);
            feed(layer.cols() as u64);
            for (i, j, v) in layer.weights().iter() {
                feed(i as u64);
                feed(j as u64);
                feed(v.to_bits());
            }
            for b in layer.bias() {
                feed(b.to_bits());
            }
        }
        h
    }

    pub fn dims(&self) -> NetworkDims {
        NetworkDims {
            widths: self.widths(),
            depth: self.depth(),
            hidden_count: self.depth() - 1,
            param_count: self.param_count(),
            input_dim: self.input_dim(),
            output_dim: self.output_dim(),
        }
    }

    /// Forward pass: affine maps interleaved with `act`, identity on the output.
    pub fn realize(&self, act: Activation, x: &[f64]) -> Result<Vec<f64>, NetError> {
        let mut scratch = Scratch::default();
        self.realize_with(act, x, &mut scratch).map(|y| y.to_vec())
    }

    /// Forward pass for a scalar-output network.
    pub fn realize_scalar(&self, act: Activation, x: &[f64]) -> Result<f64, NetError> {
        let mut scratch = Scratch::default();
        self.realize_with(act, x, &mut scratch).map(|y| y[0])
    }

    /// Forward pass reusing caller-owned buffers.
    pub fn realize_with<'s>(
        &self,
        act: Activation,
        x: &[f64],
        scratch: &'s mut Scratch,
    ) -> Result<&'s [f64], NetError> {
        if x.len() != self.input_dim() {
            return Err(NetError::InputShape { expected: self.input_dim(), found: x.len() });
        }
        let last = self.layers.len() - 1;
        scratch.a.clear();
        scratch.a.extend_from_slice(x);
        for (k, layer) in self.layers.iter().enumerate() {
            scratch.b.clear();
            scratch.b.resize(layer.rows(), 0.0);
            layer.w.matvec_into(&scratch.a, &mut scratch.b);
            for (y, &c) in scratch.b.iter_mut().zip(&layer.b) {
                *y += c;
            }
            if k < last {
                for y in scratch.b.iter_mut() {
                    *y = act.apply(*y);
                }
            }
            core::mem::swap(&mut scratch.a, &mut scratch.b);
        }
        Ok(&scratch.a)
    }
}

/// Reusable evaluation buffers.
#[derive(Default, Clone, Debug)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}
