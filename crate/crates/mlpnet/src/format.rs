//! Versioned JSON network files.
//!
//! Floats are written with 17 significant digits so that every finite value
//! survives a save/load cycle bit for bit. Small or dense layers use the flat
//! row-major `w` array; large sparse layers store `entries` as
//! `[row, col, value]` triplets instead.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use mlpnet_core::compiler::Provenance;
use mlpnet_core::{Activation, Csr, Layer, NetError, Network};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, Serializer};

pub const FORMAT_VERSION: u32 = 1;

/// Layers with more cells than this and density below one quarter are
/// written as triplets.
const DENSE_CELL_LIMIT: usize = 1 << 16;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported file version {0}")]
    Version(u32),
    #[error("unknown activation kind {0:?}")]
    Activation(String),
    #[error("layer {layer}: {msg}")]
    Layer { layer: usize, msg: &'static str },
    #[error("non-finite value in network")]
    NonFinite,
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl ActivationSpec {
    pub fn from_activation(act: Activation) -> Self {
        let alpha = match act {
            Activation::LeakyRelu { alpha } => Some(alpha),
            _ => None,
        };
        ActivationSpec { kind: act.kind().to_string(), alpha }
    }

    pub fn to_activation(&self) -> Result<Activation, FormatError> {
        match (self.kind.as_str(), self.alpha) {
            ("relu", None) => Ok(Activation::Relu),
            ("softplus", None) => Ok(Activation::Softplus),
            ("identity", None) => Ok(Activation::Identity),
            ("leaky_relu", Some(a)) => Ok(Activation::leaky(a)?),
            _ => Err(FormatError::Activation(self.kind.clone())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<(usize, usize, f64)>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub version: u32,
    pub activation: ActivationSpec,
    pub layers: Vec<LayerFile>,
}

impl NetworkFile {
    pub fn from_network(net: &Network, act: Activation) -> Result<Self, FormatError> {
        let layers = net
            .layers()
            .iter()
            .map(|l| {
                let w = l.weights();
                if w.iter().any(|(_, _, v)| !v.is_finite()) || l.bias().iter().any(|v| !v.is_finite()) {
                    return Err(FormatError::NonFinite);
                }
                let cells = w.rows() * w.cols();
                let sparse = cells > DENSE_CELL_LIMIT && 4 * w.nnz() < cells;
                Ok(LayerFile {
                    rows: w.rows(),
                    cols: w.cols(),
                    w: (!sparse).then(|| w.to_dense()),
                    entries: sparse.then(|| w.iter().collect()),
                    b: l.bias().to_vec(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(NetworkFile { version: FORMAT_VERSION, activation: ActivationSpec::from_activation(act), layers })
    }

    pub fn to_network(&self) -> Result<(Network, Activation), FormatError> {
        if self.version != FORMAT_VERSION {
            return Err(FormatError::Version(self.version));
        }
        let act = self.activation.to_activation()?;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, l) in self.layers.iter().enumerate() {
            let w = match (&l.w, &l.entries) {
                (Some(w), None) => {
                    if w.len() != l.rows * l.cols {
                        return Err(FormatError::Layer { layer: k, msg: "w has wrong length" });
                    }
                    Csr::from_dense(l.rows, l.cols, w)
                }
                (None, Some(e)) => {
                    if e.iter().any(|&(i, j, _)| i >= l.rows || j >= l.cols) {
                        return Err(FormatError::Layer { layer: k, msg: "entry out of bounds" });
                    }
                    Csr::from_triplets(l.rows, l.cols, e.clone())
                }
                _ => return Err(FormatError::Layer { layer: k, msg: "exactly one of w or entries is required" }),
            };
            layers.push(Layer::new(w, l.b.clone())?);
        }
        Ok((Network::new(layers)?, act))
    }

    /// `sum rows (cols + 1)` read from the file itself.
    pub fn param_count(&self) -> u64 {
        self.layers.iter().map(|l| (l.rows * (l.cols + 1)) as u64).sum()
    }
}

/// JSON formatter writing floats as `d.dddddddddddddddde±x` (17 significant
/// digits). Non-finite values become `null`.
#[derive(Clone, Copy, Debug, Default)]
pub struct RoundTripFormatter;

impl Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            writer.write_all(b"null")
        } else if value.to_bits() == 0 {
            writer.write_all(b"0")
        } else {
            write!(writer, "{value:.16e}")
        }
    }
}

/// Serializes `value` with [`RoundTripFormatter`].
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, FormatError> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, RoundTripFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut s = to_json_string(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn save_network(path: &Path, net: &Network, act: Activation) -> Result<(), FormatError> {
    write_json(path, &NetworkFile::from_network(net, act)?)
}

pub fn read_network_file(path: &Path) -> Result<NetworkFile, FormatError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn load_network(path: &Path) -> Result<(Network, Activation), FormatError> {
    read_network_file(path)?.to_network()
}

/// Sidecar describing how a compiled network was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceFile {
    pub mode: String,
    pub theta: Vec<i64>,
    pub n: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub t: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub d: usize,
    pub seed: u64,
    pub activation: ActivationSpec,
    pub terminal_id: String,
    pub nonlinearity_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub param_count: u64,
    pub fingerprint: String,
}

impl ProvenanceFile {
    pub fn new(mode: &str, p: &Provenance, net: &Network) -> Self {
        ProvenanceFile {
            mode: mode.to_string(),
            theta: p.theta.path().to_vec(),
            n: p.n,
            m: p.m,
            t: p.t,
            horizon: p.horizon,
            d: p.d,
            seed: p.seed,
            activation: ActivationSpec::from_activation(p.activation),
            terminal_id: format!("{:016x}", p.terminal_id),
            nonlinearity_id: format!("{:016x}", p.nonlinearity_id),
            grid_size: None,
            gamma: None,
            q: None,
            param_count: net.param_count(),
            fingerprint: format!("{:016x}", net.fingerprint()),
        }
    }
}
