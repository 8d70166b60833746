//! Explicit network constructions for multilevel Picard approximations of
//! semilinear heat equations.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, threading and
//! the command line live in the companion `mlpnet` crate.

#![no_std]
// Input checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod calculus;
pub mod compiler;
pub mod gadgets;
pub mod math;
pub mod mlp;
pub mod net;
pub mod problem;
pub mod schedule;
pub mod sparse;

pub use calculus::{CalcError, IdentityNet};
pub use net::{Activation, Layer, NetError, Network, NetworkDims};
pub use sparse::Csr;
