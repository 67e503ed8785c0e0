//! Entropy-constrained quantization at high resolution: analytic excess-rate
//! bounds, exact and Monte Carlo evaluation of symbol-wise quantizers, lattice
//! nearest-point decoders with Voronoi-moment estimation, and the concentration
//! statistics that characterize asymptotically optimal scalar quantizers.
//!
//! The crate is organized around five subsystems:
//!
//! - [`sources`] — scalar and product source models (Gaussian, Uniform,
//!   Laplace) with pdf/CDF evaluation, seeded sampling, differential entropy,
//!   and integer-part entropy.
//! - [`lattice`] — exact nearest-point decoders for the classic lattice
//!   families (Zⁿ, Dₙ, Dₙ*, Aₙ, E₈), a brute-force decoding oracle, dithered
//!   uniform sampling of the Voronoi cell, and Monte Carlo estimation of the
//!   normalized r-th cell moment.
//! - [`quantizer`] — scalar interval quantizers (uniform, almost-regular)
//!   with exact entropy/distortion via the source CDF, lattice vector
//!   quantizers with Monte Carlo evaluation, and distortion calibration.
//! - [`bounds`] — closed-form evaluation of the excess-rate lower bound, the
//!   Shannon lower bound, the tessellating upper bound, and the Zador
//!   random-coding upper bound.
//! - [`asymptotics`] — the experimental layer: excess-rate convergence
//!   curves, cell-window concentration statistics, and the piecewise-constant
//!   density / weighted cell-moment property checks.
//!
//! The `exrate` binary exposes these as subcommands that emit CSV/JSON with
//! full seed capture; see the crate README.
//!
//! All internal entropies and rates are in nats (natural logarithm); the CLI
//! converts to bits where a column name says so.

// Parameter guards are written `!(x > 0.0)` so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bounds;
pub mod cli;
pub mod lattice;
pub mod mc;
pub mod quad;
pub mod quantizer;
pub mod sources;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("did not converge: {0}")]
    Nonconvergent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A dense n×d sample matrix in row-major order.
///
/// Returned by the seeded samplers; `row(i)` is the i-th d-dimensional draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim));
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}
