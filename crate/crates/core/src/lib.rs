//! Non-negative integer-valued semi-stable laws and the processes built on them.
//!
//! * [`params`] / [`pgf`]: the oscillating semi-stable family, its Laplace
//!   transform and the generating-function combinators (thinning, powers,
//!   products).
//! * [`inversion`] / [`series`]: pmf tables by Fourier inversion, with an
//!   independent power-series oracle.
//! * [`sampling`] / [`rng`]: exact table sampling and binomial thinning on
//!   reproducible split streams.
//! * [`processes`]: Levy paths and the stationary INAR(1) recursion
//!   `X_n = b ⊗ X_(n-1) + e_n`.
//! * [`verify`]: thresholded checks and the aggregated report.

// `!(x <= y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod inversion;
pub mod params;
pub mod pgf;
pub mod processes;
pub mod rng;
pub mod sampling;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use inversion::{pgf_to_pmf, InversionSettings, PmfTable};
pub use params::SemiStableParams;
pub use pgf::PgfExpr;
pub use rng::RngStream;

/// Tool version written into output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
