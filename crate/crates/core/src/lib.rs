//! Penalized maximum-likelihood estimation for finite Gaussian mixtures, with
//! loss functions over mixing measures that resolve per-atom convergence
//! rates.
//!
//! - [`measure`]: mixing measures, densities, sampling, Voronoi cells
//! - [`transport`]: exact discrete optimal transport and `W_r`
//! - [`losses`]: the Voronoi losses `D`, `D̄` and the generalized transport cost `W̃`
//! - [`em`]: the penalized EM fitter
//! - [`experiments`]: Models A–C, replication runner, log-log slope fits
//! - [`io`]: measure and data file formats
//! - [`cli`]: the `mixrates` command line

pub mod cli;
pub mod em;
pub mod error;
pub mod experiments;
pub mod io;
pub mod losses;
pub mod measure;
pub mod transport;

pub use error::{Error, Result};
