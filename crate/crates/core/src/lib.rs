//! MIMO-OFDM radar simulation and direction-of-arrival estimation.
//!
//! The estimator first detects targets on the non-coherently integrated
//! range-Doppler map, then for every detection filters the matched-filter
//! output at the detected delay and at the detected Doppler, runs MUSIC on
//! each filtered covariance, and fuses the resulting angle candidates by
//! the beamformed power they collect at the detected bin. Because each
//! filtered covariance only contains the targets sharing that delay or
//! Doppler bin, more targets than receive antennas can be localized.
//!
//! Module map:
//!
//! * [`params`]: system parameters, targets, scenarios, steering vectors
//! * [`ofdm`]: 64-QAM transmit frames
//! * [`echo`]: DFT-domain echo synthesis
//! * [`range_doppler`]: matched filter, 2D DFT maps, peak picking, CFAR
//! * [`music`]: delay/Doppler filters, covariances, MUSIC
//! * [`fusion`]: candidate power and fusion
//! * [`pipeline`]: the complete estimator
//! * [`baselines`]: comparison estimators
//! * [`config`]: TOML loading and saving
//! * [`harness`]: Monte-Carlo trials, association and RMSE sweeps
//! * [`io`]: binary tensor files

// Validation is written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod echo;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod io;
pub mod music;
pub mod ofdm;
pub mod params;
pub mod pipeline;
pub mod range_doppler;

pub use error::{Error, Result};
