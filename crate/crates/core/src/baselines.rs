//! Reference estimators used for comparison.
//!
//! Both are simplified canonical forms, not re-implementations of any
//! particular published method:
//!
//! * [`sequential_music`] runs MUSIC once on the spatial covariance of all
//!   matched-filter snapshots, then recovers delay and Doppler per angle
//!   with receive/transmit beamforming and a 2D DFT.
//! * [`dft_data_aided`] takes each range-Doppler detection and picks the
//!   best of `N_r` orthogonal DFT beams, so its angles are quantized to the
//!   beam grid.

use ndarray::{Array4, Ix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::echo::{tx_projection, FrameRx};
use crate::error::{Error, Result};
use crate::fusion::candidate_power;
use crate::music::{covariance_of_columns, music_spectrum};
use crate::ofdm::FrameTx;
use crate::params::{steering_vector, SystemParams};
use crate::range_doppler::{
    detect_peaks, matched_filter_frame, range_doppler_map, Detection, RDMap, VirtualChannelData,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    SequentialMusic,
    DftDataAided,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::SequentialMusic, Method::DftDataAided];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::SequentialMusic => "sequential_music",
            Method::DftDataAided => "dft_data_aided",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub method: Method,
    /// DoA estimates in radians.
    pub angles: Vec<f64>,
    /// Delay estimates in seconds, aligned with `angles`.
    pub delays: Vec<f64>,
    /// Doppler estimates in Hz, aligned with `angles`.
    pub dopplers: Vec<f64>,
    /// Detections backing each estimate.
    pub detections: Vec<Detection>,
    /// Set when fewer estimates than requested were produced, or the
    /// requested count exhausts the signal subspace.
    pub degraded: bool,
}

/// Beamformed matched-filter matrix `a_R^H(θ) y_mn (a_T^T(θ) x_mn)^*`,
/// wrapped as a single virtual channel.
pub fn beamformed_channel(rx: &FrameRx, tx: &FrameTx, angle: f64) -> VirtualChannelData {
    let (m, n, n_rx) = rx.echoes.dim();
    let a_r = steering_vector(angle, n_rx);
    let tx_beam = tx_projection(tx, &steering_vector(angle, tx.n_tx()));
    let matrices = Array4::from_shape_fn((1, 1, m, n), |(_, _, i, j)| {
        let rx_beam: Complex64 = (0..n_rx).map(|k| a_r[k].conj() * rx.echoes[(i, j, k)]).sum();
        rx_beam * tx_beam[(i, j)].conj()
    });
    VirtualChannelData { matrices }
}

fn strongest_cell(map: &RDMap) -> Detection {
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for ((i, j), &v) in map.integrated.indexed_iter() {
        if v > best.2 {
            best = (i, j, v);
        }
    }
    Detection {
        doppler_bin: best.0,
        range_bin: best.1,
        delay_est: map.delay_of_bin(best.1),
        doppler_est: map.doppler_of_bin(best.0),
        peak_power: best.2,
    }
}

/// Global-covariance MUSIC followed by per-angle range-Doppler readout.
pub fn sequential_music(
    rx: &FrameRx,
    tx: &FrameTx,
    params: &SystemParams,
    n_targets: usize,
    grid_step: f64,
) -> Result<BaselineResult> {
    if n_targets == 0 {
        return Err(Error::InvalidArgument("n_targets must be at least 1".into()));
    }
    let data = matched_filter_frame(rx, tx)?;
    let n_rx = data.n_rx();
    let columns = data
        .matrices
        .view()
        .into_shape_with_order((n_rx, data.matrices.len() / n_rx))
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?
        .into_dimensionality::<Ix2>()
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?
        .to_owned();
    let cov = covariance_of_columns(&columns)?;
    let signal_dim = n_targets.min(n_rx - 1);
    let spectrum = music_spectrum(&cov, signal_dim, grid_step, n_targets)?;

    let mut result = BaselineResult {
        method: Method::SequentialMusic,
        angles: Vec::new(),
        delays: Vec::new(),
        dopplers: Vec::new(),
        detections: Vec::new(),
        degraded: n_targets >= n_rx || spectrum.peak_angles.len() < n_targets,
    };
    for &angle in &spectrum.peak_angles {
        let map = range_doppler_map(&beamformed_channel(rx, tx, angle), params)?;
        let det = strongest_cell(&map);
        result.angles.push(angle);
        result.delays.push(det.delay_est);
        result.dopplers.push(det.doppler_est);
        result.detections.push(det);
    }
    Ok(result)
}

/// Angles of the `n` orthogonal receive beams, `sin θ_g = (2g + 1 - n) / n`.
///
/// The half-beam offset keeps endfire (`sin θ = ±1`, where the two
/// directions alias) off the grid.
pub fn dft_beam_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|g| ((2 * g + 1) as f64 / n as f64 - 1.0).asin())
        .collect()
}

/// DFT-beam angle per supplied detection.
pub fn dft_data_aided_with_detections(
    rx: &FrameRx,
    tx: &FrameTx,
    params: &SystemParams,
    detections: &[Detection],
) -> Result<BaselineResult> {
    let grid = dft_beam_grid(rx.n_rx());
    let mut result = BaselineResult {
        method: Method::DftDataAided,
        angles: Vec::new(),
        delays: Vec::new(),
        dopplers: Vec::new(),
        detections: detections.to_vec(),
        degraded: false,
    };
    for det in detections {
        let mut best = (grid[0], f64::NEG_INFINITY);
        for &angle in &grid {
            let power = candidate_power(rx, tx, angle, det, params)?;
            if power > best.1 {
                best = (angle, power);
            }
        }
        result.angles.push(best.0);
        result.delays.push(det.delay_est);
        result.dopplers.push(det.doppler_est);
    }
    Ok(result)
}

/// Range-Doppler detection followed by DFT-beam angle selection.
pub fn dft_data_aided(
    rx: &FrameRx,
    tx: &FrameTx,
    params: &SystemParams,
    n_targets: usize,
) -> Result<BaselineResult> {
    let data = matched_filter_frame(rx, tx)?;
    let map = range_doppler_map(&data, params)?;
    let detections = detect_peaks(&map, n_targets)?;
    let mut result = dft_data_aided_with_detections(rx, tx, params, &detections.detections)?;
    // An all-zero frame has no peaks at all.
    result.degraded = detections.underfull;
    Ok(result)
}
