//! Matched filtering, per-virtual-channel range-Doppler maps, non-coherent
//! integration and peak detection.
//!
//! The 2D transform uses positive-exponent DFT matrices on both axes,
//! `chi[k,l] = F_M^T Y[k,l] F_Nc` with `[F_N]_{ab} = exp(j 2 pi a b / N)`.
//! Against the echo phases `exp(-j 2 pi Δf τ n)` and `exp(+j 2 pi f_d m T_sym)`
//! this places a target with delay `q / B` in range bin `q`, and a target with
//! Doppler `p / (M T_sym)` in Doppler bin `-p mod M`. [`RDMap::delay_of_bin`]
//! and [`RDMap::doppler_of_bin`] invert exactly that mapping.

use std::sync::Arc;

use ndarray::{s, Array2, Array4, Axis, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::echo::FrameRx;
use crate::error::{invalid, Error, Result};
use crate::ofdm::FrameTx;
use crate::params::SystemParams;

/// Matched-filter output `Y[k,l]_{mn} = y_mn[k] x*_mn[l]`, indexed `[k, l, m, n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualChannelData {
    pub matrices: Array4<Complex64>,
}

impl VirtualChannelData {
    pub fn n_rx(&self) -> usize {
        self.matrices.dim().0
    }

    pub fn n_tx(&self) -> usize {
        self.matrices.dim().1
    }

    pub fn n_symbols(&self) -> usize {
        self.matrices.dim().2
    }

    pub fn n_subcarriers(&self) -> usize {
        self.matrices.dim().3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RDMap {
    /// Complex per-channel maps `chi[k,l]`, indexed `[k, l, doppler_bin, range_bin]`.
    pub per_channel: Array4<Complex64>,
    /// Non-coherent sum over all virtual channels, indexed `[doppler_bin, range_bin]`.
    pub integrated: Array2<f64>,
    /// Delay spanned by one range bin, in seconds.
    pub delay_step: f64,
    /// Doppler spanned by one Doppler bin, in Hz.
    pub doppler_step: f64,
}

impl RDMap {
    pub fn n_doppler_bins(&self) -> usize {
        self.integrated.dim().0
    }

    pub fn n_range_bins(&self) -> usize {
        self.integrated.dim().1
    }

    pub fn delay_of_bin(&self, range_bin: usize) -> f64 {
        range_bin as f64 * self.delay_step
    }

    pub fn doppler_of_bin(&self, doppler_bin: usize) -> f64 {
        let m = self.n_doppler_bins() as i64;
        let b = doppler_bin as i64;
        let signed = if b < (m + 1) / 2 { b } else { b - m };
        -(signed as f64) * self.doppler_step
    }

    /// Range bin nearest to `delay`, wrapped into the map.
    pub fn bin_of_delay(&self, delay: f64) -> usize {
        let n = self.n_range_bins() as i64;
        ((delay / self.delay_step).round() as i64).rem_euclid(n) as usize
    }

    pub fn bin_of_doppler(&self, doppler: f64) -> usize {
        let m = self.n_doppler_bins() as i64;
        ((-doppler / self.doppler_step).round() as i64).rem_euclid(m) as usize
    }

    fn detection(&self, doppler_bin: usize, range_bin: usize) -> Detection {
        Detection {
            doppler_bin,
            range_bin,
            delay_est: self.delay_of_bin(range_bin),
            doppler_est: self.doppler_of_bin(doppler_bin),
            peak_power: self.integrated[(doppler_bin, range_bin)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub doppler_bin: usize,
    pub range_bin: usize,
    /// Delay estimate in seconds.
    pub delay_est: f64,
    /// Doppler estimate in Hz.
    pub doppler_est: f64,
    pub peak_power: f64,
}

/// Peaks returned by [`detect_peaks`]; `underfull` is set when fewer local
/// maxima exist than were requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Detections {
    pub detections: Vec<Detection>,
    pub underfull: bool,
}

pub fn matched_filter_frame(rx: &FrameRx, tx: &FrameTx) -> Result<VirtualChannelData> {
    let (m, n, n_rx) = rx.echoes.dim();
    let (tm, tn, n_tx) = tx.symbols.dim();
    if (m, n) != (tm, tn) {
        return Err(Error::DimensionMismatch(format!(
            "rx grid {m}x{n} vs tx grid {tm}x{tn}"
        )));
    }
    let matrices = Array4::from_shape_fn((n_rx, n_tx, m, n), |(k, l, i, j)| {
        rx.echoes[(i, j, k)] * tx.symbols[(i, j, l)].conj()
    });
    Ok(VirtualChannelData { matrices })
}

fn inverse_fft_lanes(data: &mut Array4<Complex64>, axis: Axis, fft: &Arc<dyn Fft<f64>>) {
    let mut buf = vec![Complex64::new(0.0, 0.0); data.len_of(axis)];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for mut lane in data.lanes_mut(axis) {
        lane.iter().zip(buf.iter_mut()).for_each(|(x, b)| *b = *x);
        fft.process_with_scratch(&mut buf, &mut scratch);
        lane.iter_mut().zip(buf.iter()).for_each(|(x, b)| *x = *b);
    }
}

/// Integer zero-padding factors applied before the 2D transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroPad {
    pub doppler: usize,
    pub range: usize,
}

impl Default for ZeroPad {
    fn default() -> Self {
        Self { doppler: 1, range: 1 }
    }
}

pub fn range_doppler_map(data: &VirtualChannelData, params: &SystemParams) -> Result<RDMap> {
    range_doppler_map_padded(data, params, ZeroPad::default())
}

/// Range-Doppler maps on a grid refined by the given zero-padding factors.
pub fn range_doppler_map_padded(
    data: &VirtualChannelData,
    params: &SystemParams,
    pad: ZeroPad,
) -> Result<RDMap> {
    if pad.doppler == 0 || pad.range == 0 {
        return Err(invalid("zero-padding factors must be at least 1"));
    }
    let (n_rx, n_tx, m, n) = data.matrices.dim();
    let (mp, np) = (m * pad.doppler, n * pad.range);
    let mut chi = Array4::<Complex64>::zeros((n_rx, n_tx, mp, np));
    chi.slice_mut(s![.., .., ..m, ..n]).assign(&data.matrices);

    // Unnormalized inverse FFTs realize the positive-exponent DFT matrices.
    let mut planner = FftPlanner::<f64>::new();
    inverse_fft_lanes(&mut chi, Axis(3), &planner.plan_fft_inverse(np));
    inverse_fft_lanes(&mut chi, Axis(2), &planner.plan_fft_inverse(mp));

    let mut integrated = Array2::<f64>::zeros((mp, np));
    for channel in chi.outer_iter() {
        for map in channel.outer_iter() {
            Zip::from(&mut integrated)
                .and(&map)
                .for_each(|acc, z| *acc += z.norm_sqr());
        }
    }
    Ok(RDMap {
        per_channel: chi,
        integrated,
        delay_step: 1.0 / (params.subcarrier_spacing * np as f64),
        doppler_step: 1.0 / (mp as f64 * params.symbol_duration()),
    })
}

fn cyclic(i: usize, d: isize, n: usize) -> usize {
    (i as isize + d).rem_euclid(n as isize) as usize
}

fn is_strict_local_max(map: &Array2<f64>, i: usize, j: usize) -> bool {
    let (m, n) = map.dim();
    let v = map[(i, j)];
    for di in -1..=1isize {
        for dj in -1..=1isize {
            let (a, b) = (cyclic(i, di, m), cyclic(j, dj, n));
            if (a, b) == (i, j) {
                continue;
            }
            if map[(a, b)] >= v {
                return false;
            }
        }
    }
    true
}

/// All strict 3x3 local maxima of the integrated map (cyclic boundaries),
/// sorted by descending power with ties broken by bin order.
pub fn local_maxima(map: &RDMap) -> Vec<Detection> {
    let (m, n) = map.integrated.dim();
    let mut peaks = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if is_strict_local_max(&map.integrated, i, j) {
                peaks.push(map.detection(i, j));
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.peak_power
            .total_cmp(&a.peak_power)
            .then(a.doppler_bin.cmp(&b.doppler_bin))
            .then(a.range_bin.cmp(&b.range_bin))
    });
    peaks
}

/// Returns the `expected_count` strongest strict local maxima of the integrated map.
pub fn detect_peaks(map: &RDMap, expected_count: usize) -> Result<Detections> {
    if expected_count == 0 {
        return Err(invalid("expected_count must be at least 1"));
    }
    let mut detections = local_maxima(map);
    let underfull = detections.len() < expected_count;
    detections.truncate(expected_count);
    Ok(Detections {
        detections,
        underfull,
    })
}

/// Two-dimensional cell-averaging CFAR on the integrated map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfarConfig {
    /// Guard half-width in cells (Chebyshev distance).
    pub guard: usize,
    /// Training ring width in cells beyond the guard region.
    pub training: usize,
    pub p_fa: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self {
            guard: 2,
            training: 8,
            p_fa: 1e-3,
        }
    }
}

impl CfarConfig {
    pub fn training_cells(&self) -> usize {
        let outer = 2 * (self.guard + self.training) + 1;
        let inner = 2 * self.guard + 1;
        outer * outer - inner * inner
    }

    /// Multiplier `t` such that a noise-only cell exceeds `t * Σ training`
    /// with probability `p_fa`.
    ///
    /// Every cell of the integrated map is a sum of `looks` independent
    /// exponential powers, so the cell-under-test over its sum with the
    /// training cells is `Beta(looks, looks * K)`.
    pub fn threshold_factor(&self, looks: usize) -> Result<f64> {
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            return Err(invalid("p_fa must lie in (0, 1)"));
        }
        if looks == 0 || self.training == 0 {
            return Err(invalid("CFAR needs at least one look and one training cell"));
        }
        let a = looks as f64;
        let b = a * self.training_cells() as f64;
        let tail = |x: f64| 1.0 - beta_reg(a, b, x);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if tail(mid) > self.p_fa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        Ok(x / (1.0 - x))
    }
}

/// Cells whose integrated power exceeds the CA-CFAR threshold.
///
/// `looks` is the number of non-coherently summed channels (`N_r * N_t`).
pub fn cfar_detect(map: &RDMap, cfg: &CfarConfig, looks: usize) -> Result<Vec<Detection>> {
    let (m, n) = map.integrated.dim();
    let reach = cfg.guard + cfg.training;
    if m < 2 * reach + 1 || n < 2 * reach + 1 {
        return Err(invalid("map is smaller than the CFAR window"));
    }
    let factor = cfg.threshold_factor(looks)?;
    let r = reach as isize;
    let g = cfg.guard as isize;
    let mut hits = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let mut sum = 0.0;
            for di in -r..=r {
                let row = map.integrated.row(cyclic(i, di, m));
                for dj in -r..=r {
                    if di.abs() <= g && dj.abs() <= g {
                        continue;
                    }
                    sum += row[cyclic(j, dj, n)];
                }
            }
            if map.integrated[(i, j)] > factor * sum {
                hits.push(map.detection(i, j));
            }
        }
    }
    Ok(hits)
}

/// Column `bin` of a positive-exponent DFT matrix of size `len`:
/// `exp(j 2 pi bin i / len)` for `i = 0..len`.
pub fn dft_column(bin: usize, len: usize) -> Vec<Complex64> {
    let w = 2.0 * std::f64::consts::PI / len as f64;
    (0..len)
        .map(|i| Complex64::from_polar(1.0, w * ((i * bin) % len) as f64))
        .collect()
}
