//! The proposed two-stage estimator end to end: range-Doppler detection,
//! then per detection delay- and Doppler-multiplexed MUSIC and candidate
//! fusion.

use serde::{Deserialize, Serialize};

use crate::echo::FrameRx;
use crate::error::Result;
use crate::fusion::{fuse, CandidateSet, FusedEstimate};
use crate::music::{
    delay_filter, doppler_filter, music_with_config, sample_covariance, MusicConfig, MusicSpectrum,
};
use crate::ofdm::FrameTx;
use crate::params::SystemParams;
use crate::range_doppler::{
    detect_peaks, matched_filter_frame, range_doppler_map, Detection, Detections, RDMap,
    VirtualChannelData,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProposedConfig {
    pub music: MusicConfig,
}

#[derive(Debug, Clone)]
pub struct DetectionOutcome {
    pub delay_spectrum: MusicSpectrum,
    pub doppler_spectrum: MusicSpectrum,
    pub fused: FusedEstimate,
}

#[derive(Debug, Clone)]
pub struct ProposedOutput {
    pub map: RDMap,
    pub detections: Detections,
    pub outcomes: Vec<DetectionOutcome>,
}

impl ProposedOutput {
    pub fn estimates(&self) -> impl Iterator<Item = &FusedEstimate> {
        self.outcomes.iter().map(|o| &o.fused)
    }
}

/// DoA candidates and fused estimate for one detection.
pub fn process_detection(
    rx: &FrameRx,
    tx: &FrameTx,
    data: &VirtualChannelData,
    detection: &Detection,
    params: &SystemParams,
    config: &ProposedConfig,
) -> Result<DetectionOutcome> {
    let delay_cov = sample_covariance(&delay_filter(data, detection.delay_est, params)?)?;
    let delay_spectrum = music_with_config(&delay_cov, &config.music)?;
    let doppler_cov = sample_covariance(&doppler_filter(data, detection.doppler_est, params)?)?;
    let doppler_spectrum = music_with_config(&doppler_cov, &config.music)?;
    let candidates = CandidateSet {
        detection: *detection,
        delay_candidates: delay_spectrum.peak_angles.clone(),
        doppler_candidates: doppler_spectrum.peak_angles.clone(),
    };
    let fused = fuse(rx, tx, &candidates, params)?;
    Ok(DetectionOutcome {
        delay_spectrum,
        doppler_spectrum,
        fused,
    })
}

/// Runs the full estimator for `expected_count` targets.
pub fn estimate(
    rx: &FrameRx,
    tx: &FrameTx,
    params: &SystemParams,
    expected_count: usize,
    config: &ProposedConfig,
) -> Result<ProposedOutput> {
    let data = matched_filter_frame(rx, tx)?;
    let map = range_doppler_map(&data, params)?;
    let detections = detect_peaks(&map, expected_count)?;
    let outcomes = detections
        .detections
        .iter()
        .map(|d| process_detection(rx, tx, &data, d, params, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProposedOutput {
        map,
        detections,
        outcomes,
    })
}
