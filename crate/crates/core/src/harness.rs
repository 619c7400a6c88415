//! Monte-Carlo experiment driver: trial execution, truth-to-estimate
//! association and RMSE sweeps.
//!
//! Every trial draws its randomness from ChaCha20 seeded with
//! `config.seed ^ trial_index`; the scenario, the transmit data and the
//! receiver noise each use their own stream (0, 1 and 2) of that generator.
//! Trials of the same index therefore share scenario and data across
//! transmit-power points, and results never depend on thread scheduling.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{dft_data_aided_with_detections, sequential_music, BaselineResult, Method};
use crate::echo::{synthesize_echo, FrameRx};
use crate::error::{invalid, Result};
use crate::fusion::FusedEstimate;
use crate::music::{Domain, MusicConfig, MusicSpectrum};
use crate::ofdm::{generate_frame, FrameTx};
use crate::params::{generate_scenario, Scenario, ScenarioConfig, SystemParams, Target};
use crate::pipeline::{process_detection, ProposedConfig};
use crate::range_doppler::{detect_peaks, matched_filter_frame, range_doppler_map, Detections};

const SCENARIO_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScalePreset {
    Paper,
    #[default]
    Desk,
}

impl ScalePreset {
    pub fn params(self) -> SystemParams {
        match self {
            ScalePreset::Paper => SystemParams::paper(),
            ScalePreset::Desk => SystemParams::desk(),
        }
    }
}

impl std::str::FromStr for ScalePreset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ScalePreset::Paper),
            "desk" => Ok(ScalePreset::Desk),
            _ => Err(invalid(format!("unknown scale preset {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scale_preset: ScalePreset,
    /// Explicit system parameters; overrides `scale_preset` when present.
    pub system: Option<SystemParams>,
    pub scenario: ScenarioConfig,
    /// Target counts to sweep.
    pub n_targets: Vec<usize>,
    /// Total transmit powers to sweep, in dBm.
    pub tx_power_dbm: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub noise: bool,
    pub music: MusicConfig,
    /// DoA error charged for a missed target, and the cap on any single error.
    pub miss_penalty_deg: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scale_preset: ScalePreset::Desk,
            system: None,
            scenario: ScenarioConfig::default(),
            n_targets: vec![3],
            tx_power_dbm: vec![10.0, 20.0, 30.0, 40.0],
            n_trials: 100,
            seed: 1,
            methods: Method::ALL.to_vec(),
            noise: true,
            music: MusicConfig::default(),
            miss_penalty_deg: 30.0,
        }
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> SystemParams {
        self.system
            .clone()
            .unwrap_or_else(|| self.scale_preset.params())
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if self.n_targets.is_empty() || self.tx_power_dbm.is_empty() {
            return Err(invalid("sweep lists must be nonempty"));
        }
        if self.n_trials == 0 {
            return Err(invalid("n_trials must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(invalid("at least one method is required"));
        }
        if !(self.miss_penalty_deg > 0.0) {
            return Err(invalid("miss penalty must be positive"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &n_targets in &self.n_targets {
            for &tx_power_dbm in &self.tx_power_dbm {
                out.push(SweepPoint {
                    n_targets,
                    tx_power_dbm,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_targets: usize,
    pub tx_power_dbm: f64,
}

/// A method's estimate of one target, whatever the method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Radians.
    pub doa: f64,
    /// Seconds.
    pub delay: f64,
    /// Hz.
    pub doppler: f64,
    pub doppler_bin: usize,
    pub range_bin: usize,
    /// Integrated range-Doppler power at the detection.
    pub power: f64,
    pub winning_domain: Option<Domain>,
    pub winning_power: Option<f64>,
}

impl From<&FusedEstimate> for Estimate {
    fn from(f: &FusedEstimate) -> Self {
        Self {
            doa: f.doa_est,
            delay: f.detection.delay_est,
            doppler: f.detection.doppler_est,
            doppler_bin: f.detection.doppler_bin,
            range_bin: f.detection.range_bin,
            power: f.detection.peak_power,
            winning_domain: Some(f.winning_domain),
            winning_power: Some(f.winning_power),
        }
    }
}

impl Estimate {
    pub fn from_baseline(r: &BaselineResult) -> Vec<Self> {
        r.detections
            .iter()
            .zip(&r.angles)
            .map(|(d, &doa)| Self {
                doa,
                delay: d.delay_est,
                doppler: d.doppler_est,
                doppler_bin: d.doppler_bin,
                range_bin: d.range_bin,
                power: d.peak_power,
                winning_domain: None,
                winning_power: None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    /// `(truth index, estimate index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_truths: Vec<usize>,
    pub total_cost: f64,
}

/// `|Δτ| / τ_bin + |Δf_d| / f_bin + |Δθ| / 1°`.
pub fn association_cost(truth: &Target, est: &Estimate, params: &SystemParams) -> f64 {
    (truth.delay() - est.delay).abs() / params.delay_bin()
        + (truth.doppler(params) - est.doppler).abs() / params.doppler_bin()
        + (truth.doa - est.doa).abs().to_degrees()
}

/// Minimum-cost assignment of every row to a distinct column, for
/// `rows <= cols`. Returns the column chosen for each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols");
    // Shortest augmenting paths with potentials; 1-based with a virtual
    // column 0.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum-total-cost bipartite matching between truths and estimates.
pub fn associate(truth: &[Target], estimates: &[Estimate], params: &SystemParams) -> Association {
    if truth.is_empty() || estimates.is_empty() {
        return Association {
            pairs: Vec::new(),
            unmatched_truths: (0..truth.len()).collect(),
            total_cost: 0.0,
        };
    }
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| estimates.iter().map(|e| association_cost(t, e, params)).collect())
        .collect();
    let mut pairs: Vec<(usize, usize)> = if truth.len() <= estimates.len() {
        min_cost_assignment(&cost)
            .into_iter()
            .enumerate()
            .collect()
    } else {
        let transposed: Vec<Vec<f64>> = (0..estimates.len())
            .map(|j| cost.iter().map(|row| row[j]).collect())
            .collect();
        min_cost_assignment(&transposed)
            .into_iter()
            .enumerate()
            .map(|(e, t)| (t, e))
            .collect()
    };
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(t, e)| cost[t][e]).sum();
    let unmatched_truths = (0..truth.len())
        .filter(|t| !pairs.iter().any(|p| p.0 == *t))
        .collect();
    Association {
        pairs,
        unmatched_truths,
        total_cost,
    }
}

/// Absolute DoA error per truth in degrees, capped at `penalty_deg`; missed
/// truths are charged the full penalty.
pub fn doa_errors_deg(truth: &[Target], assoc: &Association, estimates: &[Estimate], penalty_deg: f64) -> Vec<f64> {
    let mut errors = vec![penalty_deg; truth.len()];
    for &(t, e) in &assoc.pairs {
        let err = (truth[t].doa - estimates[e].doa).abs().to_degrees();
        errors[t] = err.min(penalty_deg);
    }
    errors
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimates: Vec<Estimate>,
    /// Per-truth DoA errors in degrees.
    pub errors_deg: Vec<f64>,
    pub misses: usize,
    /// Underfull detections or an exhausted subspace.
    pub flagged: bool,
    /// Error message when the method failed outright.
    pub failure: Option<String>,
}

impl MethodOutcome {
    pub fn rmse_deg(&self) -> f64 {
        rms(&self.errors_deg)
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed: u64,
    pub point: SweepPoint,
    pub truth: Vec<Target>,
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialRecord {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }
}

/// Generator for one of a trial's random streams.
pub fn trial_rng(seed: u64, trial_index: usize, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ trial_index as u64);
    rng.set_stream(stream);
    rng
}

/// Everything a trial needs to run the estimators.
#[derive(Debug, Clone)]
pub struct TrialFrames {
    pub params: SystemParams,
    pub scenario: Scenario,
    pub tx: FrameTx,
    pub rx: FrameRx,
}

pub fn trial_frames(config: &ExperimentConfig, point: SweepPoint, trial_index: usize) -> Result<TrialFrames> {
    let params = config.params().with_tx_power_dbm(point.tx_power_dbm);
    params.validate()?;
    let seed = config.seed ^ trial_index as u64;
    let mut scenario = generate_scenario(
        &mut trial_rng(config.seed, trial_index, SCENARIO_STREAM),
        point.n_targets,
        &config.scenario,
        &params,
    )?;
    scenario.seed = seed;
    let tx = generate_frame(&mut trial_rng(config.seed, trial_index, DATA_STREAM), &params);
    let rx = synthesize_echo(
        &tx,
        &scenario,
        &params,
        &mut trial_rng(config.seed, trial_index, NOISE_STREAM),
        config.noise,
    )?;
    Ok(TrialFrames {
        params,
        scenario,
        tx,
        rx,
    })
}

fn score(
    method: Method,
    result: Result<(Vec<Estimate>, bool)>,
    truth: &[Target],
    params: &SystemParams,
    penalty: f64,
) -> MethodOutcome {
    match result {
        Ok((estimates, flagged)) => {
            let assoc = associate(truth, &estimates, params);
            MethodOutcome {
                method,
                errors_deg: doa_errors_deg(truth, &assoc, &estimates, penalty),
                misses: assoc.unmatched_truths.len(),
                estimates,
                flagged,
                failure: None,
            }
        }
        Err(e) => MethodOutcome {
            method,
            estimates: Vec::new(),
            errors_deg: vec![penalty; truth.len()],
            misses: truth.len(),
            flagged: true,
            failure: Some(e.to_string()),
        },
    }
}

/// Runs every configured method on one trial.
pub fn run_trial(config: &ExperimentConfig, point: SweepPoint, trial_index: usize) -> TrialRecord {
    let seed = config.seed ^ trial_index as u64;
    let penalty = config.miss_penalty_deg;
    let frames = match trial_frames(config, point, trial_index) {
        Ok(f) => f,
        Err(e) => {
            let outcomes = config
                .methods
                .iter()
                .map(|&m| score(m, Err(crate::Error::InvalidArgument(e.to_string())), &[], &config.params(), penalty))
                .map(|mut o| {
                    o.errors_deg = vec![penalty; point.n_targets];
                    o.misses = point.n_targets;
                    o
                })
                .collect();
            return TrialRecord {
                trial_index,
                seed,
                point,
                truth: Vec::new(),
                outcomes,
            };
        }
    };
    let TrialFrames {
        params,
        scenario,
        tx,
        rx,
    } = &frames;
    let truth = &scenario.targets;
    let n = point.n_targets;
    let proposed_cfg = ProposedConfig {
        music: config.music,
    };

    // Detection stage shared by the proposed and DFT estimators.
    let detect = || -> Result<(crate::range_doppler::VirtualChannelData, Detections)> {
        let data = matched_filter_frame(rx, tx)?;
        let map = range_doppler_map(&data, params)?;
        Ok((data, detect_peaks(&map, n)?))
    };
    let needs_detection = config
        .methods
        .iter()
        .any(|m| matches!(m, Method::Proposed | Method::DftDataAided));
    let detected = if needs_detection && n > 0 {
        Some(detect())
    } else {
        None
    };

    let outcomes = config
        .methods
        .iter()
        .map(|&method| {
            let result: Result<(Vec<Estimate>, bool)> = if n == 0 {
                Ok((Vec::new(), false))
            } else {
                match method {
                    Method::Proposed => match detected.as_ref().expect("detection ran") {
                        Ok((data, dets)) => dets
                            .detections
                            .iter()
                            .map(|d| {
                                process_detection(rx, tx, data, d, params, &proposed_cfg)
                                    .map(|o| Estimate::from(&o.fused))
                            })
                            .collect::<Result<Vec<_>>>()
                            .map(|e| (e, dets.underfull)),
                        Err(e) => Err(invalid(e.to_string())),
                    },
                    Method::DftDataAided => match detected.as_ref().expect("detection ran") {
                        Ok((_, dets)) => dft_data_aided_with_detections(rx, tx, params, &dets.detections)
                            .map(|r| (Estimate::from_baseline(&r), dets.underfull)),
                        Err(e) => Err(invalid(e.to_string())),
                    },
                    Method::SequentialMusic => {
                        sequential_music(rx, tx, params, n, config.music.grid_step())
                            .map(|r| (Estimate::from_baseline(&r), r.degraded))
                    }
                }
            };
            score(method, result, truth, params, penalty)
        })
        .collect();

    TrialRecord {
        trial_index,
        seed,
        point,
        truth: truth.clone(),
        outcomes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub n_targets: usize,
    pub tx_power_dbm: f64,
    pub n_trials: usize,
    /// RMSE pooled over all trials and targets, degrees.
    pub rmse_deg: f64,
    /// Mean of the per-trial RMSEs, degrees.
    pub mean_trial_rmse_deg: f64,
    /// Median of the per-trial RMSEs, degrees.
    pub median_trial_rmse_deg: f64,
    pub failed_trials: usize,
    pub flagged_trials: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn row(&self, method: Method, n_targets: usize, tx_power_dbm: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| {
            r.method == method && r.n_targets == n_targets && r.tx_power_dbm == tx_power_dbm
        })
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

/// Summarizes the trials of one sweep point.
pub fn summarize(method: Method, point: SweepPoint, trials: &[TrialRecord]) -> SweepRow {
    let outcomes: Vec<&MethodOutcome> = trials.iter().filter_map(|t| t.outcome(method)).collect();
    let pooled: Vec<f64> = outcomes.iter().flat_map(|o| o.errors_deg.iter().copied()).collect();
    let per_trial: Vec<f64> = outcomes.iter().map(|o| o.rmse_deg()).collect();
    SweepRow {
        method,
        n_targets: point.n_targets,
        tx_power_dbm: point.tx_power_dbm,
        n_trials: outcomes.len(),
        rmse_deg: rms(&pooled),
        mean_trial_rmse_deg: per_trial.iter().sum::<f64>() / per_trial.len().max(1) as f64,
        median_trial_rmse_deg: median(&per_trial),
        failed_trials: outcomes.iter().filter(|o| o.failed()).count(),
        flagged_trials: outcomes.iter().filter(|o| o.flagged).count(),
    }
}

/// Runs `n_trials` trials at every sweep point, in parallel, and summarizes
/// per method and point.
pub fn rmse_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for point in config.points() {
        let trials: Vec<TrialRecord> = (0..config.n_trials)
            .into_par_iter()
            .map(|i| run_trial(config, point, i))
            .collect();
        for &method in &config.methods {
            rows.push(summarize(method, point, &trials));
        }
        all.extend(trials);
    }
    Ok(SweepResult { rows, trials: all })
}

pub const SUMMARY_HEADER: &str = "method,n_targets,tx_power_dbm,n_trials,rmse_deg,mean_trial_rmse_deg,median_trial_rmse_deg,failed_trials,flagged_trials";

pub const DETECTIONS_HEADER: &str = "trial,doppler_bin,range_bin,tau_s,fd_hz,power,theta_deg,winning_domain,winning_power,method_tag,n_targets,tx_power_dbm";

pub const TRUTH_HEADER: &str = "trial,n_targets,tx_power_dbm,target,range_m,velocity_mps,doa_deg,tau_s,fd_hz,reflection_power";

pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.method.as_str(),
            r.n_targets,
            r.tx_power_dbm,
            r.n_trials,
            r.rmse_deg,
            r.mean_trial_rmse_deg,
            r.median_trial_rmse_deg,
            r.failed_trials,
            r.flagged_trials
        )?;
    }
    Ok(())
}

pub fn write_detections_csv<W: Write>(mut w: W, trials: &[TrialRecord]) -> Result<()> {
    writeln!(w, "{DETECTIONS_HEADER}")?;
    for t in trials {
        for o in &t.outcomes {
            for e in &o.estimates {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    t.trial_index,
                    e.doppler_bin,
                    e.range_bin,
                    e.delay,
                    e.doppler,
                    e.power,
                    e.doa.to_degrees(),
                    e.winning_domain.map(Domain::as_str).unwrap_or(""),
                    e.winning_power.map(|p| p.to_string()).unwrap_or_default(),
                    o.method.as_str(),
                    t.point.n_targets,
                    t.point.tx_power_dbm
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_truth_csv<W: Write>(mut w: W, trials: &[TrialRecord], params: &SystemParams) -> Result<()> {
    writeln!(w, "{TRUTH_HEADER}")?;
    for t in trials {
        for (i, target) in t.truth.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                t.trial_index,
                t.point.n_targets,
                t.point.tx_power_dbm,
                i,
                target.range,
                target.radial_velocity,
                target.doa.to_degrees(),
                target.delay(),
                target.doppler(params),
                target.reflection.norm_sqr()
            )?;
        }
    }
    Ok(())
}

/// Two-column `angle_deg,value` dump of a MUSIC spectrum.
pub fn write_spectrum_csv<W: Write>(mut w: W, spectrum: &MusicSpectrum) -> Result<()> {
    writeln!(w, "angle_deg,value")?;
    for (a, v) in spectrum.grid.iter().zip(&spectrum.values) {
        writeln!(w, "{},{}", a.to_degrees(), v)?;
    }
    Ok(())
}
