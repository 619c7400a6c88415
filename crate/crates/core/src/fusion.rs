//! Resolution of the delay- and Doppler-domain DoA candidates by the power
//! each one collects at the detected range-Doppler bin after joint
//! transmit/receive beamforming and matched filtering.

use ndarray::s;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::echo::FrameRx;
use crate::error::{invalid, Error, Result};
use crate::music::Domain;
use crate::ofdm::FrameTx;
use crate::params::{steering_vector, SystemParams};
use crate::range_doppler::{dft_column, Detection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub detection: Detection,
    /// Peaks of the delay-filtered MUSIC spectrum, radians.
    pub delay_candidates: Vec<f64>,
    /// Peaks of the Doppler-filtered MUSIC spectrum, radians.
    pub doppler_candidates: Vec<f64>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.delay_candidates.len() + self.doppler_candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Candidates in evaluation order: delay domain first, then Doppler,
    /// each by ascending peak index.
    pub fn iter(&self) -> impl Iterator<Item = (Domain, usize, f64)> + '_ {
        let delay = self
            .delay_candidates
            .iter()
            .enumerate()
            .map(|(p, &a)| (Domain::Delay, p, a));
        let doppler = self
            .doppler_candidates
            .iter()
            .enumerate()
            .map(|(p, &a)| (Domain::Doppler, p, a));
        delay.chain(doppler)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedEstimate {
    pub detection: Detection,
    /// Selected DoA in radians.
    pub doa_est: f64,
    pub winning_domain: Domain,
    /// Peak index within the winning domain's candidate list.
    pub winning_index: usize,
    pub winning_power: f64,
    /// Power of every candidate, in [`CandidateSet::iter`] order.
    pub candidate_powers: Vec<f64>,
}

/// `|f_M[k]^T Y^MF(θ) f_Nc[l]|^2` where
/// `Y^MF_mn = a_R^H(θ) y_mn (a_T^T(θ) x_mn)^*` and `(k, l)` are the
/// detection's Doppler and range bins on the native `M x N_c` grid.
pub fn candidate_power(
    rx: &FrameRx,
    tx: &FrameTx,
    angle: f64,
    detection: &Detection,
    params: &SystemParams,
) -> Result<f64> {
    let (m, n, n_rx) = rx.echoes.dim();
    let (tm, tn, n_tx) = tx.symbols.dim();
    if (m, n) != (tm, tn) || (m, n) != (params.n_symbols, params.n_subcarriers) {
        return Err(Error::DimensionMismatch("frames do not match params".into()));
    }
    if detection.doppler_bin >= m || detection.range_bin >= n {
        return Err(invalid(format!(
            "detection bin ({}, {}) outside {m}x{n} grid",
            detection.doppler_bin, detection.range_bin
        )));
    }
    if !(angle.abs() <= std::f64::consts::FRAC_PI_2) {
        return Err(invalid(format!("candidate angle {angle} outside [-pi/2, pi/2]")));
    }
    let a_r = steering_vector(angle, n_rx);
    let a_t = steering_vector(angle, n_tx);
    let f_m = dft_column(detection.doppler_bin, m);
    let f_n = dft_column(detection.range_bin, n);

    let mut total = Complex64::new(0.0, 0.0);
    for (i, wm) in f_m.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (j, wn) in f_n.iter().enumerate() {
            let y = rx.echoes.slice(s![i, j, ..]);
            let x = tx.symbols.slice(s![i, j, ..]);
            let rx_beam: Complex64 = a_r.iter().zip(y.iter()).map(|(a, y)| a.conj() * y).sum();
            let tx_beam: Complex64 = a_t.iter().zip(x.iter()).map(|(a, x)| a * x).sum();
            row += rx_beam * tx_beam.conj() * wn;
        }
        total += row * wm;
    }
    Ok(total.norm_sqr())
}

/// Picks the candidate with the largest [`candidate_power`]. Exact ties go
/// to the delay domain, then to the lower peak index.
pub fn fuse(
    rx: &FrameRx,
    tx: &FrameTx,
    candidates: &CandidateSet,
    params: &SystemParams,
) -> Result<FusedEstimate> {
    if candidates.is_empty() {
        return Err(invalid("candidate set is empty"));
    }
    let mut powers = Vec::with_capacity(candidates.len());
    let mut best: Option<(Domain, usize, f64, f64)> = None;
    for (domain, p, angle) in candidates.iter() {
        let power = candidate_power(rx, tx, angle, &candidates.detection, params)?;
        powers.push(power);
        if best.is_none_or(|b| power > b.3) {
            best = Some((domain, p, angle, power));
        }
    }
    let (winning_domain, winning_index, doa_est, winning_power) = best.expect("nonempty");
    Ok(FusedEstimate {
        detection: candidates.detection,
        doa_est,
        winning_domain,
        winning_index,
        winning_power,
        candidate_powers: powers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::echo::synthesize_echo;
    use crate::ofdm::generate_frame;
    use crate::params::{Scenario, Target};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn det(doppler_bin: usize, range_bin: usize) -> Detection {
        Detection {
            doppler_bin,
            range_bin,
            delay_est: 0.0,
            doppler_est: 0.0,
            peak_power: 0.0,
        }
    }

    fn setup(doa_deg: f64, alpha: Complex64) -> (SystemParams, FrameTx, FrameRx, Detection) {
        let p = SystemParams {
            n_subcarriers: 64,
            n_symbols: 16,
            ..SystemParams::desk()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let tx = generate_frame(&mut rng, &p);
        let q = 7;
        let t = Target {
            range: p.range_of_delay(q as f64 / p.bandwidth()),
            radial_velocity: 0.0,
            doa: doa_deg.to_radians(),
            reflection: alpha,
        };
        let rx = synthesize_echo(&tx, &Scenario::new(vec![t]), &p, &mut rng, false).unwrap();
        (p, tx, rx, det(0, q))
    }

    #[test]
    fn zero_input_has_zero_power() {
        let (p, tx, _, d) = setup(10.0, Complex64::new(1.0, 0.0));
        let rx = FrameRx::zeros(&p);
        assert_eq!(candidate_power(&rx, &tx, 0.2, &d, &p).unwrap(), 0.0);
    }

    #[test]
    fn array_gain_separates_true_angle() {
        let (p, tx, rx, d) = setup(12.0, Complex64::new(1.0, 0.0));
        let on = candidate_power(&rx, &tx, 12f64.to_radians(), &d, &p).unwrap();
        let off = candidate_power(&rx, &tx, 42f64.to_radians(), &d, &p).unwrap();
        assert!(on / off >= p.n_rx as f64, "ratio {}", on / off);
    }

    #[test]
    fn global_phase_invariance() {
        let (p, tx, rx1, d) = setup(-25.0, Complex64::new(1.0, 0.0));
        let (_, _, rx2, _) = setup(-25.0, Complex64::from_polar(1.0, 2.1));
        for angle in [-0.5, -0.43, 0.0, 0.7] {
            let a = candidate_power(&rx1, &tx, angle, &d, &p).unwrap();
            let b = candidate_power(&rx2, &tx, angle, &d, &p).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
        }
    }

    #[test]
    fn out_of_range_bin_is_rejected() {
        let (p, tx, rx, _) = setup(0.0, Complex64::new(1.0, 0.0));
        assert!(candidate_power(&rx, &tx, 0.0, &det(16, 0), &p).is_err());
        assert!(candidate_power(&rx, &tx, 0.0, &det(0, 64), &p).is_err());
    }

    #[test]
    fn single_candidate_passes_through() {
        let (p, tx, rx, d) = setup(5.0, Complex64::new(1.0, 0.0));
        let set = CandidateSet {
            detection: d,
            delay_candidates: vec![],
            doppler_candidates: vec![0.3],
        };
        let f = fuse(&rx, &tx, &set, &p).unwrap();
        assert_eq!(f.doa_est, 0.3);
        assert_eq!(f.winning_domain, Domain::Doppler);
    }

    #[test]
    fn true_angle_beats_decoys() {
        let truth = 23.0f64;
        let (p, tx, rx, d) = setup(truth, Complex64::new(0.2, -1.0));
        let set = CandidateSet {
            detection: d,
            delay_candidates: vec![(truth - 15.0).to_radians(), truth.to_radians()],
            doppler_candidates: vec![(truth + 10.0).to_radians(), (-40f64).to_radians()],
        };
        let f = fuse(&rx, &tx, &set, &p).unwrap();
        assert_eq!(f.doa_est, truth.to_radians());
        assert!(f.candidate_powers.iter().all(|&pw| pw <= f.winning_power));
    }

    #[test]
    fn ties_prefer_delay_domain() {
        let (p, tx, rx, d) = setup(0.0, Complex64::new(1.0, 0.0));
        let set = CandidateSet {
            detection: d,
            delay_candidates: vec![0.1, 0.1],
            doppler_candidates: vec![0.1],
        };
        let f = fuse(&rx, &tx, &set, &p).unwrap();
        assert_eq!((f.winning_domain, f.winning_index), (Domain::Delay, 0));
    }

    #[test]
    fn empty_set_is_rejected() {
        let (p, tx, rx, d) = setup(0.0, Complex64::new(1.0, 0.0));
        let set = CandidateSet {
            detection: d,
            delay_candidates: vec![],
            doppler_candidates: vec![],
        };
        assert!(fuse(&rx, &tx, &set, &p).is_err());
    }
}
