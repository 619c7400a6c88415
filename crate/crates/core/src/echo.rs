//! Ground-truth radar echoes in the per-symbol, per-subcarrier DFT domain.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Array3, Zip};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ofdm::FrameTx;
use crate::params::{complex_gaussian, steering_vector, Scenario, SystemParams, Target};

/// Received echoes `y_mn[k]`, indexed `[m, n, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRx {
    pub echoes: Array3<Complex64>,
}

impl FrameRx {
    pub fn zeros(params: &SystemParams) -> Self {
        Self {
            echoes: Array3::zeros((params.n_symbols, params.n_subcarriers, params.n_rx)),
        }
    }

    pub fn n_rx(&self) -> usize {
        self.echoes.dim().2
    }
}

/// Per-subcarrier delay phases `exp(-j 2 pi Δf τ n)`.
pub fn delay_phases(delay: f64, params: &SystemParams) -> Array1<Complex64> {
    let w = -2.0 * PI * params.subcarrier_spacing * delay;
    Array1::from_iter((0..params.n_subcarriers).map(|n| Complex64::from_polar(1.0, w * n as f64)))
}

/// Per-symbol Doppler phases `exp(j 2 pi f_d m T_sym)`.
pub fn doppler_phases(doppler: f64, params: &SystemParams) -> Array1<Complex64> {
    let w = 2.0 * PI * doppler * params.symbol_duration();
    Array1::from_iter((0..params.n_symbols).map(|m| Complex64::from_polar(1.0, w * m as f64)))
}

/// Transmit beam output `a_T^T(θ) x_mn` for every `(m, n)`.
pub(crate) fn tx_projection(tx: &FrameTx, a_t: &Array1<Complex64>) -> Array2<Complex64> {
    let (m, n, _) = tx.symbols.dim();
    Array2::from_shape_fn((m, n), |(i, j)| {
        tx.symbols
            .slice(ndarray::s![i, j, ..])
            .iter()
            .zip(a_t.iter())
            .map(|(x, a)| x * a)
            .sum()
    })
}

fn check_dims(tx: &FrameTx, params: &SystemParams) -> Result<()> {
    tx.check(params)?;
    params.validate()
}

/// Adds the noiseless echo of one target into `rx`.
pub fn accumulate_target_echo(
    rx: &mut FrameRx,
    tx: &FrameTx,
    target: &Target,
    params: &SystemParams,
) -> Result<()> {
    check_dims(tx, params)?;
    if rx.echoes.dim() != (params.n_symbols, params.n_subcarriers, params.n_rx) {
        return Err(Error::DimensionMismatch("receive tensor does not match params".into()));
    }
    target.check(params)?;
    let a_r = steering_vector(target.doa, params.n_rx);
    let a_t = steering_vector(target.doa, params.n_tx);
    let beam = tx_projection(tx, &a_t);
    let w_n = delay_phases(target.delay(), params);
    let w_m = doppler_phases(target.doppler(params), params);

    Zip::indexed(rx.echoes.rows_mut()).for_each(|(m, n), mut row| {
        let s = target.reflection * beam[(m, n)] * w_n[n] * w_m[m];
        row.zip_mut_with(&a_r, |y, a| *y += s * a);
    });
    Ok(())
}

/// Adds i.i.d. circular complex Gaussian noise of variance `B * N_o` per entry.
pub fn add_noise<R: Rng + ?Sized>(rx: &mut FrameRx, params: &SystemParams, rng: &mut R) {
    let var = params.noise_power();
    rx.echoes
        .iter_mut()
        .for_each(|y| *y += complex_gaussian(rng, var));
}

/// Synthesizes `y_mn = Σ_i α_i a_R(θ_i) a_T^T(θ_i) x_mn e^{-j2πΔfτ_i n} e^{j2πf_i m T_sym} + η_mn`.
pub fn synthesize_echo<R: Rng + ?Sized>(
    tx: &FrameTx,
    scenario: &Scenario,
    params: &SystemParams,
    rng: &mut R,
    noise_on: bool,
) -> Result<FrameRx> {
    check_dims(tx, params)?;
    scenario.check(params)?;
    let mut rx = FrameRx::zeros(params);
    for target in &scenario.targets {
        accumulate_target_echo(&mut rx, tx, target, params)?;
    }
    if noise_on {
        add_noise(&mut rx, params, rng);
    }
    Ok(rx)
}
