//! System parameterization, targets, scenarios and the array/propagation
//! model shared by every processing stage.

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// How the configured transmit power is split over the resource grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PowerNormalization {
    /// `E[‖x_mn‖^2] = P_tx` summed over the `N_t` transmit elements: with the
    /// `1/sqrt(N_c)` OFDM modulator the time-domain transmit power is
    /// exactly `P_tx`.
    #[default]
    TotalPerSymbol,
    /// `E[‖x_mn‖^2] = P_tx / N_c` summed over the transmit elements.
    PerSubcarrier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    pub n_subcarriers: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing: f64,
    /// Cyclic prefix length in samples.
    pub cp_length: usize,
    pub n_symbols: usize,
    pub n_tx: usize,
    pub n_rx: usize,
    /// Total per-antenna noise power `B * N_o`, in dBm.
    pub noise_dbm: f64,
    /// Total transmit power, in dBm.
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub power_normalization: PowerNormalization,
}

impl SystemParams {
    /// Full-scale system: 28 GHz carrier,
    /// 2048 subcarriers at 30 kHz, 144-sample CP, 256 symbols, 4x4 array.
    pub fn paper() -> Self {
        Self {
            carrier_freq: 28e9,
            n_subcarriers: 2048,
            subcarrier_spacing: 30e3,
            cp_length: 144,
            n_symbols: 256,
            n_tx: 4,
            n_rx: 4,
            noise_dbm: -90.0,
            tx_power_dbm: 30.0,
            power_normalization: PowerNormalization::TotalPerSymbol,
        }
    }

    /// Reduced grid with the same bandwidth and CP fraction as [`Self::paper`]
    /// at roughly 1/16 of the compute.
    pub fn desk() -> Self {
        Self {
            n_subcarriers: 256,
            subcarrier_spacing: 240e3,
            cp_length: 18,
            n_symbols: 64,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq > 0.0) {
            return Err(invalid("carrier frequency must be positive"));
        }
        if self.n_subcarriers == 0 || self.n_symbols == 0 {
            return Err(invalid("subcarrier and symbol counts must be positive"));
        }
        if !(self.subcarrier_spacing > 0.0) {
            return Err(invalid("subcarrier spacing must be positive"));
        }
        if self.n_tx == 0 {
            return Err(invalid("at least one transmit antenna is required"));
        }
        if self.n_rx < 2 {
            return Err(invalid("at least two receive antennas are required"));
        }
        if !self.noise_dbm.is_finite() || !self.tx_power_dbm.is_finite() {
            return Err(invalid("power levels must be finite"));
        }
        Ok(())
    }

    /// `B = Δf * N_c`.
    pub fn bandwidth(&self) -> f64 {
        self.subcarrier_spacing * self.n_subcarriers as f64
    }

    /// OFDM symbol duration including the cyclic prefix.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing + self.cp_length as f64 / self.bandwidth()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Delay resolution of one range bin, `1 / B`.
    pub fn delay_bin(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    /// Range covered by one delay bin.
    pub fn range_bin(&self) -> f64 {
        SPEED_OF_LIGHT * self.delay_bin() / 2.0
    }

    /// Doppler resolution of one bin, `1 / (M * T_sym)`.
    pub fn doppler_bin(&self) -> f64 {
        1.0 / (self.n_symbols as f64 * self.symbol_duration())
    }

    pub fn velocity_bin(&self) -> f64 {
        self.doppler_bin() * self.wavelength() / 2.0
    }

    pub fn max_delay(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    pub fn max_doppler(&self) -> f64 {
        1.0 / (2.0 * self.symbol_duration())
    }

    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn tx_power(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    /// Expected power of a single transmit entry `x_mn[p]`.
    pub fn per_entry_power(&self) -> f64 {
        let per_symbol = match self.power_normalization {
            PowerNormalization::TotalPerSymbol => self.tx_power(),
            PowerNormalization::PerSubcarrier => self.tx_power() / self.n_subcarriers as f64,
        };
        per_symbol / self.n_tx as f64
    }

    pub fn with_tx_power_dbm(&self, dbm: f64) -> Self {
        Self {
            tx_power_dbm: dbm,
            ..self.clone()
        }
    }

    /// Delay of a point target at `range` metres.
    pub fn delay_of(&self, range: f64) -> f64 {
        2.0 * range / SPEED_OF_LIGHT
    }

    /// Doppler shift of a target with radial velocity `v` (positive approaching).
    pub fn doppler_of(&self, velocity: f64) -> f64 {
        self.carrier_freq * 2.0 * velocity / SPEED_OF_LIGHT
    }

    pub fn range_of_delay(&self, delay: f64) -> f64 {
        delay * SPEED_OF_LIGHT / 2.0
    }

    pub fn velocity_of_doppler(&self, doppler: f64) -> f64 {
        doppler * SPEED_OF_LIGHT / (2.0 * self.carrier_freq)
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::desk()
    }
}

/// A point target, ground truth for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// Range in metres.
    pub range: f64,
    /// Radial velocity in m/s, positive when approaching.
    pub radial_velocity: f64,
    /// Direction of arrival in radians from broadside.
    pub doa: f64,
    /// Complex reflection coefficient including two-way path loss.
    pub reflection: Complex64,
}

impl Target {
    pub fn delay(&self) -> f64 {
        2.0 * self.range / SPEED_OF_LIGHT
    }

    pub fn doppler(&self, params: &SystemParams) -> f64 {
        params.doppler_of(self.radial_velocity)
    }

    /// Checks the unambiguous range/Doppler conditions and the DoA domain.
    pub fn check(&self, params: &SystemParams) -> Result<()> {
        if !(self.range >= 0.0) || self.delay() >= params.max_delay() {
            return Err(invalid(format!(
                "target range {} m outside unambiguous interval",
                self.range
            )));
        }
        if !(self.doppler(params).abs() < params.max_doppler()) {
            return Err(invalid(format!(
                "target velocity {} m/s outside unambiguous Doppler interval",
                self.radial_velocity
            )));
        }
        if !(self.doa.abs() <= PI / 2.0) {
            return Err(invalid(format!("target DoA {} rad outside [-pi/2, pi/2]", self.doa)));
        }
        if !(self.reflection.re.is_finite() && self.reflection.im.is_finite()) {
            return Err(invalid("target reflection is not finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Scenario {
    pub targets: Vec<Target>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(targets: Vec<Target>) -> Self {
        Self { targets, seed: 0 }
    }

    pub fn check(&self, params: &SystemParams) -> Result<()> {
        self.targets.iter().try_for_each(|t| t.check(params))
    }

    /// Draws a scenario from a ChaCha20 stream seeded with `seed`.
    pub fn generate(
        seed: u64,
        n_targets: usize,
        config: &ScenarioConfig,
        params: &SystemParams,
    ) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut scenario = generate_scenario(&mut rng, n_targets, config, params)?;
        scenario.seed = seed;
        Ok(scenario)
    }
}

/// Random target placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Radius of the surveillance region in metres.
    pub region_radius: f64,
    /// Lower range limit; keeps the d^-4 path loss finite.
    pub min_range: f64,
    /// Radial velocities are drawn from U[0, max_speed].
    pub max_speed: f64,
    /// DoAs are drawn from U[-max_doa_deg, max_doa_deg].
    pub max_doa_deg: f64,
    /// Variance of the complex Gaussian RCS draw.
    pub rcs_variance: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            region_radius: 150.0,
            min_range: 10.0,
            max_speed: 50.0,
            max_doa_deg: 60.0,
            rcs_variance: 1.0,
        }
    }
}

/// Uniform linear array response with half-wavelength spacing:
/// element `k` is `exp(j * pi * k * sin(doa))`.
pub fn steering_vector(doa: f64, n_elems: usize) -> Array1<Complex64> {
    debug_assert!(doa.abs() <= PI / 2.0 + 1e-12, "doa {doa} outside [-pi/2, pi/2]");
    let phase = PI * doa.sin();
    Array1::from_iter((0..n_elems).map(|k| Complex64::from_polar(1.0, phase * k as f64)))
}

/// Two-way radar-equation power gain `c^2 / ((4 pi)^3 f_c^2 d^4)`.
pub fn path_loss_power(range: f64, params: &SystemParams) -> Result<f64> {
    if !(range > 0.0) {
        return Err(invalid(format!("range must be positive, got {range}")));
    }
    let four_pi_cubed = (4.0 * PI).powi(3);
    Ok(SPEED_OF_LIGHT.powi(2) / (four_pi_cubed * params.carrier_freq.powi(2) * range.powi(4)))
}

/// Draws a circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

pub fn generate_scenario<R: Rng + ?Sized>(
    rng: &mut R,
    n_targets: usize,
    config: &ScenarioConfig,
    params: &SystemParams,
) -> Result<Scenario> {
    if !(config.min_range > 0.0 && config.region_radius >= config.min_range) {
        return Err(invalid("scenario range interval must satisfy 0 < min_range <= region_radius"));
    }
    if !(config.max_speed >= 0.0) || !(0.0..=90.0).contains(&config.max_doa_deg) {
        return Err(invalid("scenario speed/DoA limits out of domain"));
    }
    let max_doa = config.max_doa_deg.to_radians();
    let mut targets = Vec::with_capacity(n_targets);
    for _ in 0..n_targets {
        let range = rng.random_range(config.min_range..=config.region_radius);
        let radial_velocity = rng.random_range(0.0..=config.max_speed);
        let doa = rng.random_range(-max_doa..=max_doa);
        let rcs = complex_gaussian(rng, config.rcs_variance);
        let reflection = rcs * path_loss_power(range, params)?.sqrt();
        let target = Target {
            range,
            radial_velocity,
            doa,
            reflection,
        };
        target.check(params)?;
        targets.push(target);
    }
    Ok(Scenario { targets, seed: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn broadside_steering_is_all_ones() {
        for n in 1..8 {
            let a = steering_vector(0.0, n);
            assert!(a.iter().all(|z| (*z - Complex64::new(1.0, 0.0)).norm() == 0.0));
        }
    }

    #[test]
    fn steering_at_thirty_degrees() {
        let a = steering_vector(PI / 6.0, 4);
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        for (got, want) in a.iter().zip(expected) {
            assert!((got - want).norm() < 1e-12, "{got} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn steering_symmetry_and_norm(theta in -PI / 2.0..PI / 2.0, n in 1usize..16) {
            let a = steering_vector(theta, n);
            let b = steering_vector(-theta, n);
            prop_assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x.conj() - y).norm() < 1e-12);
                prop_assert!((x.norm() - 1.0).abs() < 1e-12);
            }
            let energy: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((energy - n as f64).abs() < 1e-9);
        }

        #[test]
        fn path_loss_times_d4_is_constant(d in 1.0f64..1e4) {
            let p = SystemParams::paper();
            let k = path_loss_power(d, &p).unwrap() * d.powi(4);
            let k0 = path_loss_power(1.0, &p).unwrap();
            prop_assert!(((k - k0) / k0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_loss_scaling_laws() {
        let p = SystemParams::paper();
        let near = path_loss_power(50.0, &p).unwrap();
        let far = path_loss_power(100.0, &p).unwrap();
        assert_relative_eq!(near / far, 16.0, max_relative = 1e-12);

        let mut p2 = p.clone();
        p2.carrier_freq *= 2.0;
        let doubled = path_loss_power(100.0, &p2).unwrap();
        assert_relative_eq!(far / doubled, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn path_loss_reference_value() {
        // c^2 / ((4 pi)^3 f_c^2 d^4) at 100 m and 28 GHz, evaluated
        // independently in double precision.
        let expected = 5.776_911_988_6e-16;
        let got = path_loss_power(100.0, &SystemParams::paper()).unwrap();
        // The default absolute epsilon would swallow a value this small.
        assert_relative_eq!(got, expected, epsilon = 0.0, max_relative = 1e-10);
    }

    #[test]
    fn path_loss_rejects_non_positive_range() {
        let p = SystemParams::paper();
        assert!(path_loss_power(0.0, &p).is_err());
        assert!(path_loss_power(-3.0, &p).is_err());
    }

    #[test]
    fn derived_quantities() {
        let p = SystemParams::paper();
        assert_relative_eq!(p.bandwidth(), 61.44e6);
        assert!(p.symbol_duration() > 1.0 / p.subcarrier_spacing);
        assert_relative_eq!(
            p.symbol_duration(),
            1.0 / 30e3 + 144.0 / 61.44e6,
            max_relative = 1e-15
        );
        assert_relative_eq!(p.noise_power(), 1e-12, epsilon = 0.0, max_relative = 1e-12);
        let d = SystemParams::desk();
        assert_relative_eq!(d.bandwidth(), p.bandwidth());
    }

    #[test]
    fn validation_rejects_single_receive_antenna() {
        let mut p = SystemParams::desk();
        p.n_rx = 1;
        assert!(p.validate().is_err());
        assert!(SystemParams::desk().validate().is_ok());
    }

    #[test]
    fn empty_scenario() {
        let s = Scenario::generate(3, 0, &ScenarioConfig::default(), &SystemParams::desk()).unwrap();
        assert!(s.targets.is_empty());
    }

    #[test]
    fn scenario_is_deterministic() {
        let p = SystemParams::desk();
        let cfg = ScenarioConfig::default();
        let a = Scenario::generate(42, 5, &cfg, &p).unwrap();
        let b = Scenario::generate(42, 5, &cfg, &p).unwrap();
        assert_eq!(a, b);
        let c = Scenario::generate(43, 5, &cfg, &p).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scenario_draws_respect_bounds_and_mean_speed() {
        let p = SystemParams::desk();
        let cfg = ScenarioConfig::default();
        let s = Scenario::generate(7, 10_000, &cfg, &p).unwrap();
        let mean_v = s.targets.iter().map(|t| t.radial_velocity).sum::<f64>() / 1e4;
        assert!((mean_v - 25.0).abs() < 1.0, "mean velocity {mean_v}");
        for t in &s.targets {
            assert!((10.0..=150.0).contains(&t.range));
            assert!((0.0..=50.0).contains(&t.radial_velocity));
            assert!(t.doa.abs() <= PI / 3.0 + 1e-12);
        }
        // The RCS draw has unit variance, so |alpha|^2 / path_loss averages to 1.
        let mean_rcs = s
            .targets
            .iter()
            .map(|t| t.reflection.norm_sqr() / path_loss_power(t.range, &p).unwrap())
            .sum::<f64>()
            / 1e4;
        assert!((mean_rcs - 1.0).abs() < 0.05, "mean rcs power {mean_rcs}");
    }

    #[test]
    fn target_check_flags_ambiguous_range() {
        let p = SystemParams::desk();
        let t = Target {
            range: p.range_of_delay(p.max_delay()) + 1.0,
            radial_velocity: 0.0,
            doa: 0.0,
            reflection: Complex64::new(1.0, 0.0),
        };
        assert!(t.check(&p).is_err());
    }
}
