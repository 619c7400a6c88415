//! Delay- and Doppler-multiplexed snapshot extraction, sample covariances
//! and MUSIC pseudo-spectra.
//!
//! Filtering the matched-filter output at one detected delay (across
//! subcarriers) or one detected Doppler (across symbols) keeps only the
//! targets sharing that bin, so each covariance sees far fewer sources than
//! the receive array has elements.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{steering_vector, SystemParams};
use crate::range_doppler::VirtualChannelData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Delay,
    Doppler,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Delay => "delay",
            Domain::Doppler => "doppler",
        }
    }
}

/// Snapshot vectors as the columns of an `N_r x S` matrix.
///
/// Delay domain: column `l * M + m` holds `ỹ^τ_{m,l}`. Doppler domain:
/// column `l * N_c + n` holds `ỹ^f_{n,l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSnapshots {
    pub snapshots: Array2<Complex64>,
    pub domain: Domain,
    /// Delay in seconds or Doppler in Hz the filter was tuned to.
    pub filter_value: f64,
}

impl FilteredSnapshots {
    pub fn len(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Temporal matched filter across subcarriers:
/// `ỹ^τ_{m,l} = N_c^{-1/2} Σ_n ỹ_{mn,l} exp(j 2 pi Δf τ n)`.
pub fn delay_filter(
    data: &VirtualChannelData,
    delay_est: f64,
    params: &SystemParams,
) -> Result<FilteredSnapshots> {
    if !(0.0..params.max_delay()).contains(&delay_est) {
        return Err(invalid(format!("delay {delay_est} s outside [0, 1/Δf)")));
    }
    let (n_rx, n_tx, m, n) = data.matrices.dim();
    let w = 2.0 * PI * params.subcarrier_spacing * delay_est;
    let norm = (n as f64).sqrt().recip();
    let weights: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(norm, w * j as f64))
        .collect();
    let mut snapshots = Array2::zeros((n_rx, n_tx * m));
    for k in 0..n_rx {
        for l in 0..n_tx {
            for i in 0..m {
                let row = data.matrices.slice(s![k, l, i, ..]);
                snapshots[(k, l * m + i)] = row.iter().zip(&weights).map(|(y, c)| y * c).sum();
            }
        }
    }
    Ok(FilteredSnapshots {
        snapshots,
        domain: Domain::Delay,
        filter_value: delay_est,
    })
}

/// Filter across OFDM symbols for each subcarrier:
/// `ỹ^f_{n,l} = N_c^{-1/2} Σ_m ỹ_{mn,l} exp(-j 2 pi f m T_sym)`.
///
/// The `N_c^{-1/2}` normalization is kept for both domains; MUSIC is
/// insensitive to the constant.
pub fn doppler_filter(
    data: &VirtualChannelData,
    doppler_est: f64,
    params: &SystemParams,
) -> Result<FilteredSnapshots> {
    if !(doppler_est.abs() <= params.max_doppler()) {
        return Err(invalid(format!(
            "Doppler {doppler_est} Hz outside [-1/(2 T_sym), 1/(2 T_sym)]"
        )));
    }
    let (n_rx, n_tx, m, n) = data.matrices.dim();
    let w = -2.0 * PI * doppler_est * params.symbol_duration();
    let norm = (n as f64).sqrt().recip();
    let weights: Vec<Complex64> = (0..m)
        .map(|i| Complex64::from_polar(norm, w * i as f64))
        .collect();
    let mut snapshots = Array2::zeros((n_rx, n_tx * n));
    for k in 0..n_rx {
        for l in 0..n_tx {
            let block = data.matrices.slice(s![k, l, .., ..]);
            let mut out = snapshots.slice_mut(s![k, l * n..(l + 1) * n]);
            for (i, c) in weights.iter().enumerate() {
                out.zip_mut_with(&block.row(i), |acc, y| *acc += y * c);
            }
        }
    }
    Ok(FilteredSnapshots {
        snapshots,
        domain: Domain::Doppler,
        filter_value: doppler_est,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    pub matrix: DMatrix<Complex64>,
    pub snapshot_count: usize,
}

/// Unnormalized sum of snapshot outer products `Σ y y^H`, symmetrized.
pub fn sample_covariance(snapshots: &FilteredSnapshots) -> Result<SampleCovariance> {
    covariance_of_columns(&snapshots.snapshots)
}

pub(crate) fn covariance_of_columns(cols: &Array2<Complex64>) -> Result<SampleCovariance> {
    let (n, count) = cols.dim();
    if count == 0 {
        return Err(invalid("covariance needs at least one snapshot"));
    }
    let mut r = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        let ra = cols.row(a);
        for b in a..n {
            let rb = cols.row(b);
            let v: Complex64 = ra.iter().zip(rb.iter()).map(|(x, y)| x * y.conj()).sum();
            r[(a, b)] = v;
            r[(b, a)] = v.conj();
        }
        // Diagonal of a Hermitian matrix is real.
        r[(a, a)] = Complex64::new(r[(a, a)].re, 0.0);
    }
    let matrix = (&r + r.adjoint()).scale(0.5);
    Ok(SampleCovariance {
        matrix,
        snapshot_count: count,
    })
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &self.vectors * lambda * self.vectors.adjoint()
    }

    /// Eigenvectors of the `count` smallest eigenvalues.
    pub fn noise_subspace(&self, count: usize) -> DMatrix<Complex64> {
        self.vectors.columns(0, count).into_owned()
    }
}

pub fn hermitian_eigen(matrix: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    if !matrix.is_square() {
        return Err(Error::Eigen("matrix is not square".into()));
    }
    if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("no convergence".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    // Stable sort keeps the original index order on ties.
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(HermitianEigen { values, vectors })
}

/// Model order from the largest ratio between consecutive sorted
/// eigenvalues, clamped to `[1, N - 1]`.
pub fn estimate_source_count(values_ascending: &[f64]) -> usize {
    let n = values_ascending.len();
    if n < 2 {
        return 1;
    }
    // Clamp round-off (possibly negative) eigenvalues before taking ratios.
    let largest = values_ascending[n - 1].max(f64::MIN_POSITIVE);
    let floor = largest * f64::EPSILON;
    let mut best = (0usize, f64::NEG_INFINITY);
    for j in 0..n - 1 {
        let lo = values_ascending[j].max(floor);
        let hi = values_ascending[j + 1].max(floor);
        let ratio = hi / lo;
        if ratio > best.1 {
            best = (j, ratio);
        }
    }
    (n - 1 - best.0).clamp(1, n - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ModelOrder {
    /// Signal subspace dimension fixed to the given value.
    Fixed(usize),
    /// Chosen per covariance from the largest eigenvalue gap.
    EigenGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MusicConfig {
    pub model_order: ModelOrder,
    /// Spectrum peaks kept as DoA candidates.
    pub n_peaks: usize,
    /// Angular grid step in degrees over [-90, 90].
    pub grid_step_deg: f64,
}

impl Default for MusicConfig {
    fn default() -> Self {
        Self {
            model_order: ModelOrder::Fixed(2),
            n_peaks: 2,
            grid_step_deg: 0.1,
        }
    }
}

impl MusicConfig {
    pub fn grid_step(&self) -> f64 {
        self.grid_step_deg.to_radians()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MusicSpectrum {
    /// Angle grid in radians.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Strongest strict local maxima, descending by value.
    pub peak_angles: Vec<f64>,
    /// Eigenvalues of the covariance, ascending.
    pub eigenvalues: Vec<f64>,
    /// Signal subspace dimension used.
    pub signal_dim: usize,
}

/// Uniform grid over `[-pi/2, pi/2]`; the step is rounded so that both
/// endpoints lie on the grid.
pub fn angle_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= PI) {
        return Err(invalid(format!("grid step {step} rad out of range")));
    }
    let intervals = (PI / step).round().max(1.0) as usize;
    Ok((0..=intervals)
        .map(|i| -PI / 2.0 + PI * i as f64 / intervals as f64)
        .collect())
}

/// Indices of interior strict local maxima, strongest first.
pub fn spectrum_peaks(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// MUSIC pseudo-spectrum `1 / (a^H E_n E_n^H a)` over the angle grid.
pub fn music_spectrum(
    cov: &SampleCovariance,
    assumed_sources: usize,
    grid_step: f64,
    n_peaks: usize,
) -> Result<MusicSpectrum> {
    let n_rx = cov.matrix.nrows();
    if assumed_sources == 0 || assumed_sources >= n_rx {
        return Err(invalid(format!(
            "signal subspace dimension {assumed_sources} must lie in [1, {n_rx})"
        )));
    }
    let eig = hermitian_eigen(&cov.matrix)?;
    let noise = eig.noise_subspace(n_rx - assumed_sources);
    let noise_h = noise.adjoint();
    let grid = angle_grid(grid_step)?;
    let values: Vec<f64> = grid
        .iter()
        .map(|&theta| {
            let a = steering_vector(theta, n_rx);
            let a = DVector::from_iterator(n_rx, a.iter().copied());
            let proj = &noise_h * a;
            1.0 / proj.norm_squared().max(f64::MIN_POSITIVE)
        })
        .collect();
    let peak_angles = spectrum_peaks(&values)
        .into_iter()
        .take(n_peaks)
        .map(|i| grid[i])
        .collect();
    Ok(MusicSpectrum {
        grid,
        values,
        peak_angles,
        eigenvalues: eig.values,
        signal_dim: assumed_sources,
    })
}

/// Spectrum with the model order resolved from `config`.
pub fn music_with_config(cov: &SampleCovariance, config: &MusicConfig) -> Result<MusicSpectrum> {
    let n_rx = cov.matrix.nrows();
    let p = match config.model_order {
        ModelOrder::Fixed(p) => p,
        ModelOrder::EigenGap => estimate_source_count(&hermitian_eigen(&cov.matrix)?.values),
    };
    music_spectrum(cov, p.min(n_rx - 1), config.grid_step(), config.n_peaks)
}
