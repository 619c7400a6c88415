//! 64-QAM data generation and transmit frame construction.

use ndarray::Array3;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::params::SystemParams;

pub const QAM64_ORDER: usize = 64;

/// Average energy of the unscaled `{±1, ±3, ±5, ±7}^2` grid.
const QAM64_RAW_ENERGY: f64 = 42.0;

/// Maps a 3-bit Gray label to an amplitude level in `{-7, ..., 7}`.
fn gray_level(bits: usize) -> f64 {
    let pos = bits ^ (bits >> 1) ^ (bits >> 2);
    (2 * pos) as f64 - 7.0
}

/// Gray-coded square 64-QAM with unit average energy. The upper three
/// bits select the in-phase level, the lower three the quadrature level.
pub fn qam64_map(index: usize) -> Result<Complex64> {
    if index >= QAM64_ORDER {
        return Err(invalid(format!("64-QAM index {index} out of range")));
    }
    let scale = QAM64_RAW_ENERGY.sqrt().recip();
    Ok(Complex64::new(
        gray_level(index >> 3) * scale,
        gray_level(index & 7) * scale,
    ))
}

fn constellation() -> [Complex64; QAM64_ORDER] {
    let mut points = [Complex64::new(0.0, 0.0); QAM64_ORDER];
    for (i, p) in points.iter_mut().enumerate() {
        *p = qam64_map(i).expect("index in range");
    }
    points
}

/// Transmit symbols `x_mn[p]`, indexed `[m, n, p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTx {
    pub symbols: Array3<Complex64>,
}

impl FrameTx {
    pub fn n_symbols(&self) -> usize {
        self.symbols.dim().0
    }

    pub fn n_subcarriers(&self) -> usize {
        self.symbols.dim().1
    }

    pub fn n_tx(&self) -> usize {
        self.symbols.dim().2
    }

    pub fn check(&self, params: &SystemParams) -> Result<()> {
        let want = (params.n_symbols, params.n_subcarriers, params.n_tx);
        if self.symbols.dim() != want {
            return Err(crate::Error::DimensionMismatch(format!(
                "frame dims {:?} vs params {want:?}",
                self.symbols.dim()
            )));
        }
        Ok(())
    }
}

/// Draws i.i.d. uniform 64-QAM symbols scaled to the per-entry power of `params`.
pub fn generate_frame<R: Rng + ?Sized>(rng: &mut R, params: &SystemParams) -> FrameTx {
    let points = constellation();
    let amp = params.per_entry_power().sqrt();
    let dims = (params.n_symbols, params.n_subcarriers, params.n_tx);
    let symbols = Array3::from_shape_simple_fn(dims, || points[rng.random_range(0..QAM64_ORDER)] * amp);
    FrameTx { symbols }
}
