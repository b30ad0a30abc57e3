//! Spectral analysis and synthesis: STFT, feature normalization, SNR mixing,
//! parametric noise, and fast Griffin-Lim reconstruction.

mod container;
mod griffin_lim;
mod mix;
mod noise;
mod norm;
mod stft;

pub use container::{load_spectrogram, save_spectrogram};
pub use griffin_lim::{gla_consistency_error, griffin_lim, GriffinLimConfig};
pub use mix::{mix_at_snr, MixInfo};
pub use noise::{noise_generator, NoiseKind};
pub use norm::{compute_norm_stats, denormalize, normalize, NormStats, NormalizedFeatures};
pub use norm::{denormalize_frames, STD_EPSILON};
pub use stft::{hann_window, istft, stft, stft_complex, stft_mag, Stft};

use ndarray::Array2;

use crate::error::{Error, Result};

/// STFT hop size in samples.
pub const HOP: usize = 160;
/// STFT window size in samples.
pub const WIN: usize = 512;
/// Number of magnitude bins, `WIN / 2 + 1`.
pub const BINS: usize = WIN / 2 + 1;

/// Non-negative STFT magnitude frames, `[T x 257]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    mag: Array2<f64>,
    rate_hz: u32,
}

impl Spectrogram {
    pub fn new(mag: Array2<f64>, rate_hz: u32) -> Result<Self> {
        if mag.ncols() != BINS {
            return Err(Error::Shape(format!(
                "spectrogram must have {BINS} bins, got {}",
                mag.ncols()
            )));
        }
        if mag.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Value(
                "spectrogram magnitudes must be finite and non-negative".into(),
            ));
        }
        Ok(Self { mag, rate_hz })
    }

    pub fn mag(&self) -> &Array2<f64> {
        &self.mag
    }

    pub fn n_frames(&self) -> usize {
        self.mag.nrows()
    }

    pub fn rate_hz(&self) -> u32 {
        self.rate_hz
    }

    pub fn hop(&self) -> usize {
        HOP
    }

    pub fn win(&self) -> usize {
        WIN
    }
}
