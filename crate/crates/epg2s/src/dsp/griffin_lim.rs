//! Fast Griffin-Lim phase reconstruction.
//!
//! Alternates the magnitude projection (replace magnitudes, keep phase) with
//! the consistency projection (ISTFT then STFT), accelerated by a momentum
//! term. Momentum 0 recovers the plain algorithm, whose consistency error is
//! non-increasing.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::dsp::{istft, stft_complex, Spectrogram};
use crate::error::{Error, Result};
use crate::signal_io::Waveform;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GriffinLimConfig {
    pub iters: usize,
    pub momentum: f64,
    /// Seed for the random phase initialization.
    pub seed: u64,
}

impl Default for GriffinLimConfig {
    fn default() -> Self {
        Self {
            iters: 32,
            momentum: 0.99,
            seed: 0,
        }
    }
}

fn magnitude_projection(frames: &Array2<Complex<f64>>, mag: &Array2<f64>) -> Array2<Complex<f64>> {
    let mut out = frames.clone();
    for ((t, k), c) in out.indexed_iter_mut() {
        let norm = c.norm();
        *c = if norm > 1e-16 {
            *c * (mag[(t, k)] / norm)
        } else {
            Complex::new(mag[(t, k)], 0.0)
        };
    }
    out
}

fn consistency_projection(frames: &Array2<Complex<f64>>, rate_hz: u32) -> Array2<Complex<f64>> {
    let x = istft(frames, rate_hz);
    stft_complex(x.samples())
}

/// Consistency error `|| |STFT(istft(c))| - mag ||_2` used by the plain-GLA
/// monotonicity property.
pub fn gla_consistency_error(frames: &Array2<Complex<f64>>, mag: &Array2<f64>, rate_hz: u32) -> f64 {
    let proj = consistency_projection(frames, rate_hz);
    proj.iter()
        .zip(mag.iter())
        .map(|(c, m)| (c.norm() - m).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn griffin_lim(mag: &Spectrogram, cfg: &GriffinLimConfig) -> Result<Waveform> {
    if cfg.iters == 0 {
        return Err(Error::Value("griffin-lim needs at least one iteration".into()));
    }
    if mag.mag().iter().any(|v| v.is_nan()) {
        return Err(Error::Value("NaN in magnitude spectrogram".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let target = mag.mag();
    let init: Array2<Complex<f64>> = target.mapv(|m| {
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Complex::from_polar(m, phi)
    });

    // t_n = P_C(P_A(c_{n-1})); c_n = t_n + momentum * (t_n - t_{n-1})
    let mut t_prev = consistency_projection(&magnitude_projection(&init, target), mag.rate_hz());
    let mut c = t_prev.clone();
    for _ in 1..cfg.iters {
        let t = consistency_projection(&magnitude_projection(&c, target), mag.rate_hz());
        c = t.clone();
        c.zip_mut_with(&t_prev, |cv, &pv| *cv += (*cv - pv) * cfg.momentum);
        t_prev = t;
    }
    Ok(istft(&magnitude_projection(&t_prev, target), mag.rate_hz()))
}
