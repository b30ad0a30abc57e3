//! Mel-cepstral distortion between two magnitude spectrograms.
//!
//! Frames are folded through a 26-filter HTK-style triangular mel bank
//! spanning 0-8000 Hz, log filter energies are decorrelated with a DCT-II,
//! and the distortion is the mean over time-aligned frame pairs of
//! `(10 * sqrt(2) / ln 10) * ||c_ref - c_deg||` over cepstra 1..=12
//! (the gain term c0 is excluded).

use ndarray::Array2;

use crate::dsp::{Spectrogram, BINS};
use crate::error::{Error, Result};
use crate::signal_io::AUDIO_RATE_HZ;

/// Number of triangular mel filters.
pub const MCD_FILTERS: usize = 26;
/// Number of cepstral coefficients kept from the DCT (including c0).
pub const MCD_CEPSTRA: usize = 13;
/// Floor applied to filter energies before the log.
pub const MCD_ENERGY_FLOOR: f64 = 1e-10;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filter weights, `[MCD_FILTERS x BINS]`.
fn mel_filterbank() -> Array2<f64> {
    let nyquist = AUDIO_RATE_HZ as f64 / 2.0;
    let bin_hz = AUDIO_RATE_HZ as f64 / ((BINS - 1) as f64 * 2.0);
    let mel_points: Vec<f64> = (0..MCD_FILTERS + 2)
        .map(|i| mel_to_hz(hz_to_mel(nyquist) * i as f64 / (MCD_FILTERS + 1) as f64))
        .collect();
    let mut bank = Array2::zeros((MCD_FILTERS, BINS));
    for j in 0..MCD_FILTERS {
        let (lo, cf, hi) = (mel_points[j], mel_points[j + 1], mel_points[j + 2]);
        for k in 0..BINS {
            let f = k as f64 * bin_hz;
            let w = if f <= lo || f >= hi {
                0.0
            } else if f <= cf {
                (f - lo) / (cf - lo)
            } else {
                (hi - f) / (hi - cf)
            };
            bank[(j, k)] = w;
        }
    }
    bank
}

/// Mel cepstra of every frame, `[T x MCD_CEPSTRA]`.
fn cepstra(spec: &Spectrogram, bank: &Array2<f64>) -> Array2<f64> {
    let t_len = spec.n_frames();
    let mut out = Array2::zeros((t_len, MCD_CEPSTRA));
    let m = MCD_FILTERS as f64;
    for t in 0..t_len {
        let log_e: Vec<f64> = (0..MCD_FILTERS)
            .map(|j| {
                let e: f64 = (0..BINS)
                    .map(|k| bank[(j, k)] * spec.mag()[(t, k)].powi(2))
                    .sum();
                e.max(MCD_ENERGY_FLOOR).ln()
            })
            .collect();
        for i in 0..MCD_CEPSTRA {
            let mut c = 0.0;
            for (jm, &le) in log_e.iter().enumerate() {
                c += le * (std::f64::consts::PI * i as f64 * (jm as f64 + 0.5) / m).cos();
            }
            out[(t, i)] = (2.0 / m).sqrt() * c;
        }
    }
    out
}

/// Mean mel-cepstral distortion in dB over time-aligned frames.
pub fn mcd(reference: &Spectrogram, degraded: &Spectrogram) -> Result<f64> {
    if reference.n_frames() != degraded.n_frames() {
        return Err(Error::Shape(format!(
            "frame counts differ: {} vs {}",
            reference.n_frames(),
            degraded.n_frames()
        )));
    }
    if reference.n_frames() == 0 {
        return Err(Error::Metric("empty spectrograms".into()));
    }
    let bank = mel_filterbank();
    let cr = cepstra(reference, &bank);
    let cd = cepstra(degraded, &bank);
    let scale = 10.0 * 2f64.sqrt() / std::f64::consts::LN_10;
    let mut sum = 0.0;
    for t in 0..reference.n_frames() {
        let d2: f64 = (1..MCD_CEPSTRA)
            .map(|i| (cr[(t, i)] - cd[(t, i)]).powi(2))
            .sum();
        sum += scale * d2.sqrt();
    }
    Ok(sum / reference.n_frames() as f64)
}
