//! SNR-controlled additive noise mixing.

use crate::error::{Error, Result};
use crate::signal_io::Waveform;

/// Bookkeeping for one mix. Clipping is reported, never silently applied,
/// so the requested SNR stays exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixInfo {
    pub noise_scale: f64,
    /// Samples whose mixed amplitude exceeds 1.0.
    pub clipped_samples: usize,
}

/// Adds `noise` (cropped to the clean length) scaled so that the power ratio
/// of clean to scaled noise equals `snr_db`.
pub fn mix_at_snr(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<(Waveform, MixInfo)> {
    if noise.len() < clean.len() {
        return Err(Error::Value(format!(
            "noise ({} samples) shorter than clean ({} samples)",
            noise.len(),
            clean.len()
        )));
    }
    let p_clean = clean.power();
    let noise_crop = &noise.samples()[..clean.len()];
    let p_noise = noise_crop.iter().map(|s| s * s).sum::<f64>() / clean.len().max(1) as f64;
    if p_clean <= 0.0 {
        return Err(Error::Value("clean signal has zero power".into()));
    }
    if p_noise <= 0.0 {
        return Err(Error::Value("noise signal has zero power".into()));
    }
    // 10*log10(p_clean / (scale^2 * p_noise)) = snr_db
    let scale = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let mut clipped = 0usize;
    let samples: Vec<f64> = clean
        .samples()
        .iter()
        .zip(noise_crop)
        .map(|(c, n)| {
            let s = c + scale * n;
            if s.abs() > 1.0 {
                clipped += 1;
            }
            s
        })
        .collect();
    Ok((
        Waveform::new(samples, clean.rate_hz()),
        MixInfo {
            noise_scale: scale,
            clipped_samples: clipped,
        },
    ))
}
