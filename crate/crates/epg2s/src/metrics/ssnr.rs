//! Segmental signal-to-noise ratio.
//!
//! 32 ms segments with 16 ms shift at 16 kHz; per-segment SNR clamped to
//! [−10, 35] dB, averaged over segments whose reference energy is within
//! 40 dB of the loudest segment.

use crate::error::{Error, Result};
use crate::signal_io::Waveform;

pub const SSNR_SEGMENT: usize = 512; // 32 ms at 16 kHz
pub const SSNR_SHIFT: usize = 256; // 16 ms
pub const SSNR_FLOOR_DB: f64 = -10.0;
pub const SSNR_CEIL_DB: f64 = 35.0;
/// Segments more than this far below the loudest one are treated as silence.
pub const SSNR_SILENCE_RANGE_DB: f64 = 40.0;

pub fn ssnr(reference: &Waveform, degraded: &Waveform) -> Result<f64> {
    let n = reference.len().min(degraded.len());
    if n < SSNR_SEGMENT {
        return Err(Error::Metric(format!(
            "signals too short for one {SSNR_SEGMENT}-sample segment (have {n})"
        )));
    }
    let r = &reference.samples()[..n];
    let d = &degraded.samples()[..n];

    let n_segments = (n - SSNR_SEGMENT) / SSNR_SHIFT + 1;
    let energies: Vec<f64> = (0..n_segments)
        .map(|s| {
            let off = s * SSNR_SHIFT;
            r[off..off + SSNR_SEGMENT].iter().map(|v| v * v).sum()
        })
        .collect();
    let max_energy = energies.iter().cloned().fold(0.0f64, f64::max);
    if max_energy <= 0.0 {
        return Err(Error::Metric("reference is silent".into()));
    }
    let silence_floor = max_energy * 10f64.powf(-SSNR_SILENCE_RANGE_DB / 10.0);

    let mut sum = 0.0;
    let mut count = 0usize;
    for (s, &ref_energy) in energies.iter().enumerate() {
        if ref_energy <= silence_floor {
            continue;
        }
        let off = s * SSNR_SHIFT;
        let err_energy: f64 = (off..off + SSNR_SEGMENT)
            .map(|i| (r[i] - d[i]).powi(2))
            .sum();
        let snr_db = if err_energy == 0.0 {
            SSNR_CEIL_DB
        } else {
            (10.0 * (ref_energy / err_energy).log10()).clamp(SSNR_FLOOR_DB, SSNR_CEIL_DB)
        };
        sum += snr_db;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Metric("no speech-active segments".into()));
    }
    Ok(sum / count as f64)
}
