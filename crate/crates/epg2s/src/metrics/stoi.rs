//! Short-time objective intelligibility (STOI) and its extended variant
//! (ESTOI), adapted to 16 kHz input.
//!
//! Both signals are framed with a 512-sample Hann window and 256-sample hop,
//! silent reference frames (more than 40 dB below the loudest) are removed
//! from both signals, and the spectra are folded into 15 one-third-octave
//! bands starting at 150 Hz. Intermediate correlations are computed over
//! 384 ms analysis segments (24 frames).

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal_io::{Waveform, AUDIO_RATE_HZ};

/// Analysis frame length in samples.
pub const STOI_FRAME: usize = 512;
/// Frame hop in samples.
pub const STOI_HOP: usize = 256;
/// Number of one-third-octave bands.
pub const STOI_BANDS: usize = 15;
/// Center frequency of the lowest band, Hz.
pub const STOI_LOWEST_CF_HZ: f64 = 150.0;
/// Frames per analysis segment (384 ms).
pub const STOI_SEGMENT_FRAMES: usize = 24;
/// Signal-to-distortion clipping bound in dB.
pub const STOI_CLIP_BETA_DB: f64 = -15.0;
/// Frames this far below the loudest reference frame are discarded.
pub const STOI_VAD_RANGE_DB: f64 = 40.0;

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// Windowed power spectra of whole frames, `[n_frames x (STOI_FRAME/2 + 1)]`.
fn frame_spectra(samples: &[f64]) -> Array2<f64> {
    let n_frames = (samples.len() - STOI_FRAME) / STOI_HOP + 1;
    let bins = STOI_FRAME / 2 + 1;
    let window = hann(STOI_FRAME);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(STOI_FRAME);
    let mut buf = vec![Complex::new(0.0, 0.0); STOI_FRAME];
    let mut out = Array2::zeros((n_frames, bins));
    for t in 0..n_frames {
        let off = t * STOI_HOP;
        for (m, w) in window.iter().enumerate() {
            buf[m] = Complex::new(samples[off + m] * w, 0.0);
        }
        fft.process(&mut buf);
        for k in 0..bins {
            out[(t, k)] = buf[k].norm_sqr();
        }
    }
    out
}

/// Indices of FFT bins belonging to each one-third-octave band.
fn band_bins() -> Vec<Vec<usize>> {
    let bin_hz = AUDIO_RATE_HZ as f64 / STOI_FRAME as f64;
    (0..STOI_BANDS)
        .map(|j| {
            let cf = STOI_LOWEST_CF_HZ * 2f64.powf(j as f64 / 3.0);
            let lo = cf * 2f64.powf(-1.0 / 6.0);
            let hi = cf * 2f64.powf(1.0 / 6.0);
            (1..=STOI_FRAME / 2)
                .filter(|&k| {
                    let f = k as f64 * bin_hz;
                    f >= lo && f < hi
                })
                .collect()
        })
        .collect()
}

/// Band envelopes `[STOI_BANDS x n_frames]` of the speech-active frames
/// shared by reference and degraded signals.
fn envelopes(reference: &Waveform, degraded: &Waveform) -> Result<(Array2<f64>, Array2<f64>)> {
    for (name, w) in [("reference", reference), ("degraded", degraded)] {
        if w.rate_hz() != AUDIO_RATE_HZ {
            return Err(Error::Metric(format!(
                "{name} must be sampled at {AUDIO_RATE_HZ} Hz, got {}",
                w.rate_hz()
            )));
        }
    }
    let n = reference.len().min(degraded.len());
    let min_len = STOI_FRAME + (STOI_SEGMENT_FRAMES - 1) * STOI_HOP;
    if n < min_len {
        return Err(Error::Metric(format!(
            "signals too short for one analysis segment ({min_len} samples needed, have {n})"
        )));
    }
    let r_spec = frame_spectra(&reference.samples()[..n]);
    let d_spec = frame_spectra(&degraded.samples()[..n]);

    // energy-based voice activity detection on the reference
    let frame_energy: Vec<f64> = r_spec.rows().into_iter().map(|row| row.sum()).collect();
    let max_e = frame_energy.iter().cloned().fold(0.0f64, f64::max);
    if max_e <= 0.0 {
        return Err(Error::Metric("reference is silent".into()));
    }
    let floor = max_e * 10f64.powf(-STOI_VAD_RANGE_DB / 10.0);
    let active: Vec<usize> = frame_energy
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > floor)
        .map(|(t, _)| t)
        .collect();
    if active.len() < STOI_SEGMENT_FRAMES {
        return Err(Error::Metric(format!(
            "only {} speech-active frames, need {STOI_SEGMENT_FRAMES}",
            active.len()
        )));
    }

    let bands = band_bins();
    let mut r_env = Array2::zeros((STOI_BANDS, active.len()));
    let mut d_env = Array2::zeros((STOI_BANDS, active.len()));
    for (m, &t) in active.iter().enumerate() {
        for (j, bins) in bands.iter().enumerate() {
            r_env[(j, m)] = bins.iter().map(|&k| r_spec[(t, k)]).sum::<f64>().sqrt();
            d_env[(j, m)] = bins.iter().map(|&k| d_spec[(t, k)]).sum::<f64>().sqrt();
        }
    }
    Ok((r_env, d_env))
}

fn correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// STOI score in roughly [0, 1]; higher is more intelligible.
pub fn stoi(reference: &Waveform, degraded: &Waveform) -> Result<f64> {
    let (r_env, d_env) = envelopes(reference, degraded)?;
    let m_frames = r_env.ncols();
    let clip = 1.0 + 10f64.powf(-STOI_CLIP_BETA_DB / 20.0);

    let mut sum = 0.0;
    let mut count = 0usize;
    for m in STOI_SEGMENT_FRAMES..=m_frames {
        let lo = m - STOI_SEGMENT_FRAMES;
        for j in 0..STOI_BANDS {
            let x: Vec<f64> = (lo..m).map(|t| r_env[(j, t)]).collect();
            let y: Vec<f64> = (lo..m).map(|t| d_env[(j, t)]).collect();
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ny <= 0.0 {
                continue;
            }
            let alpha = nx / ny;
            // scale the degraded segment to the reference energy, then bound
            // the distortion at -beta dB above the reference envelope
            let y_clipped: Vec<f64> = x
                .iter()
                .zip(&y)
                .map(|(&xi, &yi)| (alpha * yi).min(xi * clip))
                .collect();
            if let Some(rho) = correlation(&x, &y_clipped) {
                sum += rho;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Metric("no valid band/segment cells".into()));
    }
    Ok(sum / count as f64)
}

/// Subtract the mean and scale to unit norm; all-equal rows become zeros.
fn normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let mean = row.sum() / row.len() as f64;
        row.mapv_inplace(|v| v - mean);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
}

/// ESTOI score; like STOI but sensitive to across-band (spectral) structure
/// within each segment.
pub fn estoi(reference: &Waveform, degraded: &Waveform) -> Result<f64> {
    let (r_env, d_env) = envelopes(reference, degraded)?;
    let m_frames = r_env.ncols();
    let n = STOI_SEGMENT_FRAMES;

    let mut sum = 0.0;
    let mut count = 0usize;
    for m in n..=m_frames {
        let lo = m - n;
        let mut x = Array2::zeros((STOI_BANDS, n));
        let mut y = Array2::zeros((STOI_BANDS, n));
        for j in 0..STOI_BANDS {
            for t in 0..n {
                x[(j, t)] = r_env[(j, lo + t)];
                y[(j, t)] = d_env[(j, lo + t)];
            }
        }
        // rows (temporal envelopes) first, then columns (spectra)
        normalize_rows(&mut x);
        normalize_rows(&mut y);
        let mut xt = x.reversed_axes();
        let mut yt = y.reversed_axes();
        normalize_rows(&mut xt);
        normalize_rows(&mut yt);
        let mut d = 0.0;
        for t in 0..n {
            let mut dot = 0.0;
            for j in 0..STOI_BANDS {
                dot += xt[(t, j)] * yt[(t, j)];
            }
            d += dot;
        }
        sum += d / n as f64;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Metric("no analysis segments".into()));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{mix_at_snr, noise_generator, NoiseKind};
    use crate::signal_io::{synth_corpus, SyntheticSpec};

    fn speech_like(seed: u64) -> Waveform {
        let spec = SyntheticSpec {
            seed,
            n_utterances: 1,
            duration_range_s: (1.5, 1.6),
            split_ratios: (1.0, 0.0, 0.0),
            ..Default::default()
        };
        synth_corpus(&spec).unwrap().train[0].clean.clone()
    }

    #[test]
    fn band_edges_tile_the_third_octave_axis() {
        let bands = band_bins();
        assert_eq!(bands.len(), STOI_BANDS);
        // bands are non-empty, disjoint, and ordered
        let mut last_max = 0usize;
        for bins in &bands {
            assert!(!bins.is_empty());
            assert!(*bins.first().unwrap() > last_max);
            last_max = *bins.last().unwrap();
        }
        // oracle: the top band's upper edge stays under Nyquist
        let top = STOI_LOWEST_CF_HZ * 2f64.powf(14.0 / 3.0) * 2f64.powf(1.0 / 6.0);
        assert!(top < AUDIO_RATE_HZ as f64 / 2.0);
    }

    #[test]
    fn identity_scores_near_one() {
        for seed in [1u64, 2, 3] {
            let x = speech_like(seed);
            assert!(stoi(&x, &x).unwrap() > 0.999);
            assert!(estoi(&x, &x).unwrap() > 0.999);
        }
    }

    #[test]
    fn scaling_does_not_change_the_score() {
        let x = speech_like(4);
        let half = Waveform::new(x.samples().iter().map(|v| 0.5 * v).collect(), AUDIO_RATE_HZ);
        assert!((stoi(&x, &half).unwrap() - 1.0).abs() < 1e-9);
        assert!((estoi(&x, &half).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pure_noise_scores_low() {
        let x = speech_like(5);
        let noise = noise_generator(NoiseKind::Street, 9, x.len());
        assert!(stoi(&x, &noise).unwrap() < 0.5);
        assert!(estoi(&x, &noise).unwrap() < 0.5);
    }

    #[test]
    fn scores_fall_monotonically_with_snr() {
        let x = speech_like(6);
        let noise = noise_generator(NoiseKind::Babble, 11, x.len());
        let mut stoi_scores = Vec::new();
        let mut estoi_scores = Vec::new();
        for snr in [15.0, 0.0, -15.0] {
            let (mixed, _) = mix_at_snr(&x, &noise, snr).unwrap();
            stoi_scores.push(stoi(&x, &mixed).unwrap());
            estoi_scores.push(estoi(&x, &mixed).unwrap());
        }
        assert!(stoi_scores[0] > stoi_scores[1] && stoi_scores[1] > stoi_scores[2]);
        assert!(estoi_scores[0] > estoi_scores[1] && estoi_scores[1] > estoi_scores[2]);
    }

    #[test]
    fn silent_and_short_inputs_are_rejected() {
        let silent = Waveform::new(vec![0.0; 32000], AUDIO_RATE_HZ);
        let x = speech_like(7);
        assert!(stoi(&silent, &x).is_err());
        let short = Waveform::new(vec![0.1; 1000], AUDIO_RATE_HZ);
        assert!(stoi(&short, &short).is_err());
    }
}
