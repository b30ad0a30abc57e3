//! Short-time Fourier analysis and synthesis.
//!
//! Hann window of 512 samples, hop 160, center-padded with reflection.
//! A signal of `len` samples produces `len / hop + 1` frames; synthesis
//! returns `(T - 1) * hop` samples, so analysis and synthesis round-trip
//! frame counts exactly.

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dsp::{Spectrogram, BINS, HOP, WIN};
use crate::error::{Error, Result};
use crate::signal_io::Waveform;

/// Periodic Hann window of length [`WIN`].
pub fn hann_window() -> Vec<f64> {
    (0..WIN)
        .map(|n| 0.5 * (1.0 - (std::f64::consts::TAU * n as f64 / WIN as f64).cos()))
        .collect()
}

/// Analysis result: magnitudes plus the phase retained for analysis-side use.
#[derive(Debug, Clone)]
pub struct Stft {
    pub spec: Spectrogram,
    /// Phase angles, `[T x 257]`.
    pub phase: Array2<f64>,
}

fn reflect_index(mut i: i64, len: i64) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    i = i.rem_euclid(period);
    if i >= len {
        i = period - i;
    }
    i as usize
}

/// Complex STFT of raw samples. `T = len / HOP + 1`.
pub fn stft_complex(samples: &[f64]) -> Array2<Complex<f64>> {
    let len = samples.len() as i64;
    let pad = (WIN / 2) as i64;
    let n_frames = samples.len() / HOP + 1;
    let window = hann_window();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(WIN);
    let mut out = Array2::from_elem((n_frames, BINS), Complex::new(0.0, 0.0));
    let mut buf = vec![Complex::new(0.0, 0.0); WIN];
    for t in 0..n_frames {
        let start = t as i64 * HOP as i64 - pad;
        for (m, w) in window.iter().enumerate() {
            let idx = reflect_index(start + m as i64, len);
            buf[m] = Complex::new(samples[idx] * w, 0.0);
        }
        fft.process(&mut buf);
        for k in 0..BINS {
            out[(t, k)] = buf[k];
        }
    }
    out
}

pub fn stft(w: &Waveform) -> Result<Stft> {
    if w.is_empty() {
        return Err(Error::Value("cannot take STFT of an empty waveform".into()));
    }
    let frames = stft_complex(w.samples());
    let mag = frames.mapv(|c| c.norm());
    let phase = frames.mapv(|c| c.arg());
    Ok(Stft {
        spec: Spectrogram::new(mag, w.rate_hz())?,
        phase,
    })
}

pub fn stft_mag(w: &Waveform) -> Result<Spectrogram> {
    Ok(stft(w)?.spec)
}

/// Weighted overlap-add synthesis from complex frames. Returns
/// `(T - 1) * HOP` samples (the center padding is stripped).
pub fn istft(frames: &Array2<Complex<f64>>, rate_hz: u32) -> Waveform {
    let n_frames = frames.nrows();
    let window = hann_window();
    let pad = WIN / 2;
    let full_len = (n_frames - 1) * HOP + WIN;
    let mut num = vec![0.0f64; full_len];
    let mut den = vec![0.0f64; full_len];

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(WIN);
    let mut buf = vec![Complex::new(0.0, 0.0); WIN];
    for t in 0..n_frames {
        for k in 0..BINS {
            buf[k] = frames[(t, k)];
        }
        // conjugate symmetry for the real inverse transform
        for k in BINS..WIN {
            buf[k] = frames[(t, WIN - k)].conj();
        }
        ifft.process(&mut buf);
        let base = t * HOP;
        for (m, &w) in window.iter().enumerate() {
            num[base + m] += w * buf[m].re / WIN as f64;
            den[base + m] += w * w;
        }
    }

    let out_len = (n_frames - 1) * HOP;
    let mut samples = vec![0.0f64; out_len];
    for n in 0..out_len {
        let d = den[pad + n];
        if d > 1e-12 {
            samples[n] = num[pad + n] / d;
        }
    }
    Waveform::new(samples, rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_io::AUDIO_RATE_HZ;

    fn sine(freq: f64, len: usize) -> Waveform {
        let samples = (0..len)
            .map(|n| 0.4 * (std::f64::consts::TAU * freq * n as f64 / 16000.0).sin())
            .collect();
        Waveform::new(samples, AUDIO_RATE_HZ)
    }

    #[test]
    fn one_second_gives_101_frames() {
        // oracle: count frame starts directly
        let len = 16000usize;
        let mut count = 0;
        let mut start = 0i64;
        while start <= len as i64 {
            count += 1;
            start += HOP as i64;
        }
        assert_eq!(count, 101);
        let s = stft_mag(&sine(440.0, len)).unwrap();
        assert_eq!(s.mag().dim(), (101, BINS));
    }

    #[test]
    fn zero_waveform_gives_zero_magnitudes() {
        let s = stft_mag(&Waveform::new(vec![0.0; 4000], AUDIO_RATE_HZ)).unwrap();
        assert!(s.mag().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn constant_waveform_concentrates_in_bin_zero() {
        let w = Waveform::new(vec![0.5; 8000], AUDIO_RATE_HZ);
        let s = stft_mag(&w).unwrap();
        // oracle: direct DFT of the windowed constant at an interior frame
        let window = hann_window();
        let expected: f64 = 0.5 * window.iter().sum::<f64>();
        let t = s.n_frames() / 2;
        assert!((s.mag()[(t, 0)] - expected).abs() < 1e-9);
        // energy away from DC is negligible at interior frames
        for k in 2..BINS {
            assert!(s.mag()[(t, k)] < 1e-9 * expected);
        }
    }

    #[test]
    fn empty_waveform_is_rejected() {
        assert!(stft(&Waveform::new(vec![], AUDIO_RATE_HZ)).is_err());
    }

    #[test]
    fn istft_inverts_stft_in_the_interior() {
        let w = sine(523.0, 9000);
        let frames = stft_complex(w.samples());
        let rec = istft(&frames, AUDIO_RATE_HZ);
        assert_eq!(rec.len(), (frames.nrows() - 1) * HOP);
        // compare away from the boundary where reflection padding differs
        for n in WIN..rec.len().saturating_sub(WIN) {
            assert!(
                (rec.samples()[n] - w.samples()[n]).abs() < 1e-8,
                "sample {n}: {} vs {}",
                rec.samples()[n],
                w.samples()[n]
            );
        }
    }

    #[test]
    fn istft_length_bookkeeping() {
        for len in [321usize, 1600, 4001] {
            let w = sine(100.0, len);
            let frames = stft_complex(w.samples());
            let rec = istft(&frames, AUDIO_RATE_HZ);
            assert_eq!(rec.len(), (len / HOP) * HOP);
        }
    }
}
