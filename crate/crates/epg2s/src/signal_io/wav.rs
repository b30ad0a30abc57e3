//! Minimal RIFF/WAVE reader and writer for 16-bit PCM mono at 16 kHz.
//!
//! No resampling and no format conversion: anything other than the corpus
//! format is rejected so mispreprocessed audio cannot slip through.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal_io::{Waveform, AUDIO_RATE_HZ};

const SCALE: f64 = 32768.0;

pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |msg: &str| Error::format(path, msg);

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(fail("not a RIFF/WAVE file"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = (pos + 8 + size).min(bytes.len());
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(fail("truncated fmt chunk"));
                }
                fmt = Some((
                    u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    u16::from_le_bytes(body[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos += 8 + size + (size & 1); // chunks are word-aligned
    }

    let (format, channels, rate, bits) = fmt.ok_or_else(|| fail("missing fmt chunk"))?;
    if format != 1 || bits != 16 {
        return Err(fail("only 16-bit integer PCM is supported"));
    }
    if channels != 1 {
        return Err(fail("only mono audio is supported"));
    }
    if rate != AUDIO_RATE_HZ {
        return Err(Error::format(
            path,
            format!("sample rate {rate} Hz, corpus requires {AUDIO_RATE_HZ} Hz (no resampling)"),
        ));
    }
    let data = data.ok_or_else(|| fail("missing data chunk"))?;

    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / SCALE)
        .collect();
    Ok(Waveform::new(samples, AUDIO_RATE_HZ))
}

pub fn save_wav(w: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let n = w.samples().len();
    let data_bytes = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_bytes).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.rate_hz().to_le_bytes());
    out.extend_from_slice(&(w.rate_hz() * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_bytes.to_le_bytes());
    for &s in w.samples() {
        let q = (s * SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_int16_scales_to_half() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.wav");
        // hand-build a file whose samples are all 16384
        let w = Waveform::new(vec![16384.0 / SCALE; 100], AUDIO_RATE_HZ);
        save_wav(&w, &path).unwrap();
        let loaded = load_wav(&path).unwrap();
        assert!(loaded.samples().iter().all(|&s| s == 0.5));
    }

    #[test]
    fn rejects_wrong_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("8k.wav");
        let w = Waveform::new(vec![0.0; 64], 8000);
        save_wav(&w, &path).unwrap();
        let err = load_wav(&path).unwrap_err();
        assert!(err.to_string().contains("8000"));
    }

    #[test]
    fn round_trip_within_quantization_bound() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.wav");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<f64> = (0..4000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = Waveform::new(samples, AUDIO_RATE_HZ);
        save_wav(&w, &path).unwrap();
        let loaded = load_wav(&path).unwrap();
        assert_eq!(loaded.len(), w.len());
        for (a, b) in w.samples().iter().zip(loaded.samples()) {
            assert!((a - b).abs() < 1.0 / SCALE, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.wav");
        fs::write(&path, b"not a wav").unwrap();
        assert!(matches!(load_wav(&path), Err(Error::Format { .. })));
    }
}
