//! Binary spectrogram container.
//!
//! Layout: magic `EPGSPEC\0`, then little-endian u32 fields
//! {version, T, bins, hop, win, rate}, then `T * bins` f32 magnitudes in
//! row-major order.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::dsp::{Spectrogram, BINS, HOP, WIN};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"EPGSPEC\0";
const VERSION: u32 = 1;

pub fn save_spectrogram(s: &Spectrogram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (t, bins) = s.mag().dim();
    let mut out = Vec::with_capacity(32 + t * bins * 4);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, t as u32, bins as u32, HOP as u32, WIN as u32, s.rate_hz()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &m in s.mag().iter() {
        out.extend_from_slice(&(m as f32).to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_spectrogram(path: impl AsRef<Path>) -> Result<Spectrogram> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 32 || &bytes[0..8] != MAGIC {
        return Err(Error::format(path, "not a spectrogram container"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let t = u32_at(12) as usize;
    let bins = u32_at(16) as usize;
    let hop = u32_at(20) as usize;
    let win = u32_at(24) as usize;
    let rate = u32_at(28);
    if bins != BINS || hop != HOP || win != WIN {
        return Err(Error::format(
            path,
            format!("unexpected geometry bins={bins} hop={hop} win={win}"),
        ));
    }
    let expected = 32 + t * bins * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, expected {expected}", bytes.len()),
        ));
    }
    let mut mag = Array2::zeros((t, bins));
    for (i, m) in mag.iter_mut().enumerate() {
        let off = 32 + i * 4;
        *m = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
    }
    Spectrogram::new(mag, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_f32_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mag = Array2::from_shape_fn((13, BINS), |_| rng.random_range(0.0..5.0f64));
        let s = Spectrogram::new(mag, 16000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.spec");
        save_spectrogram(&s, &path).unwrap();
        let loaded = load_spectrogram(&path).unwrap();
        assert_eq!(loaded.n_frames(), 13);
        for (a, b) in s.mag().iter().zip(loaded.mag().iter()) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.spec");
        fs::write(&path, b"EPGSPEC\0trunc").unwrap();
        assert!(load_spectrogram(&path).is_err());
    }
}
