//! Per-bin feature normalization.
//!
//! Features are z-scored `log1p` magnitudes; statistics come from the train
//! split only. `normalize` and `denormalize` are exact inverses up to the
//! non-negativity clamp on magnitudes.

use ndarray::Array2;

use crate::dsp::{stft_mag, Spectrogram, BINS};
use crate::error::{Error, Result};
use crate::signal_io::UtterancePair;

/// Floor applied to per-bin standard deviations.
pub const STD_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub epsilon: f64,
}

impl NormStats {
    /// Stable identifier derived from the statistic values (FNV-1a over the
    /// raw float bits), used to tag features with the stats that produced them.
    pub fn id(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: f64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        self.mean.iter().for_each(|&v| eat(v));
        self.std.iter().for_each(|&v| eat(v));
        eat(self.epsilon);
        h
    }
}

/// Z-scored log-magnitude frames, `[T x 257]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFeatures {
    pub feat: Array2<f64>,
    pub stats_id: u64,
}

/// Per-bin mean and (population) standard deviation of `log1p` magnitudes
/// over every frame of the given train split.
pub fn compute_norm_stats(train: &[UtterancePair]) -> NormStats {
    let mut sum = vec![0.0f64; BINS];
    let mut sum_sq = vec![0.0f64; BINS];
    let mut n_frames = 0usize;
    for pair in train {
        let spec = stft_mag(&pair.clean).expect("corpus audio is nonempty");
        for row in spec.mag().rows() {
            for (k, &m) in row.iter().enumerate() {
                let v = m.ln_1p();
                sum[k] += v;
                sum_sq[k] += v * v;
            }
        }
        n_frames += spec.n_frames();
    }
    let n = (n_frames.max(1)) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0)).sqrt().max(STD_EPSILON))
        .collect();
    NormStats {
        mean,
        std,
        epsilon: STD_EPSILON,
    }
}

pub fn normalize(s: &Spectrogram, stats: &NormStats) -> Result<NormalizedFeatures> {
    if stats.mean.len() != s.mag().ncols() || stats.std.len() != s.mag().ncols() {
        return Err(Error::Shape(format!(
            "norm stats cover {} bins, spectrogram has {}",
            stats.mean.len(),
            s.mag().ncols()
        )));
    }
    let mut feat = s.mag().mapv(f64::ln_1p);
    for mut row in feat.rows_mut() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = (*v - stats.mean[k]) / stats.std[k];
        }
    }
    Ok(NormalizedFeatures {
        feat,
        stats_id: stats.id(),
    })
}

pub fn denormalize(f: &NormalizedFeatures, stats: &NormStats) -> Result<Spectrogram> {
    denormalize_frames(&f.feat, stats)
}

/// Denormalizes raw feature frames (e.g. model output) that carry no stats id.
pub fn denormalize_frames(feat: &Array2<f64>, stats: &NormStats) -> Result<Spectrogram> {
    if stats.mean.len() != feat.ncols() {
        return Err(Error::Shape(format!(
            "norm stats cover {} bins, features have {}",
            stats.mean.len(),
            feat.ncols()
        )));
    }
    let mut mag = feat.clone();
    for mut row in mag.rows_mut() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = (*v * stats.std[k] + stats.mean[k]).exp_m1().max(0.0);
        }
    }
    Spectrogram::new(mag, 16_000)
}
