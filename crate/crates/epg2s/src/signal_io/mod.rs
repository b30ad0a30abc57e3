//! Corpus ingestion: EPG spreadsheets, 16 kHz PCM audio, manifest-driven
//! pairing/splitting, and the seeded synthetic corpus generator.

mod corpus;
mod epg;
mod synth;
mod wav;

pub use corpus::{build_corpus, split_counts, Corpus, Manifest, ManifestEntry, DEFAULT_SPLIT_RATIOS};
pub use epg::{align_epg_to_frames, load_epg_file, save_epg_file};
pub use synth::{synth_corpus, synth_templates, SyntheticSpec};
pub use wav::{load_wav, save_wav};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Number of electrodes on the artificial palate.
pub const NUM_ELECTRODES: usize = 124;

/// Corpus audio sampling rate in Hz.
pub const AUDIO_RATE_HZ: u32 = 16_000;

/// Default duration-mismatch tolerance between EPG and audio, in seconds.
pub const PAIR_TOLERANCE_S: f64 = 0.050;

/// A time-indexed sequence of binary palatograms, one row per EPG frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EpgSequence {
    frames: Array2<u8>,
    rate_hz: f64,
}

impl EpgSequence {
    /// Builds a sequence, checking that every entry is 0/1 and the width is
    /// exactly [`NUM_ELECTRODES`].
    pub fn new(frames: Array2<u8>, rate_hz: f64) -> Result<Self> {
        if frames.ncols() != NUM_ELECTRODES {
            return Err(Error::Shape(format!(
                "EPG matrix must have {} columns, got {}",
                NUM_ELECTRODES,
                frames.ncols()
            )));
        }
        if frames.nrows() == 0 {
            return Err(Error::Value("EPG sequence must have at least one frame".into()));
        }
        if !(rate_hz.is_finite() && rate_hz > 0.0) {
            return Err(Error::Value(format!("EPG rate must be positive, got {rate_hz}")));
        }
        if let Some(((r, c), &v)) = frames.indexed_iter().find(|(_, &v)| v > 1) {
            return Err(Error::Value(format!(
                "non-binary EPG value {v} at row {r}, column {c}"
            )));
        }
        Ok(Self { frames, rate_hz })
    }

    pub fn frames(&self) -> &Array2<u8> {
        &self.frames
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    /// Duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.frames.nrows() as f64 / self.rate_hz
    }
}

/// Mono audio scaled to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, rate_hz: u32) -> Self {
        Self { samples, rate_hz }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn rate_hz(&self) -> u32 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz as f64
    }

    /// Mean squared amplitude.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }
}

/// Free-form tags attached to an utterance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UtteranceMeta {
    pub speaker: String,
    pub sentence: String,
}

/// A paired EPG recording and clean speech utterance.
#[derive(Debug, Clone)]
pub struct UtterancePair {
    pub id: String,
    pub epg: EpgSequence,
    pub clean: Waveform,
    pub meta: UtteranceMeta,
}

impl UtterancePair {
    /// Pairs EPG and audio, rejecting duration mismatches beyond `tolerance_s`.
    pub fn new(
        id: String,
        epg: EpgSequence,
        clean: Waveform,
        meta: UtteranceMeta,
        tolerance_s: f64,
    ) -> Result<Self> {
        let diff = (epg.duration_s() - clean.duration_s()).abs();
        if diff > tolerance_s {
            return Err(Error::Value(format!(
                "utterance {id}: EPG duration {:.3}s and audio duration {:.3}s differ by {:.0}ms (> {:.0}ms)",
                epg.duration_s(),
                clean.duration_s(),
                diff * 1000.0,
                tolerance_s * 1000.0
            )));
        }
        Ok(Self { id, epg, clean, meta })
    }
}
