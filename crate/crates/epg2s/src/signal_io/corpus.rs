//! Manifest-driven corpus construction: pairing, deterministic shuffled
//! splitting, and train-only normalization statistics.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{compute_norm_stats, NormStats};
use crate::error::{Error, Result};
use crate::signal_io::{load_epg_file, load_wav, UtteranceMeta, UtterancePair, PAIR_TOLERANCE_S};

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub id: String,
    pub epg_path: PathBuf,
    pub wav_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Parses `id,epg_path,wav_path` lines. Relative paths are resolved
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Manifest(format!(
                    "line {}: expected `id,epg_path,wav_path`, got `{line}`",
                    lineno + 1
                )));
            }
            let id = parts[0].trim().to_string();
            if !seen.insert(id.clone()) {
                return Err(Error::Manifest(format!("duplicate utterance id `{id}`")));
            }
            entries.push(ManifestEntry {
                id,
                epg_path: base.join(parts[1].trim()),
                wav_path: base.join(parts[2].trim()),
            });
        }
        Ok(Self { entries })
    }
}

/// A paired and split corpus with train-split normalization statistics.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub train: Vec<UtterancePair>,
    pub validation: Vec<UtterancePair>,
    pub test: Vec<UtterancePair>,
    pub norm_stats: NormStats,
}

impl Corpus {
    pub fn from_pairs(mut pairs: Vec<UtterancePair>, split_ratios: (f64, f64, f64), seed: u64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Manifest("corpus is empty".into()));
        }
        // Fisher-Yates with a seeded stream; order is a pure function of seed.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..pairs.len()).rev() {
            let j = rng.random_range(0..=i);
            pairs.swap(i, j);
        }
        let (n_train, n_val, _n_test) = split_counts(pairs.len(), split_ratios);
        let test = pairs.split_off(n_train + n_val);
        let validation = pairs.split_off(n_train);
        let train = pairs;
        if train.is_empty() {
            return Err(Error::Manifest("train split is empty".into()));
        }
        let norm_stats = compute_norm_stats(&train);
        Ok(Self { train, validation, test, norm_stats })
    }

    pub fn all_ids(&self) -> Vec<&str> {
        self.train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .map(|p| p.id.as_str())
            .collect()
    }
}

/// Split sizes: validation and test take the floor of their ratios, the
/// remainder goes to train.
pub fn split_counts(n: usize, ratios: (f64, f64, f64)) -> (usize, usize, usize) {
    let (_, rv, rt) = ratios;
    let n_val = (n as f64 * rv).floor() as usize;
    let n_test = (n as f64 * rt).floor() as usize;
    let n_train = n - n_val - n_test;
    (n_train, n_val, n_test)
}

/// Default split ratios matching a 222:27:70 proportion.
pub const DEFAULT_SPLIT_RATIOS: (f64, f64, f64) = (222.0 / 319.0, 27.0 / 319.0, 70.0 / 319.0);

pub fn build_corpus(
    manifest_path: impl AsRef<Path>,
    split_ratios: (f64, f64, f64),
    seed: u64,
) -> Result<Corpus> {
    let manifest = Manifest::load(manifest_path)?;
    let mut pairs = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let epg = load_epg_file(&entry.epg_path)
            .map_err(|e| Error::Manifest(format!("utterance `{}`: {e}", entry.id)))?;
        let clean = load_wav(&entry.wav_path)
            .map_err(|e| Error::Manifest(format!("utterance `{}`: {e}", entry.id)))?;
        pairs.push(UtterancePair::new(
            entry.id.clone(),
            epg,
            clean,
            UtteranceMeta::default(),
            PAIR_TOLERANCE_S,
        )?);
    }
    Corpus::from_pairs(pairs, split_ratios, seed)
}
