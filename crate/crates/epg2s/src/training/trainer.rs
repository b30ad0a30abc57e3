//! Utterance-level training loop with early stopping and exact resume.
//!
//! Each step draws one utterance, one modality combination, and (when audio
//! is involved) one SNR level and noise type, then applies a single Adam
//! update. Validation after every epoch is fully deterministic, and the
//! complete trainer state (parameters, optimizer moments, RNG position)
//! round-trips through a state file so a resumed run is bit-identical to an
//! uninterrupted one.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsp::{
    compute_norm_stats, mix_at_snr, noise_generator, normalize, stft_mag, NoiseKind, NormStats,
    HOP,
};
use crate::error::{Error, Result};
use crate::model::{
    backward, checkpoint_bytes, checkpoint_from_bytes, forward, Dtype, ModalityBundle, Params,
    Variant,
};
use crate::signal_io::{align_epg_to_frames, UtterancePair, Waveform, AUDIO_RATE_HZ};
use crate::training::adam::{Adam, AdamConfig};
use crate::training::loss::{compute_loss, LossBreakdown, DEFAULT_LAMBDA};
use crate::training::sampler::{Combo, ComboSampler, DEFAULT_COMBO_PROBS};

pub const DEFAULT_SNR_GRID: [f64; 5] = [-10.0, -5.0, 0.0, 5.0, 10.0];
pub const DEFAULT_PATIENCE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: AdamConfig,
    pub lambda: f64,
    pub max_epochs: usize,
    /// Steps per epoch; `None` means one step per training utterance.
    pub steps_per_epoch: Option<usize>,
    pub patience: usize,
    pub seed: u64,
    pub snr_grid: Vec<f64>,
    /// Probabilities for (EPG only, speech only, both).
    pub combo_probs: [f64; 3],
    pub noise_kinds: Vec<NoiseKind>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: AdamConfig::default(),
            lambda: DEFAULT_LAMBDA,
            max_epochs: 50,
            steps_per_epoch: None,
            patience: DEFAULT_PATIENCE,
            seed: 0,
            snr_grid: DEFAULT_SNR_GRID.to_vec(),
            combo_probs: DEFAULT_COMBO_PROBS,
            noise_kinds: NoiseKind::ALL.to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn to_kv(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        s.push_str(&format!("train.lr={}\n", self.optimizer.lr));
        s.push_str(&format!("train.beta1={}\n", self.optimizer.beta1));
        s.push_str(&format!("train.beta2={}\n", self.optimizer.beta2));
        s.push_str(&format!("train.eps={}\n", self.optimizer.eps));
        s.push_str(&format!("train.lambda={}\n", self.lambda));
        s.push_str(&format!("train.max_epochs={}\n", self.max_epochs));
        s.push_str(&format!(
            "train.steps_per_epoch={}\n",
            self.steps_per_epoch.unwrap_or(0)
        ));
        s.push_str(&format!("train.patience={}\n", self.patience));
        s.push_str(&format!("train.seed={}\n", self.seed));
        s.push_str(&format!("train.snr_grid={}\n", join(&self.snr_grid)));
        s.push_str(&format!("train.combo_probs={}\n", join(&self.combo_probs)));
        s.push_str(&format!(
            "train.noise_kinds={}\n",
            self.noise_kinds
                .iter()
                .map(|k| k.name())
                .collect::<Vec<_>>()
                .join(",")
        ));
        s
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let parse_f64 = |v: &str, key: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad float `{v}` for {key}")))
        };
        let parse_usize = |v: &str, key: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad integer `{v}` for {key}")))
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad config line `{line}`")))?;
            match key.trim() {
                "train.lr" => cfg.optimizer.lr = parse_f64(value, key)?,
                "train.beta1" => cfg.optimizer.beta1 = parse_f64(value, key)?,
                "train.beta2" => cfg.optimizer.beta2 = parse_f64(value, key)?,
                "train.eps" => cfg.optimizer.eps = parse_f64(value, key)?,
                "train.lambda" => cfg.lambda = parse_f64(value, key)?,
                "train.max_epochs" => cfg.max_epochs = parse_usize(value, key)?,
                "train.steps_per_epoch" => {
                    let n = parse_usize(value, key)?;
                    cfg.steps_per_epoch = (n > 0).then_some(n);
                }
                "train.patience" => cfg.patience = parse_usize(value, key)?,
                "train.seed" => {
                    cfg.seed = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad seed `{value}`")))?
                }
                "train.snr_grid" => {
                    cfg.snr_grid = value
                        .split(',')
                        .map(|p| parse_f64(p, key))
                        .collect::<Result<_>>()?
                }
                "train.combo_probs" => {
                    let v: Vec<f64> = value
                        .split(',')
                        .map(|p| parse_f64(p, key))
                        .collect::<Result<_>>()?;
                    if v.len() != 3 {
                        return Err(Error::Config("combo_probs needs 3 entries".into()));
                    }
                    cfg.combo_probs = [v[0], v[1], v[2]];
                }
                "train.noise_kinds" => {
                    cfg.noise_kinds = value
                        .split(',')
                        .map(|p| p.trim().parse())
                        .collect::<Result<_>>()?
                }
                other if other.starts_with("train.") => {
                    return Err(Error::Config(format!("unknown key `{other}`")))
                }
                _ => {}
            }
        }
        Ok(cfg)
    }
}

/// One utterance with everything the step loop needs precomputed: aligned
/// EPG rows and normalized clean spectral features.
#[derive(Debug, Clone)]
pub struct PreparedUtterance {
    pub id: String,
    pub epg: Array2<f64>,
    pub clean_wave: Waveform,
    pub clean_feat: Array2<f64>,
}

/// Spectral frame rate implied by the analysis hop.
pub fn frame_rate_hz() -> f64 {
    AUDIO_RATE_HZ as f64 / HOP as f64
}

pub fn prepare_utterances(
    pairs: &[UtterancePair],
    stats: &NormStats,
) -> Result<Vec<PreparedUtterance>> {
    pairs
        .iter()
        .map(|p| {
            let spec = stft_mag(&p.clean)?;
            let feat = normalize(&spec, stats)?.feat;
            let epg = align_epg_to_frames(&p.epg, feat.nrows(), frame_rate_hz())?;
            Ok(PreparedUtterance {
                id: p.id.clone(),
                epg: epg.mapv(f64::from),
                clean_wave: p.clean.clone(),
                clean_feat: feat,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub val_l_spec: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    pub best_val: f64,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

pub struct Trainer {
    pub cfg: TrainConfig,
    pub params: Params,
    stats: NormStats,
    adam: Adam,
    rng: ChaCha8Rng,
    sampler: ComboSampler,
    epoch: usize,
    global_step: usize,
    best_val: f64,
    best_epoch: usize,
    best_params: Vec<u8>,
    epochs_since_best: usize,
    history: Vec<EpochStats>,
}

impl Trainer {
    pub fn new(params: Params, cfg: TrainConfig, stats: NormStats) -> Result<Self> {
        if cfg.snr_grid.is_empty() || cfg.noise_kinds.is_empty() {
            return Err(Error::Config("SNR grid and noise kinds must be nonempty".into()));
        }
        let sampler = ComboSampler::new(cfg.combo_probs)?;
        let n = params.num_params();
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let adam = Adam::new(n, cfg.optimizer);
        Ok(Self {
            cfg,
            params,
            stats,
            adam,
            rng,
            sampler,
            epoch: 0,
            global_step: 0,
            best_val: f64::INFINITY,
            best_epoch: 0,
            best_params: Vec::new(),
            epochs_since_best: 0,
            history: Vec::new(),
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn history(&self) -> &[EpochStats] {
        &self.history
    }

    /// Parameters at the best validation loss seen so far (current parameters
    /// if no epoch has finished yet).
    pub fn best_params(&self) -> Result<Params> {
        if self.best_params.is_empty() {
            return Ok(self.params.clone());
        }
        checkpoint_from_bytes(&self.best_params, Path::new("<in-memory best>"))
    }

    fn noisy_features(
        &self,
        clean: &Waveform,
        snr_db: f64,
        kind: NoiseKind,
        noise_seed: u64,
    ) -> Result<Array2<f64>> {
        let noise = noise_generator(kind, noise_seed, clean.len());
        let (mixed, _) = mix_at_snr(clean, &noise, snr_db)?;
        let spec = stft_mag(&mixed)?;
        Ok(normalize(&spec, &self.stats)?.feat)
    }

    fn step(&mut self, utt: &PreparedUtterance, combo: Combo) -> Result<LossBreakdown> {
        let epg = combo.has_epg().then(|| utt.epg.clone());
        let audio = if combo.has_audio() {
            let snr = self.cfg.snr_grid[self.rng.random_range(0..self.cfg.snr_grid.len())];
            let kind = self.cfg.noise_kinds[self.rng.random_range(0..self.cfg.noise_kinds.len())];
            let noise_seed: u64 = self.rng.random();
            Some(self.noisy_features(&utt.clean_wave, snr, kind, noise_seed)?)
        } else {
            None
        };
        let bundle = ModalityBundle::new(epg, audio)?;
        let (out, cache) = forward(&self.params, &bundle)?;
        let (breakdown, loss_grads) = compute_loss(
            &out.pred,
            &utt.clean_feat,
            out.s_a.as_ref(),
            out.s_e.as_ref(),
            self.cfg.lambda,
        )?;
        if !breakdown.total.is_finite() {
            return Err(Error::Divergence {
                step: self.global_step,
            });
        }
        let mut grads = self.params.zeros_like();
        backward(
            &self.params,
            &cache,
            &loss_grads.g_pred,
            loss_grads.g_s_a.as_ref(),
            loss_grads.g_s_e.as_ref(),
            &mut grads,
        );
        let g = grads.flatten();
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: self.global_step,
            });
        }
        let mut theta = self.params.flatten();
        self.adam.step(&mut theta, &g);
        self.params.unflatten(&theta);
        self.global_step += 1;
        Ok(breakdown)
    }

    /// Which modalities validation presents, mirroring the training mix.
    fn validation_combo(&self) -> Combo {
        if self.params.cfg.variant == Variant::PureEpg {
            return Combo::PureEpg;
        }
        let [p_epg, p_speech, p_both] = self.cfg.combo_probs;
        if p_speech == 0.0 && p_both == 0.0 {
            Combo::PureEpg
        } else if p_epg == 0.0 && p_both == 0.0 {
            Combo::PureSpeech
        } else {
            Combo::Both
        }
    }

    /// Deterministic mean spectral loss over the validation split. Noise
    /// seeds, SNR levels, and noise kinds depend only on the utterance index
    /// and the training seed, never on the step RNG.
    pub fn validate(&self, val: &[PreparedUtterance]) -> Result<f64> {
        if val.is_empty() {
            return Err(Error::Input("validation split is empty".into()));
        }
        let combo = self.validation_combo();
        let mut total = 0.0;
        for (i, utt) in val.iter().enumerate() {
            let epg = combo.has_epg().then(|| utt.epg.clone());
            let audio = if combo.has_audio() {
                let snr = self.cfg.snr_grid[i % self.cfg.snr_grid.len()];
                let kind = self.cfg.noise_kinds[i % self.cfg.noise_kinds.len()];
                let seed = self
                    .cfg
                    .seed
                    .wrapping_add(0xa511)
                    .wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                Some(self.noisy_features(&utt.clean_wave, snr, kind, seed)?)
            } else {
                None
            };
            let bundle = ModalityBundle::new(epg, audio)?;
            let (out, _) = forward(&self.params, &bundle)?;
            let (breakdown, _) = compute_loss(&out.pred, &utt.clean_feat, None, None, 0.0)?;
            total += breakdown.l_spec;
        }
        Ok(total / val.len() as f64)
    }

    /// One epoch of stochastic steps followed by validation and best-model
    /// bookkeeping.
    pub fn run_epoch(
        &mut self,
        train: &[PreparedUtterance],
        val: &[PreparedUtterance],
    ) -> Result<EpochStats> {
        if train.is_empty() {
            return Err(Error::Input("training split is empty".into()));
        }
        let steps = self.cfg.steps_per_epoch.unwrap_or(train.len());
        let mut sum = 0.0;
        for _ in 0..steps {
            let idx = self.rng.random_range(0..train.len());
            let mut combo = self.sampler.draw(&mut self.rng);
            if self.params.cfg.variant == Variant::PureEpg {
                combo = Combo::PureEpg;
            }
            let breakdown = self.step(&train[idx], combo)?;
            sum += breakdown.total;
        }
        self.epoch += 1;
        let val_l_spec = self.validate(val)?;
        let stats = EpochStats {
            epoch: self.epoch,
            mean_train_loss: sum / steps as f64,
            val_l_spec,
        };
        self.history.push(stats);
        if val_l_spec < self.best_val {
            self.best_val = val_l_spec;
            self.best_epoch = self.epoch;
            self.best_params = checkpoint_bytes(&self.params, Dtype::F64);
            self.epochs_since_best = 0;
        } else {
            self.epochs_since_best += 1;
        }
        Ok(stats)
    }

    /// Runs until `max_epochs` or until validation has not improved for
    /// `patience` consecutive epochs.
    pub fn train(
        &mut self,
        train: &[PreparedUtterance],
        val: &[PreparedUtterance],
    ) -> Result<TrainReport> {
        let mut stopped_early = false;
        while self.epoch < self.cfg.max_epochs {
            self.run_epoch(train, val)?;
            if self.epochs_since_best >= self.cfg.patience {
                stopped_early = true;
                break;
            }
        }
        Ok(TrainReport {
            history: self.history.clone(),
            best_val: self.best_val,
            best_epoch: self.best_epoch,
            stopped_early,
        })
    }

    // -- state persistence ---------------------------------------------------

    pub fn save_state(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        out.extend_from_slice(b"EPG2STR\0");
        out.extend_from_slice(&1u32.to_le_bytes());
        let block = |bytes: &[u8], out: &mut Vec<u8>| {
            out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(bytes);
        };
        block(self.cfg.to_kv().as_bytes(), &mut out);
        block(&checkpoint_bytes(&self.params, Dtype::F64), &mut out);
        block(&self.best_params, &mut out);
        block(&self.adam.to_bytes(), &mut out);
        out.extend_from_slice(&self.rng.get_seed());
        out.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        for v in [
            self.epoch as u64,
            self.global_step as u64,
            self.best_epoch as u64,
            self.epochs_since_best as u64,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.best_val.to_le_bytes());
        out.extend_from_slice(&(self.history.len() as u32).to_le_bytes());
        for h in &self.history {
            out.extend_from_slice(&(h.epoch as u64).to_le_bytes());
            out.extend_from_slice(&h.mean_train_loss.to_le_bytes());
            out.extend_from_slice(&h.val_l_spec.to_le_bytes());
        }
        out.extend_from_slice(&(self.stats.mean.len() as u32).to_le_bytes());
        for &v in self.stats.mean.iter().chain(self.stats.std.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.stats.epsilon.to_le_bytes());
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load_state(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(Error::format(path, "trainer state is truncated"));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        if take(&mut pos, 8)? != b"EPG2STR\0" {
            return Err(Error::format(path, "not a trainer state file"));
        }
        let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
        if version != 1 {
            return Err(Error::format(path, format!("unsupported version {version}")));
        }
        let read_block = |pos: &mut usize| -> Result<Vec<u8>> {
            let len = u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()) as usize;
            Ok(take(pos, len)?.to_vec())
        };
        let cfg_text = read_block(&mut pos)?;
        let cfg = TrainConfig::from_kv(
            std::str::from_utf8(&cfg_text)
                .map_err(|_| Error::format(path, "config block is not UTF-8"))?,
        )?;
        let params = checkpoint_from_bytes(&read_block(&mut pos)?, path)?;
        let best_params = read_block(&mut pos)?;
        let adam = Adam::from_bytes(&read_block(&mut pos)?)?;
        let seed: [u8; 32] = take(&mut pos, 32)?.try_into().unwrap();
        let word_pos = u128::from_le_bytes(take(&mut pos, 16)?.try_into().unwrap());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_word_pos(word_pos);
        let u64_at = |pos: &mut usize| -> Result<u64> {
            Ok(u64::from_le_bytes(take(pos, 8)?.try_into().unwrap()))
        };
        let epoch = u64_at(&mut pos)? as usize;
        let global_step = u64_at(&mut pos)? as usize;
        let best_epoch = u64_at(&mut pos)? as usize;
        let epochs_since_best = u64_at(&mut pos)? as usize;
        let best_val = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let n_hist = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let mut history = Vec::with_capacity(n_hist);
        for _ in 0..n_hist {
            let e = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
            let tr = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            let va = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            history.push(EpochStats {
                epoch: e,
                mean_train_loss: tr,
                val_l_spec: va,
            });
        }
        let n_bins = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let mut mean = Vec::with_capacity(n_bins);
        let mut std = Vec::with_capacity(n_bins);
        for _ in 0..n_bins {
            mean.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        for _ in 0..n_bins {
            std.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        let epsilon = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        if pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes in trainer state"));
        }
        let sampler = ComboSampler::new(cfg.combo_probs)?;
        Ok(Self {
            cfg,
            params,
            stats: NormStats { mean, std, epsilon },
            adam,
            rng,
            sampler,
            epoch,
            global_step,
            best_val,
            best_epoch,
            best_params,
            epochs_since_best,
            history,
        })
    }
}

/// Convenience: stats + prepared splits for a train/validation pair.
pub fn prepare_splits(
    train_pairs: &[UtterancePair],
    val_pairs: &[UtterancePair],
) -> Result<(NormStats, Vec<PreparedUtterance>, Vec<PreparedUtterance>)> {
    let stats = compute_norm_stats(train_pairs);
    let train = prepare_utterances(train_pairs, &stats)?;
    let val = prepare_utterances(val_pairs, &stats)?;
    Ok((stats, train, val))
}
