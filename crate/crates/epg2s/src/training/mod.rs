//! Training: the spectral + latent-alignment objective, combination
//! sampling, Adam, gradient verification, and the utterance-level loop.

pub mod adam;
pub mod grad_check;
pub mod loss;
pub mod sampler;
pub mod trainer;

pub use adam::{Adam, AdamConfig};
pub use grad_check::{gradient_check, GradCheckReport};
pub use loss::{
    compute_loss, latent_loss, spectral_loss, LossBreakdown, LossGrads, DEFAULT_LAMBDA,
    SMOOTH_L1_BETA,
};
pub use sampler::{Combo, ComboSampler, DEFAULT_COMBO_PROBS};
pub use trainer::{
    frame_rate_hz, prepare_splits, prepare_utterances, EpochStats, PreparedUtterance, TrainConfig,
    TrainReport, Trainer, DEFAULT_PATIENCE, DEFAULT_SNR_GRID,
};
