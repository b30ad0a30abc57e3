//! EPG2S: speech generation and enhancement from electropalatography (EPG)
//! and noisy audio, using early- and late-fusion encoder-decoder networks.
//!
//! The crate is organized around the pipeline:
//!
//! * [`signal_io`] — EPG/WAV ingestion, corpus pairing and splitting, and a
//!   seeded synthetic corpus generator for desk-scale experiments.
//! * [`dsp`] — STFT analysis, feature normalization, SNR-controlled noise
//!   mixing, parametric noise generators, and fast Griffin-Lim reconstruction.
//! * [`model`] — the EPG encoder (BiLSTM), spectrogram encoder (Conv2D
//!   blocks), decoder (LSTM + FC), and the early/late fusion forward graphs,
//!   with hand-derived backward passes.
//! * [`training`] — the spectrogram + latent-alignment loss, modality
//!   combination sampling, Adam, checkpointing, and gradient verification.
//! * [`metrics`] — STOI, ESTOI, MCD, segmental SNR, Welch's t-test, and an
//!   adapter for external PESQ tooling.
//! * [`harness`] — experiment orchestration and report emission.

pub mod dsp;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod signal_io;
pub mod training;

pub use error::{Error, Result};
