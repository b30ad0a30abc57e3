//! The three speech-generation variants and their shared building blocks:
//! a recurrent EPG encoder, a convolutional audio encoder, and a recurrent
//! spectral decoder, with hand-derived backward passes throughout.

pub mod checkpoint;
pub mod config;
pub mod forward;
pub mod layers;
pub mod params;

pub use checkpoint::{
    checkpoint_bytes, checkpoint_from_bytes, load_checkpoint, save_checkpoint, Dtype,
};
pub use config::{MissingLatentPolicy, ModelConfig, Variant};
pub use forward::{
    backward, ef_forward, forward, lf_forward, ForwardOutput, ModalityBundle, ModelCache,
};
pub use params::{init_params, zero_params, Params, ParamsKind};
