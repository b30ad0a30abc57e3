//! Objective evaluation metrics: intelligibility (STOI/ESTOI), spectral
//! distortion (MCD), segmental SNR, an external PESQ adapter, and Welch's
//! t-test for comparing per-utterance score samples.

mod mcd;
mod pesq;
mod ssnr;
mod stoi;
mod welch;

pub use mcd::{mcd, MCD_CEPSTRA, MCD_FILTERS};
pub use pesq::{pesq, PesqOutcome};
pub use ssnr::{ssnr, SSNR_CEIL_DB, SSNR_FLOOR_DB};
pub use stoi::{estoi, stoi, STOI_BANDS, STOI_SEGMENT_FRAMES};
pub use welch::{welch_ttest, WelchResult};
