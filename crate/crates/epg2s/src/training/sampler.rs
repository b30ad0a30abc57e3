//! Per-step sampling of the modality combination shown to the model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combo {
    PureEpg,
    PureSpeech,
    Both,
}

impl Combo {
    pub fn has_epg(&self) -> bool {
        matches!(self, Combo::PureEpg | Combo::Both)
    }

    pub fn has_audio(&self) -> bool {
        matches!(self, Combo::PureSpeech | Combo::Both)
    }
}

/// Equal thirds, the published training recipe.
pub const DEFAULT_COMBO_PROBS: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

#[derive(Debug, Clone)]
pub struct ComboSampler {
    /// Probabilities for (PureEpg, PureSpeech, Both).
    probs: [f64; 3],
}

impl ComboSampler {
    pub fn new(probs: [f64; 3]) -> Result<Self> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Value("combination probabilities must be in [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Value(format!(
                "combination probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Combo {
        let u: f64 = rng.random();
        if u < self.probs[0] {
            Combo::PureEpg
        } else if u < self.probs[0] + self.probs[1] {
            Combo::PureSpeech
        } else {
            Combo::Both
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn empirical_frequencies_match_equal_thirds() {
        let sampler = ComboSampler::new(DEFAULT_COMBO_PROBS).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            match sampler.draw(&mut rng) {
                Combo::PureEpg => counts[0] += 1,
                Combo::PureSpeech => counts[1] += 1,
                Combo::Both => counts[2] += 1,
            }
        }
        // binomial(n, 1/3): sd ~ 81.6, so 5 sd ~ 408
        let expected = n as f64 / 3.0;
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() < 410.0,
                "combo {i} drawn {c} times, expected ~{expected}"
            );
        }
    }

    #[test]
    fn degenerate_distribution_always_draws_the_same_combo() {
        let sampler = ComboSampler::new([0.0, 1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sampler.draw(&mut rng), Combo::PureSpeech);
        }
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        assert!(ComboSampler::new([0.5, 0.5, 0.5]).is_err());
        assert!(ComboSampler::new([-0.1, 0.6, 0.5]).is_err());
    }
}
