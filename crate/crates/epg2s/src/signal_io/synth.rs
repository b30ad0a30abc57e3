//! Seeded synthetic corpus generator.
//!
//! Each of `n_states` articulation states owns a fixed 124-bit palatogram
//! template and a fixed spectral envelope. An utterance is a random state
//! sequence; audio is a harmonic source shaped by the active state's envelope
//! with 20 ms crossfades, and EPG is the active template with independent bit
//! flips. The EPG-to-spectrum mapping is deterministic up to flip noise, so
//! ground truth exists by construction.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal_io::corpus::{Corpus, DEFAULT_SPLIT_RATIOS};
use crate::signal_io::{
    EpgSequence, UtteranceMeta, UtterancePair, Waveform, AUDIO_RATE_HZ, NUM_ELECTRODES,
    PAIR_TOLERANCE_S,
};

const CROSSFADE_S: f64 = 0.020;
const MAX_HARMONIC_HZ: f64 = 7600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_utterances: usize,
    pub duration_range_s: (f64, f64),
    /// Number of articulation states K.
    pub n_states: usize,
    /// Per-bit probability of flipping the active template.
    pub flip_prob: f64,
    pub f0_range_hz: (f64, f64),
    pub epg_rate_hz: f64,
    pub split_ratios: (f64, f64, f64),
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_utterances: 32,
            duration_range_s: (1.0, 2.0),
            n_states: 4,
            flip_prob: 0.01,
            f0_range_hz: (110.0, 150.0),
            epg_rate_hz: 100.0,
            split_ratios: DEFAULT_SPLIT_RATIOS,
        }
    }
}

struct State {
    template: Vec<u8>,
    /// (center_hz, bandwidth_hz, amplitude) formant peaks.
    formants: Vec<(f64, f64, f64)>,
}

impl State {
    fn envelope(&self, f_hz: f64) -> f64 {
        let mut a = 0.08;
        for &(c, bw, amp) in &self.formants {
            let d = (f_hz - c) / bw;
            a += amp * (-0.5 * d * d).exp();
        }
        a
    }
}

fn draw_states(rng: &mut ChaCha8Rng, k: usize) -> Vec<State> {
    (0..k)
        .map(|_| {
            let template: Vec<u8> = (0..NUM_ELECTRODES)
                .map(|_| u8::from(rng.random::<f64>() < 0.35))
                .collect();
            let formants: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| {
                    (
                        rng.random_range(300.0..3200.0),
                        rng.random_range(100.0..250.0),
                        rng.random_range(0.5..1.0),
                    )
                })
                .collect();
            State { template, formants }
        })
        .collect()
}

/// The K state templates this spec generates, one row per state.
pub fn synth_templates(spec: &SyntheticSpec) -> Array2<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let states = draw_states(&mut rng, spec.n_states);
    let mut out = Array2::zeros((spec.n_states, NUM_ELECTRODES));
    for (k, s) in states.iter().enumerate() {
        for (j, &b) in s.template.iter().enumerate() {
            out[(k, j)] = b;
        }
    }
    out
}

pub fn synth_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    if spec.n_states < 2 {
        return Err(Error::Value(format!(
            "need at least 2 articulation states, got {}",
            spec.n_states
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let states = draw_states(&mut rng, spec.n_states);
    let fs = AUDIO_RATE_HZ as f64;
    let fade = (CROSSFADE_S * fs).round() as i64; // samples

    let mut pairs = Vec::with_capacity(spec.n_utterances);
    for u in 0..spec.n_utterances {
        let duration = rng.random_range(spec.duration_range_s.0..=spec.duration_range_s.1);
        let f0 = rng.random_range(spec.f0_range_hz.0..=spec.f0_range_hz.1);
        let n_samples = (duration * fs).round() as usize;
        let n_epg = ((duration * spec.epg_rate_hz).round() as usize).max(1);

        // Segment the utterance into random-length state spans.
        let mut bounds = vec![0usize]; // sample positions
        let mut seg_states = Vec::new();
        let mut pos = 0usize;
        while pos < n_samples {
            let seg = (rng.random_range(0.15..0.40) * fs).round() as usize;
            pos = (pos + seg).min(n_samples);
            seg_states.push(rng.random_range(0..spec.n_states));
            bounds.push(pos);
        }

        let n_harm = ((MAX_HARMONIC_HZ / f0).floor() as usize).max(1);
        let phases: Vec<f64> = (0..n_harm)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();

        let mut audio = vec![0.0f64; n_samples];
        for (i, &k) in seg_states.iter().enumerate() {
            let (a, b) = (bounds[i] as i64, bounds[i + 1] as i64);
            let amps: Vec<f64> = (1..=n_harm)
                .map(|h| states[k].envelope(h as f64 * f0))
                .collect();
            let lo = (a - fade / 2).max(0);
            let hi = (b + fade / 2).min(n_samples as i64);
            for n in lo..hi {
                // crossfade weight around both boundaries
                let w_in = if i == 0 {
                    1.0
                } else {
                    (((n - a) as f64 / fade as f64) + 0.5).clamp(0.0, 1.0)
                };
                let w_out = if i == seg_states.len() - 1 {
                    1.0
                } else {
                    (((b - n) as f64 / fade as f64) + 0.5).clamp(0.0, 1.0)
                };
                let w = w_in.min(w_out);
                if w <= 0.0 {
                    continue;
                }
                let t = n as f64 / fs;
                let mut s = 0.0;
                for (h, (&amp, &ph)) in amps.iter().zip(&phases).enumerate() {
                    s += amp * (std::f64::consts::TAU * (h + 1) as f64 * f0 * t + ph).sin();
                }
                audio[n as usize] += w * s;
            }
        }
        let peak = audio.iter().fold(0.0f64, |m, &s| m.max(s.abs())).max(1e-12);
        let gain = 0.6 / peak;
        for s in &mut audio {
            *s *= gain;
        }

        // EPG frames follow the nominal (un-faded) segment boundaries.
        let mut epg = Array2::<u8>::zeros((n_epg, NUM_ELECTRODES));
        let mut state_tags = String::with_capacity(n_epg);
        for j in 0..n_epg {
            let t_mid = (j as f64 + 0.5) / spec.epg_rate_hz;
            let sample = (t_mid * fs) as usize;
            let seg = match bounds[1..].iter().position(|&b| sample < b) {
                Some(i) => i,
                None => seg_states.len() - 1,
            };
            let k = seg_states[seg];
            state_tags.push_str(&k.to_string());
            state_tags.push(' ');
            for (e, &bit) in states[k].template.iter().enumerate() {
                let flip = rng.random::<f64>() < spec.flip_prob;
                epg[(j, e)] = bit ^ u8::from(flip);
            }
        }

        let pair = UtterancePair::new(
            format!("synth{u:04}"),
            EpgSequence::new(epg, spec.epg_rate_hz)?,
            Waveform::new(audio, AUDIO_RATE_HZ),
            UtteranceMeta {
                speaker: "synthetic".into(),
                sentence: state_tags.trim_end().into(),
            },
            PAIR_TOLERANCE_S,
        )?;
        pairs.push(pair);
    }

    Corpus::from_pairs(pairs, spec.split_ratios, spec.seed.wrapping_add(0x5eed))
}
