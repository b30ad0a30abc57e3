//! Parametric noise generators standing in for recorded noise corpora.
//!
//! Four kinds mirror the vehicular / engine / street / babble categories:
//! low-pass filtered noise, an amplitude-modulated harmonic stack, broadband
//! noise with transients, and summed speech-like formant voices. All are
//! pure functions of `(kind, seed, length)`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal_io::{Waveform, AUDIO_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Vehicular,
    Engine,
    Street,
    Babble,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::Vehicular,
        NoiseKind::Engine,
        NoiseKind::Street,
        NoiseKind::Babble,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Vehicular => "vehicular",
            NoiseKind::Engine => "engine",
            NoiseKind::Street => "street",
            NoiseKind::Babble => "babble",
        }
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vehicular" => Ok(NoiseKind::Vehicular),
            "engine" => Ok(NoiseKind::Engine),
            "street" => Ok(NoiseKind::Street),
            "babble" => Ok(NoiseKind::Babble),
            other => Err(Error::Value(format!("unknown noise kind `{other}`"))),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; uniform draws come straight off the seeded stream
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn one_pole_lowpass(x: &mut [f64], cutoff_hz: f64) {
    let a = (-std::f64::consts::TAU * cutoff_hz / AUDIO_RATE_HZ as f64).exp();
    let mut y = 0.0;
    for v in x.iter_mut() {
        y = a * y + (1.0 - a) * *v;
        *v = y;
    }
}

fn normalize_rms(x: &mut [f64], target: f64) {
    let p = x.iter().map(|s| s * s).sum::<f64>() / x.len().max(1) as f64;
    if p > 0.0 {
        let g = target / p.sqrt();
        for s in x.iter_mut() {
            *s *= g;
        }
    }
}

fn vehicular(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..len).map(|_| gaussian(rng)).collect();
    one_pole_lowpass(&mut x, 180.0);
    one_pole_lowpass(&mut x, 180.0);
    // slow rumble modulation
    let rate = rng.random_range(0.3..0.8);
    for (n, s) in x.iter_mut().enumerate() {
        let t = n as f64 / AUDIO_RATE_HZ as f64;
        *s *= 1.0 + 0.3 * (std::f64::consts::TAU * rate * t).sin();
    }
    x
}

fn engine(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let f0 = rng.random_range(60.0..95.0);
    let am_rate = rng.random_range(2.0..5.0);
    let phases: Vec<f64> = (0..24).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let mut x: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 / AUDIO_RATE_HZ as f64;
            let mut s = 0.0;
            for (h, &ph) in phases.iter().enumerate() {
                let h1 = (h + 1) as f64;
                s += (std::f64::consts::TAU * h1 * f0 * t + ph).sin() / h1;
            }
            s * (1.0 + 0.4 * (std::f64::consts::TAU * am_rate * t).sin())
        })
        .collect();
    // mechanical hiss underneath
    let mut hiss: Vec<f64> = (0..len).map(|_| 0.1 * gaussian(rng)).collect();
    one_pole_lowpass(&mut hiss, 900.0);
    for (s, h) in x.iter_mut().zip(&hiss) {
        *s += h;
    }
    x
}

fn street(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut x: Vec<f64> = (0..len).map(|_| gaussian(rng)).collect();
    one_pole_lowpass(&mut x, 2500.0);
    // transient events: short decaying bursts
    let n_events = (len as f64 / AUDIO_RATE_HZ as f64 * 3.0).ceil() as usize;
    for _ in 0..n_events {
        let at = rng.random_range(0..len.max(2));
        let amp = rng.random_range(2.0..5.0);
        let decay = rng.random_range(0.002..0.01) * AUDIO_RATE_HZ as f64;
        for n in at..(at + (4.0 * decay) as usize).min(len) {
            x[n] += amp * gaussian(rng) * (-((n - at) as f64) / decay).exp();
        }
    }
    x
}

fn babble(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut x = vec![0.0f64; len];
    for _voice in 0..6 {
        let f0 = rng.random_range(90.0..250.0);
        let phases: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        // syllabic segments with shifting formant shapes
        let mut pos = 0usize;
        while pos < len {
            let seg = (rng.random_range(0.08..0.30) * AUDIO_RATE_HZ as f64) as usize;
            let end = (pos + seg).min(len);
            let formants: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.random_range(250.0..2500.0), rng.random_range(80.0..200.0)))
                .collect();
            let amps: Vec<f64> = (1..=phases.len())
                .map(|h| {
                    let f = h as f64 * f0;
                    let mut a = 0.05;
                    for &(c, bw) in &formants {
                        let d = (f - c) / bw;
                        a += (-0.5 * d * d).exp();
                    }
                    a / (1.0 + f / 1000.0)
                })
                .collect();
            let level = rng.random_range(0.4..1.0);
            for n in pos..end {
                let t = n as f64 / AUDIO_RATE_HZ as f64;
                let mut s = 0.0;
                for (h, (&a, &ph)) in amps.iter().zip(&phases).enumerate() {
                    s += a * (std::f64::consts::TAU * (h + 1) as f64 * f0 * t + ph).sin();
                }
                x[n] += level * s;
            }
            pos = end;
        }
    }
    x
}

pub fn noise_generator(kind: NoiseKind, seed: u64, length: usize) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9e3779b97f4a7c15));
    let mut samples = match kind {
        NoiseKind::Vehicular => vehicular(&mut rng, length),
        NoiseKind::Engine => engine(&mut rng, length),
        NoiseKind::Street => street(&mut rng, length),
        NoiseKind::Babble => babble(&mut rng, length),
    };
    normalize_rms(&mut samples, 0.1);
    Waveform::new(samples, AUDIO_RATE_HZ)
}
