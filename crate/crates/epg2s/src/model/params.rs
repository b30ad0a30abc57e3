//! Parameter containers, deterministic initialization, and tensor visitation.
//!
//! Visitation order is fixed and shared by initialization, flattening, Adam,
//! and checkpoints, so every consumer sees tensors in the same sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::config::{ModelConfig, Variant};
use crate::model::layers::{conv_out_freq, BiLstm, Conv2d, LayerNorm, Linear, Lstm};

/// Visitor over named tensors (immutable).
pub type Visit<'a> = dyn FnMut(&str, &[usize], &[f64]) + 'a;
/// Visitor over named tensors (mutable).
pub type VisitMut<'a> = dyn FnMut(&str, &mut [f64]) + 'a;

fn visit_linear(l: &Linear, prefix: &str, f: &mut Visit) {
    f(&format!("{prefix}.w"), &[l.w.nrows(), l.w.ncols()], l.w.as_slice().unwrap());
    f(&format!("{prefix}.b"), &[l.b.len()], l.b.as_slice().unwrap());
}

fn visit_linear_mut(l: &mut Linear, prefix: &str, f: &mut VisitMut) {
    f(&format!("{prefix}.w"), l.w.as_slice_mut().unwrap());
    f(&format!("{prefix}.b"), l.b.as_slice_mut().unwrap());
}

fn visit_norm(n: &LayerNorm, prefix: &str, f: &mut Visit) {
    f(&format!("{prefix}.gamma"), &[n.gamma.len()], n.gamma.as_slice().unwrap());
    f(&format!("{prefix}.beta"), &[n.beta.len()], n.beta.as_slice().unwrap());
}

fn visit_norm_mut(n: &mut LayerNorm, prefix: &str, f: &mut VisitMut) {
    f(&format!("{prefix}.gamma"), n.gamma.as_slice_mut().unwrap());
    f(&format!("{prefix}.beta"), n.beta.as_slice_mut().unwrap());
}

fn visit_lstm(l: &Lstm, prefix: &str, f: &mut Visit) {
    f(&format!("{prefix}.w_ih"), &[l.w_ih.nrows(), l.w_ih.ncols()], l.w_ih.as_slice().unwrap());
    f(&format!("{prefix}.w_hh"), &[l.w_hh.nrows(), l.w_hh.ncols()], l.w_hh.as_slice().unwrap());
    f(&format!("{prefix}.b"), &[l.b.len()], l.b.as_slice().unwrap());
}

fn visit_lstm_mut(l: &mut Lstm, prefix: &str, f: &mut VisitMut) {
    f(&format!("{prefix}.w_ih"), l.w_ih.as_slice_mut().unwrap());
    f(&format!("{prefix}.w_hh"), l.w_hh.as_slice_mut().unwrap());
    f(&format!("{prefix}.b"), l.b.as_slice_mut().unwrap());
}

fn visit_bilstm(l: &BiLstm, prefix: &str, f: &mut Visit) {
    visit_lstm(&l.fwd, &format!("{prefix}.fwd"), f);
    visit_lstm(&l.bwd, &format!("{prefix}.bwd"), f);
}

fn visit_bilstm_mut(l: &mut BiLstm, prefix: &str, f: &mut VisitMut) {
    visit_lstm_mut(&mut l.fwd, &format!("{prefix}.fwd"), f);
    visit_lstm_mut(&mut l.bwd, &format!("{prefix}.bwd"), f);
}

fn visit_conv(c: &Conv2d, prefix: &str, f: &mut Visit) {
    let d = c.w.dim();
    f(&format!("{prefix}.w"), &[d.0, d.1, d.2, d.3], c.w.as_slice().unwrap());
    f(&format!("{prefix}.b"), &[c.b.len()], c.b.as_slice().unwrap());
}

fn visit_conv_mut(c: &mut Conv2d, prefix: &str, f: &mut VisitMut) {
    f(&format!("{prefix}.w"), c.w.as_slice_mut().unwrap());
    f(&format!("{prefix}.b"), c.b.as_slice_mut().unwrap());
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderEParams {
    pub bilstm1: BiLstm,
    pub bilstm2: BiLstm,
    pub linear: Linear,
    pub norm: LayerNorm,
}

impl EncoderEParams {
    fn init(rng: &mut ChaCha8Rng, cfg: &ModelConfig) -> Self {
        let h = cfg.bilstm_hidden_scaled();
        Self {
            bilstm1: BiLstm::init(rng, h, cfg.epg_width()),
            bilstm2: BiLstm::init(rng, h, 2 * h),
            linear: Linear::init(rng, cfg.latent_width(), 2 * h),
            norm: LayerNorm::init(cfg.latent_width()),
        }
    }

    fn zeros(cfg: &ModelConfig) -> Self {
        let h = cfg.bilstm_hidden_scaled();
        Self {
            bilstm1: BiLstm::zeros(h, cfg.epg_width()),
            bilstm2: BiLstm::zeros(h, 2 * h),
            linear: Linear::zeros(cfg.latent_width(), 2 * h),
            norm: LayerNorm::zeros(cfg.latent_width()),
        }
    }

    fn visit(&self, prefix: &str, f: &mut Visit) {
        visit_bilstm(&self.bilstm1, &format!("{prefix}.bilstm1"), f);
        visit_bilstm(&self.bilstm2, &format!("{prefix}.bilstm2"), f);
        visit_linear(&self.linear, &format!("{prefix}.linear"), f);
        visit_norm(&self.norm, &format!("{prefix}.norm"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut VisitMut) {
        visit_bilstm_mut(&mut self.bilstm1, &format!("{prefix}.bilstm1"), f);
        visit_bilstm_mut(&mut self.bilstm2, &format!("{prefix}.bilstm2"), f);
        visit_linear_mut(&mut self.linear, &format!("{prefix}.linear"), f);
        visit_norm_mut(&mut self.norm, &format!("{prefix}.norm"), f);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    pub convs: Vec<Conv2d>,
    pub norms: Vec<LayerNorm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderAParams {
    pub blocks: Vec<ConvBlock>,
    /// Spectral input width the parameter shapes were built for.
    pub input_width: usize,
}

impl EncoderAParams {
    fn build(cfg: &ModelConfig, mut make_conv: impl FnMut(usize, usize, usize) -> Conv2d) -> Self {
        let filters = cfg.conv_filters_scaled();
        let input_width = cfg.encoder_a_input_width();
        let mut blocks = Vec::with_capacity(4);
        let mut in_c = 1usize;
        let mut f_width = input_width;
        for &out_c in &filters {
            let mut convs = Vec::with_capacity(3);
            let mut norms = Vec::with_capacity(3);
            for layer in 0..3 {
                let stride = if layer == 0 { 2 } else { 1 };
                convs.push(make_conv(out_c, if layer == 0 { in_c } else { out_c }, stride));
                if layer == 0 {
                    f_width = conv_out_freq(f_width, 2);
                }
                norms.push(LayerNorm::init(out_c * f_width));
            }
            blocks.push(ConvBlock { convs, norms });
            in_c = out_c;
        }
        Self { blocks, input_width }
    }

    fn init(rng: &mut ChaCha8Rng, cfg: &ModelConfig) -> Self {
        Self::build(cfg, |out_c, in_c, stride| Conv2d::init(rng, out_c, in_c, stride))
    }

    fn zeros(cfg: &ModelConfig) -> Self {
        let mut s = Self::build(cfg, Conv2d::zeros);
        for block in &mut s.blocks {
            for norm in &mut block.norms {
                norm.gamma.fill(0.0);
            }
        }
        s
    }

    fn visit(&self, prefix: &str, f: &mut Visit) {
        for (b, block) in self.blocks.iter().enumerate() {
            for i in 0..3 {
                visit_conv(&block.convs[i], &format!("{prefix}.block{b}.conv{i}"), f);
                visit_norm(&block.norms[i], &format!("{prefix}.block{b}.norm{i}"), f);
            }
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut VisitMut) {
        for (b, block) in self.blocks.iter_mut().enumerate() {
            for i in 0..3 {
                visit_conv_mut(&mut block.convs[i], &format!("{prefix}.block{b}.conv{i}"), f);
                visit_norm_mut(&mut block.norms[i], &format!("{prefix}.block{b}.norm{i}"), f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub lstm: Lstm,
    pub fc1: Linear,
    pub fc2: Linear,
}

impl DecoderParams {
    fn init(rng: &mut ChaCha8Rng, cfg: &ModelConfig) -> Self {
        Self {
            lstm: Lstm::init(rng, cfg.decoder_lstm_scaled(), cfg.decoder_input_width()),
            fc1: Linear::init(rng, cfg.decoder_fc1_scaled(), cfg.decoder_lstm_scaled()),
            fc2: Linear::init(rng, cfg.output_bins(), cfg.decoder_fc1_scaled()),
        }
    }

    fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            lstm: Lstm::zeros(cfg.decoder_lstm_scaled(), cfg.decoder_input_width()),
            fc1: Linear::zeros(cfg.decoder_fc1_scaled(), cfg.decoder_lstm_scaled()),
            fc2: Linear::zeros(cfg.output_bins(), cfg.decoder_fc1_scaled()),
        }
    }

    fn visit(&self, prefix: &str, f: &mut Visit) {
        visit_lstm(&self.lstm, &format!("{prefix}.lstm"), f);
        visit_linear(&self.fc1, &format!("{prefix}.fc1"), f);
        visit_linear(&self.fc2, &format!("{prefix}.fc2"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut VisitMut) {
        visit_lstm_mut(&mut self.lstm, &format!("{prefix}.lstm"), f);
        visit_linear_mut(&mut self.fc1, &format!("{prefix}.fc1"), f);
        visit_linear_mut(&mut self.fc2, &format!("{prefix}.fc2"), f);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamsKind {
    PureEpg {
        enc_e: EncoderEParams,
        dec: DecoderParams,
    },
    Ef {
        proj: Linear,
        enc_a: EncoderAParams,
        dec: DecoderParams,
    },
    Lf {
        enc_e: EncoderEParams,
        enc_a: EncoderAParams,
        dec: DecoderParams,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub cfg: ModelConfig,
    pub seed: u64,
    pub kind: ParamsKind,
}

/// Deterministic parameter initialization: uniform fan-in scaled weights,
/// zero biases, unit layer-norm gains.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> crate::error::Result<Params> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = match cfg.variant {
        Variant::PureEpg => ParamsKind::PureEpg {
            enc_e: EncoderEParams::init(&mut rng, cfg),
            dec: DecoderParams::init(&mut rng, cfg),
        },
        Variant::Ef => ParamsKind::Ef {
            proj: Linear::init(&mut rng, cfg.ef_projection_scaled(), cfg.epg_width()),
            enc_a: EncoderAParams::init(&mut rng, cfg),
            dec: DecoderParams::init(&mut rng, cfg),
        },
        Variant::Lf => ParamsKind::Lf {
            enc_e: EncoderEParams::init(&mut rng, cfg),
            enc_a: EncoderAParams::init(&mut rng, cfg),
            dec: DecoderParams::init(&mut rng, cfg),
        },
    };
    Ok(Params {
        cfg: cfg.clone(),
        seed,
        kind,
    })
}

/// Builds the parameter structure for `cfg` with every tensor zeroed.
pub fn zero_params(cfg: &ModelConfig, seed: u64) -> crate::error::Result<Params> {
    cfg.validate()?;
    let kind = match cfg.variant {
        Variant::PureEpg => ParamsKind::PureEpg {
            enc_e: EncoderEParams::zeros(cfg),
            dec: DecoderParams::zeros(cfg),
        },
        Variant::Ef => ParamsKind::Ef {
            proj: Linear::zeros(cfg.ef_projection_scaled(), cfg.epg_width()),
            enc_a: EncoderAParams::zeros(cfg),
            dec: DecoderParams::zeros(cfg),
        },
        Variant::Lf => ParamsKind::Lf {
            enc_e: EncoderEParams::zeros(cfg),
            enc_a: EncoderAParams::zeros(cfg),
            dec: DecoderParams::zeros(cfg),
        },
    };
    Ok(Params {
        cfg: cfg.clone(),
        seed,
        kind,
    })
}

impl Params {
    pub fn visit(&self, f: &mut Visit) {
        match &self.kind {
            ParamsKind::PureEpg { enc_e, dec } => {
                enc_e.visit("enc_e", f);
                dec.visit("dec", f);
            }
            ParamsKind::Ef { proj, enc_a, dec } => {
                visit_linear(proj, "proj", f);
                enc_a.visit("enc_a", f);
                dec.visit("dec", f);
            }
            ParamsKind::Lf { enc_e, enc_a, dec } => {
                enc_e.visit("enc_e", f);
                enc_a.visit("enc_a", f);
                dec.visit("dec", f);
            }
        }
    }

    pub fn visit_mut(&mut self, f: &mut VisitMut) {
        match &mut self.kind {
            ParamsKind::PureEpg { enc_e, dec } => {
                enc_e.visit_mut("enc_e", f);
                dec.visit_mut("dec", f);
            }
            ParamsKind::Ef { proj, enc_a, dec } => {
                visit_linear_mut(proj, "proj", f);
                enc_a.visit_mut("enc_a", f);
                dec.visit_mut("dec", f);
            }
            ParamsKind::Lf { enc_e, enc_a, dec } => {
                enc_e.visit_mut("enc_e", f);
                enc_a.visit_mut("enc_a", f);
                dec.visit_mut("dec", f);
            }
        }
    }

    /// Same structure with every tensor zeroed; used for gradients and
    /// optimizer state.
    pub fn zeros_like(&self) -> Params {
        let kind = match self.cfg.variant {
            Variant::PureEpg => ParamsKind::PureEpg {
                enc_e: EncoderEParams::zeros(&self.cfg),
                dec: DecoderParams::zeros(&self.cfg),
            },
            Variant::Ef => ParamsKind::Ef {
                proj: Linear::zeros(self.cfg.ef_projection_scaled(), self.cfg.epg_width()),
                enc_a: EncoderAParams::zeros(&self.cfg),
                dec: DecoderParams::zeros(&self.cfg),
            },
            Variant::Lf => ParamsKind::Lf {
                enc_e: EncoderEParams::zeros(&self.cfg),
                enc_a: EncoderAParams::zeros(&self.cfg),
                dec: DecoderParams::zeros(&self.cfg),
            },
        };
        Params {
            cfg: self.cfg.clone(),
            seed: self.seed,
            kind,
        }
    }

    pub fn set_zero(&mut self) {
        self.visit_mut(&mut |_, slice| slice.fill(0.0));
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _, slice| n += slice.len());
        n
    }

    /// Flattens every tensor into one vector, in visitation order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit(&mut |_, _, slice| out.extend_from_slice(slice));
        out
    }

    /// Writes a flat vector (in visitation order) back into the tensors.
    pub fn unflatten(&mut self, flat: &[f64]) {
        let mut pos = 0usize;
        self.visit_mut(&mut |_, slice| {
            slice.copy_from_slice(&flat[pos..pos + slice.len()]);
            pos += slice.len();
        });
        assert_eq!(pos, flat.len(), "flat vector length mismatch");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = ModelConfig::with_scale(Variant::Lf, 16);
        let a = init_params(&cfg, 42).unwrap();
        let b = init_params(&cfg, 42).unwrap();
        assert_eq!(a.flatten(), b.flatten());
        let c = init_params(&cfg, 43).unwrap();
        assert_ne!(a.flatten(), c.flatten());
    }

    /// Independent parameter-count oracle: enumerate layer shapes from the
    /// config arithmetic alone and compare with the actual tensors.
    fn expected_count(cfg: &ModelConfig) -> usize {
        let h = cfg.bilstm_hidden_scaled();
        let latent = cfg.latent_width();
        let lstm = |hidden: usize, input: usize| 4 * hidden * input + 4 * hidden * hidden + 4 * hidden;
        let enc_e = 2 * lstm(h, 124) + 2 * lstm(h, 2 * h) + (latent * 2 * h + latent) + 2 * latent;
        let mut enc_a = 0usize;
        let mut in_c = 1usize;
        let mut f = cfg.encoder_a_input_width();
        for &out_c in &cfg.conv_filters_scaled() {
            f = (f + 2 - 3) / 2 + 1;
            enc_a += out_c * in_c * 9 + out_c; // stride-2 conv
            enc_a += 2 * (out_c * out_c * 9 + out_c); // two stride-1 convs
            enc_a += 3 * 2 * (out_c * f); // three layer norms over (C, F)
            in_c = out_c;
        }
        let d = cfg.decoder_input_width();
        let dh = cfg.decoder_lstm_scaled();
        let fc1 = cfg.decoder_fc1_scaled();
        let dec = lstm(dh, d) + (fc1 * dh + fc1) + (257 * fc1 + 257);
        match cfg.variant {
            Variant::PureEpg => enc_e + dec,
            Variant::Ef => {
                let p = cfg.ef_projection_scaled();
                (p * 124 + p) + enc_a + dec
            }
            Variant::Lf => enc_e + enc_a + dec,
        }
    }

    #[test]
    fn parameter_counts_match_shape_enumeration_oracle() {
        for variant in [Variant::PureEpg, Variant::Ef, Variant::Lf] {
            for scale in [1usize, 16] {
                let cfg = ModelConfig::with_scale(variant, scale);
                let p = init_params(&cfg, 0).unwrap();
                assert_eq!(
                    p.num_params(),
                    expected_count(&cfg),
                    "variant {:?} scale {scale}",
                    variant
                );
            }
        }
    }

    #[test]
    fn flatten_unflatten_round_trips() {
        let cfg = ModelConfig::with_scale(Variant::Ef, 16);
        let p = init_params(&cfg, 7).unwrap();
        let flat = p.flatten();
        let mut q = p.zeros_like();
        q.unflatten(&flat);
        assert_eq!(p.flatten(), q.flatten());
    }

    #[test]
    fn zeros_like_matches_structure() {
        let cfg = ModelConfig::with_scale(Variant::Lf, 16);
        let p = init_params(&cfg, 0).unwrap();
        let z = p.zeros_like();
        assert_eq!(p.num_params(), z.num_params());
        assert!(z.flatten().iter().all(|&v| v == 0.0));
    }
}
