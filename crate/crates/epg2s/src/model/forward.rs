//! Forward graphs for the three variants, with matching backward passes.
//!
//! All passes are pure: parameters and inputs in, activations out, with
//! explicit caches carrying what the backward pass needs.

use ndarray::{s, Array2, Array3, Axis};

use crate::dsp::BINS;
use crate::error::{Error, Result};
use crate::model::config::{MissingLatentPolicy, Variant};
use crate::model::layers::{
    adaptive_avg_pool, adaptive_avg_pool_backward, leaky_relu, leaky_relu_backward, Conv2dCache,
    BiLstmCache, LayerNormCache, LeakyReluCache, LinearCache, LstmCache, PoolCache, POOL_WIDTH,
};
use crate::model::params::{DecoderParams, EncoderAParams, EncoderEParams, Params, ParamsKind};
use crate::signal_io::NUM_ELECTRODES;

/// Inputs for one utterance: aligned EPG rows and/or normalized audio
/// features, both `T` frames long.
#[derive(Debug, Clone)]
pub struct ModalityBundle {
    pub epg: Option<Array2<f64>>,
    pub audio: Option<Array2<f64>>,
}

impl ModalityBundle {
    pub fn new(epg: Option<Array2<f64>>, audio: Option<Array2<f64>>) -> Result<Self> {
        if epg.is_none() && audio.is_none() {
            return Err(Error::Input("at least one modality must be present".into()));
        }
        if let Some(e) = &epg {
            if e.ncols() != NUM_ELECTRODES {
                return Err(Error::Shape(format!(
                    "EPG width {} != {NUM_ELECTRODES}",
                    e.ncols()
                )));
            }
        }
        if let Some(a) = &audio {
            if a.ncols() != BINS {
                return Err(Error::Shape(format!("audio width {} != {BINS}", a.ncols())));
            }
        }
        if let (Some(e), Some(a)) = (&epg, &audio) {
            if e.nrows() != a.nrows() {
                return Err(Error::Shape(format!(
                    "modalities disagree on frame count: {} vs {}",
                    e.nrows(),
                    a.nrows()
                )));
            }
        }
        Ok(Self { epg, audio })
    }

    pub fn from_epg_bits(epg: &ndarray::Array2<u8>) -> Result<Self> {
        Self::new(Some(epg.mapv(f64::from)), None)
    }

    pub fn n_frames(&self) -> usize {
        self.epg
            .as_ref()
            .map(|e| e.nrows())
            .or_else(|| self.audio.as_ref().map(|a| a.nrows()))
            .unwrap()
    }
}

// ---------------------------------------------------------------------------
// Encoder_E: BiLSTM x2 -> linear -> layer norm -> leaky ReLU

pub struct EncoderECache {
    b1: BiLstmCache,
    b2: BiLstmCache,
    lin: LinearCache,
    norm: LayerNormCache,
    act: LeakyReluCache,
}

impl EncoderEParams {
    pub fn forward(&self, x: &Array2<f64>, slope: f64) -> Result<(Array2<f64>, EncoderECache)> {
        if x.ncols() != NUM_ELECTRODES {
            return Err(Error::Shape(format!(
                "EPG encoder expects width {NUM_ELECTRODES}, got {}",
                x.ncols()
            )));
        }
        let (h1, b1) = self.bilstm1.forward(x);
        let (h2, b2) = self.bilstm2.forward(&h1);
        let (z, lin) = self.linear.forward(&h2);
        let (n, norm) = self.norm.forward(&z);
        let (y, act) = leaky_relu(&n, slope);
        Ok((y, EncoderECache { b1, b2, lin, norm, act }))
    }

    pub fn backward(
        &self,
        cache: &EncoderECache,
        gy: &Array2<f64>,
        slope: f64,
        grad: &mut EncoderEParams,
    ) -> Array2<f64> {
        let gn = leaky_relu_backward(&cache.act, gy, slope);
        let gz = self.norm.backward(&cache.norm, &gn, &mut grad.norm);
        let gh2 = self.linear.backward(&cache.lin, &gz, &mut grad.linear);
        let gh1 = self.bilstm2.backward(&cache.b2, &gh2, &mut grad.bilstm2);
        self.bilstm1.backward(&cache.b1, &gh1, &mut grad.bilstm1)
    }
}

// ---------------------------------------------------------------------------
// Encoder_A: four conv blocks, then adaptive frequency pooling and flatten

fn chw_to_rows(x: &Array3<f64>) -> Array2<f64> {
    // [C, T, F] -> [T, C*F]
    let (c_len, t_len, f_len) = x.dim();
    let mut out = Array2::zeros((t_len, c_len * f_len));
    for c in 0..c_len {
        for t in 0..t_len {
            for f in 0..f_len {
                out[(t, c * f_len + f)] = x[(c, t, f)];
            }
        }
    }
    out
}

fn rows_to_chw(x: &Array2<f64>, c_len: usize, f_len: usize) -> Array3<f64> {
    let t_len = x.nrows();
    let mut out = Array3::zeros((c_len, t_len, f_len));
    for c in 0..c_len {
        for t in 0..t_len {
            for f in 0..f_len {
                out[(c, t, f)] = x[(t, c * f_len + f)];
            }
        }
    }
    out
}

struct ConvLayerCache {
    conv: Conv2dCache,
    norm: LayerNormCache,
    act: LeakyReluCache,
    channels: usize,
    freq: usize,
}

pub struct EncoderACache {
    layers: Vec<ConvLayerCache>,
    pool: PoolCache,
    final_channels: usize,
}

impl EncoderAParams {
    pub fn forward(&self, x: &Array2<f64>, slope: f64) -> Result<(Array2<f64>, EncoderACache)> {
        if x.ncols() != self.input_width {
            return Err(Error::Shape(format!(
                "audio encoder expects width {}, got {}",
                self.input_width,
                x.ncols()
            )));
        }
        let mut cur = x.clone().insert_axis(ndarray::Axis(0));
        let mut layers = Vec::with_capacity(12);
        for block in &self.blocks {
            for i in 0..3 {
                let (y, conv) = block.convs[i].forward(&cur);
                let (channels, _, freq) = y.dim();
                let rows = chw_to_rows(&y);
                let (n, norm) = block.norms[i].forward(&rows);
                let (a, act) = leaky_relu(&n, slope);
                cur = rows_to_chw(&a, channels, freq);
                layers.push(ConvLayerCache {
                    conv,
                    norm,
                    act,
                    channels,
                    freq,
                });
            }
        }
        let (pooled, pool) = adaptive_avg_pool(&cur);
        let final_channels = pooled.dim().0;
        // [C, T, 4] -> [T, C*4]
        let latent = chw_to_rows(&pooled);
        Ok((
            latent,
            EncoderACache {
                layers,
                pool,
                final_channels,
            },
        ))
    }

    pub fn backward(
        &self,
        cache: &EncoderACache,
        gy: &Array2<f64>,
        slope: f64,
        grad: &mut EncoderAParams,
    ) -> Array3<f64> {
        let g_pooled = rows_to_chw(gy, cache.final_channels, POOL_WIDTH);
        let mut g = adaptive_avg_pool_backward(&cache.pool, &g_pooled);
        for (li, layer) in cache.layers.iter().enumerate().rev() {
            let b = li / 3;
            let i = li % 3;
            let g_rows = chw_to_rows(&g);
            let gn = leaky_relu_backward(&layer.act, &g_rows, slope);
            let gconv_rows = self.blocks[b].norms[i].backward(&layer.norm, &gn, &mut grad.blocks[b].norms[i]);
            let gconv = rows_to_chw(&gconv_rows, layer.channels, layer.freq);
            g = self.blocks[b].convs[i].backward(&layer.conv, &gconv, &mut grad.blocks[b].convs[i]);
        }
        g
    }
}

// ---------------------------------------------------------------------------
// Decoder: LSTM -> FC -> leaky ReLU -> FC

pub struct DecoderCache {
    lstm: LstmCache,
    fc1: LinearCache,
    act: LeakyReluCache,
    fc2: LinearCache,
}

impl DecoderParams {
    pub fn forward(&self, latent: &Array2<f64>, slope: f64) -> Result<(Array2<f64>, DecoderCache)> {
        if latent.ncols() != self.lstm.w_ih.ncols() {
            return Err(Error::Shape(format!(
                "decoder expects latent width {}, got {}",
                self.lstm.w_ih.ncols(),
                latent.ncols()
            )));
        }
        let (h, lstm) = self.lstm.forward(latent);
        let (z1, fc1) = self.fc1.forward(&h);
        let (a, act) = leaky_relu(&z1, slope);
        let (y, fc2) = self.fc2.forward(&a);
        Ok((y, DecoderCache { lstm, fc1, act, fc2 }))
    }

    pub fn backward(
        &self,
        cache: &DecoderCache,
        gy: &Array2<f64>,
        slope: f64,
        grad: &mut DecoderParams,
    ) -> Array2<f64> {
        let ga = self.fc2.backward(&cache.fc2, gy, &mut grad.fc2);
        let gz1 = leaky_relu_backward(&cache.act, &ga, slope);
        let gh = self.fc1.backward(&cache.fc1, &gz1, &mut grad.fc1);
        self.lstm.backward(&cache.lstm, &gh, &mut grad.lstm)
    }
}

// ---------------------------------------------------------------------------
// Full variants

pub struct ForwardOutput {
    /// `[T x 257]` prediction in the normalized feature domain.
    pub pred: Array2<f64>,
    pub s_a: Option<Array2<f64>>,
    pub s_e: Option<Array2<f64>>,
}

enum CacheKind {
    PureEpg {
        enc_e: EncoderECache,
        dec: DecoderCache,
    },
    Ef {
        proj: LinearCache,
        enc_a: EncoderACache,
        dec: DecoderCache,
    },
    Lf {
        enc_e: Option<EncoderECache>,
        enc_a: Option<EncoderACache>,
        dec: DecoderCache,
        substituted: Option<SubstitutedLatent>,
    },
}

#[derive(Clone, Copy, PartialEq)]
enum SubstitutedLatent {
    /// Audio latent missing; s_E copied into its slot.
    AudioFromEpg,
    /// EPG latent missing; s_A copied into its slot.
    EpgFromAudio,
}

pub struct ModelCache {
    kind: CacheKind,
}

impl ModelCache {
    /// Concatenated sign pattern of every leaky-ReLU pre-activation in the
    /// graph. Finite-difference gradient checks compare the patterns of their
    /// two evaluation points to detect invalidating kink crossings.
    pub fn activation_signs(&self) -> Vec<bool> {
        let mut out = Vec::new();
        let push_enc_e = |c: &EncoderECache, out: &mut Vec<bool>| out.extend(c.act.signs());
        let push_enc_a = |c: &EncoderACache, out: &mut Vec<bool>| {
            for layer in &c.layers {
                out.extend(layer.act.signs());
            }
        };
        let push_dec = |c: &DecoderCache, out: &mut Vec<bool>| out.extend(c.act.signs());
        match &self.kind {
            CacheKind::PureEpg { enc_e, dec } => {
                push_enc_e(enc_e, &mut out);
                push_dec(dec, &mut out);
            }
            CacheKind::Ef { enc_a, dec, .. } => {
                push_enc_a(enc_a, &mut out);
                push_dec(dec, &mut out);
            }
            CacheKind::Lf {
                enc_e, enc_a, dec, ..
            } => {
                if let Some(c) = enc_e {
                    push_enc_e(c, &mut out);
                }
                if let Some(c) = enc_a {
                    push_enc_a(c, &mut out);
                }
                push_dec(dec, &mut out);
            }
        }
        out
    }
}

pub fn forward(params: &Params, bundle: &ModalityBundle) -> Result<(ForwardOutput, ModelCache)> {
    let slope = params.cfg.leaky_slope;
    let t_len = bundle.n_frames();
    match &params.kind {
        ParamsKind::PureEpg { enc_e, dec } => {
            let epg = bundle
                .epg
                .as_ref()
                .ok_or_else(|| Error::Input("PURE_EPG variant requires the EPG modality".into()))?;
            let (latent, ce) = enc_e.forward(epg, slope)?;
            let (pred, cd) = dec.forward(&latent, slope)?;
            Ok((
                ForwardOutput {
                    pred,
                    s_a: None,
                    s_e: Some(latent),
                },
                ModelCache {
                    kind: CacheKind::PureEpg { enc_e: ce, dec: cd },
                },
            ))
        }
        ParamsKind::Ef { proj, enc_a, dec } => {
            // missing modalities are zero-filled at the raw feature level
            let epg = match &bundle.epg {
                Some(e) => e.clone(),
                None => Array2::zeros((t_len, NUM_ELECTRODES)),
            };
            let audio = match &bundle.audio {
                Some(a) => a.clone(),
                None => Array2::zeros((t_len, BINS)),
            };
            let (projected, cp) = proj.forward(&epg);
            let fused = ndarray::concatenate(Axis(1), &[audio.view(), projected.view()])
                .expect("same frame count");
            let (latent, ca) = enc_a.forward(&fused, slope)?;
            let (pred, cd) = dec.forward(&latent, slope)?;
            Ok((
                ForwardOutput {
                    pred,
                    s_a: None,
                    s_e: None,
                },
                ModelCache {
                    kind: CacheKind::Ef {
                        proj: cp,
                        enc_a: ca,
                        dec: cd,
                    },
                },
            ))
        }
        ParamsKind::Lf { enc_e, enc_a, dec } => {
            let latent_w = params.cfg.latent_width();
            let mut s_e = None;
            let mut ce = None;
            if let Some(epg) = &bundle.epg {
                let (l, c) = enc_e.forward(epg, slope)?;
                s_e = Some(l);
                ce = Some(c);
            }
            let mut s_a = None;
            let mut ca = None;
            if let Some(audio) = &bundle.audio {
                let (l, c) = enc_a.forward(audio, slope)?;
                s_a = Some(l);
                ca = Some(c);
            }
            let substitute = params.cfg.missing_latent == MissingLatentPolicy::Substitute;
            let mut substituted = None;
            let a_slot = match (&s_a, &s_e) {
                (Some(a), _) => a.clone(),
                (None, Some(e)) if substitute => {
                    substituted = Some(SubstitutedLatent::AudioFromEpg);
                    e.clone()
                }
                _ => Array2::zeros((t_len, latent_w)),
            };
            let e_slot = match (&s_e, &s_a) {
                (Some(e), _) => e.clone(),
                (None, Some(a)) if substitute => {
                    substituted = Some(SubstitutedLatent::EpgFromAudio);
                    a.clone()
                }
                _ => Array2::zeros((t_len, latent_w)),
            };
            let fused = ndarray::concatenate(Axis(1), &[a_slot.view(), e_slot.view()])
                .expect("same frame count");
            let (pred, cd) = dec.forward(&fused, slope)?;
            Ok((
                ForwardOutput { pred, s_a, s_e },
                ModelCache {
                    kind: CacheKind::Lf {
                        enc_e: ce,
                        enc_a: ca,
                        dec: cd,
                        substituted,
                    },
                },
            ))
        }
    }
}

/// Backward through the variant graph. `g_pred` is the loss gradient at the
/// prediction; `g_s_a` / `g_s_e` are extra gradients flowing directly into
/// the latents (from the latent-alignment loss).
pub fn backward(
    params: &Params,
    cache: &ModelCache,
    g_pred: &Array2<f64>,
    g_s_a: Option<&Array2<f64>>,
    g_s_e: Option<&Array2<f64>>,
    grads: &mut Params,
) {
    let slope = params.cfg.leaky_slope;
    match (&params.kind, &cache.kind, &mut grads.kind) {
        (
            ParamsKind::PureEpg { enc_e, dec },
            CacheKind::PureEpg { enc_e: ce, dec: cd },
            ParamsKind::PureEpg {
                enc_e: ge,
                dec: gd,
            },
        ) => {
            let mut g_latent = dec.backward(cd, g_pred, slope, gd);
            if let Some(extra) = g_s_e {
                g_latent += extra;
            }
            enc_e.backward(ce, &g_latent, slope, ge);
        }
        (
            ParamsKind::Ef { proj, enc_a, dec },
            CacheKind::Ef {
                proj: cp,
                enc_a: ca,
                dec: cd,
            },
            ParamsKind::Ef {
                proj: gp,
                enc_a: ga,
                dec: gd,
            },
        ) => {
            let g_latent = dec.backward(cd, g_pred, slope, gd);
            let g_fused3 = enc_a.backward(ca, &g_latent, slope, ga);
            // [1, T, 257 + P] -> audio part is an input, EPG part feeds proj
            let g_fused = g_fused3.index_axis(Axis(0), 0);
            let g_proj = g_fused.slice(s![.., BINS..]).to_owned();
            proj.backward(cp, &g_proj, gp);
        }
        (
            ParamsKind::Lf { enc_e, enc_a, dec },
            CacheKind::Lf {
                enc_e: ce,
                enc_a: ca,
                dec: cd,
                substituted,
            },
            ParamsKind::Lf {
                enc_e: ge,
                enc_a: ga,
                dec: gd,
            },
        ) => {
            let latent_w = params.cfg.latent_width();
            let g_fused = dec.backward(cd, g_pred, slope, gd);
            let g_a_slot = g_fused.slice(s![.., ..latent_w]).to_owned();
            let g_e_slot = g_fused.slice(s![.., latent_w..]).to_owned();

            if let Some(ca) = ca.as_ref() {
                let mut g = g_a_slot.clone();
                if *substituted == Some(SubstitutedLatent::EpgFromAudio) {
                    g += &g_e_slot;
                }
                if let Some(extra) = g_s_a {
                    g += extra;
                }
                enc_a.backward(ca, &g, slope, ga);
            }
            if let Some(ce) = ce.as_ref() {
                let mut g = g_e_slot.clone();
                if *substituted == Some(SubstitutedLatent::AudioFromEpg) {
                    g += &g_a_slot;
                }
                if let Some(extra) = g_s_e {
                    g += extra;
                }
                enc_e.backward(ce, &g, slope, ge);
            }
        }
        _ => panic!("params, cache, and grads must share a variant"),
    }
}

/// Convenience wrappers matching the per-operation contracts.
pub fn ef_forward(params: &Params, bundle: &ModalityBundle) -> Result<Array2<f64>> {
    if params.cfg.variant != Variant::Ef {
        return Err(Error::Input("ef_forward requires an EF parameterization".into()));
    }
    Ok(forward(params, bundle)?.0.pred)
}

pub fn lf_forward(
    params: &Params,
    bundle: &ModalityBundle,
) -> Result<(Array2<f64>, Option<Array2<f64>>, Option<Array2<f64>>)> {
    if params.cfg.variant != Variant::Lf {
        return Err(Error::Input("lf_forward requires an LF parameterization".into()));
    }
    let (out, _) = forward(params, bundle)?;
    Ok((out.pred, out.s_a, out.s_e))
}
