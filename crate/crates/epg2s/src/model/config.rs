//! Model configuration. Defaults reproduce the published layer widths;
//! `size_scale` divides every hidden width (rounding up) so gradient checks
//! and CI runs finish in seconds while keeping the same topology.

use std::str::FromStr;

use crate::dsp::BINS;
use crate::error::{Error, Result};
use crate::model::layers::POOL_WIDTH;
use crate::signal_io::NUM_ELECTRODES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    PureEpg,
    Ef,
    Lf,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::PureEpg => "pure_epg",
            Variant::Ef => "ef",
            Variant::Lf => "lf",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pure_epg" => Ok(Variant::PureEpg),
            "ef" => Ok(Variant::Ef),
            "lf" => Ok(Variant::Lf),
            other => Err(Error::Value(format!("unknown variant `{other}`"))),
        }
    }
}

/// Policy for the missing latent under late fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingLatentPolicy {
    /// Replace the absent latent with zeros (default).
    ZeroFill,
    /// Substitute a copy of the present latent.
    Substitute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub bilstm_hidden: usize,
    pub encoder_e_out: usize,
    pub decoder_lstm_hidden: usize,
    pub decoder_fc1: usize,
    pub conv_filters: [usize; 4],
    pub kernel: usize,
    pub leaky_slope: f64,
    pub ef_epg_projection: usize,
    /// Divisor applied to every hidden width (rounded up); 1 keeps the
    /// published sizes. The 257-bin output is never scaled.
    pub size_scale: usize,
    pub missing_latent: MissingLatentPolicy,
}

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            bilstm_hidden: 256,
            encoder_e_out: 512,
            decoder_lstm_hidden: 384,
            decoder_fc1: 512,
            conv_filters: [16, 32, 64, 128],
            kernel: 3,
            leaky_slope: 0.01,
            ef_epg_projection: 257,
            size_scale: 1,
            missing_latent: MissingLatentPolicy::ZeroFill,
        }
    }

    pub fn with_scale(variant: Variant, size_scale: usize) -> Self {
        Self {
            size_scale,
            ..Self::new(variant)
        }
    }

    fn scaled(&self, width: usize) -> usize {
        width.div_ceil(self.size_scale)
    }

    pub fn bilstm_hidden_scaled(&self) -> usize {
        self.scaled(self.bilstm_hidden)
    }

    pub fn decoder_lstm_scaled(&self) -> usize {
        self.scaled(self.decoder_lstm_hidden)
    }

    pub fn decoder_fc1_scaled(&self) -> usize {
        self.scaled(self.decoder_fc1)
    }

    pub fn conv_filters_scaled(&self) -> [usize; 4] {
        self.conv_filters.map(|c| self.scaled(c))
    }

    pub fn ef_projection_scaled(&self) -> usize {
        self.scaled(self.ef_epg_projection)
    }

    /// Width of both latent sequences (s_E and s_A).
    pub fn latent_width(&self) -> usize {
        self.scaled(self.encoder_e_out)
    }

    /// Spectral input width of the audio encoder for this variant.
    pub fn encoder_a_input_width(&self) -> usize {
        match self.variant {
            Variant::Ef => BINS + self.ef_projection_scaled(),
            _ => BINS,
        }
    }

    /// Decoder input width: one latent for PURE_EPG/EF, two for LF.
    pub fn decoder_input_width(&self) -> usize {
        match self.variant {
            Variant::Lf => 2 * self.latent_width(),
            _ => self.latent_width(),
        }
    }

    pub fn output_bins(&self) -> usize {
        BINS
    }

    pub fn epg_width(&self) -> usize {
        NUM_ELECTRODES
    }

    pub fn validate(&self) -> Result<()> {
        if self.size_scale == 0 {
            return Err(Error::Config("size_scale must be >= 1".into()));
        }
        if self.kernel != 3 {
            return Err(Error::Config("kernel size is fixed at 3".into()));
        }
        // the two latents are concatenated and compared, so the EPG encoder
        // output and the pooled conv output must agree in width
        let conv_latent = self.conv_filters_scaled()[3] * POOL_WIDTH;
        if conv_latent != self.latent_width() {
            return Err(Error::Config(format!(
                "size_scale {} makes conv latent width {} != encoder_e width {}",
                self.size_scale,
                conv_latent,
                self.latent_width()
            )));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("model.variant={}\n", self.variant.name()));
        s.push_str(&format!("model.bilstm_hidden={}\n", self.bilstm_hidden));
        s.push_str(&format!("model.encoder_e_out={}\n", self.encoder_e_out));
        s.push_str(&format!("model.decoder_lstm_hidden={}\n", self.decoder_lstm_hidden));
        s.push_str(&format!("model.decoder_fc1={}\n", self.decoder_fc1));
        s.push_str(&format!(
            "model.conv_filters={},{},{},{}\n",
            self.conv_filters[0], self.conv_filters[1], self.conv_filters[2], self.conv_filters[3]
        ));
        s.push_str(&format!("model.kernel={}\n", self.kernel));
        s.push_str(&format!("model.leaky_slope={}\n", self.leaky_slope));
        s.push_str(&format!("model.ef_epg_projection={}\n", self.ef_epg_projection));
        s.push_str(&format!("model.size_scale={}\n", self.size_scale));
        s.push_str(&format!(
            "model.missing_latent={}\n",
            match self.missing_latent {
                MissingLatentPolicy::ZeroFill => "zero_fill",
                MissingLatentPolicy::Substitute => "substitute",
            }
        ));
        s
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::new(Variant::Lf);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad config line `{line}`")))?;
            let parse_usize = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad integer `{v}` for {key}")))
            };
            match key.trim() {
                "model.variant" => cfg.variant = value.trim().parse()?,
                "model.bilstm_hidden" => cfg.bilstm_hidden = parse_usize(value.trim())?,
                "model.encoder_e_out" => cfg.encoder_e_out = parse_usize(value.trim())?,
                "model.decoder_lstm_hidden" => cfg.decoder_lstm_hidden = parse_usize(value.trim())?,
                "model.decoder_fc1" => cfg.decoder_fc1 = parse_usize(value.trim())?,
                "model.conv_filters" => {
                    let parts: Vec<usize> = value
                        .split(',')
                        .map(|p| p.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::Config(format!("bad conv_filters `{value}`")))?;
                    if parts.len() != 4 {
                        return Err(Error::Config("conv_filters needs 4 entries".into()));
                    }
                    cfg.conv_filters = [parts[0], parts[1], parts[2], parts[3]];
                }
                "model.kernel" => cfg.kernel = parse_usize(value.trim())?,
                "model.leaky_slope" => {
                    cfg.leaky_slope = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad float `{value}`")))?
                }
                "model.ef_epg_projection" => cfg.ef_epg_projection = parse_usize(value.trim())?,
                "model.size_scale" => cfg.size_scale = parse_usize(value.trim())?,
                "model.missing_latent" => {
                    cfg.missing_latent = match value.trim() {
                        "zero_fill" => MissingLatentPolicy::ZeroFill,
                        "substitute" => MissingLatentPolicy::Substitute,
                        other => {
                            return Err(Error::Config(format!("unknown policy `{other}`")))
                        }
                    }
                }
                other if other.starts_with("model.") => {
                    return Err(Error::Config(format!("unknown key `{other}`")))
                }
                _ => {}
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_widths() {
        let cfg = ModelConfig::new(Variant::Lf);
        assert_eq!(cfg.bilstm_hidden, 256);
        assert_eq!(cfg.encoder_e_out, 512);
        assert_eq!(cfg.decoder_lstm_hidden, 384);
        assert_eq!(cfg.decoder_fc1, 512);
        assert_eq!(cfg.conv_filters, [16, 32, 64, 128]);
        assert_eq!(cfg.latent_width(), 512);
        assert_eq!(cfg.decoder_input_width(), 1024);
        cfg.validate().unwrap();
    }

    #[test]
    fn scale_16_divides_widths_rounding_up() {
        let cfg = ModelConfig::with_scale(Variant::Lf, 16);
        assert_eq!(cfg.bilstm_hidden_scaled(), 16);
        assert_eq!(cfg.latent_width(), 32);
        assert_eq!(cfg.decoder_lstm_scaled(), 24);
        assert_eq!(cfg.conv_filters_scaled(), [1, 2, 4, 8]);
        assert_eq!(cfg.ef_projection_scaled(), 17); // 257/16 rounded up
        assert_eq!(cfg.output_bins(), 257); // never scaled
        cfg.validate().unwrap();
    }

    #[test]
    fn incompatible_scale_is_rejected() {
        let cfg = ModelConfig::with_scale(Variant::Lf, 3);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kv_round_trip() {
        let mut cfg = ModelConfig::with_scale(Variant::Ef, 16);
        cfg.missing_latent = MissingLatentPolicy::Substitute;
        let text = cfg.to_kv();
        let parsed = ModelConfig::from_kv(&text).unwrap();
        assert_eq!(parsed, cfg);
    }
}
