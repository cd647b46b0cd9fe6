use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{FeatureMode, FeatureOptions};

/// What a token is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionMode {
    /// One token per sensor channel; the attention map is `M × M`.
    SensorWise,
    /// One token per time/frequency position; each token is the `M`-channel
    /// vector at that position.
    Temporal,
}

impl fmt::Display for AttentionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttentionMode::SensorWise => "sensor-wise",
            AttentionMode::Temporal => "temporal",
        })
    }
}

impl FromStr for AttentionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sensor-wise" | "sensorwise" | "sensor" | "channel" => Ok(AttentionMode::SensorWise),
            "temporal" | "time" | "position" => Ok(AttentionMode::Temporal),
            other => Err(Error::Config(format!("unknown attention mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// Same-sensor or same-axis channel pairs only.
    Selective,
    Full,
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskMode::Selective => "selective",
            MaskMode::Full => "full",
        })
    }
}

impl FromStr for MaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "selective" => Ok(MaskMode::Selective),
            "full" | "none" => Ok(MaskMode::Full),
            other => Err(Error::Config(format!("unknown mask mode {other:?}"))),
        }
    }
}

/// Axis the residual layer norms normalize over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Each token over its `d_model` embedding entries.
    PerToken,
    /// Each embedding entry over the tokens of a sample.
    AcrossTokens,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub channels: usize,
    pub sensors: usize,
    pub axes: usize,
    /// Samples per window.
    pub window_len: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub n_blocks: usize,
    pub classes: usize,
    pub feature_mode: FeatureMode,
    pub attention_mode: AttentionMode,
    pub mask_mode: MaskMode,
    pub norm_mode: NormMode,
    pub features: FeatureOptions,
    pub ln_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: 6,
            sensors: 2,
            axes: 3,
            window_len: 120,
            d_model: 64,
            d_ff: 64,
            n_blocks: 1,
            classes: 4,
            feature_mode: FeatureMode::Amplitude,
            attention_mode: AttentionMode::SensorWise,
            mask_mode: MaskMode::Selective,
            norm_mode: NormMode::PerToken,
            features: FeatureOptions::default(),
            ln_eps: 1e-5,
        }
    }
}

impl ModelConfig {
    /// Same architecture with another feature/attention pairing. Temporal
    /// attention always uses the full mask.
    pub fn variant(&self, feature_mode: FeatureMode, attention_mode: AttentionMode) -> Self {
        Self {
            feature_mode,
            attention_mode,
            mask_mode: match attention_mode {
                AttentionMode::SensorWise => self.mask_mode,
                AttentionMode::Temporal => MaskMode::Full,
            },
            ..self.clone()
        }
    }

    /// Per-channel feature length `L`.
    pub fn input_len(&self) -> usize {
        self.feature_mode.feature_len(self.window_len, &self.features)
    }

    pub fn tokens(&self) -> usize {
        match self.attention_mode {
            AttentionMode::SensorWise => self.channels,
            AttentionMode::Temporal => self.input_len(),
        }
    }

    /// Width of one token before embedding.
    pub fn token_dim(&self) -> usize {
        match self.attention_mode {
            AttentionMode::SensorWise => self.input_len(),
            AttentionMode::Temporal => self.channels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.channels,
            self.sensors,
            self.axes,
            self.window_len,
            self.d_model,
            self.d_ff,
            self.n_blocks,
            self.classes,
        ];
        if dims.contains(&0) {
            return Err(Error::Config("all model dimensions must be positive".into()));
        }
        if self.channels != self.sensors * self.axes {
            return Err(Error::Config(format!(
                "channels ({}) must equal sensors ({}) × axes ({})",
                self.channels, self.sensors, self.axes
            )));
        }
        if self.feature_mode != FeatureMode::Time && self.window_len < crate::spectral::MIN_WINDOW_LEN {
            return Err(Error::WindowTooShort {
                len: self.window_len,
                min: crate::spectral::MIN_WINDOW_LEN,
            });
        }
        if self.d_model < 2 {
            return Err(Error::Config("d_model must be at least 2".into()));
        }
        if self.attention_mode == AttentionMode::Temporal && self.mask_mode == MaskMode::Selective {
            return Err(Error::Config(
                "selective masking is defined over sensor channels; temporal attention needs the full mask".into(),
            ));
        }
        if self.norm_mode == NormMode::AcrossTokens && self.tokens() < 2 {
            return Err(Error::Config("normalizing across tokens needs at least two tokens".into()));
        }
        if !(self.ln_eps > 0.0) {
            return Err(Error::Config("ln_eps must be positive".into()));
        }
        Ok(())
    }

    /// Closed-form number of trainable scalars.
    pub fn param_count(&self) -> usize {
        let d = self.d_model;
        let embed = self.token_dim() * d + d;
        let attn = 3 * (d * d + d);
        let norms = 2 * (2 * d);
        let ffn = d * self.d_ff + self.d_ff + self.d_ff * d + d;
        let classifier = d * self.classes + self.classes;
        embed + self.n_blocks * (attn + norms + ffn) + classifier
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_budget() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.input_len(), 60);
        assert_eq!(c.param_count(), 25_220);
    }

    #[test]
    fn variants_adjust_input_length() {
        let c = ModelConfig::default();
        let ap = c.variant(FeatureMode::AmplitudePhase, AttentionMode::SensorWise);
        assert_eq!(ap.input_len(), 120);
        assert_eq!(ap.param_count() - c.param_count(), 60 * 64);
        let tt = c.variant(FeatureMode::Time, AttentionMode::Temporal);
        tt.validate().unwrap();
        assert_eq!((tt.tokens(), tt.token_dim()), (120, 6));
        assert_eq!(tt.mask_mode, MaskMode::Full);
    }

    #[test]
    fn invalid_configs() {
        let c = ModelConfig {
            channels: 5,
            ..ModelConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ModelConfig {
            attention_mode: AttentionMode::Temporal,
            ..ModelConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!("sideways".parse::<AttentionMode>().is_err());
        assert_eq!("full".parse::<MaskMode>().unwrap(), MaskMode::Full);
    }
}
