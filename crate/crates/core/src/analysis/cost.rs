//! Parameter, operation-count and latency accounting.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_mask, AttentionMode, MaskMode, Model, ModelConfig};
use crate::numerics::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlopConvention {
    /// Attention-map multiplications only, term for term as in the
    /// acceleration-ratio formula: `2L² + 3L·d` for `L` temporal tokens and
    /// `M·r + 3M·d` for `M` sensor tokens with `r` admissible keys per row.
    A,
    /// Every multiply-accumulate of a forward pass through the matrix
    /// products (embedding, Q/K/V, scores, weighted values, FFN, classifier).
    /// Masked score entries are skipped.
    B,
}

impl fmt::Display for FlopConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlopConvention::A => "A",
            FlopConvention::B => "B",
        })
    }
}

impl FromStr for FlopConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(FlopConvention::A),
            "B" | "b" => Ok(FlopConvention::B),
            other => Err(Error::Config(format!("unknown FLOPs convention {other:?}"))),
        }
    }
}

pub fn count_params(config: &ModelConfig) -> usize {
    config.param_count()
}

/// Admissible attention entries for one sample.
fn admissible_entries(config: &ModelConfig) -> u64 {
    let n = config.tokens() as u64;
    match (config.attention_mode, config.mask_mode) {
        (AttentionMode::SensorWise, MaskMode::Selective) => {
            build_mask(config.sensors, config.axes).admissible_count() as u64
        }
        _ => n * n,
    }
}

pub fn count_flops(config: &ModelConfig, convention: FlopConvention) -> u64 {
    let n = config.tokens() as u64;
    let d = config.d_model as u64;
    let ff = config.d_ff as u64;
    let blocks = config.n_blocks as u64;
    let entries = admissible_entries(config);
    match convention {
        FlopConvention::A => match config.attention_mode {
            AttentionMode::Temporal => blocks * (2 * n * n + 3 * n * d),
            AttentionMode::SensorWise => blocks * (entries + 3 * n * d),
        },
        FlopConvention::B => {
            let embed = n * config.token_dim() as u64 * d;
            let qkv = 3 * n * d * d;
            let attn = 2 * entries * d;
            let ffn = 2 * n * d * ff;
            let classifier = d * config.classes as u64;
            embed + blocks * (qkv + attn + ffn) + classifier
        }
    }
}

/// Analytic speed-up of masked sensor-wise attention over attention across
/// `t` positions: `(2t² + 3t·d) / (m·((c + s − 1) + 3d))`.
pub fn acceleration_ratio(t: usize, m: usize, c: usize, s: usize, d_model: usize) -> f64 {
    let (t, m, d) = (t as f64, m as f64, d_model as f64);
    let r = (c + s - 1) as f64;
    (2.0 * t * t + 3.0 * t * d) / (m * (r + 3.0 * d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub runs: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Seconds per run, in run order.
    pub timings: Vec<f64>,
}

impl LatencyStats {
    pub fn from_timings(timings: Vec<f64>) -> Result<Self> {
        if timings.is_empty() {
            return Err(Error::Config("latency needs at least one run".into()));
        }
        Ok(Self {
            runs: timings.len(),
            min: timings.iter().copied().fold(f64::INFINITY, f64::min),
            mean: timings.iter().sum::<f64>() / timings.len() as f64,
            max: timings.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            timings,
        })
    }
}

const WARMUP_RUNS: usize = 5;

/// Wall-clock time of a single-window forward pass, repeated `runs` times
/// after a short warm-up.
pub fn bench_latency(model: &Model, features: &Tensor, runs: usize) -> Result<LatencyStats> {
    if runs == 0 {
        return Err(Error::Config("latency needs at least one run".into()));
    }
    for _ in 0..WARMUP_RUNS {
        model.logits(&[features])?;
    }
    let mut timings = Vec::with_capacity(runs);
    for _ in 0..runs {
        let t = Instant::now();
        let out = model.logits(&[features])?;
        timings.push(t.elapsed().as_secs_f64());
        std::hint::black_box(out);
    }
    LatencyStats::from_timings(timings)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub feature_mode: String,
    pub attention_mode: String,
    pub mask_mode: String,
    pub param_count: usize,
    pub flops_a: u64,
    pub flops_b: u64,
    /// Formula evaluated at this config's window length and dimensions.
    pub acceleration_ratio: f64,
    /// `flops_a` of the temporal-attention variant over this config's.
    pub measured_ratio_a: f64,
    pub latency: Option<LatencyStats>,
}

pub fn cost_report(config: &ModelConfig, latency: Option<LatencyStats>) -> CostReport {
    let temporal = config.variant(config.feature_mode, AttentionMode::Temporal);
    let a = count_flops(config, FlopConvention::A);
    CostReport {
        feature_mode: config.feature_mode.to_string(),
        attention_mode: config.attention_mode.to_string(),
        mask_mode: config.mask_mode.to_string(),
        param_count: count_params(config),
        flops_a: a,
        flops_b: count_flops(config, FlopConvention::B),
        acceleration_ratio: acceleration_ratio(
            config.window_len,
            config.channels,
            config.axes,
            config.sensors,
            config.d_model,
        ),
        measured_ratio_a: count_flops(&temporal, FlopConvention::A) as f64 / a as f64,
        latency,
    }
}
