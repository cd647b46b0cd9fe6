//! Frequency-domain sensor-wise transformer encoder.
//!
//! A batch of per-channel feature rows is embedded, passed through
//! `n_blocks` encoder blocks (masked single-head attention, residual,
//! layer norm, feed-forward, residual, layer norm), mean pooled over tokens
//! and classified.

mod config;
mod mask;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::{AttentionMode, MaskMode, ModelConfig, NormMode};
pub use mask::{build_mask, SensorMask};

use crate::error::{Error, Result};
use crate::numerics::{ParamSet, Tape, Tensor, Var};
use crate::spectral::featurize;

pub const CHECKPOINT_FORMAT: &str = "FREQHAR-CHECKPOINT-v1";

#[derive(Clone, Copy, Debug)]
enum Init {
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    Xavier(usize, usize),
    Zeros,
    Ones,
}

fn block_prefix(b: usize) -> String {
    format!("block{b}")
}

/// Name, shape and initializer of every trainable tensor, in initialization
/// order.
fn param_specs(c: &ModelConfig) -> Vec<(String, Vec<usize>, Init)> {
    let d = c.d_model;
    let mut specs = vec![
        ("embed.weight".to_string(), vec![c.token_dim(), d], Init::Xavier(c.token_dim(), d)),
        ("embed.bias".to_string(), vec![d], Init::Zeros),
    ];
    for b in 0..c.n_blocks {
        let p = block_prefix(b);
        for h in ["q", "k", "v"] {
            specs.push((format!("{p}.attn.{h}.weight"), vec![d, d], Init::Xavier(d, d)));
            specs.push((format!("{p}.attn.{h}.bias"), vec![d], Init::Zeros));
        }
        for ln in ["ln_a", "ln_f"] {
            specs.push((format!("{p}.{ln}.gain"), vec![d], Init::Ones));
            specs.push((format!("{p}.{ln}.bias"), vec![d], Init::Zeros));
        }
        specs.push((format!("{p}.ffn.w1"), vec![d, c.d_ff], Init::Xavier(d, c.d_ff)));
        specs.push((format!("{p}.ffn.b1"), vec![c.d_ff], Init::Zeros));
        specs.push((format!("{p}.ffn.w2"), vec![c.d_ff, d], Init::Xavier(c.d_ff, d)));
        specs.push((format!("{p}.ffn.b2"), vec![d], Init::Zeros));
    }
    specs.push(("classifier.weight".to_string(), vec![d, c.classes], Init::Xavier(d, c.classes)));
    specs.push(("classifier.bias".to_string(), vec![c.classes], Init::Zeros));
    specs
}

/// Freshly initialized parameters for `config`, deterministic in `seed`.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ParamSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    for (name, shape, init) in param_specs(config) {
        let n: usize = shape.iter().product();
        let values = match init {
            Init::Xavier(fan_in, fan_out) => {
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                (0..n).map(|_| rng.gen_range(-a..a)).collect()
            }
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
        };
        params.insert(name, Tensor::new(shape, values)?)?;
    }
    Ok(params)
}

/// Tape handles for every parameter of a model.
pub struct BoundParams {
    names: Vec<String>,
    vars: Vec<Var>,
}

impl BoundParams {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vars[i])
            .ok_or_else(|| Error::Checkpoint(format!("parameter {name} not bound")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.names.iter().map(String::as_str).zip(self.vars.iter().copied())
    }
}

/// Tape handles produced by one forward pass.
pub struct ForwardVars {
    /// `[batch, classes]`.
    pub logits: Var,
    /// Attention weights of each block, `[batch, tokens, tokens]`.
    pub attention: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: ParamSet,
    mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    config: ModelConfig,
    params: serde_json::Value,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let params = init_params(&config, seed)?;
        Self::from_params(config, params)
    }

    /// Wraps existing parameters, checking that names and shapes match.
    pub fn from_params(config: ModelConfig, params: ParamSet) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(&config);
        if specs.len() != params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter tensors, found {}",
                specs.len(),
                params.len()
            )));
        }
        for (name, shape, _) in &specs {
            let t = params
                .get(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "parameter {name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
            if !t.all_finite() {
                return Err(Error::Checkpoint(format!("parameter {name} is not finite")));
            }
        }
        let mask = match (config.attention_mode, config.mask_mode) {
            (AttentionMode::SensorWise, MaskMode::Selective) => {
                build_mask(config.sensors, config.axes).as_slice().to_vec()
            }
            _ => vec![true; config.tokens() * config.tokens()],
        };
        Ok(Self { config, params, mask })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }

    /// Token-by-token admissibility used in attention, row-major.
    pub fn attention_mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn param_count(&self) -> usize {
        self.params.scalar_count()
    }

    /// Features for one raw `M × T` window under this model's feature mode.
    pub fn featurize(&self, window: &Tensor) -> Result<Tensor> {
        let c = &self.config;
        if window.shape() != [c.channels, c.window_len] {
            return Err(Error::dim(
                "featurize",
                format!(
                    "window {:?}, model expects [{}, {}]",
                    window.shape(),
                    c.channels,
                    c.window_len
                ),
            ));
        }
        featurize(window, c.feature_mode, &c.features)
    }

    pub fn bind(&self, tape: &mut Tape) -> Result<BoundParams> {
        let mut names = Vec::with_capacity(self.params.len());
        let mut vars = Vec::with_capacity(self.params.len());
        for (name, t) in self.params.iter() {
            names.push(name.to_string());
            vars.push(tape.leaf(t.clone())?);
        }
        Ok(BoundParams { names, vars })
    }

    /// Stacks per-sample `M × L` features into the `[batch · tokens, token_dim]`
    /// encoder input.
    fn stack(&self, batch: &[&Tensor]) -> Result<Tensor> {
        let c = &self.config;
        let (m, l) = (c.channels, c.input_len());
        if batch.is_empty() {
            return Err(Error::dim("forward", "empty batch"));
        }
        let mut values = Vec::with_capacity(batch.len() * m * l);
        for f in batch {
            if f.shape() != [m, l] {
                return Err(Error::dim(
                    "forward",
                    format!("features {:?}, model expects [{m}, {l}]", f.shape()),
                ));
            }
            match c.attention_mode {
                AttentionMode::SensorWise => values.extend_from_slice(f.values()),
                AttentionMode::Temporal => {
                    for pos in 0..l {
                        values.extend((0..m).map(|ch| f.values()[ch * l + pos]));
                    }
                }
            }
        }
        Tensor::new(vec![batch.len() * c.tokens(), c.token_dim()], values)
    }

    fn norm(&self, tape: &mut Tape, p: &BoundParams, x: Var, name: &str, b: usize) -> Result<Var> {
        let c = &self.config;
        let gain = p.var(&format!("{name}.gain"))?;
        let bias = p.var(&format!("{name}.bias"))?;
        match c.norm_mode {
            NormMode::PerToken => tape.layer_norm(x, gain, bias, c.ln_eps),
            NormMode::AcrossTokens => {
                let g = tape.reshape(x, &[b, c.tokens(), c.d_model])?;
                let n = tape.layer_norm_tokens(g, gain, bias, c.ln_eps)?;
                tape.reshape(n, &[b * c.tokens(), c.d_model])
            }
        }
    }

    fn linear(&self, tape: &mut Tape, p: &BoundParams, x: Var, w: &str, b: &str) -> Result<Var> {
        let y = tape.matmul(x, p.var(w)?)?;
        tape.add_bias(y, p.var(b)?)
    }

    /// Records a forward pass over `batch` on `tape`.
    pub fn forward(&self, tape: &mut Tape, p: &BoundParams, batch: &[&Tensor]) -> Result<ForwardVars> {
        let c = &self.config;
        let b = batch.len();
        let (n, d) = (c.tokens(), c.d_model);
        let canonical = c.attention_mode == AttentionMode::SensorWise;
        let x = tape.leaf(self.stack(batch)?)?;
        let mut h = self.linear(tape, p, x, "embed.weight", "embed.bias")?;
        let mut attention = Vec::with_capacity(c.n_blocks);
        let scale = 1.0 / (d as f64).sqrt();
        for blk in 0..c.n_blocks {
            let pre = block_prefix(blk);
            let mut heads = Vec::with_capacity(3);
            for which in ["q", "k", "v"] {
                let proj = self.linear(
                    tape,
                    p,
                    h,
                    &format!("{pre}.attn.{which}.weight"),
                    &format!("{pre}.attn.{which}.bias"),
                )?;
                heads.push(tape.reshape(proj, &[b, n, d])?);
            }
            let s = tape.scores(heads[0], heads[1], scale)?;
            let probs = tape.masked_softmax_rows(s, &self.mask)?;
            attention.push(probs);
            let ctx = tape.attend(probs, heads[2], canonical)?;
            let ctx = tape.reshape(ctx, &[b * n, d])?;
            let r = tape.add(h, ctx)?;
            let a = self.norm(tape, p, r, &format!("{pre}.ln_a"), b)?;
            let f = self.linear(tape, p, a, &format!("{pre}.ffn.w1"), &format!("{pre}.ffn.b1"))?;
            let f = tape.gelu(f)?;
            let f = self.linear(tape, p, f, &format!("{pre}.ffn.w2"), &format!("{pre}.ffn.b2"))?;
            let r = tape.add(a, f)?;
            h = self.norm(tape, p, r, &format!("{pre}.ln_f"), b)?;
        }
        let grouped = tape.reshape(h, &[b, n, d])?;
        let pooled = tape.group_mean(grouped, canonical)?;
        let logits = self.linear(tape, p, pooled, "classifier.weight", "classifier.bias")?;
        Ok(ForwardVars { logits, attention })
    }

    /// Class logits `[batch, classes]` for pre-computed features.
    pub fn logits(&self, batch: &[&Tensor]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape)?;
        let out = self.forward(&mut tape, &p, batch)?;
        Ok(tape.value(out.logits).clone())
    }

    /// Attention weights of the last block for a single sample, `tokens × tokens`.
    pub fn attention_map(&self, features: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let p = self.bind(&mut tape)?;
        let out = self.forward(&mut tape, &p, &[features])?;
        let last = *out.attention.last().expect("at least one block");
        let n = self.config.tokens();
        tape.value(last).reshaped(&[n, n])
    }

    /// Predicted class per sample; ties go to the lowest class index.
    pub fn predict(&self, batch: &[&Tensor]) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.logits(batch)?))
    }

    pub fn to_checkpoint_json(&self) -> String {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            config: self.config.clone(),
            params: self.params.to_json_value(),
        };
        serde_json::to_string(&file).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown checkpoint format {:?}", file.format)));
        }
        Self::from_params(file.config, ParamSet::from_json_value(file.params)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile {
                path: path.to_path_buf(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_json(&text)
    }
}

/// Row-wise argmax of a `[rows, cols]` tensor, lowest index on ties.
pub fn argmax_rows(t: &Tensor) -> Vec<usize> {
    t.values()
        .chunks(t.cols())
        .map(|row| {
            let mut best = 0;
            for (i, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
