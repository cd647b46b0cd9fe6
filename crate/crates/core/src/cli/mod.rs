//! Command-line front end: `prepare`, `train`, `eval`, `bench`,
//! `analyze-shift` and `export-attn`.
//!
//! Every command except `prepare` writes into `<out>/<command>-<hash8>`,
//! where `hash8` is the first eight hex digits of the SHA-256 of the resolved
//! configuration, and stores that configuration as `config.json` inside the
//! run directory. `train` also records its run directory name in
//! `<out>/LATEST`, which later commands use when `--checkpoint` is omitted.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    bench_latency, cost_report, evaluate, export_attention, prediction_log_csv, shift_report, DEFAULT_BINS,
};
use crate::data::source::DataSource;
use crate::data::{resample, split, write_canonical, windows_from_recordings, SplitManifest, WindowConfig};
use crate::error::{Error, Result};
use crate::model::{AttentionMode, MaskMode, Model, ModelConfig};
use crate::numerics::Tensor;
use crate::spectral::FeatureMode;
use crate::training::{fit_with_progress, TrainConfig, TrainReport};

pub const LATEST_FILE: &str = "LATEST";

/// Exit status for runtime failures.
pub const EXIT_FAILURE: u8 = 1;
/// Exit status for malformed invocations and invalid configurations.
pub const EXIT_USAGE: u8 = 2;

/// Everything a run needs, loaded from `--config` and then overridden by
/// flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub target: Option<String>,
    pub target_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
    pub target_hz: f64,
    pub window: WindowConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub runs: usize,
    pub bins: usize,
    pub window_index: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            data_dir: None,
            target: None,
            target_dir: None,
            out_dir: PathBuf::from("runs"),
            checkpoint: None,
            seed: 0,
            target_hz: 20.0,
            window: WindowConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            runs: 100,
            bins: DEFAULT_BINS,
            window_index: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile {
                path: path.to_path_buf(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if !(self.target_hz > 0.0) {
            return Err(Error::Config("target_hz must be positive".into()));
        }
        let samples = self.window.seconds * self.target_hz;
        if (samples - self.model.window_len as f64).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "window of {} s at {} Hz gives {samples} samples but the model expects {}",
                self.window.seconds, self.target_hz, self.model.window_len
            )));
        }
        Ok(())
    }

    /// First eight hex digits of the SHA-256 of `command` and this config.
    pub fn hash8(&self, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0u8]);
        h.update(serde_json::to_string(self).expect("config serializes").as_bytes());
        let digest = h.finalize();
        digest[..4].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Parser, Debug)]
#[command(name = "freqhar", version, about = "Frequency-domain sensor-wise HAR toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest a raw dataset into canonical CSV recordings plus a split manifest.
    Prepare(PrepareArgs),
    /// Train on one source dataset.
    Train(RunArgs),
    /// Evaluate a checkpoint on a target dataset.
    Eval(RunArgs),
    /// Parameter, FLOPs and latency report for a checkpoint.
    Bench(RunArgs),
    /// Per-channel EMD between two datasets in time, amplitude and phase.
    AnalyzeShift(RunArgs),
    /// Attention map of one window as CSV.
    ExportAttn(RunArgs),
}

#[derive(Args, Debug)]
struct PrepareArgs {
    #[arg(long)]
    dataset: DataSource,
    /// Raw dataset directory; defaults to the data root.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20.0)]
    target_hz: f64,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Source dataset: uci, shoaib, motion, hhar or syn-a..syn-d.
    #[arg(long)]
    dataset: Option<DataSource>,
    /// Source data directory (raw layout or prepared canonical).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Target dataset for eval and analyze-shift.
    #[arg(long)]
    target: Option<DataSource>,
    /// Target data directory.
    #[arg(long)]
    target_in: Option<PathBuf>,
    /// Output root for run directories [default: runs].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Split, initialization and shuffle seed.
    #[arg(long)]
    seed: Option<u64>,
    /// amplitude, phase, amplitude-phase or time.
    #[arg(long)]
    feature_mode: Option<FeatureMode>,
    /// sensor-wise or temporal.
    #[arg(long)]
    attention_mode: Option<AttentionMode>,
    /// selective or full.
    #[arg(long)]
    mask_mode: Option<MaskMode>,
    /// Checkpoint file [default: the latest train run].
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Timed forward passes for bench.
    #[arg(long)]
    runs: Option<usize>,
    /// Histogram bins for analyze-shift.
    #[arg(long)]
    bins: Option<usize>,
    /// Window exported by export-attn.
    #[arg(long)]
    window_index: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.dataset {
            c.dataset = Some(d.id());
        }
        if let Some(p) = &self.input {
            c.data_dir = Some(p.clone());
        }
        if let Some(t) = &self.target {
            c.target = Some(t.id());
        }
        if let Some(p) = &self.target_in {
            c.target_dir = Some(p.clone());
        }
        if let Some(o) = &self.out {
            c.out_dir = o.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(f) = self.feature_mode {
            c.model.feature_mode = f;
        }
        if let Some(a) = self.attention_mode {
            c.model.attention_mode = a;
            if a == AttentionMode::Temporal && self.mask_mode.is_none() {
                c.model.mask_mode = MaskMode::Full;
            }
        }
        if let Some(m) = self.mask_mode {
            c.model.mask_mode = m;
        }
        if let Some(p) = &self.checkpoint {
            c.checkpoint = Some(p.clone());
        }
        if let Some(e) = self.epochs {
            c.train.epochs = e;
        }
        if let Some(b) = self.batch_size {
            c.train.batch_size = b;
        }
        if let Some(lr) = self.lr {
            c.train.adam.lr = lr;
        }
        if let Some(r) = self.runs {
            c.runs = r;
        }
        if let Some(b) = self.bins {
            c.bins = b;
        }
        if let Some(i) = self.window_index {
            c.window_index = i;
        }
        c.train.seed = c.seed;
        c.validate()?;
        Ok(c)
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn source(name: &Option<String>, what: &str) -> Result<DataSource> {
    name.as_deref()
        .ok_or_else(|| Error::Config(format!("--{what} is required")))?
        .parse()
}

/// Creates `<out>/<command>-<hash8>` and stores the resolved config in it.
fn run_dir(command: &str, config: &RunConfig) -> Result<PathBuf> {
    let dir = config.out_dir.join(format!("{command}-{}", config.hash8(command)));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_json(&dir.join("config.json"), config)?;
    Ok(dir)
}

fn checkpoint_path(config: &RunConfig) -> Result<PathBuf> {
    let path = match &config.checkpoint {
        Some(p) => p.clone(),
        None => {
            let latest = config.out_dir.join(LATEST_FILE);
            let name = std::fs::read_to_string(&latest).map_err(|_| {
                Error::Checkpoint(format!(
                    "checkpoint not found: no --checkpoint given and {} does not exist",
                    latest.display()
                ))
            })?;
            config.out_dir.join(name.trim()).join("checkpoint.json")
        }
    };
    if !path.is_file() {
        return Err(Error::Checkpoint(format!("checkpoint not found: {}", path.display())));
    }
    Ok(path)
}

/// Window length and rate implied by a loaded model.
fn windowing_for(model: &Model, config: &RunConfig) -> Result<WindowConfig> {
    let expected = model.config().window_len as f64 / config.target_hz;
    if (expected - config.window.seconds).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "checkpoint expects {} samples per window; {} s at {} Hz does not match",
            model.config().window_len,
            config.window.seconds,
            config.target_hz
        )));
    }
    Ok(config.window)
}

fn prepare(args: &PrepareArgs) -> Result<PathBuf> {
    if !(args.target_hz > 0.0) {
        return Err(Error::Config("--target-hz must be positive".into()));
    }
    let recs = args.dataset.recordings(args.input.as_deref())?;
    let resampled = recs
        .iter()
        .map(|r| resample(r, args.target_hz))
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let index = write_canonical(&args.out, &resampled)?;
    let wcfg = WindowConfig::default();
    let windows = windows_from_recordings(&resampled, args.target_hz, &wcfg)?;
    let manifest = SplitManifest::build(&args.dataset.id(), &windows, args.seed, args.target_hz, wcfg)?;
    write_json(&args.out.join("manifest.json"), &manifest)?;
    eprintln!(
        "{}: {} recordings, {} windows",
        args.dataset,
        index.recordings.len(),
        windows.len()
    );
    Ok(args.out.clone())
}

fn train(config: &RunConfig) -> Result<PathBuf> {
    let src = source(&config.dataset, "dataset")?;
    let windows = src.windows(config.data_dir.as_deref(), config.target_hz, &config.window)?;
    let manifest = SplitManifest::build(&src.id(), &windows, config.seed, config.target_hz, config.window)?;
    let parts = split(windows, config.seed)?;
    let dir = run_dir("train", config)?;
    write_json(&dir.join("split.json"), &manifest)?;
    let mut stderr = std::io::stderr();
    let _ = writeln!(stderr, "epoch,loss,val_acc");
    let (model, mut report) = fit_with_progress(&parts, &config.model, &config.train, &mut |r| {
        let _ = writeln!(stderr, "{},{},{}", r.epoch, r.train_loss, r.val_accuracy);
    })?;
    model.save(&dir.join("checkpoint.json"))?;
    report.checkpoint = Some("checkpoint.json".into());
    write_json(&dir.join("report.json"), &report)?;
    write_json(
        &dir.join("timing.json"),
        &serde_json::json!({ "wall_clock_secs": report.wall_clock_secs }),
    )?;
    let name = dir.file_name().expect("run dir has a name").to_string_lossy().to_string();
    write(&config.out_dir.join(LATEST_FILE), name + "\n")?;
    Ok(dir)
}

fn eval(config: &RunConfig) -> Result<PathBuf> {
    let ckpt = checkpoint_path(config)?;
    let model = Model::load(&ckpt)?;
    let tgt = source(&config.target, "target")?;
    let wcfg = windowing_for(&model, config)?;
    let mut windows = tgt.windows(config.target_dir.as_deref(), config.target_hz, &wcfg)?;
    let report: Option<TrainReport> = ckpt
        .parent()
        .map(|p| p.join("report.json"))
        .filter(|p| p.is_file())
        .and_then(|p| std::fs::read_to_string(p).ok())
        .and_then(|t| serde_json::from_str(&t).ok());
    let source_id = report.as_ref().map_or_else(|| "unknown".to_string(), |r| r.source.clone());
    if source_id == tgt.id() {
        let seed = report.map_or(config.seed, |r| r.seed);
        eprintln!("target equals source; evaluating on the held-out test partition");
        windows = split(windows, seed)?.test;
    }
    let (result, log) = evaluate(&model, &windows, &source_id, &tgt.id())?;
    let dir = run_dir("eval", config)?;
    write_json(&dir.join("eval.json"), &result)?;
    write(&dir.join("predictions.csv"), prediction_log_csv(&log))?;
    eprintln!(
        "{} -> {}: accuracy {:.2}%, macro-F1 {:.2}%",
        result.source, result.target, result.accuracy, result.macro_f1
    );
    Ok(dir)
}

/// Deterministic probe window for latency measurement.
fn probe_window(model: &Model) -> Result<Tensor> {
    let c = model.config();
    let values = (0..c.channels * c.window_len)
        .map(|i| ((i % c.window_len) as f64 * 0.3 + (i / c.window_len) as f64).sin())
        .collect();
    model.featurize(&Tensor::new(vec![c.channels, c.window_len], values)?)
}

fn bench(config: &RunConfig) -> Result<PathBuf> {
    let model = Model::load(&checkpoint_path(config)?)?;
    let features = probe_window(&model)?;
    let latency = bench_latency(&model, &features, config.runs)?;
    let report = cost_report(model.config(), Some(latency));
    let dir = run_dir("bench", config)?;
    write_json(&dir.join("cost.json"), &report)?;
    if let Some(l) = &report.latency {
        eprintln!(
            "params {}, FLOPs A {}, FLOPs B {}, latency mean {:.6} s",
            report.param_count, report.flops_a, report.flops_b, l.mean
        );
    }
    Ok(dir)
}

fn analyze_shift(config: &RunConfig) -> Result<PathBuf> {
    let a = source(&config.dataset, "dataset")?;
    let b = source(&config.target, "target")?;
    let wa = a.windows(config.data_dir.as_deref(), config.target_hz, &config.window)?;
    let wb = b.windows(config.target_dir.as_deref(), config.target_hz, &config.window)?;
    let report = shift_report(&a.id(), &wa, &b.id(), &wb, config.bins)?;
    let dir = run_dir("analyze-shift", config)?;
    write_json(&dir.join("shift.json"), &report)?;
    let mut csv = String::from("channel,time,amplitude,phase,time_raw,amplitude_raw,phase_raw\n");
    for c in &report.channels {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.channel,
            c.time.normalized,
            c.amplitude.normalized,
            c.phase.normalized,
            c.time.emd,
            c.amplitude.emd,
            c.phase.emd
        ));
    }
    write(&dir.join("shift.csv"), csv)?;
    Ok(dir)
}

fn export_attn(config: &RunConfig) -> Result<PathBuf> {
    let model = Model::load(&checkpoint_path(config)?)?;
    let src = source(&config.dataset, "dataset")?;
    let wcfg = windowing_for(&model, config)?;
    let windows = src.windows(config.data_dir.as_deref(), config.target_hz, &wcfg)?;
    let w = windows.get(config.window_index).ok_or_else(|| {
        Error::Data(format!(
            "window index {} out of range for {} windows",
            config.window_index,
            windows.len()
        ))
    })?;
    let export = export_attention(&model, &model.featurize(&w.values)?)?;
    let dir = run_dir("export-attn", config)?;
    write(&dir.join("attention.csv"), export.to_csv())?;
    Ok(dir)
}

fn dispatch(cli: &Cli) -> Result<PathBuf> {
    match &cli.command {
        Command::Prepare(a) => prepare(a),
        Command::Train(a) => train(&a.resolve()?),
        Command::Eval(a) => eval(&a.resolve()?),
        Command::Bench(a) => bench(&a.resolve()?),
        Command::AnalyzeShift(a) => analyze_shift(&a.resolve()?),
        Command::ExportAttn(a) => export_attn(&a.resolve()?),
    }
}

/// Parses `args` (including the program name), runs the command and maps
/// the outcome to an exit status: 0 success, 1 runtime failure, 2 usage.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_FAILURE),
            }
        }
    }
}
