//! Canonical IMU recordings, resampling, windowing and deterministic splits.

pub mod adapters;
pub mod source;
pub mod synthetic;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub use adapters::{ingest, read_canonical, write_canonical};

/// Channel order of every recording and window.
pub const CHANNEL_NAMES: [&str; 6] = ["Ax", "Ay", "Az", "Gx", "Gy", "Gz"];
pub const NUM_CHANNELS: usize = 6;
pub const NUM_CLASSES: usize = 4;

/// Canonical activity classes shared by all four datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    /// Standing or sitting.
    Still = 0,
    Walking = 1,
    Upstairs = 2,
    Downstairs = 3,
}

impl Activity {
    pub const ALL: [Activity; NUM_CLASSES] = [
        Activity::Still,
        Activity::Walking,
        Activity::Upstairs,
        Activity::Downstairs,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Activity::Still => "still",
            Activity::Walking => "walking",
            Activity::Upstairs => "upstairs",
            Activity::Downstairs => "downstairs",
        }
    }
}

/// The public datasets with an ingest adapter, plus the canonical CSV layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Uci,
    Shoaib,
    Motion,
    Hhar,
    Canonical,
}

impl DatasetKind {
    pub const PUBLIC: [DatasetKind; 4] = [
        DatasetKind::Uci,
        DatasetKind::Shoaib,
        DatasetKind::Motion,
        DatasetKind::Hhar,
    ];

    pub fn id(self) -> &'static str {
        match self {
            DatasetKind::Uci => "uci",
            DatasetKind::Shoaib => "shoaib",
            DatasetKind::Motion => "motion",
            DatasetKind::Hhar => "hhar",
            DatasetKind::Canonical => "canonical",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uci" | "uci-har" | "hapt" => Ok(DatasetKind::Uci),
            "shoaib" => Ok(DatasetKind::Shoaib),
            "motion" | "motionsense" => Ok(DatasetKind::Motion),
            "hhar" => Ok(DatasetKind::Hhar),
            "canonical" => Ok(DatasetKind::Canonical),
            other => Err(Error::Config(format!("unknown dataset {other:?}"))),
        }
    }
}

/// Dataset-native activity names → canonical classes. Names that are not in
/// the map are dropped, never reassigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    entries: HashMap<String, Activity>,
}

fn label_key(name: &str) -> String {
    name.trim()
        .to_ascii_lowercase()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect()
}

impl LabelMap {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, Activity)>) -> Self {
        Self {
            entries: pairs.into_iter().map(|(k, v)| (label_key(k), v)).collect(),
        }
    }

    pub fn for_dataset(kind: DatasetKind) -> Self {
        use Activity::*;
        match kind {
            DatasetKind::Uci => Self::new([
                ("WALKING", Walking),
                ("WALKING_UPSTAIRS", Upstairs),
                ("WALKING_DOWNSTAIRS", Downstairs),
                ("SITTING", Still),
                ("STANDING", Still),
            ]),
            DatasetKind::Motion => Self::new([
                ("wlk", Walking),
                ("ups", Upstairs),
                ("dws", Downstairs),
                ("sit", Still),
                ("std", Still),
            ]),
            DatasetKind::Hhar => Self::new([
                ("walk", Walking),
                ("stairsup", Upstairs),
                ("stairsdown", Downstairs),
                ("sit", Still),
                ("stand", Still),
            ]),
            DatasetKind::Shoaib => Self::new([
                ("walking", Walking),
                ("upstairs", Upstairs),
                ("downstairs", Downstairs),
                ("sitting", Still),
                ("standing", Still),
            ]),
            DatasetKind::Canonical => Self::new(Activity::ALL.map(|a| (a.name(), a))),
        }
    }

    /// Case, spacing and punctuation are ignored when matching names.
    pub fn map(&self, native: &str) -> Option<Activity> {
        self.entries.get(&label_key(native)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One subject/device/session stream, uniformly sampled, channels in
/// [`CHANNEL_NAMES`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecording {
    pub dataset: String,
    pub subject: String,
    pub device: String,
    pub session: String,
    pub sample_rate: f64,
    pub channels: [Vec<f64>; NUM_CHANNELS],
    /// Per-sample canonical label; `None` for activities outside the label map.
    pub labels: Vec<Option<Activity>>,
}

impl RawRecording {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::Data(format!(
                "recording {}/{}: sample rate {} must be positive",
                self.dataset, self.subject, self.sample_rate
            )));
        }
        let n = self.labels.len();
        if self.channels.iter().any(|c| c.len() != n) {
            return Err(Error::Data(format!(
                "recording {}/{}: channel lengths differ",
                self.dataset, self.subject
            )));
        }
        if self.channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "recording {}/{}: non-finite sample",
                self.dataset, self.subject
            )));
        }
        Ok(())
    }

    pub(crate) fn sort_key(&self) -> (String, SortKey, SortKey, SortKey) {
        (
            self.dataset.clone(),
            SortKey::from(&self.subject),
            SortKey::from(&self.device),
            SortKey::from(&self.session),
        )
    }
}

/// Orders numeric ids numerically and everything else lexically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum SortKey {
    Num(u64),
    Text(String),
}

impl From<&String> for SortKey {
    fn from(s: &String) -> Self {
        s.parse().map_or_else(|_| SortKey::Text(s.clone()), SortKey::Num)
    }
}

pub(crate) fn sort_recordings(recs: &mut [RawRecording]) {
    recs.sort_by_key(|a| a.sort_key());
}

/// Where a window came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub subject: String,
    pub device: String,
    pub session: String,
    /// Index of the first sample in the (resampled) recording.
    pub start: usize,
}

/// A fixed-length `M × T` sample with one label.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub values: Tensor,
    pub label: Activity,
    pub provenance: Provenance,
}

impl Window {
    pub fn channels(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn len(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Linear interpolation onto a uniform `target_hz` grid; labels are taken
/// from the nearest source sample.
pub fn resample(rec: &RawRecording, target_hz: f64) -> Result<RawRecording> {
    if !(target_hz > 0.0 && target_hz.is_finite()) {
        return Err(Error::Config(format!("target rate {target_hz} must be positive")));
    }
    rec.validate()?;
    if target_hz == rec.sample_rate || rec.is_empty() {
        return Ok(RawRecording {
            sample_rate: target_hz,
            ..rec.clone()
        });
    }
    let n = rec.len();
    let ratio = rec.sample_rate / target_hz;
    let out_len = (((n - 1) as f64) / ratio).floor() as usize + 1;
    let mut channels: [Vec<f64>; NUM_CHANNELS] = Default::default();
    let mut labels = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let pos = j as f64 * ratio;
        let i0 = (pos.floor() as usize).min(n - 1);
        let frac = pos - i0 as f64;
        let i1 = (i0 + 1).min(n - 1);
        for (out, src) in channels.iter_mut().zip(&rec.channels) {
            out.push(if frac == 0.0 {
                src[i0]
            } else {
                src[i0] * (1.0 - frac) + src[i1] * frac
            });
        }
        labels.push(rec.labels[(pos.round() as usize).min(n - 1)]);
    }
    Ok(RawRecording {
        dataset: rec.dataset.clone(),
        subject: rec.subject.clone(),
        device: rec.device.clone(),
        session: rec.session.clone(),
        sample_rate: target_hz,
        channels,
        labels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub seconds: f64,
    pub stride_seconds: f64,
    /// Minimum share of samples carrying the majority label.
    pub purity: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            seconds: 6.0,
            stride_seconds: 6.0,
            purity: 0.95,
        }
    }
}

fn whole_samples(seconds: f64, rate: f64, what: &str) -> Result<usize> {
    let n = seconds * rate;
    let rounded = n.round();
    if (n - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(Error::Config(format!(
            "{what} of {seconds} s at {rate} Hz is not a whole number of samples"
        )));
    }
    Ok(rounded as usize)
}

/// Cuts a recording into fixed-length windows, keeping only windows whose
/// majority label covers at least `config.purity` of the samples.
pub fn window(rec: &RawRecording, config: &WindowConfig) -> Result<Vec<Window>> {
    rec.validate()?;
    let len = whole_samples(config.seconds, rec.sample_rate, "window")?;
    let stride = whole_samples(config.stride_seconds, rec.sample_rate, "stride")?;
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= rec.len() {
        let mut counts = [0usize; NUM_CLASSES];
        for l in rec.labels[start..start + len].iter().flatten() {
            counts[l.index()] += 1;
        }
        let (best, count) = counts
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
        if count > 0 && count as f64 >= config.purity * len as f64 {
            let mut values = Vec::with_capacity(NUM_CHANNELS * len);
            for ch in &rec.channels {
                values.extend_from_slice(&ch[start..start + len]);
            }
            out.push(Window {
                values: Tensor::new(vec![NUM_CHANNELS, len], values)?,
                label: Activity::from_index(best).expect("class index"),
                provenance: Provenance {
                    dataset: rec.dataset.clone(),
                    subject: rec.subject.clone(),
                    device: rec.device.clone(),
                    session: rec.session.clone(),
                    start,
                },
            });
        }
        start += stride;
    }
    Ok(out)
}

/// Resamples to `target_hz` and windows every recording.
pub fn windows_from_recordings(
    recs: &[RawRecording],
    target_hz: f64,
    config: &WindowConfig,
) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    for rec in recs {
        out.extend(window(&resample(rec, target_hz)?, config)?);
    }
    Ok(out)
}

/// Train / validation / test partitions of one source dataset.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<Window>,
    pub val: Vec<Window>,
    pub test: Vec<Window>,
}

/// Window counts for an 80/10/10 split of `n` windows.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let val = (n as f64 * 0.1).round() as usize;
    let test = val;
    (n - val - test, val, test)
}

/// Fisher–Yates permutation of `0..n` driven by a portable ChaCha stream.
pub fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        idx.swap(i, j);
    }
    idx
}

/// Shuffles with `seed` and partitions 80/10/10.
pub fn split(windows: Vec<Window>, seed: u64) -> Result<DatasetSplit> {
    let (train, val, test) = split_indices(windows.len(), seed)?;
    let mut slots: Vec<Option<Window>> = windows.into_iter().map(Some).collect();
    let mut take = |ids: &[usize]| -> Vec<Window> {
        ids.iter().map(|&i| slots[i].take().expect("index used once")).collect()
    };
    Ok(DatasetSplit {
        seed,
        train: take(&train),
        val: take(&val),
        test: take(&test),
    })
}

/// Indices of each partition, in shuffled order.
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if n < 10 {
        return Err(Error::Data(format!("need at least 10 windows to split, got {n}")));
    }
    let perm = seeded_permutation(n, seed);
    let (n_train, n_val, _) = split_sizes(n);
    Ok((
        perm[..n_train].to_vec(),
        perm[n_train..n_train + n_val].to_vec(),
        perm[n_train + n_val..].to_vec(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Position in the windowed dataset before shuffling.
    pub index: usize,
    pub label: Activity,
    pub provenance: Provenance,
}

/// JSON description of a split: which windows went where.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub dataset: String,
    pub seed: u64,
    pub target_hz: f64,
    pub window: WindowConfig,
    pub total_windows: usize,
    pub train: Vec<ManifestEntry>,
    pub val: Vec<ManifestEntry>,
    pub test: Vec<ManifestEntry>,
}

impl SplitManifest {
    pub fn build(
        dataset: &str,
        windows: &[Window],
        seed: u64,
        target_hz: f64,
        window: WindowConfig,
    ) -> Result<Self> {
        let (tr, va, te) = split_indices(windows.len(), seed)?;
        let entries = |ids: &[usize]| {
            ids.iter()
                .map(|&i| ManifestEntry {
                    index: i,
                    label: windows[i].label,
                    provenance: windows[i].provenance.clone(),
                })
                .collect()
        };
        Ok(Self {
            dataset: dataset.to_string(),
            seed,
            target_hz,
            window,
            total_windows: windows.len(),
            train: entries(&tr),
            val: entries(&va),
            test: entries(&te),
        })
    }
}

/// Per-class window counts.
pub fn class_counts(windows: &[Window]) -> [usize; NUM_CLASSES] {
    let mut c = [0; NUM_CLASSES];
    for w in windows {
        c[w.label.index()] += 1;
    }
    c
}
