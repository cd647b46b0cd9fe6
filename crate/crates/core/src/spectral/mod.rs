//! Frequency-domain features for multichannel IMU windows.
//!
//! A window `M × T` is transformed channel by channel, the DC bin and the
//! redundant conjugate half are dropped, and the remaining `⌊T/2⌋` bins are
//! turned into amplitude and/or phase features.

mod fft;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fft::{dft_real, fft_real, inverse_dft, Complex, MAX_RADIX};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Smallest window length that leaves at least two retained bins.
pub const MIN_WINDOW_LEN: usize = 4;

/// Complex spectra of the `M` channels of one window.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrum {
    signal_len: usize,
    first_bin: usize,
    bins: Vec<Vec<Complex>>,
}

impl ComplexSpectrum {
    /// Full spectrum (bins `0..T`) of every row of `signals`.
    pub fn from_signals(signals: &[&[f64]]) -> Self {
        let signal_len = signals.first().map_or(0, |s| s.len());
        Self {
            signal_len,
            first_bin: 0,
            bins: signals.iter().map(|s| fft_real(s)).collect(),
        }
    }

    pub fn channels(&self) -> usize {
        self.bins.len()
    }

    /// Number of bins held per channel.
    pub fn bin_count(&self) -> usize {
        self.bins.first().map_or(0, Vec::len)
    }

    /// Length of the time-domain signal the spectrum came from.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    /// Index (in the full spectrum) of the first held bin.
    pub fn first_bin(&self) -> usize {
        self.first_bin
    }

    pub fn channel(&self, m: usize) -> &[Complex] {
        &self.bins[m]
    }

    /// Elementwise `sqrt(a² + b²)`, one row per channel.
    pub fn amplitude(&self) -> Vec<Vec<f64>> {
        self.bins
            .iter()
            .map(|row| row.iter().map(|c| c.norm()).collect())
            .collect()
    }

    /// Elementwise `atan2(b, a)` in `(-π, π]`, one row per channel.
    pub fn phase(&self) -> Vec<Vec<f64>> {
        self.bins
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        let p = c.arg();
                        if p == -PI {
                            PI
                        } else {
                            p
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Number of bins kept after truncation.
pub fn retained_bins(signal_len: usize, include_nyquist: bool) -> usize {
    let half = signal_len / 2;
    if !include_nyquist && signal_len.is_multiple_of(2) {
        half - 1
    } else {
        half
    }
}

/// Keeps bins `1..=⌊T/2⌋` of a full spectrum. With `include_nyquist` unset
/// and even `T`, bin `T/2` is dropped as well.
pub fn truncate_spectrum(spec: &ComplexSpectrum, include_nyquist: bool) -> Result<ComplexSpectrum> {
    let t = spec.signal_len;
    if t < MIN_WINDOW_LEN {
        return Err(Error::WindowTooShort {
            len: t,
            min: MIN_WINDOW_LEN,
        });
    }
    if spec.first_bin != 0 || spec.bin_count() != t {
        return Err(Error::Config("spectrum is already truncated".into()));
    }
    let keep = retained_bins(t, include_nyquist);
    Ok(ComplexSpectrum {
        signal_len: t,
        first_bin: 1,
        bins: spec.bins.iter().map(|row| row[1..=keep].to_vec()).collect(),
    })
}

/// Which representation of a window the model consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    Amplitude,
    Phase,
    AmplitudePhase,
    Time,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 4] = [
        FeatureMode::Amplitude,
        FeatureMode::Phase,
        FeatureMode::AmplitudePhase,
        FeatureMode::Time,
    ];

    /// Feature length per channel for a window of `signal_len` samples.
    pub fn feature_len(self, signal_len: usize, options: &FeatureOptions) -> usize {
        let bins = retained_bins(signal_len, options.include_nyquist);
        match self {
            FeatureMode::Amplitude | FeatureMode::Phase => bins,
            FeatureMode::AmplitudePhase => 2 * bins,
            FeatureMode::Time => signal_len,
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Amplitude => "amplitude",
            FeatureMode::Phase => "phase",
            FeatureMode::AmplitudePhase => "amplitude-phase",
            FeatureMode::Time => "time",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "amplitude" | "amp" => Ok(FeatureMode::Amplitude),
            "phase" => Ok(FeatureMode::Phase),
            "amplitude-phase" | "amp-phase" | "amplitudephase" => Ok(FeatureMode::AmplitudePhase),
            "time" => Ok(FeatureMode::Time),
            other => Err(Error::Config(format!("unknown feature mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    /// Keep bin `T/2` for even `T`.
    pub include_nyquist: bool,
    /// Z-score every channel's feature row.
    pub standardize: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            include_nyquist: true,
            standardize: false,
        }
    }
}

fn standardize_rows(rows: &mut [Vec<f64>]) {
    for row in rows {
        let n = row.len() as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
        row.iter_mut().for_each(|v| *v = (*v - mean) * inv);
    }
}

/// Turns an `M × T` window into the `M × L` model input for `mode`.
pub fn featurize(window: &Tensor, mode: FeatureMode, options: &FeatureOptions) -> Result<Tensor> {
    if window.shape().len() != 2 {
        return Err(Error::dim("featurize", format!("window {:?}", window.shape())));
    }
    let (m, t) = (window.shape()[0], window.shape()[1]);
    let mut rows: Vec<Vec<f64>> = match mode {
        FeatureMode::Time => (0..m).map(|i| window.row(i).to_vec()).collect(),
        _ => {
            let signals: Vec<&[f64]> = (0..m).map(|i| window.row(i)).collect();
            let full = ComplexSpectrum::from_signals(&signals);
            let spec = truncate_spectrum(&full, options.include_nyquist)?;
            match mode {
                FeatureMode::Amplitude => spec.amplitude(),
                FeatureMode::Phase => spec.phase(),
                FeatureMode::AmplitudePhase => spec
                    .amplitude()
                    .into_iter()
                    .zip(spec.phase())
                    .map(|(mut a, p)| {
                        a.extend(p);
                        a
                    })
                    .collect(),
                FeatureMode::Time => unreachable!(),
            }
        }
    };
    if options.standardize {
        standardize_rows(&mut rows);
    }
    let len = mode.feature_len(t, options);
    Tensor::new(vec![m, len], rows.concat())
}
