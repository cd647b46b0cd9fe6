//! One-dimensional earth mover's distance and per-channel domain-shift
//! tables.

use serde::{Deserialize, Serialize};

use crate::data::{Window, CHANNEL_NAMES};
use crate::error::{Error, Result};
use crate::spectral::{truncate_spectrum, ComplexSpectrum};

pub const DEFAULT_BINS: usize = 100;

/// EMD between two empirical distributions over a shared grid.
///
/// Samples are snapped to the nearest of `bins + 1` equally spaced points
/// spanning the pooled range; the distance is the bin width times the L1
/// gap between the two cumulative histograms. Grid-aligned samples get their
/// exact optimal-transport cost. A zero pooled range gives 0.
pub fn emd_1d(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Data("emd needs two non-empty samples".into()));
    }
    if bins == 0 {
        return Err(Error::Config("emd needs at least one bin".into()));
    }
    if !a.iter().chain(b).all(|v| v.is_finite()) {
        return Err(Error::NonFinite { op: "emd_1d" });
    }
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range == 0.0 {
        return Ok(0.0);
    }
    let width = range / bins as f64;
    let hist = |xs: &[f64]| {
        let mut h = vec![0.0; bins + 1];
        for x in xs {
            let k = ((x - lo) / width).round().clamp(0.0, bins as f64) as usize;
            h[k] += 1.0;
        }
        let n = xs.len() as f64;
        h.iter_mut().for_each(|v| *v /= n);
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    let (mut ca, mut cb, mut gap) = (0.0, 0.0, 0.0);
    for k in 0..bins {
        ca += ha[k];
        cb += hb[k];
        gap += (ca - cb).abs();
    }
    Ok(width * gap)
}

/// Raw and range-normalized EMD of one representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub emd: f64,
    /// Pooled range of the two samples.
    pub range: f64,
    /// `emd / range`, comparable across representations with different
    /// units.
    pub normalized: f64,
}

impl Shift {
    fn of(a: &[f64], b: &[f64], bins: usize) -> Result<Self> {
        let emd = emd_1d(a, b, bins)?;
        let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        let normalized = if range > 0.0 { emd / range } else { 0.0 };
        Ok(Self { emd, range, normalized })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelShift {
    pub channel: String,
    pub time: Shift,
    pub amplitude: Shift,
    pub phase: Shift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub domain_a: String,
    pub domain_b: String,
    pub windows_a: usize,
    pub windows_b: usize,
    pub bins: usize,
    pub channels: Vec<ChannelShift>,
}

/// Per-channel pooled samples of one domain.
struct Pools {
    time: Vec<Vec<f64>>,
    amplitude: Vec<Vec<f64>>,
    phase: Vec<Vec<f64>>,
}

fn pools(windows: &[Window], include_nyquist: bool) -> Result<Pools> {
    let m = windows
        .first()
        .map(|w| w.channels())
        .ok_or_else(|| Error::Data("shift report needs windows from both domains".into()))?;
    let mut p = Pools {
        time: vec![Vec::new(); m],
        amplitude: vec![Vec::new(); m],
        phase: vec![Vec::new(); m],
    };
    for w in windows {
        if w.channels() != m {
            return Err(Error::dim("shift_report", "windows differ in channel count"));
        }
        let rows: Vec<&[f64]> = (0..m).map(|c| w.values.row(c)).collect();
        let spec = truncate_spectrum(&ComplexSpectrum::from_signals(&rows), include_nyquist)?;
        let (amp, ph) = (spec.amplitude(), spec.phase());
        for c in 0..m {
            p.time[c].extend_from_slice(rows[c]);
            p.amplitude[c].extend_from_slice(&amp[c]);
            p.phase[c].extend_from_slice(&ph[c]);
        }
    }
    Ok(p)
}

/// EMD between two domains per channel in the time, amplitude and phase
/// representations.
pub fn shift_report(
    name_a: &str,
    domain_a: &[Window],
    name_b: &str,
    domain_b: &[Window],
    bins: usize,
) -> Result<ShiftReport> {
    let (pa, pb) = (pools(domain_a, true)?, pools(domain_b, true)?);
    if pa.time.len() != pb.time.len() {
        return Err(Error::dim("shift_report", "domains differ in channel count"));
    }
    let channels = (0..pa.time.len())
        .map(|c| {
            Ok(ChannelShift {
                channel: CHANNEL_NAMES
                    .get(c)
                    .map_or_else(|| format!("ch{c}"), |s| s.to_string()),
                time: Shift::of(&pa.time[c], &pb.time[c], bins)?,
                amplitude: Shift::of(&pa.amplitude[c], &pb.amplitude[c], bins)?,
                phase: Shift::of(&pa.phase[c], &pb.phase[c], bins)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftReport {
        domain_a: name_a.to_string(),
        domain_b: name_b.to_string(),
        windows_a: domain_a.len(),
        windows_b: domain_b.len(),
        bins,
        channels,
    })
}
