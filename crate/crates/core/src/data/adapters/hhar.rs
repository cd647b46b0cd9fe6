//! Heterogeneity HAR phone data: `Phones_accelerometer.csv` and
//! `Phones_gyroscope.csv` with columns
//! `Index,Arrival_Time,Creation_Time,x,y,z,User,Model,Device,gt`.
//!
//! The two streams are sampled independently and at device-specific rates,
//! so each (user, device) pair is interpolated onto a common 50 Hz grid using
//! `Creation_Time` (nanoseconds). A gap longer than [`MAX_GAP_SECS`] in either
//! stream ends the current recording and starts a new one.

use std::collections::BTreeMap;
use std::path::Path;

use super::{csv_fields, locate, parse_error, parse_f64, read_text};
use crate::data::{Activity, DatasetKind, LabelMap, RawRecording};
use crate::error::{Error, Result};

pub const SAMPLE_RATE: f64 = 50.0;
pub const MAX_GAP_SECS: f64 = 1.0;
/// Recordings shorter than this many grid samples are discarded.
const MIN_SAMPLES: usize = 50;
const DIRS: [&str; 3] = [".", "Activity recognition exp", "hhar"];

struct Sample {
    t_ns: i64,
    /// Seconds since the (user, device) pair's first sample; set in `ingest`.
    t: f64,
    xyz: [f64; 3],
    label: Option<Activity>,
}

type Streams = BTreeMap<(String, String), Vec<Sample>>;

fn read_stream(path: &Path, map: &LabelMap) -> Result<Streams> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| csv_fields(h))
        .ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_error(path, 1, format!("missing column {name}")))
    };
    let (ct, x, y, z, user, device, gt) = (
        col("Creation_Time")?,
        col("x")?,
        col("y")?,
        col("z")?,
        col("User")?,
        col("Device")?,
        col("gt")?,
    );
    let width = header.len();
    let mut streams = Streams::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f = csv_fields(line);
        if f.len() < width {
            return Err(parse_error(path, i + 1, format!("expected {width} fields")));
        }
        let t_ns: i64 = f[ct]
            .parse()
            .map_err(|_| parse_error(path, i + 1, format!("bad Creation_Time {:?}", f[ct])))?;
        let sample = Sample {
            t_ns,
            t: 0.0,
            xyz: [
                parse_f64(f[x], path, i + 1)?,
                parse_f64(f[y], path, i + 1)?,
                parse_f64(f[z], path, i + 1)?,
            ],
            label: map.map(f[gt]),
        };
        streams
            .entry((f[user].to_string(), f[device].to_string()))
            .or_default()
            .push(sample);
    }
    for s in streams.values_mut() {
        s.sort_by_key(|x| x.t_ns);
        s.dedup_by_key(|x| x.t_ns);
    }
    Ok(streams)
}

/// Index `i` with `s[i].t <= t < s[i+1].t`, advancing from `cursor`.
fn bracket(s: &[Sample], t: f64, cursor: &mut usize) -> Option<usize> {
    while *cursor + 1 < s.len() && s[*cursor + 1].t <= t {
        *cursor += 1;
    }
    (*cursor + 1 < s.len() && s[*cursor].t <= t).then_some(*cursor)
}

fn interp(s: &[Sample], i: usize, t: f64) -> [f64; 3] {
    let (a, b) = (&s[i], &s[i + 1]);
    let f = (t - a.t) / (b.t - a.t);
    std::array::from_fn(|k| a.xyz[k] * (1.0 - f) + b.xyz[k] * f)
}

struct Builder {
    channels: [Vec<f64>; 6],
    labels: Vec<Option<Activity>>,
}

impl Builder {
    fn new() -> Self {
        Self {
            channels: Default::default(),
            labels: Vec::new(),
        }
    }
}

fn align(user: &str, device: &str, acc: &[Sample], gyro: &[Sample]) -> Vec<RawRecording> {
    let mut out = Vec::new();
    if acc.len() < 2 || gyro.len() < 2 {
        return out;
    }
    let t0 = acc[0].t.max(gyro[0].t);
    let t1 = acc[acc.len() - 1].t.min(gyro[gyro.len() - 1].t);
    let step = 1.0 / SAMPLE_RATE;
    let (mut ca, mut cg) = (0, 0);
    let mut cur = Builder::new();
    let flush = |cur: &mut Builder, out: &mut Vec<RawRecording>| {
        let done = std::mem::replace(cur, Builder::new());
        if done.labels.len() >= MIN_SAMPLES {
            out.push(RawRecording {
                dataset: DatasetKind::Hhar.id().into(),
                subject: user.to_string(),
                device: device.to_string(),
                session: format!("seg{:03}", out.len()),
                sample_rate: SAMPLE_RATE,
                channels: done.channels,
                labels: done.labels,
            });
        }
    };
    let mut j = 0u64;
    loop {
        let t = t0 + j as f64 * step;
        if t > t1 {
            break;
        }
        j += 1;
        let (Some(ia), Some(ig)) = (bracket(acc, t, &mut ca), bracket(gyro, t, &mut cg)) else {
            flush(&mut cur, &mut out);
            continue;
        };
        if acc[ia + 1].t - acc[ia].t > MAX_GAP_SECS || gyro[ig + 1].t - gyro[ig].t > MAX_GAP_SECS {
            flush(&mut cur, &mut out);
            continue;
        }
        let a = interp(acc, ia, t);
        let g = interp(gyro, ig, t);
        for k in 0..3 {
            cur.channels[k].push(a[k]);
            cur.channels[k + 3].push(g[k]);
        }
        let nearest = if t - acc[ia].t <= acc[ia + 1].t - t { ia } else { ia + 1 };
        cur.labels.push(acc[nearest].label);
    }
    flush(&mut cur, &mut out);
    out
}

pub(super) fn ingest(root: &Path) -> Result<Vec<RawRecording>> {
    let acc_path = locate(root, &DIRS, "Phones_accelerometer.csv")?;
    let gyro_path = locate(root, &DIRS, "Phones_gyroscope.csv")?;
    let map = LabelMap::for_dataset(DatasetKind::Hhar);
    let mut acc = read_stream(&acc_path, &map)?;
    let mut gyro = read_stream(&gyro_path, &map)?;
    let mut recs = Vec::new();
    for ((user, device), a) in acc.iter_mut() {
        if let Some(g) = gyro.get_mut(&(user.clone(), device.clone())) {
            // Relative times keep sub-microsecond resolution in f64.
            let origin = a[0].t_ns.min(g[0].t_ns);
            for s in a.iter_mut().chain(g.iter_mut()) {
                s.t = (s.t_ns - origin) as f64 * 1e-9;
            }
            recs.extend(align(user, device, a, g));
        }
    }
    if recs.is_empty() {
        return Err(Error::Data(format!(
            "{}: no (user, device) pair has overlapping accelerometer and gyroscope data",
            root.display()
        )));
    }
    Ok(recs)
}
