//! Canonical on-disk layout: one CSV per recording plus an `index.json`
//! carrying the per-recording metadata (device, session, sample rate) that
//! the CSV columns do not.
//!
//! Values are written with 17 significant digits, so reading a written
//! directory back reproduces every sample bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_fields, parse_error, parse_f64, read_text};
use crate::data::{Activity, RawRecording, NUM_CHANNELS};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "dataset,subject,t,ax,ay,az,gx,gy,gz,label";
pub const CANONICAL_FORMAT: &str = "FREQHAR-CANONICAL-v1";
const INDEX_FILE: &str = "index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalEntry {
    pub file: String,
    pub dataset: String,
    pub subject: String,
    pub device: String,
    pub session: String,
    pub sample_rate: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalIndex {
    pub format: String,
    pub recordings: Vec<CanonicalEntry>,
}

fn file_stem(rec: &RawRecording, i: usize) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect()
    };
    format!(
        "{i:05}_{}_{}_{}_{}.csv",
        clean(&rec.dataset),
        clean(&rec.subject),
        clean(&rec.device),
        clean(&rec.session)
    )
}

fn fmt_value(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("write to string");
}

fn recording_csv(rec: &RawRecording) -> String {
    let mut out = String::with_capacity(rec.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for i in 0..rec.len() {
        out.push_str(&rec.dataset);
        out.push(',');
        out.push_str(&rec.subject);
        out.push(',');
        fmt_value(&mut out, i as f64 / rec.sample_rate);
        for ch in &rec.channels {
            out.push(',');
            fmt_value(&mut out, ch[i]);
        }
        out.push(',');
        if let Some(l) = rec.labels[i] {
            write!(out, "{}", l.index()).expect("write to string");
        }
        out.push('\n');
    }
    out
}

/// Writes `recs` under `dir` (created if needed) and returns the index.
pub fn write_canonical(dir: &Path, recs: &[RawRecording]) -> Result<CanonicalIndex> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(recs.len());
    for (i, rec) in recs.iter().enumerate() {
        rec.validate()?;
        for field in [&rec.dataset, &rec.subject] {
            if field.contains(',') || field.contains('\n') {
                return Err(Error::Data(format!("id {field:?} cannot be written to CSV")));
            }
        }
        let name = file_stem(rec, i);
        let path = dir.join(&name);
        fs::write(&path, recording_csv(rec)).map_err(|e| Error::io(&path, e))?;
        entries.push(CanonicalEntry {
            file: name,
            dataset: rec.dataset.clone(),
            subject: rec.subject.clone(),
            device: rec.device.clone(),
            session: rec.session.clone(),
            sample_rate: rec.sample_rate,
            samples: rec.len(),
        });
    }
    let index = CanonicalIndex {
        format: CANONICAL_FORMAT.to_string(),
        recordings: entries,
    };
    let path = dir.join(INDEX_FILE);
    let text = serde_json::to_string_pretty(&index)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(index)
}

fn read_one(dir: &Path, entry: &CanonicalEntry) -> Result<RawRecording> {
    let path = dir.join(&entry.file);
    let text = read_text(&path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(parse_error(&path, 1, format!("expected header {CSV_HEADER:?}"))),
    }
    let mut channels: [Vec<f64>; NUM_CHANNELS] = Default::default();
    let mut labels = Vec::with_capacity(entry.samples);
    let mut last_t = f64::NEG_INFINITY;
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = csv_fields(line);
        if f.len() != 10 {
            return Err(parse_error(&path, ln, format!("expected 10 fields, got {}", f.len())));
        }
        if f[0] != entry.dataset || f[1] != entry.subject {
            return Err(parse_error(&path, ln, "dataset/subject disagree with index"));
        }
        let t = parse_f64(f[2], &path, ln)?;
        if t <= last_t {
            return Err(parse_error(&path, ln, "timestamps must increase"));
        }
        last_t = t;
        for (c, ch) in channels.iter_mut().enumerate() {
            ch.push(parse_f64(f[3 + c], &path, ln)?);
        }
        labels.push(match f[9] {
            "" => None,
            s => {
                let idx: usize = s
                    .parse()
                    .map_err(|_| parse_error(&path, ln, format!("bad label {s:?}")))?;
                Some(
                    Activity::from_index(idx)
                        .ok_or_else(|| parse_error(&path, ln, format!("label {idx} out of range")))?,
                )
            }
        });
    }
    if labels.len() != entry.samples {
        return Err(Error::Data(format!(
            "{}: index lists {} samples, file has {}",
            path.display(),
            entry.samples,
            labels.len()
        )));
    }
    let rec = RawRecording {
        dataset: entry.dataset.clone(),
        subject: entry.subject.clone(),
        device: entry.device.clone(),
        session: entry.session.clone(),
        sample_rate: entry.sample_rate,
        channels,
        labels,
    };
    rec.validate()?;
    Ok(rec)
}

/// Reads a directory written by [`write_canonical`].
pub fn read_canonical(dir: &Path) -> Result<Vec<RawRecording>> {
    let index_path = dir.join(INDEX_FILE);
    let index: CanonicalIndex = serde_json::from_str(&read_text(&index_path)?)?;
    if index.format != CANONICAL_FORMAT {
        return Err(Error::Data(format!(
            "{}: unsupported format {:?}",
            index_path.display(),
            index.format
        )));
    }
    index.recordings.iter().map(|e| read_one(dir, e)).collect()
}
