//! MotionSense device-motion data: `A_DeviceMotion_data/<act>_<trial>/sub_<n>.csv`.
//!
//! Acceleration is reconstructed as `userAcceleration + gravity` (in g) so it
//! matches the raw accelerometer readings of the other datasets; angular
//! rate is `rotationRate` (rad/s). Sampled at 50 Hz.

use std::path::Path;

use super::{csv_fields, locate, parse_error, parse_f64, read_text, sorted_dir};
use crate::data::{DatasetKind, LabelMap, RawRecording};
use crate::error::{Error, Result};

pub const SAMPLE_RATE: f64 = 50.0;

const COLUMNS: [&str; 9] = [
    "userAcceleration.x",
    "userAcceleration.y",
    "userAcceleration.z",
    "gravity.x",
    "gravity.y",
    "gravity.z",
    "rotationRate.x",
    "rotationRate.y",
    "rotationRate.z",
];

fn read_trial(path: &Path, subject: &str, trial: &str, activity: &str, map: &LabelMap) -> Result<RawRecording> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| csv_fields(h))
        .ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let idx: Vec<usize> = COLUMNS
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| parse_error(path, 1, format!("missing column {c}")))
        })
        .collect::<Result<_>>()?;
    let mut cols: [Vec<f64>; 9] = Default::default();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f = csv_fields(line);
        if f.len() < header.len() {
            return Err(parse_error(path, i + 1, "short row"));
        }
        for (col, &j) in cols.iter_mut().zip(&idx) {
            col.push(parse_f64(f[j], path, i + 1)?);
        }
    }
    let n = cols[0].len();
    let acc = |k: usize| -> Vec<f64> { (0..n).map(|i| cols[k][i] + cols[k + 3][i]).collect() };
    let label = map.map(activity);
    Ok(RawRecording {
        dataset: DatasetKind::Motion.id().into(),
        subject: subject.to_string(),
        device: "pocket".into(),
        session: trial.to_string(),
        sample_rate: SAMPLE_RATE,
        channels: [acc(0), acc(1), acc(2), cols[6].clone(), cols[7].clone(), cols[8].clone()],
        labels: vec![label; n],
    })
}

pub(super) fn ingest(root: &Path) -> Result<Vec<RawRecording>> {
    let base = locate(root, &["A_DeviceMotion_data", "motion-sense/data/A_DeviceMotion_data", "data/A_DeviceMotion_data"], "")?;
    let map = LabelMap::for_dataset(DatasetKind::Motion);
    let mut recs = Vec::new();
    for trial_dir in sorted_dir(&base)? {
        if !trial_dir.is_dir() {
            continue;
        }
        let trial = trial_dir.file_name().unwrap().to_string_lossy().to_string();
        let activity = trial.split('_').next().unwrap_or_default().to_string();
        for file in sorted_dir(&trial_dir)? {
            let name = file.file_name().unwrap().to_string_lossy().to_string();
            let Some(subject) = name.strip_prefix("sub_").and_then(|s| s.strip_suffix(".csv")) else {
                continue;
            };
            recs.push(read_trial(&file, subject, &trial, &activity, &map)?);
        }
    }
    if recs.is_empty() {
        return Err(Error::MissingFile {
            path: base.join("<activity>_<trial>/sub_<n>.csv"),
        });
    }
    Ok(recs)
}
