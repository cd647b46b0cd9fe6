//! UCI smartphone HAR raw signals (`RawData/` of the HAPT release).
//!
//! `acc_expXX_userYY.txt` and `gyro_expXX_userYY.txt` hold three
//! space-separated columns at 50 Hz (acceleration in g, angular rate in
//! rad/s). `labels.txt` rows are `exp user activity start end`, with 1-based
//! inclusive sample indices.

use std::collections::BTreeMap;
use std::path::Path;

use super::{locate, parse_error, parse_f64, read_text, sorted_dir};
use crate::data::{Activity, DatasetKind, LabelMap, RawRecording};
use crate::error::{Error, Result};

pub const SAMPLE_RATE: f64 = 50.0;
const DIRS: [&str; 4] = ["RawData", ".", "HAPT Data Set/RawData", "UCI HAR Dataset/RawData"];

const ACTIVITY_NAMES: [&str; 12] = [
    "WALKING",
    "WALKING_UPSTAIRS",
    "WALKING_DOWNSTAIRS",
    "SITTING",
    "STANDING",
    "LAYING",
    "STAND_TO_SIT",
    "SIT_TO_STAND",
    "SIT_TO_LIE",
    "LIE_TO_SIT",
    "STAND_TO_LIE",
    "LIE_TO_STAND",
];

fn read_triples(path: &Path) -> Result<[Vec<f64>; 3]> {
    let text = read_text(path)?;
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_error(path, i + 1, format!("expected 3 columns, got {}", f.len())));
        }
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(parse_f64(f[c], path, i + 1)?);
        }
    }
    Ok(cols)
}

struct Segment {
    activity: usize,
    start: usize,
    end: usize,
}

pub(super) fn ingest(root: &Path) -> Result<Vec<RawRecording>> {
    let labels_path = locate(root, &DIRS, "labels.txt")?;
    let dir = labels_path.parent().expect("labels.txt has a parent").to_path_buf();
    let map = LabelMap::for_dataset(DatasetKind::Uci);

    let mut segments: BTreeMap<(u32, u32), Vec<Segment>> = BTreeMap::new();
    let text = read_text(&labels_path)?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<u64> = line
            .split_whitespace()
            .map(|s| s.parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_error(&labels_path, i + 1, "expected integers"))?;
        if f.len() != 5 || f[3] == 0 || f[4] < f[3] || f[2] == 0 {
            return Err(parse_error(&labels_path, i + 1, "expected `exp user activity start end`"));
        }
        segments.entry((f[0] as u32, f[1] as u32)).or_default().push(Segment {
            activity: f[2] as usize,
            start: f[3] as usize - 1,
            end: f[4] as usize - 1,
        });
    }

    let mut recs = Vec::new();
    for ((exp, user), segs) in segments {
        let acc_path = dir.join(format!("acc_exp{exp:02}_user{user:02}.txt"));
        let gyro_path = dir.join(format!("gyro_exp{exp:02}_user{user:02}.txt"));
        let acc = read_triples(&acc_path)?;
        let gyro = read_triples(&gyro_path)?;
        let n = acc[0].len();
        if gyro[0].len() != n {
            return Err(Error::Data(format!(
                "{} and {} differ in length",
                acc_path.display(),
                gyro_path.display()
            )));
        }
        let mut labels: Vec<Option<Activity>> = vec![None; n];
        for s in segs {
            let name = ACTIVITY_NAMES.get(s.activity - 1).copied().unwrap_or("UNKNOWN");
            let mapped = map.map(name);
            for l in labels.iter_mut().take(s.end + 1).skip(s.start) {
                *l = mapped;
            }
        }
        let [ax, ay, az] = acc;
        let [gx, gy, gz] = gyro;
        recs.push(RawRecording {
            dataset: DatasetKind::Uci.id().into(),
            subject: user.to_string(),
            device: "waist".into(),
            session: format!("exp{exp:02}"),
            sample_rate: SAMPLE_RATE,
            channels: [ax, ay, az, gx, gy, gz],
            labels,
        });
    }
    if recs.is_empty() {
        let listing = sorted_dir(&dir)?;
        return Err(Error::Data(format!(
            "{}: labels.txt lists no recordings ({} files present)",
            dir.display(),
            listing.len()
        )));
    }
    Ok(recs)
}
