//! Shoaib et al. body-position dataset: `Participant_<n>.csv`, one file per
//! participant, five phone positions side by side.
//!
//! The first header row names each position at the start of its column
//! group; the second row names the columns (`Ax`, `Ay`, `Az`, ..., `Gx`,
//! `Gy`, `Gz`, ...). The activity label is the column whose header contains
//! "activity". One recording per (participant, position), 50 Hz,
//! acceleration in m/s², angular rate in rad/s.

use std::path::Path;

use super::{csv_fields, locate, parse_error, parse_f64, read_text, sorted_dir};
use crate::data::{DatasetKind, LabelMap, RawRecording};
use crate::error::{Error, Result};

pub const SAMPLE_RATE: f64 = 50.0;
const AXES: [&str; 6] = ["ax", "ay", "az", "gx", "gy", "gz"];

struct Group {
    position: String,
    columns: [usize; 6],
}

fn groups(path: &Path, positions: &[&str], names: &[&str]) -> Result<(Vec<Group>, Vec<usize>)> {
    let starts: Vec<(usize, String)> = positions
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty())
        .map(|(i, p)| (i, p.to_string()))
        .collect();
    let label_cols: Vec<usize> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.to_ascii_lowercase().contains("activity"))
        .map(|(i, _)| i)
        .collect();
    if label_cols.is_empty() {
        return Err(parse_error(path, 2, "no activity label column"));
    }
    let mut out = Vec::new();
    for (g, (start, position)) in starts.iter().enumerate() {
        let end = starts.get(g + 1).map_or(names.len(), |s| s.0);
        let mut columns = [0usize; 6];
        for (slot, axis) in columns.iter_mut().zip(AXES) {
            *slot = (*start..end)
                .find(|&c| names[c].eq_ignore_ascii_case(axis))
                .ok_or_else(|| parse_error(path, 2, format!("{position}: missing column {axis}")))?;
        }
        out.push(Group {
            position: position.clone(),
            columns,
        });
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, "no body positions in header"));
    }
    Ok((out, label_cols))
}

fn read_participant(path: &Path, subject: &str, map: &LabelMap) -> Result<Vec<RawRecording>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let positions = lines.next().map(|(_, l)| csv_fields(l)).unwrap_or_default();
    let names = lines
        .next()
        .map(|(_, l)| csv_fields(l))
        .ok_or_else(|| parse_error(path, 2, "missing column header row"))?;
    let (groups, label_cols) = groups(path, &positions, &names)?;

    // label column of each group: the first one after its axes, else the last
    let group_labels: Vec<usize> = groups
        .iter()
        .map(|g| {
            let last = *g.columns.iter().max().expect("six columns");
            label_cols
                .iter()
                .copied()
                .find(|&c| c > last)
                .unwrap_or(label_cols[label_cols.len() - 1])
        })
        .collect();
    let mut recs: Vec<RawRecording> = groups
        .iter()
        .map(|g| RawRecording {
            dataset: DatasetKind::Shoaib.id().into(),
            subject: subject.to_string(),
            device: g.position.to_ascii_lowercase(),
            session: "1".into(),
            sample_rate: SAMPLE_RATE,
            channels: Default::default(),
            labels: Vec::new(),
        })
        .collect();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f = csv_fields(line);
        if f.len() < names.len() {
            return Err(parse_error(path, i + 1, "short row"));
        }
        for ((g, rec), &lc) in groups.iter().zip(recs.iter_mut()).zip(&group_labels) {
            for (ch, &c) in rec.channels.iter_mut().zip(&g.columns) {
                ch.push(parse_f64(f[c], path, i + 1)?);
            }
            rec.labels.push(f.get(lc).and_then(|l| map.map(l)));
        }
    }
    Ok(recs)
}

pub(super) fn ingest(root: &Path) -> Result<Vec<RawRecording>> {
    let dir = locate(root, &["DataSet", ".", "Shoaib/DataSet"], "Participant_1.csv")?
        .parent()
        .expect("file has a parent")
        .to_path_buf();
    let map = LabelMap::for_dataset(DatasetKind::Shoaib);
    let mut recs = Vec::new();
    for file in sorted_dir(&dir)? {
        let name = file.file_name().unwrap().to_string_lossy().to_string();
        let Some(subject) = name.strip_prefix("Participant_").and_then(|s| s.strip_suffix(".csv")) else {
            continue;
        };
        recs.extend(read_participant(&file, subject, &map)?);
    }
    if recs.is_empty() {
        return Err(Error::MissingFile {
            path: dir.join("Participant_1.csv"),
        });
    }
    Ok(recs)
}
