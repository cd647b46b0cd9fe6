//! Readers for the published dataset layouts and the canonical CSV format.

mod canonical;
mod hhar;
mod motion;
mod shoaib;
mod uci;

use std::fs;
use std::path::{Path, PathBuf};

pub use canonical::{read_canonical, write_canonical, CanonicalIndex, CANONICAL_FORMAT, CSV_HEADER};

use crate::data::{sort_recordings, DatasetKind, RawRecording};
use crate::error::{Error, Result};

/// Reads every recording of `kind` under `root`, sorted by subject, device
/// and session. Nothing is returned unless the whole dataset parses.
pub fn ingest(kind: DatasetKind, root: &Path) -> Result<Vec<RawRecording>> {
    if !root.is_dir() {
        return Err(Error::MissingFile {
            path: root.to_path_buf(),
        });
    }
    let mut recs = match kind {
        DatasetKind::Uci => uci::ingest(root)?,
        DatasetKind::Motion => motion::ingest(root)?,
        DatasetKind::Hhar => hhar::ingest(root)?,
        DatasetKind::Shoaib => shoaib::ingest(root)?,
        DatasetKind::Canonical => return read_canonical(root),
    };
    for r in &recs {
        r.validate()?;
    }
    sort_recordings(&mut recs);
    Ok(recs)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingFile {
            path: path.to_path_buf(),
        });
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// First existing candidate of `root/<dir>/<name>` over `dirs`.
pub(crate) fn locate(root: &Path, dirs: &[&str], name: &str) -> Result<PathBuf> {
    dirs.iter()
        .map(|d| root.join(d).join(name))
        .find(|p| p.exists())
        .ok_or_else(|| Error::MissingFile {
            path: root.join(dirs[0]).join(name),
        })
}

pub(crate) fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: format!("not a number: {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: format!("non-finite value {field:?}"),
        });
    }
    Ok(v)
}

pub(crate) fn parse_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

pub(crate) fn sorted_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

/// Splits a CSV line on commas; quoted fields are unquoted but may not
/// contain commas (none of the supported layouts need that).
pub(crate) fn csv_fields(line: &str) -> Vec<&str> {
    line.split(',').map(|f| f.trim().trim_matches('"')).collect()
}
