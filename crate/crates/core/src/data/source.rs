//! Resolving a dataset name to recordings on disk or to a synthetic domain.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::synthetic::{generate_recordings, SyntheticDomain};
use crate::data::{ingest, read_canonical, windows_from_recordings, DatasetKind, RawRecording, Window, WindowConfig};
use crate::error::{Error, Result};

/// Environment variable naming the directory that holds `canonical/<id>`
/// or `raw/<id>` dataset folders.
pub const DATA_ROOT_ENV: &str = "FREQHAR_DATA_ROOT";

const SYNTHETIC_SUBJECTS: usize = 6;
const SYNTHETIC_SECONDS: f64 = 60.0;
const SYNTHETIC_RATE: f64 = 50.0;

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Public(DatasetKind),
    Synthetic(SyntheticDomain),
}

impl DataSource {
    pub fn id(&self) -> String {
        match self {
            DataSource::Public(k) => k.id().to_string(),
            DataSource::Synthetic(d) => d.name.clone(),
        }
    }

    /// Raw recordings. Public datasets are read from `path` (a prepared
    /// canonical directory or the dataset's published layout), falling back
    /// to the data root.
    pub fn recordings(&self, path: Option<&Path>) -> Result<Vec<RawRecording>> {
        match self {
            DataSource::Public(kind) => {
                let dir = resolve_path(*kind, path)?;
                if dir.join("index.json").is_file() {
                    read_canonical(&dir)
                } else {
                    ingest(*kind, &dir)
                }
            }
            DataSource::Synthetic(d) => {
                let seed = SyntheticDomain::family()
                    .iter()
                    .position(|f| f.name == d.name)
                    .map_or(999, |i| 1000 + i as u64);
                Ok(generate_recordings(
                    d,
                    SYNTHETIC_SUBJECTS,
                    SYNTHETIC_SECONDS,
                    SYNTHETIC_RATE,
                    seed,
                ))
            }
        }
    }

    pub fn windows(&self, path: Option<&Path>, target_hz: f64, config: &WindowConfig) -> Result<Vec<Window>> {
        windows_from_recordings(&self.recordings(path)?, target_hz, config)
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Some(d) = SyntheticDomain::family().into_iter().find(|d| d.name == lower) {
            return Ok(DataSource::Synthetic(d));
        }
        match lower.parse::<DatasetKind>() {
            Ok(DatasetKind::Canonical) | Err(_) => Err(Error::Config(format!(
                "unknown dataset {s:?}; expected one of uci, shoaib, motion, hhar, syn-a, syn-b, syn-c, syn-d"
            ))),
            Ok(k) => Ok(DataSource::Public(k)),
        }
    }
}

/// Directory for `kind`: `explicit` if given, otherwise the first existing
/// of `$FREQHAR_DATA_ROOT/{canonical,raw,.}/<id>`.
pub fn resolve_path(kind: DatasetKind, explicit: Option<&Path>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p.to_path_buf());
    }
    let root = std::env::var_os(DATA_ROOT_ENV).ok_or_else(|| {
        Error::Data(format!(
            "no path for dataset {}: pass --in or set {DATA_ROOT_ENV}",
            kind.id()
        ))
    })?;
    let root = PathBuf::from(root);
    let candidates = [
        root.join("canonical").join(kind.id()),
        root.join("raw").join(kind.id()),
        root.join(kind.id()),
    ];
    candidates
        .iter()
        .find(|p| p.is_dir())
        .cloned()
        .ok_or_else(|| Error::MissingFile {
            path: candidates[0].clone(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        assert_eq!("UCI".parse::<DataSource>().unwrap(), DataSource::Public(DatasetKind::Uci));
        assert_eq!("syn-b".parse::<DataSource>().unwrap().id(), "syn-b");
        assert!("canonical".parse::<DataSource>().is_err());
        assert!("wisdm".parse::<DataSource>().is_err());
    }

    #[test]
    fn synthetic_windows_are_fixed() {
        let s: DataSource = "syn-a".parse().unwrap();
        let a = s.windows(None, 20.0, &WindowConfig::default()).unwrap();
        let b = s.windows(None, 20.0, &WindowConfig::default()).unwrap();
        assert_eq!(a.len(), SYNTHETIC_SUBJECTS * 4 * 10);
        assert_eq!(a[5].values, b[5].values);
    }

    #[test]
    fn explicit_path_wins() {
        let dir = tempfile::tempdir().unwrap();
        let p = resolve_path(DatasetKind::Hhar, Some(dir.path())).unwrap();
        assert_eq!(p, dir.path());
        let s = DataSource::Public(DatasetKind::Hhar);
        assert!(s.recordings(Some(&dir.path().join("absent"))).is_err());
    }
}
