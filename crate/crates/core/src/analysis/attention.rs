use std::fmt::Write as _;

use serde::Serialize;

use crate::data::CHANNEL_NAMES;
use crate::error::Result;
use crate::model::{AttentionMode, Model};
use crate::numerics::Tensor;

/// Attention weights of one window with row/column labels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttentionExport {
    pub labels: Vec<String>,
    pub map: Tensor,
}

/// Last-block attention map for one window's features. Sensor-wise models
/// label rows by channel; temporal models by position `p0..`.
pub fn export_attention(model: &Model, features: &Tensor) -> Result<AttentionExport> {
    let map = model.attention_map(features)?;
    let n = map.cols();
    let labels = match model.config().attention_mode {
        AttentionMode::SensorWise => (0..n)
            .map(|i| CHANNEL_NAMES.get(i).map_or_else(|| format!("ch{i}"), |s| s.to_string()))
            .collect(),
        AttentionMode::Temporal => (0..n).map(|i| format!("p{i}")).collect(),
    };
    Ok(AttentionExport { labels, map })
}

impl AttentionExport {
    pub fn zero_cells(&self) -> usize {
        self.map.values().iter().filter(|&&v| v == 0.0).count()
    }

    /// Square CSV with a header row and a label column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("query");
        for l in &self.labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for v in self.map.row(i) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::spectral::FeatureMode;

    fn parse(csv: &str) -> Vec<Vec<f64>> {
        csv.lines()
            .skip(1)
            .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn selective_export_has_twelve_zero_cells() {
        let model = Model::new(ModelConfig::default(), 5).unwrap();
        let f = Tensor::new(vec![6, 60], (0..360).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let e = export_attention(&model, &f).unwrap();
        assert_eq!(e.zero_cells(), 12);
        let csv = e.to_csv();
        assert!(csv.starts_with("query,Ax,Ay,Az,Gx,Gy,Gz\n"));
        let rows = parse(&csv);
        assert_eq!(rows.iter().flatten().filter(|&&v| v == 0.0).count(), 12);
        for r in rows {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_channels_export_quarter_weights() {
        let model = Model::new(ModelConfig::default(), 1).unwrap();
        let row: Vec<f64> = (0..60).map(|i| i as f64 / 60.0).collect();
        let f = Tensor::from_rows(&vec![row; 6]).unwrap();
        let e = export_attention(&model, &f).unwrap();
        for v in e.map.values() {
            assert!(*v == 0.0 || (v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn temporal_export_is_labeled_by_position() {
        let cfg = ModelConfig {
            window_len: 16,
            ..ModelConfig::default()
        }
        .variant(FeatureMode::Time, AttentionMode::Temporal);
        let model = Model::new(cfg, 0).unwrap();
        let e = export_attention(&model, &Tensor::filled(&[6, 16], 0.1)).unwrap();
        assert_eq!(e.labels.len(), 16);
        assert_eq!(e.labels[3], "p3");
    }
}
