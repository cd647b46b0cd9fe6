use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Activity, Window};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::training::{featurize_windows, predict};

/// Classification quality of one model on one target set. Percentages are
/// in `[0, 100]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub source: String,
    pub target: String,
    pub windows: usize,
    pub accuracy: f64,
    /// Mean F1 over classes present in the target.
    pub macro_f1: f64,
    /// Support-weighted F1.
    pub weighted_f1: f64,
    /// `None` for classes with no target windows.
    pub per_class_recall: Vec<Option<f64>>,
    pub per_class_f1: Vec<Option<f64>>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Classes absent from the target; `macro_f1` skips them.
    pub absent_classes: Vec<usize>,
}

/// Metrics from parallel truth/prediction label lists.
pub fn metrics_from_labels(
    truth: &[usize],
    predicted: &[usize],
    classes: usize,
    source: &str,
    target: &str,
) -> Result<EvalResult> {
    if truth.len() != predicted.len() {
        return Err(Error::dim(
            "metrics",
            format!("{} labels vs {} predictions", truth.len(), predicted.len()),
        ));
    }
    if truth.is_empty() {
        return Err(Error::Data(format!("target {target} has no windows")));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= classes || p >= classes {
            return Err(Error::Label {
                label: t.max(p),
                classes,
            });
        }
        confusion[t][p] += 1;
    }
    let total = truth.len();
    let correct: usize = (0..classes).map(|k| confusion[k][k]).sum();
    let mut recall = Vec::with_capacity(classes);
    let mut f1 = Vec::with_capacity(classes);
    let mut absent = Vec::new();
    let (mut f1_sum, mut f1_weighted) = (0.0, 0.0);
    for k in 0..classes {
        let support: usize = confusion[k].iter().sum();
        let predicted_k: usize = confusion.iter().map(|row| row[k]).sum();
        if support == 0 {
            absent.push(k);
            recall.push(None);
            f1.push(None);
            continue;
        }
        let tp = confusion[k][k] as f64;
        let r = tp / support as f64;
        let p = if predicted_k == 0 { 0.0 } else { tp / predicted_k as f64 };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        recall.push(Some(r));
        f1.push(Some(f));
        f1_sum += f;
        f1_weighted += f * support as f64;
    }
    let present = classes - absent.len();
    Ok(EvalResult {
        source: source.to_string(),
        target: target.to_string(),
        windows: total,
        accuracy: 100.0 * correct as f64 / total as f64,
        macro_f1: 100.0 * f1_sum / present as f64,
        weighted_f1: 100.0 * f1_weighted / total as f64,
        per_class_recall: recall,
        per_class_f1: f1,
        confusion,
        absent_classes: absent,
    })
}

/// One line of the per-window prediction log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    pub dataset: String,
    pub subject: String,
    pub device: String,
    pub session: String,
    pub start: usize,
    pub label: usize,
    pub predicted: usize,
    pub probabilities: Vec<f64>,
}

/// Evaluates `model` on every window of a held-out target set.
pub fn evaluate(
    model: &Model,
    windows: &[Window],
    source: &str,
    target: &str,
) -> Result<(EvalResult, Vec<PredictionRecord>)> {
    let features = featurize_windows(model, windows)?;
    let preds = predict(model, &features)?;
    let truth: Vec<usize> = windows.iter().map(|w| w.label.index()).collect();
    let result = metrics_from_labels(&truth, &preds.labels, model.config().classes, source, target)?;
    let log = windows
        .iter()
        .enumerate()
        .map(|(i, w)| PredictionRecord {
            index: i,
            dataset: w.provenance.dataset.clone(),
            subject: w.provenance.subject.clone(),
            device: w.provenance.device.clone(),
            session: w.provenance.session.clone(),
            start: w.provenance.start,
            label: truth[i],
            predicted: preds.labels[i],
            probabilities: preds.probabilities.row(i).to_vec(),
        })
        .collect();
    Ok((result, log))
}

pub fn prediction_log_csv(records: &[PredictionRecord]) -> String {
    let k = records.first().map_or(0, |r| r.probabilities.len());
    let mut out = String::from("index,dataset,subject,device,session,start,label,predicted");
    for c in 0..k {
        let name = Activity::from_index(c).map_or_else(|| format!("class{c}"), |a| a.name().to_string());
        write!(out, ",p_{name}").unwrap();
    }
    out.push('\n');
    for r in records {
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.index, r.dataset, r.subject, r.device, r.session, r.start, r.label, r.predicted
        )
        .unwrap();
        for p in &r.probabilities {
            write!(out, ",{p}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// `(label, predicted)` pairs from a prediction log written by
/// [`prediction_log_csv`].
pub fn read_prediction_log(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header: Vec<&str> = lines
        .next()
        .map(|(_, h)| h.split(',').collect())
        .unwrap_or_default();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("missing column {name}"),
        })
    };
    let (li, pi) = (col("label")?, col("predicted")?);
    let mut out = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<usize> {
            f.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                reason: "bad label field".into(),
            })
        };
        out.push((parse(li)?, parse(pi)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 3, 3, 2];
        let r = metrics_from_labels(&y, &y, 4, "a", "b").unwrap();
        assert_eq!((r.accuracy, r.macro_f1, r.weighted_f1), (100.0, 100.0, 100.0));
        for (i, row) in r.confusion.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert_eq!(c > 0, i == j);
            }
        }
    }

    #[test]
    fn constant_predictor_on_balanced_set() {
        let y: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let r = metrics_from_labels(&y, &[1; 40], 4, "a", "b").unwrap();
        assert!((r.accuracy - 25.0).abs() < 1e-12);
        // F1 of the predicted class: precision 1/4, recall 1 → 0.4
        assert!((r.macro_f1 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn absent_classes_are_flagged_and_skipped() {
        let r = metrics_from_labels(&[0, 0, 1, 1], &[0, 1, 1, 1], 4, "a", "b").unwrap();
        assert_eq!(r.absent_classes, vec![2, 3]);
        assert_eq!(r.per_class_recall[2], None);
        let f0 = 2.0 * 1.0 * 0.5 / 1.5;
        let f1 = 2.0 * (2.0 / 3.0) * 1.0 / (2.0 / 3.0 + 1.0);
        assert!((r.macro_f1 - 50.0 * (f0 + f1)).abs() < 1e-12);
    }

    #[test]
    fn confusion_rows_sum_to_support() {
        let y = [0, 1, 2, 3, 0, 0, 2];
        let p = [0, 2, 2, 1, 3, 0, 2];
        let r = metrics_from_labels(&y, &p, 4, "a", "b").unwrap();
        let trace: usize = (0..4).map(|k| r.confusion[k][k]).sum();
        assert!((r.accuracy - 100.0 * trace as f64 / 7.0).abs() < 1e-12);
        assert_eq!(r.confusion[0].iter().sum::<usize>(), 3);
        assert!(metrics_from_labels(&y, &p[..3], 4, "a", "b").is_err());
        assert!(metrics_from_labels(&[], &[], 4, "a", "b").is_err());
    }
}
