use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label used for predictions that name no known category.
pub const UNKNOWN_LABEL: &str = "unknown";

/// Square count matrix; rows are true labels, columns predicted labels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let mut cm = ConfusionMatrix::default();
        for l in labels {
            cm.label_index(&l.into());
        }
        cm
    }

    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() != labels.len() || counts.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::InvalidInput(format!(
                "confusion matrix must be {0}x{0} for {0} labels",
                labels.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(*l)) {
            return Err(Error::InvalidInput(format!("duplicate label '{dup}'")));
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    fn label_index(&mut self, label: &str) -> usize {
        if let Some(i) = self.labels.iter().position(|l| l == label) {
            return i;
        }
        self.labels.push(label.to_string());
        for row in &mut self.counts {
            row.push(0);
        }
        self.counts.push(vec![0; self.labels.len()]);
        self.labels.len() - 1
    }

    /// Records one prediction; unseen labels extend the matrix and `None`
    /// is recorded under [`UNKNOWN_LABEL`].
    pub fn record(&mut self, truth: &str, predicted: Option<&str>) {
        let r = self.label_index(truth);
        let c = self.label_index(predicted.unwrap_or(UNKNOWN_LABEL));
        self.counts[r][c] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (r, rl) in other.labels.iter().enumerate() {
            for (c, cl) in other.labels.iter().enumerate() {
                let v = other.counts[r][c];
                if v > 0 {
                    let i = self.label_index(rl);
                    let j = self.label_index(cl);
                    self.counts[i][j] += v;
                }
            }
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// RFC-4180 CSV: a header of predicted labels, then one row per true label.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let labels: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut counts = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.get(0) != labels.get(i).map(String::as_str) {
                return Err(Error::InvalidInput(format!("row {} label does not match header", i + 1)));
            }
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|e| Error::Parse { line: i + 2, message: e.to_string() })
                })
                .collect::<Result<Vec<u64>>>()?;
            counts.push(row);
        }
        Self::from_counts(labels, counts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision_micro: f64,
    pub precision_macro: f64,
    pub recall_micro: f64,
    pub recall_macro: f64,
    /// Classes whose precision is 0/0 (never predicted); counted as 0.
    pub undefined_precision: Vec<String>,
    /// Classes whose recall is 0/0 (no true instances); counted as 0.
    pub undefined_recall: Vec<String>,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    let n = cm.labels.len();
    let tp: Vec<u64> = (0..n).map(|i| cm.counts[i][i]).collect();
    let predicted: Vec<u64> = (0..n).map(|j| (0..n).map(|i| cm.counts[i][j]).sum()).collect();
    let actual: Vec<u64> = cm.counts.iter().map(|r| r.iter().sum()).collect();
    let tp_sum: u64 = tp.iter().sum();

    let mut undefined_precision = Vec::new();
    let mut undefined_recall = Vec::new();
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    for i in 0..n {
        if predicted[i] == 0 {
            undefined_precision.push(cm.labels[i].clone());
        } else {
            p_sum += tp[i] as f64 / predicted[i] as f64;
        }
        if actual[i] == 0 {
            undefined_recall.push(cm.labels[i].clone());
        } else {
            r_sum += tp[i] as f64 / actual[i] as f64;
        }
    }
    let accuracy = tp_sum as f64 / total as f64;
    Ok(Metrics {
        accuracy,
        precision_micro: tp_sum as f64 / predicted.iter().sum::<u64>() as f64,
        precision_macro: p_sum / n as f64,
        recall_micro: tp_sum as f64 / actual.iter().sum::<u64>() as f64,
        recall_macro: r_sum / n as f64,
        undefined_precision,
        undefined_recall,
    })
}
