use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::model::{LabelSpace, Measure, Normalization};
use crate::sampling::SamplingMode;
use crate::svm::KernelKind;

/// Parameters an evaluation was run with, recorded in its report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub protocol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measures: Option<Vec<Measure>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_frames: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: String,
    pub correct: usize,
    pub total: usize,
    /// Percentage in `[0, 100]`.
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoOutcome {
    pub id: String,
    pub truth: String,
    pub predicted: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub overall_accuracy: f64,
    pub per_class: Vec<ClassAccuracy>,
    pub classes: Vec<String>,
    /// `confusion[t][p]`: videos of true class `t` predicted as `p`.
    pub confusion: Vec<Vec<usize>>,
    pub videos: Vec<VideoOutcome>,
    pub config: EvalConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn percent(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

impl EvaluationReport {
    pub fn from_predictions(
        label_space: &LabelSpace,
        ids: &[String],
        truth: &[usize],
        predicted: &[usize],
        config: EvalConfig,
        warnings: Vec<String>,
    ) -> Self {
        let k = label_space.len();
        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        let per_class = (0..k)
            .map(|c| {
                let total = confusion[c].iter().sum();
                ClassAccuracy {
                    class: label_space.name(c).to_string(),
                    correct: confusion[c][c],
                    total,
                    accuracy: percent(confusion[c][c], total),
                }
            })
            .collect();
        let trace: usize = (0..k).map(|c| confusion[c][c]).sum();
        let videos = ids
            .iter()
            .zip(truth.iter().zip(predicted))
            .map(|(id, (&t, &p))| VideoOutcome {
                id: id.clone(),
                truth: label_space.name(t).to_string(),
                predicted: label_space.name(p).to_string(),
            })
            .collect();
        Self {
            overall_accuracy: percent(trace, truth.len()),
            per_class,
            classes: label_space.names().to_vec(),
            confusion,
            videos,
            config,
            warnings,
        }
    }

    pub fn correct(&self) -> usize {
        (0..self.confusion.len())
            .map(|c| self.confusion[c][c])
            .sum()
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-class accuracy table followed by the confusion matrix.
    pub fn render_table(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(5)
            .max(7);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}", "Class", "Acc (%)");
        for c in &self.per_class {
            let _ = writeln!(out, "{:<width$}  {:>8.2}", c.class, c.accuracy);
        }
        let _ = writeln!(out, "{:<width$}  {:>8.2}", "Overall", self.overall_accuracy);
        let _ = writeln!(out);
        let cell = self
            .confusion
            .iter()
            .flatten()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1)
            .max(3);
        let _ = write!(out, "{:<width$}", "");
        for i in 0..self.classes.len() {
            let _ = write!(out, "  {:>cell$}", i);
        }
        let _ = writeln!(out);
        for (i, row) in self.confusion.iter().enumerate() {
            let label = format!("{i} {}", self.classes[i]);
            let _ = write!(out, "{label:<width$}");
            for v in row {
                let _ = write!(out, "  {v:>cell$}");
            }
            let _ = writeln!(out);
        }
        out
    }
}
