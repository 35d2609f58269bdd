//! Confusion-matrix evaluation: overall, per-class and average class
//! accuracy.

use thiserror::Error;

use crate::table::ClassLabel;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions ({predictions}) and truth ({truth}) differ in length")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("class code {0} outside the severity classes")]
    BadCode(i64),
}

/// 3x3 confusion matrix (rows = truth, columns = prediction) with the
/// derived accuracy figures.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub confusion: [[usize; ClassLabel::COUNT]; ClassLabel::COUNT],
    pub overall_accuracy: f64,
    /// Recall per class; `None` for classes absent from the truth.
    pub per_class_accuracy: [Option<f64>; ClassLabel::COUNT],
    /// Unweighted mean of the per-class accuracies present.
    pub average_class_accuracy: f64,
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,class,value\n");
        out.push_str(&format!("overall_accuracy,,{}\n", self.overall_accuracy));
        out.push_str(&format!("average_class_accuracy,,{}\n", self.average_class_accuracy));
        for label in ClassLabel::ALL {
            if let Some(acc) = self.per_class_accuracy[label.index()] {
                out.push_str(&format!("class_accuracy,{label},{acc}\n"));
            }
        }
        for (t, row) in self.confusion.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                out.push_str(&format!(
                    "confusion,{}->{},{count}\n",
                    ClassLabel::from_code(t as i64).unwrap(),
                    ClassLabel::from_code(p as i64).unwrap(),
                ));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("overall accuracy        {:.4}\n", self.overall_accuracy));
        out.push_str(&format!("average class accuracy  {:.4}\n", self.average_class_accuracy));
        for label in ClassLabel::ALL {
            match self.per_class_accuracy[label.index()] {
                Some(acc) => out.push_str(&format!("  {label:<8} accuracy     {acc:.4}\n")),
                None => out.push_str(&format!("  {label:<8} absent from truth\n")),
            }
        }
        out.push_str("confusion (truth rows, prediction columns):\n");
        for row in &self.confusion {
            out.push_str(&format!("  {:>8} {:>8} {:>8}\n", row[0], row[1], row[2]));
        }
        out
    }
}

/// Builds the evaluation report from parallel prediction/truth code
/// sequences.
pub fn evaluate(predictions: &[i64], truth: &[i64]) -> Result<EvaluationReport, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut confusion = [[0usize; ClassLabel::COUNT]; ClassLabel::COUNT];
    for (&p, &t) in predictions.iter().zip(truth) {
        let pi = ClassLabel::from_code(p).ok_or(EvalError::BadCode(p))?.index();
        let ti = ClassLabel::from_code(t).ok_or(EvalError::BadCode(t))?.index();
        confusion[ti][pi] += 1;
    }
    let total: usize = confusion.iter().flatten().sum();
    let trace: usize = (0..ClassLabel::COUNT).map(|c| confusion[c][c]).sum();
    let mut per_class = [None; ClassLabel::COUNT];
    let mut acc_sum = 0.0;
    let mut acc_n = 0usize;
    for c in 0..ClassLabel::COUNT {
        let row_total: usize = confusion[c].iter().sum();
        if row_total > 0 {
            let acc = confusion[c][c] as f64 / row_total as f64;
            per_class[c] = Some(acc);
            acc_sum += acc;
            acc_n += 1;
        }
    }
    Ok(EvaluationReport {
        confusion,
        overall_accuracy: trace as f64 / total as f64,
        per_class_accuracy: per_class,
        average_class_accuracy: acc_sum / acc_n.max(1) as f64,
    })
}
