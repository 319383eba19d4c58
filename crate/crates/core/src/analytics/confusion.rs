use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix; rows are true classes, columns are predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c == 0 {
            return Err(Error::invalid("confusion matrix must be non-empty"));
        }
        if counts.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(Self { counts })
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        self.counts[row].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    /// Diagonal over row sum; `None` for classes with no test samples.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// Trace over total count.
    pub overall_accuracy: f64,
}

/// Per-class and overall accuracy. The matrix must have at least one count.
pub fn confusion_stats(matrix: &ConfusionMatrix) -> Result<ConfusionStats> {
    let total: u64 = (0..matrix.size()).map(|r| matrix.row_sum(r)).sum();
    if total == 0 {
        return Err(Error::invalid(
            "confusion matrix needs at least one nonzero row",
        ));
    }
    let per_class_accuracy = (0..matrix.size())
        .map(|r| {
            let row_sum = matrix.row_sum(r);
            (row_sum > 0).then(|| matrix.counts()[r][r] as f64 / row_sum as f64)
        })
        .collect();
    let trace: u64 = (0..matrix.size()).map(|r| matrix.counts()[r][r]).sum();
    Ok(ConfusionStats {
        per_class_accuracy,
        overall_accuracy: trace as f64 / total as f64,
    })
}
