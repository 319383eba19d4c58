use std::collections::BTreeMap;
use std::path::Path;

use super::RowError;
use crate::error::{Error, Result};
use crate::similarity::FeatureVector;

/// Reads a feature CSV: `photo_id,photographer_id` followed by D numeric
/// columns, with D inferred from the header.
pub fn parse_features(path: &Path) -> Result<(Vec<FeatureVector>, Vec<RowError>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3
        || headers.get(0) != Some("photo_id")
        || headers.get(1) != Some("photographer_id")
    {
        return Err(Error::invalid(
            "feature file must start with columns photo_id,photographer_id followed by numeric columns",
        ));
    }
    let dim = headers.len() - 2;

    let mut features = Vec::new();
    let mut row_errors = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                row_errors.push(RowError {
                    row,
                    message: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        if record.len() != dim + 2 {
            row_errors.push(RowError {
                row,
                message: format!("expected {} columns, got {}", dim + 2, record.len()),
            });
            continue;
        }
        let photo_id = record.get(0).unwrap_or("").to_string();
        let photographer_id = record.get(1).unwrap_or("").to_string();
        if photo_id.is_empty() || photographer_id.is_empty() {
            row_errors.push(RowError {
                row,
                message: "missing photo_id or photographer_id".into(),
            });
            continue;
        }
        let mut values = Vec::with_capacity(dim);
        let mut bad = None;
        for i in 0..dim {
            match record.get(i + 2).unwrap_or("").parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    bad = Some(i + 2);
                    break;
                }
            }
        }
        if let Some(column) = bad {
            row_errors.push(RowError {
                row,
                message: format!("non-numeric feature value in column {column}"),
            });
            continue;
        }
        match FeatureVector::new(photo_id, photographer_id, values) {
            Ok(f) => features.push(f),
            Err(e) => row_errors.push(RowError {
                row,
                message: e.to_string(),
            }),
        }
    }
    Ok((features, row_errors))
}

/// Reads a label CSV (`sample_id,class`) into per-class counts.
pub fn parse_labels(path: &Path) -> Result<(BTreeMap<String, u64>, Vec<RowError>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let class_column = headers
        .iter()
        .position(|h| h == "class")
        .ok_or_else(|| Error::invalid("label file must have a `class` column"))?;

    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut row_errors = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let row = row_idx + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                row_errors.push(RowError {
                    row,
                    message: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        let class = record.get(class_column).unwrap_or("").trim();
        if class.is_empty() {
            row_errors.push(RowError {
                row,
                message: "missing class".into(),
            });
            continue;
        }
        *counts.entry(class.to_string()).or_insert(0) += 1;
    }
    Ok((counts, row_errors))
}
