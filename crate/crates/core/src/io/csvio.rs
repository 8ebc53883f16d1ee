//! CSV interop: feature matrices with a header row and optional trailing
//! label column, and the ranked score table.

use std::path::Path;

use ndarray::Array2;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::pipeline::ArchScore;

use super::atomic_write;

pub fn write_csv_features(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..fm.cols()).map(|j| format!("f{j}")).collect();
    if fm.labels().is_some() {
        header.push("label".to_string());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (i, row) in fm.array().rows().into_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = fm.labels() {
            rec.push(labels[i].to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    atomic_write(path, &bytes)
}

pub fn read_csv_features(path: &Path) -> Result<FeatureMatrix> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(Error::Format("CSV has no header row".into()));
    }
    let has_labels = headers
        .iter()
        .next_back()
        .map(|h| h.trim() == "label")
        .unwrap_or(false);
    let cols = headers.len() - usize::from(has_labels);
    if cols == 0 {
        return Err(Error::Format("CSV has no feature columns".into()));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<u16> = Vec::new();
    let mut rows = 0usize;
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        if record.len() != headers.len() {
            return Err(Error::Format(format!(
                "row {} has {} fields, header has {}",
                rows + 1,
                record.len(),
                headers.len()
            )));
        }
        for j in 0..cols {
            let field = record.get(j).unwrap().trim();
            values.push(field.parse::<f64>().map_err(|_| {
                Error::Format(format!("row {}, column {j}: bad number {field:?}", rows + 1))
            })?);
        }
        if has_labels {
            let field = record.get(cols).unwrap().trim();
            labels.push(field.parse::<u16>().map_err(|_| {
                Error::Format(format!("row {}: bad label {field:?}", rows + 1))
            })?);
        }
        rows += 1;
    }
    let data = Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    FeatureMatrix::new(data, has_labels.then_some(labels))
}

/// Writes the score table: arch, per-measure mean and std columns, then
/// one verdict column per rule set. Rows appear in the given order;
/// failed measures leave empty cells.
pub fn write_scores_csv(
    path: &Path,
    scores: &[ArchScore],
    measures: &[String],
    rule_sets: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["arch".to_string()];
    for m in measures {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    for rs in rule_sets {
        header.push(format!("verdict_{rs}"));
    }
    w.write_record(&header).map_err(csv_err)?;

    for score in scores {
        let mut rec = vec![score.arch.clone()];
        for m in measures {
            let stat = score.measures.get(m);
            rec.push(stat.and_then(|s| s.mean).map_or(String::new(), |v| v.to_string()));
            rec.push(stat.and_then(|s| s.std).map_or(String::new(), |v| v.to_string()));
        }
        for rs in rule_sets {
            let v = score
                .verdicts
                .get(rs)
                .map(|v| format!("{v:?}").to_lowercase())
                .unwrap_or_default();
            rec.push(v);
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    atomic_write(path, &bytes)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
