//! Feature CSV I/O: the `id,prominence,residual,distance,label` table
//! produced by extraction and consumed by training, evaluation, and
//! report plotting.

use std::path::Path;

use crate::classifier::{GaitLabel, LabeledExample};
use crate::error::{Error, Result};
use crate::features::GaitFeatures;

/// One feature CSV row. `label` is empty for windows without a human
/// quality annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub features: GaitFeatures,
    pub label: Option<GaitLabel>,
}

pub const FEATURES_CSV_HEADER: &str = "id,prominence,residual,distance,label";

/// Render rows as CSV. Float formatting is shortest-round-trip, so equal
/// inputs produce byte-identical files.
pub fn features_to_csv(rows: &[FeatureRow]) -> String {
    let mut out = String::from(FEATURES_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let label = row.label.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.id,
            row.features.avg_peak_prominence,
            row.features.rms_residual,
            row.features.avg_peak_distance,
            label
        ));
    }
    out
}

pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    write_atomic(path, features_to_csv(rows).as_bytes())
}

/// Write through a sibling temp file plus rename, so a crash mid-write
/// never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Parse a feature CSV. Peak counts are not persisted in this format, so
/// `n_peaks` reads back as 0.
pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    let body = std::fs::read_to_string(path)?;
    parse_features_csv(&body)
}

pub fn parse_features_csv(body: &str) -> Result<Vec<FeatureRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(format!("feature CSV header: {e}")))?;
        let expect: Vec<&str> = FEATURES_CSV_HEADER.split(',').collect();
        let got: Vec<&str> = headers.iter().collect();
        if got != expect {
            return Err(Error::Parse(format!(
                "feature CSV header mismatch: expected '{FEATURES_CSV_HEADER}', got '{}'",
                got.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("feature CSV row {line}: {e}")))?;
        if record.len() != 5 {
            return Err(Error::Parse(format!(
                "feature CSV row {line}: expected 5 fields, got {}",
                record.len()
            )));
        }
        let field = |i: usize| record.get(i).unwrap_or_default();
        let num = |i: usize, name: &str| -> Result<f64> {
            field(i).parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "feature CSV row {line}: bad {name} value '{}'",
                    field(i)
                ))
            })
        };
        let label = match field(4) {
            "" => None,
            s => Some(s.parse::<GaitLabel>()?),
        };
        rows.push(FeatureRow {
            id: field(0).to_string(),
            features: GaitFeatures {
                avg_peak_prominence: num(1, "prominence")?,
                rms_residual: num(2, "residual")?,
                avg_peak_distance: num(3, "distance")?,
                n_peaks: 0,
            },
            label,
        });
    }
    Ok(rows)
}

/// Keep only annotated rows, as classifier training input.
pub fn labeled_examples(rows: &[FeatureRow]) -> Vec<LabeledExample> {
    rows.iter()
        .filter_map(|row| {
            row.label.map(|label| LabeledExample {
                id: row.id.clone(),
                features: row.features,
                label,
            })
        })
        .collect()
}
