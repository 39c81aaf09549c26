use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::CellOutcome;
use crate::error::{Error, Result};

/// One row of the flat results table: model, MAE, MSE, parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub parameters: String,
    pub status: String,
}

impl SummaryRow {
    pub fn from_cell(model: impl Into<String>, cell: &CellOutcome) -> Self {
        let spec = cell.spec();
        match cell {
            CellOutcome::Ok { report } => Self {
                model: model.into(),
                mae: Some(report.mean_mae),
                mse: Some(report.mean_mse),
                parameters: spec.describe(),
                status: "ok".into(),
            },
            CellOutcome::Failed { fold, .. } => Self {
                model: model.into(),
                mae: None,
                mse: None,
                parameters: spec.describe(),
                status: format!("failed at fold {fold}"),
            },
        }
    }
}

/// Summary table without timings, so identical runs produce identical bytes.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "mae", "mse", "parameters", "status"])?;
    let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([r.model.as_str(), &num(r.mae), &num(r.mse), &r.parameters, &r.status])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| rec.get(i).filter(|s| !s.is_empty()).and_then(|s| s.parse().ok());
        rows.push(SummaryRow {
            model: rec.get(0).unwrap_or_default().to_string(),
            mae: num(1),
            mse: num(2),
            parameters: rec.get(3).unwrap_or_default().to_string(),
            status: rec.get(4).unwrap_or_default().to_string(),
        });
    }
    Ok(rows)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<S: serde::de::DeserializeOwned>(path: &Path) -> Result<S> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format { path: path.to_owned(), message: e.to_string() })
}
