//! File formats: CSV inputs and outputs, and the JSON model file.
//!
//! Every write goes to a sibling temporary file which is then renamed over
//! the target.

use crate::error::{Error, Result};
use crate::kde::{CrossSection, DensityModel};
use crate::landscape::EnergyLandscape;
use crate::markov::{GridParams, LangevinModel};
use crate::pipeline::FittedModel;
use crate::validate::{LongitudinalPair, Standardization};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn parse_f64(field: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        location: format!("row {row}, column {column}"),
        message: format!("cannot parse {field:?} as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            location: format!("row {row}, column {column}"),
            message: format!("value {field:?} is not finite"),
        });
    }
    Ok(v)
}

/// Reads `id,value` or a single `value` column. Rows without an id are
/// numbered from 1.
pub fn read_cross_section(text: &str) -> Result<(Vec<String>, CrossSection)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let value_col = headers.iter().position(|h| h == "value").or(if headers.len() == 1 { Some(0) } else { None });
    let Some(value_col) = value_col else {
        return Err(Error::Parse { location: "header".into(), message: "expected a `value` column".into() });
    };
    let id_col = headers.iter().position(|h| h == "id");
    let (mut ids, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let field = rec.get(value_col).ok_or_else(|| Error::Parse {
            location: format!("row {row}"),
            message: "missing value column".into(),
        })?;
        values.push(parse_f64(field, row, &headers[value_col])?);
        ids.push(id_col.and_then(|c| rec.get(c)).map(str::to_string).unwrap_or_else(|| (i + 1).to_string()));
    }
    Ok((ids, CrossSection::new(values)?))
}

pub fn write_cross_section(path: &Path, ids: &[String], values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "value"])?;
    for (id, v) in ids.iter().zip(values) {
        w.write_record([id.as_str(), &v.to_string()])?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}

/// Reads `id,baseline,<label_1>,...,<label_k>`. Returns the follow-up labels
/// and one record per row.
pub fn read_longitudinal(text: &str) -> Result<(Vec<String>, Vec<LongitudinalPair>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "id" || &headers[1] != "baseline" {
        return Err(Error::Parse {
            location: "header".into(),
            message: "expected `id,baseline,<followup>...`".into(),
        });
    }
    let labels: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                location: format!("row {row}"),
                message: format!("expected {} fields, got {}", headers.len(), rec.len()),
            });
        }
        let baseline = parse_f64(&rec[1], row, "baseline")?;
        let followups = labels
            .iter()
            .enumerate()
            .map(|(k, l)| Ok((l.clone(), parse_f64(&rec[k + 2], row, l)?)))
            .collect::<Result<Vec<_>>>()?;
        out.push(LongitudinalPair { id: rec[0].to_string(), baseline, followups });
    }
    if out.is_empty() {
        return Err(Error::EmptyCohort);
    }
    Ok((labels, out))
}

pub fn write_longitudinal(path: &Path, labels: &[String], rows: &[LongitudinalPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "baseline".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.id.clone(), r.baseline.to_string()];
        rec.extend(r.followups.iter().map(|(_, v)| v.to_string()));
        w.write_record(&rec)?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}

/// Writes rows under a header, formatting floats with full round-trip
/// precision.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Squared Hellinger distance at the fitted sigma.
    pub cost: f64,
    pub sigma_bracket: (f64, f64),
    pub at_boundary: bool,
}

/// Everything needed to rebuild a fitted model exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub standardization: Standardization,
    pub bandwidth: f64,
    /// Kernel centres in model (standardised) coordinates.
    pub samples: Vec<f64>,
    pub sigma: f64,
    pub grid: GridParams,
    pub diagnostics: FitDiagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ModelFile {
    pub fn from_fit(fit: &FittedModel, seed: Option<u64>) -> Self {
        let d = fit.model.landscape.density();
        Self {
            schema_version: SCHEMA_VERSION,
            standardization: fit.transform,
            bandwidth: d.bandwidth(),
            samples: d.samples().to_vec(),
            sigma: fit.model.sigma,
            grid: fit.model.grid,
            diagnostics: FitDiagnostics { cost: fit.cost, sigma_bracket: fit.bracket, at_boundary: fit.at_boundary },
            seed,
        }
    }

    pub fn model(&self) -> Result<LangevinModel> {
        let density = DensityModel::with_bandwidth(self.samples.clone(), self.bandwidth)?;
        LangevinModel::new(EnergyLandscape::new(density), self.sigma, self.grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let found = raw.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion { found, expected: SCHEMA_VERSION });
        }
        Ok(serde_json::from_value(raw)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
