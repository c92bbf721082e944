//! Measured energy: trace ingestion, aggregation of repeated runs, the
//! TO-to-energy regression and its scoring.

mod metrics;
mod regression;
mod stats;
mod trace;

use std::io::{Read, Write};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tos::ToCount;

pub use metrics::{error_metrics, tradeoff_select, Candidate, ErrorReport};
pub use regression::{fit, predict, LinearModel};
pub use stats::trimmed_mean;
pub use trace::{integrate_power, PowerTrace, TimeFormat, TraceAdapter};

/// Energy of one measured run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub model_id: String,
    pub run_id: String,
    pub joules: f64,
}

fn read_rows<T: DeserializeOwned, R: Read>(reader: R, header: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: Some(1),
            message: e.to_string(),
        })?
        .clone();
    if found.len() < header.len() || header.iter().zip(found.iter()).any(|(a, b)| *a != b) {
        return Err(Error::Parse {
            line: Some(1),
            message: format!(
                "expected header `{}`, got `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(index, row)| {
            row.map_err(|e| Error::Data {
                index,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_samples<R: Read>(reader: R) -> Result<Vec<EnergySample>> {
    let rows: Vec<EnergySample> = read_rows(reader, &["model_id", "run_id", "joules"])?;
    if let Some(index) = rows
        .iter()
        .position(|s| !(s.joules.is_finite() && s.joules >= 0.0))
    {
        return Err(Error::Data {
            index,
            message: format!("energy {} is not a non-negative number", rows[index].joules),
        });
    }
    Ok(rows)
}

pub fn write_samples<W: Write>(writer: W, samples: &[EnergySample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(s).map_err(|e| Error::Argument(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Argument(e.to_string()))
}

#[derive(Deserialize)]
struct PairRow(f64, f64);

/// Reads `tos,joules` fitting pairs. A `flops,joules` header is accepted too
/// so the baseline can be fitted with the same machinery.
pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<(ToCount, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: Some(1),
            message: e.to_string(),
        })?
        .clone();
    if !matches!(headers.get(0), Some("tos" | "flops")) || headers.get(1) != Some("joules") {
        return Err(Error::Parse {
            line: Some(1),
            message: "expected header `tos,joules` or `flops,joules`".into(),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(index, row)| {
            let PairRow(x, joules) = row.map_err(|e| Error::Data {
                index,
                message: e.to_string(),
            })?;
            Ok((ToCount(x), joules))
        })
        .collect()
}

#[derive(Deserialize)]
struct CandidateRow {
    model_id: String,
    energy_j: f64,
    loss: f64,
}

/// Reads `model_id,energy_j,loss` trade-off candidates.
pub fn read_candidates<R: Read>(reader: R) -> Result<Vec<Candidate>> {
    let rows: Vec<CandidateRow> = read_rows(reader, &["model_id", "energy_j", "loss"])?;
    Ok(rows
        .into_iter()
        .map(|r| Candidate::new(r.model_id, r.energy_j, r.loss))
        .collect())
}

/// One row of a `model_id,<value>,...` table.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyedValue {
    pub model_id: String,
    pub value: f64,
    pub group: Option<String>,
}

/// Reads a table whose first column is `model_id` and second column holds
/// joules under any name. A column headed `group` or `activation`, if
/// present, groups the rows; other columns are ignored.
pub fn read_keyed_values<R: Read>(reader: R) -> Result<Vec<KeyedValue>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: Some(1),
            message: e.to_string(),
        })?
        .clone();
    if headers.get(0) != Some("model_id") || headers.len() < 2 {
        return Err(Error::Parse {
            line: Some(1),
            message: "expected header `model_id,<value>[,group]`".into(),
        });
    }
    let group_col = headers
        .iter()
        .skip(2)
        .position(|h| h == "group" || h == "activation")
        .map(|i| i + 2);
    rdr.records()
        .enumerate()
        .map(|(index, rec)| {
            let rec = rec.map_err(|e| Error::Data {
                index,
                message: e.to_string(),
            })?;
            let raw = rec.get(1).unwrap_or_default();
            let value = raw.parse::<f64>().map_err(|_| Error::Data {
                index,
                message: format!("`{raw}` is not a number"),
            })?;
            Ok(KeyedValue {
                model_id: rec.get(0).unwrap_or_default().to_string(),
                value,
                group: group_col.and_then(|c| rec.get(c)).map(str::to_string),
            })
        })
        .collect()
}
