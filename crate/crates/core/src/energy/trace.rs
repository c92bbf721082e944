//! Power traces and their integration to energy.

use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Time-stamped instantaneous power, seconds and watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    samples: Vec<(f64, f64)>,
}

impl PowerTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Argument(format!(
                "a power trace needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, &(t, p)) in samples.iter().enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::Data {
                    index: i,
                    message: "non-finite sample".into(),
                });
            }
            if p < 0.0 {
                return Err(Error::Data {
                    index: i,
                    message: format!("negative power {p}"),
                });
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::Data {
                    index: i,
                    message: format!(
                        "time {t} does not increase (previous sample at {})",
                        samples[i - 1].0
                    ),
                });
            }
        }
        Ok(PowerTrace { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].0 - self.samples[0].0
    }

    /// Reads the canonical `elapsed_s,power_w` format.
    pub fn read_canonical<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["elapsed_s", "power_w"] {
            return Err(Error::Parse {
                line: Some(1),
                message: format!(
                    "expected header `elapsed_s,power_w`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut samples = Vec::new();
        for (index, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Data {
                index,
                message: e.to_string(),
            })?;
            let t = parse_number(record.get(0), index, "elapsed_s")?;
            let p = parse_number(record.get(1), index, "power_w")?;
            samples.push((t, p));
        }
        PowerTrace::new(samples)
    }

    /// Reads a vendor log through a column mapping.
    pub fn read_with_adapter<R: Read>(reader: R, adapter: &TraceAdapter) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .delimiter(adapter.delimiter as u8)
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse {
                    line: Some(1),
                    message: format!("column `{name}` not found in header"),
                })
        };
        let time_col = column(&adapter.time_column)?;
        let power_col = column(&adapter.power_column)?;

        let mut samples = Vec::new();
        let mut origin = None;
        let mut day_offset = 0.0;
        let mut last_raw = f64::NEG_INFINITY;
        for (index, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Data {
                index,
                message: e.to_string(),
            })?;
            // Logs commonly end with a summary block of shorter rows.
            if record.len() < headers.len() || record.get(time_col).is_none_or(str::is_empty) {
                break;
            }
            let raw_time = record.get(time_col).unwrap_or_default();
            let mut t = adapter
                .time_format
                .parse(raw_time)
                .ok_or_else(|| Error::Data {
                    index,
                    message: format!(
                        "cannot parse time `{raw_time}` as {:?}",
                        adapter.time_format
                    ),
                })?;
            if adapter.time_format == TimeFormat::Clock {
                if t < last_raw {
                    day_offset += 86_400.0;
                }
                last_raw = t;
                t += day_offset;
            }
            let t0 = *origin.get_or_insert(t);
            let watts = parse_number(record.get(power_col), index, &adapter.power_column)?;
            samples.push((t - t0, watts * adapter.power_scale));
        }
        PowerTrace::new(samples)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse {
        line: e.position().map(|p| p.line() as usize),
        message: e.to_string(),
    }
}

fn parse_number(field: Option<&str>, index: usize, column: &str) -> Result<f64> {
    let raw = field.ok_or_else(|| Error::Data {
        index,
        message: format!("missing `{column}`"),
    })?;
    raw.parse::<f64>().map_err(|_| Error::Data {
        index,
        message: format!("`{column}` value `{raw}` is not a number"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFormat {
    Seconds,
    Milliseconds,
    /// Wall-clock `HH:MM:SS`, `HH:MM:SS.fff` or `HH:MM:SS:mmm`; wraps past
    /// midnight.
    Clock,
}

impl TimeFormat {
    fn parse(&self, raw: &str) -> Option<f64> {
        match self {
            TimeFormat::Seconds => raw.parse().ok(),
            TimeFormat::Milliseconds => raw.parse::<f64>().ok().map(|ms| ms / 1000.0),
            TimeFormat::Clock => {
                let parts: Vec<&str> = raw.split(':').collect();
                let (h, m, s, ms) = match parts.as_slice() {
                    [h, m, s] => (h, m, s, None),
                    [h, m, s, ms] => (h, m, s, Some(ms)),
                    _ => return None,
                };
                let h: f64 = h.parse().ok()?;
                let m: f64 = m.parse().ok()?;
                let s: f64 = s.parse().ok()?;
                let ms: f64 = match ms {
                    Some(ms) => ms.parse().ok()?,
                    None => 0.0,
                };
                Some(h * 3600.0 + m * 60.0 + s + ms / 1000.0)
            }
        }
    }
}

/// Maps a vendor power log onto the canonical trace.
///
/// ```toml
/// time_column = "System Time"
/// time_format = "clock"
/// power_column = "IA Power_0(Watt)"
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceAdapter {
    pub time_column: String,
    pub time_format: TimeFormat,
    pub power_column: String,
    /// Multiplier turning the power column into watts (e.g. 1e-3 for mW).
    #[serde(default = "one")]
    pub power_scale: f64,
    #[serde(default = "comma")]
    pub delimiter: char,
}

fn one() -> f64 {
    1.0
}

fn comma() -> char {
    ','
}

impl TraceAdapter {
    pub fn parse(text: &str) -> Result<Self> {
        let adapter: TraceAdapter = toml::from_str(text).map_err(|e| Error::from_toml(&e, text))?;
        if !adapter.delimiter.is_ascii() {
            return Err(Error::Validation(
                "delimiter must be an ASCII character".into(),
            ));
        }
        if !(adapter.power_scale.is_finite() && adapter.power_scale > 0.0) {
            return Err(Error::Validation("power_scale must be > 0".into()));
        }
        Ok(adapter)
    }
}

/// Trapezoidal integral of power over time, in joules. Exact for
/// piecewise-linear power.
pub fn integrate_power(trace: &PowerTrace) -> f64 {
    trace
        .samples
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}
