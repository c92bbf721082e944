//! Prediction scoring and the energy/performance trade-off.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `100 * (1 - |pred - actual| / actual)` per model.
    pub precision: Vec<f64>,
    /// Mean absolute error, joules.
    pub avg_error: f64,
    /// Signed error `pred - actual` of largest magnitude, first one on ties.
    pub max_error: f64,
}

impl ErrorReport {
    pub fn min_precision(&self) -> f64 {
        self.precision.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_precision(&self) -> f64 {
        self.precision
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_precision(&self) -> f64 {
        self.precision.iter().sum::<f64>() / self.precision.len() as f64
    }
}

pub fn error_metrics(predicted: &[f64], actual: &[f64]) -> Result<ErrorReport> {
    if predicted.len() != actual.len() {
        return Err(Error::Argument(format!(
            "{} predictions for {} measurements",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Argument("no measurements to score".into()));
    }
    if let Some(i) = actual.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::Argument(format!(
            "measurement {i} is not a positive energy: {}",
            actual[i]
        )));
    }
    let errors: Vec<f64> = predicted.iter().zip(actual).map(|(p, a)| p - a).collect();
    let precision = errors
        .iter()
        .zip(actual)
        .map(|(e, a)| 100.0 * (1.0 - e.abs() / a))
        .collect();
    let avg_error = errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64;
    let max_error =
        errors.iter().copied().fold(
            0.0_f64,
            |best, e| if e.abs() > best.abs() { e } else { best },
        );
    Ok(ErrorReport {
        precision,
        avg_error,
        max_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub model_id: String,
    pub energy: f64,
    pub loss: f64,
}

impl Candidate {
    pub fn new(model_id: impl Into<String>, energy: f64, loss: f64) -> Self {
        Candidate {
            model_id: model_id.into(),
            energy,
            loss,
        }
    }

    pub fn score(&self, alpha: f64) -> f64 {
        alpha * self.energy + (1.0 - alpha) * self.loss
    }
}

/// Candidate minimizing `alpha * energy + (1 - alpha) * loss` on raw values,
/// first one on ties.
pub fn tradeoff_select(candidates: &[Candidate], alpha: f64) -> Result<&Candidate> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Argument(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut iter = candidates.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::Argument("no candidates".into()))?;
    Ok(iter.fold(first, |best, c| {
        if c.score(alpha) < best.score(alpha) {
            c
        } else {
            best
        }
    }))
}
