//! Two-parameter least squares from transistor operations to energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tos::ToCount;

/// `energy = intercept + slope * tos`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModel {
    #[serde(rename = "intercept_j")]
    pub intercept: f64,
    #[serde(rename = "slope_j_per_to")]
    pub slope: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl LinearModel {
    /// A model with given coefficients and no fit diagnostics attached.
    pub fn from_coefficients(intercept: f64, slope: f64) -> Self {
        LinearModel {
            intercept,
            slope,
            r_squared: 1.0,
            n_points: 2,
        }
    }

    pub fn predict(&self, tos: ToCount) -> f64 {
        self.intercept + self.slope * tos.value()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let model: LinearModel = toml::from_str(text).map_err(|e| Error::from_toml(&e, text))?;
        if !(model.intercept.is_finite() && model.slope.is_finite()) {
            return Err(Error::Validation("coefficients must be finite".into()));
        }
        if !(0.0..=1.0).contains(&model.r_squared) {
            return Err(Error::Validation(format!(
                "r_squared {} outside [0, 1]",
                model.r_squared
            )));
        }
        if model.n_points < 2 {
            return Err(Error::Validation("n_points must be >= 2".into()));
        }
        Ok(model)
    }

    pub fn to_document(&self) -> String {
        toml::to_string(self).expect("linear model serializes")
    }
}

pub fn predict(model: &LinearModel, tos: ToCount) -> f64 {
    model.predict(tos)
}

/// Ordinary least squares over `(tos, energy)` points.
pub fn fit(points: &[(ToCount, f64)]) -> Result<LinearModel> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|(x, y)| !x.value().is_finite() || !y.is_finite())
    {
        return Err(Error::Argument("fit points must be finite".into()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|(x, _)| x.value()).sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in points {
        let dx = x.value() - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit(
            "all points share the same TO value".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|(x, y)| {
            let r = y - (intercept + slope * x.value());
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinearModel {
        intercept,
        slope,
        r_squared,
        n_points: points.len(),
    })
}
