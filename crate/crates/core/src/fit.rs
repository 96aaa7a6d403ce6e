//! Least-squares fits on log-transformed data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData { found: n, needed: 3 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let s2 = sse / (nf - 2.0);
    let slope_se = (s2 / sxx).sqrt();
    let intercept_se = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, slope_se, intercept_se, r_squared, points: n })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `y = A x^b`.
    PowerLaw,
    /// `y = A e^{b√x}`.
    ExpSqrt,
}

impl FromStr for FitModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power_law" | "power-law" => Ok(FitModel::PowerLaw),
            "exp_sqrt" | "exp-sqrt" => Ok(FitModel::ExpSqrt),
            _ => Err(Error::domain(format!("unknown fit model '{s}'"))),
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitModel::PowerLaw => "power_law",
            FitModel::ExpSqrt => "exp_sqrt",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub model: FitModel,
    pub prefactor: f64,
    pub prefactor_se: f64,
    pub exponent: f64,
    pub exponent_se: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Indices of rows dropped because the transform was undefined.
    pub excluded: Vec<usize>,
}

pub fn fit_model(model: FitModel, x: &[f64], y: &[f64]) -> Result<FitReport> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let mut tx = Vec::new();
    let mut ty = Vec::new();
    let mut excluded = Vec::new();
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let ok_x = match model {
            FitModel::PowerLaw => a > 0.0,
            FitModel::ExpSqrt => a >= 0.0,
        };
        if !(b > 0.0) || !ok_x || !a.is_finite() || !b.is_finite() {
            excluded.push(i);
            continue;
        }
        tx.push(match model {
            FitModel::PowerLaw => a.ln(),
            FitModel::ExpSqrt => a.sqrt(),
        });
        ty.push(b.ln());
    }
    if tx.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { found: tx.len(), needed: MIN_FIT_POINTS });
    }
    let lin = linear_fit(&tx, &ty)?;
    let prefactor = lin.intercept.exp();
    Ok(FitReport {
        model,
        prefactor,
        prefactor_se: prefactor * lin.intercept_se,
        exponent: lin.slope,
        exponent_se: lin.slope_se,
        r_squared: lin.r_squared,
        points: lin.points,
        excluded,
    })
}
