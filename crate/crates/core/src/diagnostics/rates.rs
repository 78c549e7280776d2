use serde::{Deserialize, Serialize};

use super::TraceRow;
use crate::{Error, Result};

const MIN_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// `|e_k| ≈ C k^p`; reports `p`.
    Power,
    /// `|e_k| ≈ C r^k`; reports `r`.
    Geometric,
}

impl RateModel {
    pub fn name(self) -> &'static str {
        match self {
            Self::Power => "power",
            Self::Geometric => "geometric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Exponent (power) or ratio (geometric).
    pub value: f64,
    /// Root-mean-square residual of the log-space regression.
    pub residual: f64,
    pub points: usize,
}

/// `[⌊n/10⌋ + 1, n]`: drops the first tenth of the iterations.
pub fn default_window(n: usize) -> (usize, usize) {
    (n / 10 + 1, n)
}

/// Least-squares fit of `log|e|` against `log k` or `k`; zero and
/// non-finite errors are skipped.
pub fn fit_rate(ks: &[f64], errors: &[f64], model: RateModel) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = ks
        .iter()
        .zip(errors)
        .filter(|(k, e)| k.is_finite() && **k > 0.0 && e.is_finite() && **e != 0.0)
        .map(|(&k, &e)| {
            let x = match model {
                RateModel::Power => k.ln(),
                RateModel::Geometric => k,
            };
            (x, e.abs().ln())
        })
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(Error::InsufficientData {
            usable: pts.len(),
            required: MIN_POINTS,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientData {
            usable: 1,
            required: MIN_POINTS,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let value = match model {
        RateModel::Power => slope,
        RateModel::Geometric => slope.exp(),
    };
    Ok(RateFit {
        model,
        value,
        residual,
        points: pts.len(),
    })
}

/// Fits a named column over rows with `k` in `window` (default: [`default_window`]).
pub fn fit_trace(
    rows: &[TraceRow],
    column: &str,
    window: Option<(usize, usize)>,
    model: RateModel,
) -> Result<RateFit> {
    let (lo, hi) = window.unwrap_or_else(|| default_window(rows.len()));
    let mut ks = Vec::new();
    let mut errs = Vec::new();
    for row in rows.iter().filter(|r| r.k >= lo && r.k <= hi) {
        let value = row
            .column(column)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown column '{column}'")))?;
        ks.push(row.k as f64);
        errs.push(value);
    }
    fit_rate(&ks, &errs, model)
}
