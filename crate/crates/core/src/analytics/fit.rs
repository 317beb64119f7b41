use serde::Serialize;

use super::PassAtNCurve;

/// Least-squares fit of `y = a * ln(x) + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogFit {
    pub a: f64,
    pub b: f64,
    pub residual_sum_squares: f64,
}

impl LogFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.a * x.ln() + self.b
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("degenerate input: need at least two distinct x values")]
    DegenerateInput,
    #[error("x values must be positive and finite, got {0}")]
    NonPositive(f64),
    #[error("y value {0} is not finite")]
    NonFinite(f64),
}

/// Closed-form OLS on `(ln x, y)`.
pub fn fit_log_points(points: &[(f64, f64)]) -> Result<LogFit, FitError> {
    for &(x, y) in points {
        if !(x.is_finite() && x > 0.0) {
            return Err(FitError::NonPositive(x));
        }
        if !y.is_finite() {
            return Err(FitError::NonFinite(y));
        }
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let mean_x = lx.iter().sum::<f64>() / n;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let var: f64 = lx.iter().map(|x| (x - mean_x).powi(2)).sum();
    if points.len() < 2 || var == 0.0 {
        return Err(FitError::DegenerateInput);
    }
    let cov: f64 = lx.iter().zip(points).map(|(x, (_, y))| (x - mean_x) * (y - mean_y)).sum();
    let a = cov / var;
    let b = mean_y - a * mean_x;
    let residual_sum_squares = lx.iter().zip(points).map(|(x, (_, y))| (y - (a * x + b)).powi(2)).sum();
    Ok(LogFit {
        a,
        b,
        residual_sum_squares,
    })
}

pub fn fit_log_curve(curve: &PassAtNCurve) -> Result<LogFit, FitError> {
    let points: Vec<(f64, f64)> = curve
        .n_values()
        .iter()
        .zip(curve.accuracy())
        .map(|(&n, &y)| (n as f64, y))
        .collect();
    fit_log_points(&points)
}
