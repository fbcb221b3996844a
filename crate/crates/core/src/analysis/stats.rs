//! Ordinary least squares for one regressor.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_stderr: f64,
    pub n: usize,
}

impl LinearFit {
    /// 95% normal-approximation band for the slope.
    pub fn slope_band(&self) -> (f64, f64) {
        (self.slope - 1.96 * self.slope_stderr, self.slope + 1.96 * self.slope_stderr)
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits y = a + b x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::config(format!("{} abscissae but {} ordinates", n, y.len())));
    }
    if n < 3 {
        return Err(Error::invalid(format!("need at least 3 points for a fit, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("regressor has zero variance"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        slope_stderr,
        n,
    })
}
