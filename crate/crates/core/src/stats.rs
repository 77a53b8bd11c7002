//! Log-log least squares with a 95% confidence interval on the slope.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Result, ZkError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% interval for the slope (0 with two points).
    pub slope_ci: f64,
    pub r2: f64,
    pub n: usize,
}

/// Ordinary least squares of y on x.
pub fn linear_fit(pts: &[(f64, f64)]) -> Result<Fit> {
    let n = pts.len();
    if n < 2 {
        return Err(ZkError::Degenerate("fit needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(ZkError::Degenerate("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let slope_ci = if n > 2 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).expect("dof > 0").inverse_cdf(0.975);
        t * se
    } else {
        0.0
    };
    Ok(Fit { slope, intercept, slope_ci, r2, n })
}

/// Fit of log y against log x; points must be positive.
pub fn loglog_fit(pts: &[(f64, f64)]) -> Result<Fit> {
    if pts.iter().any(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(ZkError::Degenerate("log-log fit needs positive data".into()));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    linear_fit(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(0.75))).collect();
        let f = loglog_fit(&pts).unwrap();
        assert!((f.slope - 0.75).abs() < 1e-12 && f.slope_ci < 1e-10 && (f.r2 - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[(1.0, 1.0)]).is_err());
        assert!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(loglog_fit(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
    }
}
