//! Ordinary least squares on a line.

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits `y = slope * x + intercept`. Needs at least three points.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len().min(y.len());
    if n < 3 {
        return Err(HeatError::TooFewPoints { needed: 3, got: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(HeatError::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..n)
        .map(|i| (y[i] - intercept - slope * x[i]).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    let slope_stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        n_points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.intercept, -1.0, epsilon = 1e-13);
        assert_eq!(f.r_squared, 1.0);
        assert!(f.slope_stderr < 1e-14);
    }

    #[test]
    fn noisy_line_stderr() {
        // textbook example: residuals ±1 alternate
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 0.0, 3.0, 2.0];
        let f = fit_line(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(f.intercept, 0.6, epsilon = 1e-14);
        // sse = 3.2, sxx = 5
        assert_abs_diff_eq!(f.slope_stderr, (3.2f64 / 2.0 / 5.0).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn too_few() {
        assert_eq!(
            fit_line(&[1.0, 2.0], &[1.0, 2.0]),
            Err(HeatError::TooFewPoints { needed: 3, got: 2 })
        );
    }
}
