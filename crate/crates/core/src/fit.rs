//! Straight-line fits of log-counts against `n`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

/// Ordinary least squares. With fewer than two distinct abscissae the slope
/// is zero.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len().min(ys.len());
    if n == 0 {
        return LineFit {
            slope: 0.0,
            intercept: 0.0,
            residual: 0.0,
        };
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs[..n]
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual = (xs[..n]
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    LineFit {
        slope,
        intercept,
        residual,
    }
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    linear_fit(xs, ys).slope
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(least_squares_slope(&[1.0], &[5.0]), 0.0);
        assert_eq!(least_squares_slope(&[], &[]), 0.0);
    }
}
