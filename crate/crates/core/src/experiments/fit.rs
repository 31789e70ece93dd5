use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares power law `value ≈ C · scale^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    /// `ln C`.
    pub log_constant: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    pub fn predict(&self, scale: f64) -> f64 {
        (self.log_constant + self.exponent * scale.ln()).exp()
    }
}

/// Fits `ln value = log_constant + exponent · ln scale`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::precondition(format!("rate fit needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(s, v)| !(s > 0.0 && v > 0.0 && s.is_finite() && v.is_finite())) {
        return Err(Error::precondition("rate fit needs positive finite scales and values"));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::precondition("rate fit scales must be strictly increasing"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (exponent, log_constant, r_squared) = linear_regression(&xs, &ys);
    Ok(RateFit { exponent, log_constant, r_squared, points: points.to_vec() })
}

/// Ordinary least squares `y ≈ a + b x`, returns `(b, a, r²)`.
/// `r²` is 1 when the data has no spread in `y`.
pub(crate) fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy <= f64::EPSILON * ys.iter().map(|y| y * y).sum::<f64>() { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_laws() {
        let f = rate_fit(&[(2.0, 4.0), (4.0, 16.0), (8.0, 64.0)]).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let c = rate_fit(&[(1.0, 3.0), (2.0, 3.0), (5.0, 3.0)]).unwrap();
        assert!(c.exponent.abs() < 1e-12);
        assert!((c.predict(10.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(rate_fit(&[(1.0, 1.0), (1.0, 2.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn noisy_half_power() {
        // deterministic ±1% multiplicative noise
        let noise = [0.01, -0.007, 0.004, -0.01, 0.008, -0.002, 0.006, -0.009];
        let pts: Vec<(f64, f64)> =
            noise.iter().enumerate().map(|(i, e)| {
                let s = 2f64.powi(i as i32 + 1);
                (s, s.sqrt() * (1.0 + e))
            }).collect();
        let f = rate_fit(&pts).unwrap();
        assert!((f.exponent - 0.5).abs() < 0.05);
    }

    #[test]
    fn scale_equivariance() {
        let pts = [(3.0, 1.7), (5.0, 2.9), (11.0, 4.1), (20.0, 9.3)];
        let a = rate_fit(&pts).unwrap();
        let scaled: Vec<_> = pts.iter().map(|&(s, v)| (s, 37.5 * v)).collect();
        let b = rate_fit(&scaled).unwrap();
        assert!((a.exponent - b.exponent).abs() <= 1e-12);
        assert!((b.log_constant - a.log_constant - 37.5f64.ln()).abs() < 1e-12);
    }
}
