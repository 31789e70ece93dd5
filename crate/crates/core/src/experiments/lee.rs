use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex64;

/// Constant on the right-hand side.
pub const LEE_CONSTANT: f64 = 10.0;

/// Refinement factor of the trigonometric interpolant used for the sup and the norms.
const REFINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeeCheck {
    /// `sup_{[0,1]} |φ|`
    pub lhs: f64,
    /// `C (|φ(0)| + α^{1/p−1} ‖φ'‖_p + α^{1/p} ‖φ‖_p)`
    pub rhs: f64,
    pub derivative_term: f64,
    pub mass_term: f64,
    pub holds: bool,
}

/// Trigonometric interpolant of the samples and its derivative, on a grid `REFINE` times finer.
fn interpolate(phi: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let m = phi.len();
    let fine = m * REFINE;
    let mut planner = FftPlanner::new();
    let mut spec = phi.to_vec();
    planner.plan_fft_forward(m).process(&mut spec);
    let mut value = vec![Complex64::new(0.0, 0.0); fine];
    let mut deriv = value.clone();
    for (j, c) in spec.iter().enumerate() {
        // signed frequency; the Nyquist bin of an even grid is split evenly
        let k = if 2 * j < m { j as i64 } else { j as i64 - m as i64 };
        let c = c / m as f64;
        if m % 2 == 0 && 2 * j == m {
            let half = c * 0.5;
            for (kk, slot) in [(k, fine - j), (-k, j)] {
                value[slot] += half;
                deriv[slot] += half * Complex64::new(0.0, 2.0 * std::f64::consts::PI * kk as f64);
            }
            continue;
        }
        let slot = k.rem_euclid(fine as i64) as usize;
        value[slot] += c;
        deriv[slot] += c * Complex64::new(0.0, 2.0 * std::f64::consts::PI * k as f64);
    }
    let inverse = planner.plan_fft_inverse(fine);
    inverse.process(&mut value);
    inverse.process(&mut deriv);
    (value, deriv)
}

fn lp(values: &[Complex64], p: f64) -> f64 {
    (values.iter().map(|v| v.norm().powf(p)).sum::<f64>() / values.len() as f64).powf(1.0 / p)
}

fn check_inputs(phi: &[Complex64], p: f64) -> Result<()> {
    if phi.is_empty() {
        return Err(Error::precondition("no samples of φ"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::precondition(format!("p must be finite and ≥ 1, got {p}")));
    }
    if phi.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::precondition("φ has non-finite samples"));
    }
    Ok(())
}

/// Checks `sup_{[0,1]}|φ| ≤ C (|φ(0)| + α^{1/p−1}‖φ'‖_p + α^{1/p}‖φ‖_p)` for a periodic
/// `φ` given by uniform samples `φ(j/M)`, `j < M`.
pub fn lee_inequality_check(phi: &[Complex64], p: f64, alpha: f64) -> Result<LeeCheck> {
    check_inputs(phi, p)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::precondition(format!("alpha must be positive, got {alpha}")));
    }
    let (value, deriv) = interpolate(phi);
    let lhs = value.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let derivative_term = alpha.powf(1.0 / p - 1.0) * lp(&deriv, p);
    let mass_term = alpha.powf(1.0 / p) * lp(&value, p);
    let rhs = LEE_CONSTANT * (phi[0].norm() + derivative_term + mass_term);
    Ok(LeeCheck { lhs, rhs, derivative_term, mass_term, holds: lhs <= rhs })
}

/// The `α` minimizing the right-hand side, `(p − 1) ‖φ'‖_p / ‖φ‖_p` (1 when undefined).
pub fn lee_optimal_alpha(phi: &[Complex64], p: f64) -> Result<f64> {
    check_inputs(phi, p)?;
    let (value, deriv) = interpolate(phi);
    let (a, b) = (lp(&deriv, p), lp(&value, p));
    let alpha = (p - 1.0) * a / b;
    Ok(if alpha > 0.0 && alpha.is_finite() { alpha } else { 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::GaussianStream;
    use std::f64::consts::PI;

    fn samples(m: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        (0..m).map(|j| f(j as f64 / m as f64)).collect()
    }

    #[test]
    fn constant_function() {
        let phi = vec![Complex64::new(1.0, 0.0); 16];
        for p in [1.0, 2.0, 4.5] {
            let c = lee_inequality_check(&phi, p, 1.0).unwrap();
            assert!((c.lhs - 1.0).abs() < 1e-14);
            assert!(c.rhs >= 10.0 * 2.0 - 1e-12 && c.holds);
            assert!(c.derivative_term.abs() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_balances_both_terms() {
        for k in [1i64, 3, 8, 20] {
            let omega = 2.0 * PI * k as f64;
            let phi = samples(64, |t| Complex64::from_polar(1.0, omega * t));
            for p in [2.0, 3.0, 6.0] {
                let c = lee_inequality_check(&phi, p, omega).unwrap();
                assert!((c.derivative_term - c.mass_term).abs() < 1e-10 * c.mass_term, "{c:?}");
                assert!((c.mass_term - omega.powf(1.0 / p)).abs() < 1e-10 * c.mass_term);
                assert!((c.lhs - 1.0).abs() < 1e-12 && c.holds);
                assert!((lee_optimal_alpha(&phi, p).unwrap() - (p - 1.0) * omega).abs() < 1e-9 * omega);
            }
        }
    }

    #[test]
    fn derivative_is_spectral() {
        let phi = samples(40, |t| Complex64::new((2.0 * PI * t).cos(), (6.0 * PI * t).sin()));
        let (value, deriv) = interpolate(&phi);
        for (j, (v, d)) in value.iter().zip(&deriv).enumerate() {
            let t = j as f64 / value.len() as f64;
            assert!((v - Complex64::new((2.0 * PI * t).cos(), (6.0 * PI * t).sin())).norm() < 1e-12);
            let exact = Complex64::new(-2.0 * PI * (2.0 * PI * t).sin(), 6.0 * PI * (6.0 * PI * t).cos());
            assert!((d - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn random_trigonometric_polynomials() {
        for trial in 0..50 {
            let mut g = GaussianStream::new(5, trial);
            let degree = 1 + trial as i64 % 32;
            let coeffs: Vec<Complex64> = (-degree..=degree).map(|_| g.next_gaussian()).collect();
            let phi = samples(128, |t| {
                coeffs.iter().zip(-degree..).map(|(c, k)| c * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * t)).sum()
            });
            let p = 2.0 + (trial % 5) as f64;
            let alpha = lee_optimal_alpha(&phi, p).unwrap();
            assert!(lee_inequality_check(&phi, p, alpha).unwrap().holds);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let phi = vec![Complex64::new(1.0, 0.0); 4];
        assert!(lee_inequality_check(&phi, 0.5, 1.0).is_err());
        assert!(lee_inequality_check(&phi, 2.0, 0.0).is_err());
        assert!(lee_inequality_check(&[], 2.0, 1.0).is_err());
    }
}
