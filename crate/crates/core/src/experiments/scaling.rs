use serde::{Deserialize, Serialize};

use super::fit::linear_regression;
use super::{rate_fit, RateFit};
use crate::error::{Error, Result};
use crate::propagators::linear_flow;
use crate::random::{sample_torus_data, tail_estimate, GaussianStream, TorusEnsembleSpec};
use crate::spectral::{fft_len, lebesgue_norm, FrequencyBox, SpectralField, SpectralGrid};
use crate::Complex64;

/// `2(d + 2)/d`.
pub fn strichartz_admissible_p(dim: usize) -> f64 {
    2.0 * (dim as f64 + 2.0) / dim as f64
}

/// Annulus-supported data tried at each `N`: `random` Gaussian draws plus the coherent
/// datum (all coefficients 1) and a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrichartzCorpus {
    pub random: usize,
    pub master_seed: u64,
}

impl StrichartzCorpus {
    pub fn data(&self, dim: usize, n: u64) -> Result<Vec<SpectralField>> {
        let fb = FrequencyBox::new(dim, n as usize)?;
        let coherent = SpectralField::from_fn(fb, |_| Complex64::new(1.0, 0.0)).project_annulus(n)?;
        let mut out = vec![coherent, SpectralField::single_mode(fb, [n as i64, 0], Complex64::new(1.0, 0.0))?];
        for trial in 0..self.random {
            let mut g = GaussianStream::new(self.master_seed, trial as u64);
            out.push(SpectralField::from_fn(fb, |_| g.next_gaussian()).project_annulus(n)?);
        }
        Ok(out)
    }
}

/// `‖e^{itΔ}f‖_{L^p(𝕋^d × [0,1])} / ‖f‖_{L²}`.
///
/// Spatial quadrature on more than `p·N` points per axis and trapezoidal time steps no
/// longer than `0.1 N⁻²`.
pub fn strichartz_ratio(f: &SpectralField, p: f64) -> Result<f64> {
    let fb = *f.freq_box();
    let norm = f.sobolev_norm(0.0);
    if norm == 0.0 {
        return Err(Error::precondition("the ratio is undefined for the zero datum"));
    }
    let kmax = fb.max_radius() * fb.wavenumber_unit();
    let m = fft_len(fb.min_grid_points().max((p * fb.half_width() as f64).floor() as usize + 1));
    let steps = (10.0 * kmax * kmax).ceil().max(1.0) as usize;
    let dt = 1.0 / steps as f64;
    let mut grid = SpectralGrid::new(fb, m)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.len()];
    let rotate: Vec<Complex64> = fb.modes().map(|n| Complex64::from_polar(1.0, -fb.wavenumber_sq(n) * dt)).collect();
    let mut u = f.coeffs().to_vec();
    let even = p.fract() == 0.0 && (p as i64) % 2 == 0;
    let half = (p / 2.0) as i32;
    let mut integral = 0.0;
    for j in 0..=steps {
        if j > 0 {
            for (c, r) in u.iter_mut().zip(&rotate) {
                *c *= r;
            }
        }
        grid.synthesize(&u, &mut buf);
        let mean = if even {
            buf.iter().map(|v| v.norm_sqr().powi(half)).sum::<f64>()
        } else {
            buf.iter().map(|v| v.norm().powf(p)).sum::<f64>()
        } / buf.len() as f64;
        let w = if j == 0 || j == steps { 0.5 } else { 1.0 };
        integral += w * mean * dt;
    }
    Ok(integral.powf(1.0 / p) / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrichartzReport {
    pub dim: usize,
    pub p: f64,
    /// `(N, worst ratio over the corpus)`
    pub points: Vec<(u64, f64)>,
    pub fit: RateFit,
    /// `d/2 − (d + 2)/p`
    pub predicted_exponent: f64,
}

pub fn strichartz_scaling(dim: usize, n_list: &[u64], p: f64, corpus: &StrichartzCorpus) -> Result<StrichartzReport> {
    if !(1..=2).contains(&dim) {
        return Err(Error::precondition(format!("dimension must be 1 or 2, got {dim}")));
    }
    let admissible = strichartz_admissible_p(dim);
    if !(p >= admissible && p.is_finite()) {
        return Err(Error::precondition(format!("p = {p} is below the admissible exponent {admissible}")));
    }
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut worst = 0.0f64;
        for f in corpus.data(dim, n)? {
            worst = worst.max(strichartz_ratio(&f, p)?);
        }
        points.push((n, worst));
    }
    let fit = rate_fit(&points.iter().map(|&(n, r)| (n as f64, r)).collect::<Vec<_>>())?;
    let d = dim as f64;
    Ok(StrichartzReport { dim, p, points, fit, predicted_exponent: d / 2.0 - (d + 2.0) / p })
}

/// Sub-Gaussian rate fitted to one sample of norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTailFit {
    /// `c` in `−ln P(X > λ) ≈ c λ² + b`
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub thresholds: Vec<f64>,
    pub survival: Vec<f64>,
}

/// Thresholds used for the upper-tail fit.
const TAIL_THRESHOLDS: usize = 12;
/// Smallest number of exceedances at the top threshold.
const MIN_EXCEEDANCES: usize = 10;

/// Fits `−ln S(λ) = c λ² + b` over `λ` from the median up to the quantile that still
/// leaves `max(10, n/200)` exceedances.
pub fn fit_gaussian_tail(values: &[f64]) -> Result<GaussianTailFit> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::precondition("non-finite value in tail sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let keep = MIN_EXCEEDANCES.max(n / 200);
    if n < 2 * keep + TAIL_THRESHOLDS {
        return Err(Error::DegenerateFit(format!("{n} samples are too few for a tail fit")));
    }
    let lo = sorted[n / 2];
    let hi = sorted[n - keep - 1];
    if !(hi > lo) {
        return Err(Error::DegenerateFit("the upper tail has no spread".into()));
    }
    let thresholds: Vec<f64> =
        (0..TAIL_THRESHOLDS).map(|j| lo + (hi - lo) * j as f64 / (TAIL_THRESHOLDS - 1) as f64).collect();
    let survival = tail_estimate(values, &thresholds)?.survival;
    let distinct = survival.windows(2).filter(|w| w[1] < w[0]).count();
    if distinct < 2 || survival.iter().any(|&s| s == 0.0) {
        return Err(Error::DegenerateFit("too few distinct exceedance levels".into()));
    }
    let xs: Vec<f64> = thresholds.iter().map(|l| l * l).collect();
    let ys: Vec<f64> = survival.iter().map(|s| -s.ln()).collect();
    let (rate, intercept, r_squared) = linear_regression(&xs, &ys);
    Ok(GaussianTailFit { rate, intercept, r_squared, thresholds, survival })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailScalingPoint {
    pub n: u64,
    pub fit: GaussianTailFit,
}

/// Minimum ensemble size for [`tail_scaling`].
pub const MIN_TAIL_SAMPLES: usize = 1000;

/// For each `N`, the Gaussian rate of `‖P_N e^{itΔ} f^ω‖_{L^p}` with `P_N` the dyadic annulus.
pub fn tail_scaling(
    spec: &TorusEnsembleSpec,
    n_list: &[u64],
    p: f64,
    t: f64,
    samples: usize,
) -> Result<Vec<TailScalingPoint>> {
    spec.validate()?;
    if samples < MIN_TAIL_SAMPLES {
        return Err(Error::precondition(format!("need at least {MIN_TAIL_SAMPLES} samples, got {samples}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::precondition(format!("p must be finite and ≥ 1, got {p}")));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n as usize > spec.cutoff_k) {
        return Err(Error::precondition(format!("N = {n} exceeds the ensemble cutoff {}", spec.cutoff_k)));
    }
    let fb = spec.freq_box();
    let m = fft_len(fb.min_grid_points().max((p * spec.cutoff_k as f64).floor() as usize + 1));
    let mut grid = SpectralGrid::new(fb, m)?;
    let mut values = vec![Vec::with_capacity(samples); n_list.len()];
    for trial in 0..samples {
        let f = linear_flow(&sample_torus_data(spec, trial as u64)?, t);
        for (&n, out) in n_list.iter().zip(values.iter_mut()) {
            out.push(lebesgue_norm(&grid.to_grid(&f.project_annulus(n)?)?, p)?);
        }
    }
    n_list.iter().zip(values).map(|(&n, v)| Ok(TailScalingPoint { n, fit: fit_gaussian_tail(&v)? })).collect()
}
