use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{rate_fit, RateFit};
use crate::error::{Error, Result};
use crate::propagators::{linear_flow, modulate};
use crate::spectral::{fft_len, FrequencyBox, SpectralField, SpectralGrid};
use crate::Complex64;

/// `f = Σ_{|k| ≤ N/D} e^{iDkx}` and its modulation `e^{ix} f`, on the box `|n| ≤ N + 1`.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub plain: SpectralField,
    pub modulated: SpectralField,
    pub spacing: u64,
}

/// `D = ⌊N^{1−κ}⌋`.
pub fn counterexample_spacing(n: u64, kappa: f64) -> u64 {
    // the tolerance keeps exact powers such as 16^{1/2} from rounding down
    ((n as f64).powf(1.0 - kappa) + 1e-9).floor() as u64
}

pub fn build_counterexample(n: u64, kappa: f64) -> Result<Counterexample> {
    if !(kappa > 0.0 && kappa <= 0.5) {
        return Err(Error::precondition(format!("kappa must lie in (0, 1/2], got {kappa}")));
    }
    let spacing = counterexample_spacing(n, kappa);
    if spacing < 1 || n / spacing.max(1) < 1 {
        return Err(Error::precondition(format!("N = {n} is too small for kappa = {kappa}")));
    }
    let k = (n / spacing) as i64;
    let d = spacing as i64;
    let fb = FrequencyBox::new(1, n as usize + 1)?;
    let plain = SpectralField::from_fn(fb, |m| {
        if m[0] % d == 0 && (m[0] / d).abs() <= k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    let modulated = modulate(&plain, [1, 0])?;
    Ok(Counterexample { plain, modulated, spacing })
}

/// Sampling of the maximal ratio: spatial points per unit of `N`, and fine time samples
/// per lattice interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleGrid {
    pub points_per_n: usize,
    pub subdivisions: usize,
}

impl Default for CounterexampleGrid {
    fn default() -> Self {
        Self { points_per_n: 8, subdivisions: 8 }
    }
}

impl CounterexampleGrid {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_n < 2 || self.subdivisions < 1 {
            return Err(Error::precondition("need points_per_n ≥ 2 and subdivisions ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalRatio {
    /// sup over the lattice `2πD⁻²ℤ ∩ [0, 1/D]`
    pub lattice: f64,
    /// sup over the lattice refined `subdivisions` times
    pub fine: f64,
    pub lattice_times: usize,
    pub fine_times: usize,
}

/// `‖sup_t |e^{itΔ} f|‖_{L²} / ‖f‖_{L²}` with `t` on the time lattice of spacing `D`.
///
/// The lattice `2πD⁻²ℤ` is where every phase `e^{-i(Dk)²t}` returns to 1.
pub fn maximal_ratio(f: &SpectralField, spacing: u64, grid: &CounterexampleGrid) -> Result<MaximalRatio> {
    grid.validate()?;
    let fb = *f.freq_box();
    if fb.dim() != 1 {
        return Err(Error::precondition("the counterexample lives in d = 1"));
    }
    if spacing < 1 {
        return Err(Error::precondition("lattice spacing D must be at least 1"));
    }
    let norm = f.sobolev_norm(0.0);
    if norm == 0.0 {
        return Err(Error::precondition("the ratio is undefined for the zero datum"));
    }
    let d = spacing as f64;
    let step = 2.0 * PI / (d * d * fb.wavenumber_unit().powi(2));
    let lattice_times = (1.0 / (d * step) + 1e-9).floor() as usize + 1;
    let fine_times = (lattice_times - 1) * grid.subdivisions + 1;
    let m = fft_len(fb.min_grid_points().max(grid.points_per_n * fb.half_width()));
    let mut space = SpectralGrid::new(fb, m)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut lattice = vec![0.0f64; m];
    let mut fine = vec![0.0f64; m];
    for j in 0..fine_times {
        let t = step * j as f64 / grid.subdivisions as f64;
        space.synthesize(linear_flow(f, t).coeffs(), &mut buf);
        let on_lattice = j % grid.subdivisions == 0;
        for (i, v) in buf.iter().enumerate() {
            let a = v.norm();
            fine[i] = fine[i].max(a);
            if on_lattice {
                lattice[i] = lattice[i].max(a);
            }
        }
    }
    let l2 = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    Ok(MaximalRatio { lattice: l2(&lattice) / norm, fine: l2(&fine) / norm, lattice_times, fine_times })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexamplePoint {
    pub n: u64,
    pub spacing: u64,
    pub modes: usize,
    pub ratio: MaximalRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub kappa: f64,
    pub points: Vec<CounterexamplePoint>,
    /// fit of the lattice ratios
    pub fit: RateFit,
    pub fine_fit: RateFit,
}

/// Maximal ratio of the modulated counterexample for each `N`, with power-law fits.
pub fn counterexample_scaling(n_list: &[u64], kappa: f64, grid: &CounterexampleGrid) -> Result<CounterexampleReport> {
    if n_list.len() < 4 {
        return Err(Error::precondition(format!("need at least 4 values of N, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::precondition("N values must be strictly increasing"));
    }
    grid.validate()?;
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let ce = build_counterexample(n, kappa)?;
        let modes = ce.plain.coeffs().iter().filter(|c| c.norm_sqr() > 0.0).count();
        let ratio = maximal_ratio(&ce.modulated, ce.spacing, grid)?;
        points.push(CounterexamplePoint { n, spacing: ce.spacing, modes, ratio });
    }
    let fit = rate_fit(&points.iter().map(|p| (p.n as f64, p.ratio.lattice)).collect::<Vec<_>>())?;
    let fine_fit = rate_fit(&points.iter().map(|p| (p.n as f64, p.ratio.fine)).collect::<Vec<_>>())?;
    Ok(CounterexampleReport { kappa, points, fit, fine_fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::inverse_transform;

    #[test]
    fn small_counterexample() {
        let ce = build_counterexample(16, 0.5).unwrap();
        assert_eq!(ce.spacing, 4);
        let support: Vec<i64> =
            ce.plain.iter().filter(|(_, c)| c.norm_sqr() > 0.0).map(|(n, c)| {
                assert_eq!(c, Complex64::new(1.0, 0.0));
                n[0]
            }).collect();
        assert_eq!(support, (-4..=4).map(|k| 4 * k).collect::<Vec<_>>());
        let g = inverse_transform(&ce.plain, 72).unwrap();
        assert!((g.samples()[0] - Complex64::new(9.0, 0.0)).norm() < 1e-12);
        assert!((ce.plain.sobolev_norm(0.0) - 3.0).abs() < 1e-14);
        for (n, c) in ce.plain.iter() {
            assert_eq!(ce.modulated.coeff([n[0] + 1, 0]), c);
        }
    }

    #[test]
    fn kappa_range() {
        for kappa in [0.0, -0.1, 0.7, f64::NAN] {
            assert!(matches!(build_counterexample(64, kappa), Err(Error::Precondition(_))));
        }
        assert_eq!(counterexample_spacing(1024, 0.4), 64);
        assert_eq!(counterexample_spacing(256, 0.4), 27);
    }

    #[test]
    fn single_mode_ratio_is_one() {
        let fb = FrequencyBox::new(1, 9).unwrap();
        let f = SpectralField::single_mode(fb, [1, 0], Complex64::new(0.3, -0.4)).unwrap();
        for d in [1, 2, 3] {
            let r = maximal_ratio(&f, d, &CounterexampleGrid::default()).unwrap();
            assert!((r.lattice - 1.0).abs() < 1e-12 && (r.fine - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unmodulated_datum_does_not_move_on_the_lattice() {
        // at lattice times e^{itΔ} f = f exactly, so only the modulation produces growth
        let grid = CounterexampleGrid::default();
        let ce = build_counterexample(512, 0.4).unwrap();
        let plain = maximal_ratio(&ce.plain, ce.spacing, &grid).unwrap();
        assert!((plain.lattice - 1.0).abs() < 1e-9, "{plain:?}");
        let moved = maximal_ratio(&ce.modulated, ce.spacing, &grid).unwrap();
        assert!(moved.lattice > 2.0);
        assert!(moved.fine >= moved.lattice);
        let fb = FrequencyBox::new(1, 514).unwrap();
        let twice = modulate(&ce.plain.resized(fb).unwrap(), [2, 0]).unwrap();
        assert!(maximal_ratio(&twice, ce.spacing, &grid).unwrap().lattice > moved.lattice);
    }

    #[test]
    fn ratio_grows_with_n() {
        let report = counterexample_scaling(&[256, 512, 1024, 2048, 4096], 0.5, &CounterexampleGrid::default()).unwrap();
        let ratios: Vec<f64> = report.points.iter().map(|p| p.ratio.lattice).collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
        assert!((0.15..=0.35).contains(&report.fit.exponent), "{:?} {ratios:?}", report.fit);
        assert!(counterexample_scaling(&[64, 128, 256], 0.5, &CounterexampleGrid::default()).is_err());
    }
}
