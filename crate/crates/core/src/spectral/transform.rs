use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{FrequencyBox, GridField, SpectralField};
use crate::error::{Error, Result};

/// Smallest `2^a 3^b 5^c` that is at least `min`.
pub fn fft_len(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// Reusable FFT plans between a [`FrequencyBox`] and a collocation grid of `M`
/// points per axis.
///
/// Coefficient `n` lives in FFT bin `n mod M`; the grid must satisfy `M ≥ 2K + 1`
/// so that distinct box modes never share a bin.
pub struct SpectralGrid {
    freq_box: FrequencyBox,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    column: Vec<Complex64>,
    // FFT bin of each box mode, in lattice order
    bins: Vec<usize>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid").field("freq_box", &self.freq_box).field("m", &self.m).finish()
    }
}

impl SpectralGrid {
    pub fn new(freq_box: FrequencyBox, points_per_axis: usize) -> Result<Self> {
        if points_per_axis < freq_box.side() {
            return Err(Error::structure(format!(
                "grid with M = {points_per_axis} aliases a box of side {}",
                freq_box.side()
            )));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points_per_axis);
        let inverse = planner.plan_fft_inverse(points_per_axis);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let m = points_per_axis as i64;
        let bin = |n: i64| n.rem_euclid(m) as usize;
        let bins = freq_box
            .modes()
            .map(|n| match freq_box.dim() {
                1 => bin(n[0]),
                _ => bin(n[0]) * points_per_axis + bin(n[1]),
            })
            .collect();
        Ok(Self {
            freq_box,
            m: points_per_axis,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            column: vec![Complex64::new(0.0, 0.0); points_per_axis],
            bins,
        })
    }

    /// Grid of at least `factor · (2K + 1)` points per axis, rounded up to an FFT-friendly size.
    pub fn padded(freq_box: FrequencyBox, factor: usize) -> Result<Self> {
        Self::new(freq_box, fft_len(factor * freq_box.side()))
    }

    pub fn freq_box(&self) -> &FrequencyBox {
        &self.freq_box
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.freq_box.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluate the trigonometric polynomial with coefficients `coeffs` on the grid.
    #[inline(always)]
    pub fn synthesize(&mut self, coeffs: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(coeffs.len(), self.freq_box.mode_count());
        debug_assert_eq!(out.len(), self.len());
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (&c, &pos) in coeffs.iter().zip(&self.bins) {
            out[pos] = c;
        }
        self.transform(out, false);
    }

    /// Fourier coefficients of grid samples, restricted to the box.
    ///
    /// `buf` is used as workspace and overwritten.
    #[inline(always)]
    pub fn analyze(&mut self, buf: &mut [Complex64], coeffs: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        debug_assert_eq!(coeffs.len(), self.freq_box.mode_count());
        self.transform(buf, true);
        let norm = 1.0 / self.len() as f64;
        for (c, &pos) in coeffs.iter_mut().zip(&self.bins) {
            *c = buf[pos] * norm;
        }
    }

    /// `synthesize` applied to `coeffs[i]·weight[i]`.
    #[inline(always)]
    pub(crate) fn synthesize_weighted(&mut self, coeffs: &[Complex64], weight: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        for ((&c, &w), &pos) in coeffs.iter().zip(weight).zip(&self.bins) {
            out[pos] = c * w;
        }
        self.transform(out, false);
    }

    /// Like `analyze`, but hands each box coefficient to `put` in mode order.
    #[inline(always)]
    pub(crate) fn analyze_with(&mut self, buf: &mut [Complex64], mut put: impl FnMut(usize, Complex64)) {
        self.transform(buf, true);
        let norm = 1.0 / self.len() as f64;
        for (i, &pos) in self.bins.iter().enumerate() {
            put(i, buf[pos] * norm);
        }
    }

    pub fn to_grid(&mut self, f: &SpectralField) -> Result<GridField> {
        if f.freq_box() != &self.freq_box {
            return Err(Error::structure("field box differs from the grid box"));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        self.synthesize(f.coeffs(), &mut out);
        GridField::new(self.freq_box, self.m, out)
    }

    pub fn to_spectral(&mut self, g: &GridField) -> Result<SpectralField> {
        if g.freq_box() != &self.freq_box || g.points_per_axis() != self.m {
            return Err(Error::structure("grid field does not match the transform grid"));
        }
        let mut buf = g.samples().to_vec();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.freq_box.mode_count()];
        self.analyze(&mut buf, &mut coeffs);
        Ok(SpectralField::from_raw(self.freq_box, coeffs))
    }

    fn transform(&mut self, buf: &mut [Complex64], forward: bool) {
        let plan = if forward { &self.forward } else { &self.inverse };
        let m = self.m;
        match self.freq_box.dim() {
            1 => plan.process_with_scratch(buf, &mut self.scratch),
            _ => {
                for row in buf.chunks_exact_mut(m) {
                    plan.process_with_scratch(row, &mut self.scratch);
                }
                for j in 0..m {
                    for i in 0..m {
                        self.column[i] = buf[i * m + j];
                    }
                    plan.process_with_scratch(&mut self.column, &mut self.scratch);
                    for i in 0..m {
                        buf[i * m + j] = self.column[i];
                    }
                }
            }
        }
    }
}

/// Fourier coefficients of grid samples over the grid's box.
pub fn forward_transform(g: &GridField) -> Result<SpectralField> {
    SpectralGrid::new(*g.freq_box(), g.points_per_axis())?.to_spectral(g)
}

/// Samples of `f` on a grid of `points_per_axis ≥ 2(2K+1)` points per axis.
pub fn inverse_transform(f: &SpectralField, points_per_axis: usize) -> Result<GridField> {
    let need = f.freq_box().min_grid_points();
    if points_per_axis < need {
        return Err(Error::precondition(format!(
            "grid of {points_per_axis} points per axis is undersampled (need at least {need})"
        )));
    }
    SpectralGrid::new(*f.freq_box(), points_per_axis)?.to_grid(f)
}
