use num_complex::Complex64;

use super::{NonlinearityKind, NonlinearitySpec};
use crate::error::{Error, Result};
use crate::spectral::{FrequencyBox, SpectralField, SpectralGrid};

/// Largest number of summands per output mode accepted by the direct evaluator.
pub const RESTRICTED_TERM_GUARD: usize = 100_000;

/// Pseudospectral evaluator of `𝒩(u)` on a zero-padded grid.
///
/// The padding factor is 2 for cubic and 3 for quintic nonlinearities; with at least
/// `2(2K+1)` (resp. `3(2K+1)`) points per axis no product mode aliases back into the box.
#[derive(Debug)]
pub struct NonlinearityEvaluator {
    spec: NonlinearitySpec,
    grid: SpectralGrid,
    buf: Vec<Complex64>,
}

impl NonlinearityEvaluator {
    pub fn new(freq_box: FrequencyBox, spec: NonlinearitySpec) -> Result<Self> {
        spec.check_dim(freq_box.dim())?;
        let factor = (spec.degree() + 1) / 2;
        let grid = SpectralGrid::padded(freq_box, factor)?;
        let buf = vec![Complex64::new(0.0, 0.0); grid.len()];
        Ok(Self { spec, grid, buf })
    }

    pub fn spec(&self) -> NonlinearitySpec {
        self.spec
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// Writes the box coefficients of `𝒩(u)` into `out`.
    pub fn eval_into(&mut self, coeffs: &[Complex64], out: &mut [Complex64]) {
        self.grid.synthesize(coeffs, &mut self.buf);
        let sign = self.spec.sign.value();
        match self.spec.kind {
            NonlinearityKind::Cubic => {
                for v in self.buf.iter_mut() {
                    *v *= sign * v.norm_sqr();
                }
            }
            NonlinearityKind::WickCubic => {
                let mu: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
                for v in self.buf.iter_mut() {
                    *v *= sign * (v.norm_sqr() - 2.0 * mu);
                }
            }
            NonlinearityKind::WickQuintic => {
                // ⨍|u|⁴ is exact by quadrature: |u|⁴ has degree 4K < M
                let mu = self.buf.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() / self.buf.len() as f64;
                for v in self.buf.iter_mut() {
                    *v *= sign * (v.norm_sqr().powi(2) - 3.0 * mu);
                }
            }
        }
        self.grid.analyze(&mut self.buf, out);
    }

    pub fn eval(&mut self, f: &SpectralField) -> Result<SpectralField> {
        if f.freq_box() != self.grid.freq_box() {
            return Err(Error::structure("field box differs from the evaluator box"));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); f.coeffs().len()];
        self.eval_into(f.coeffs(), &mut out);
        Ok(SpectralField::from_raw(*f.freq_box(), out))
    }
}

/// `𝒩(f)` restricted to the box, computed pseudospectrally without aliasing.
pub fn nonlinearity_eval(f: &SpectralField, spec: NonlinearitySpec) -> Result<SpectralField> {
    NonlinearityEvaluator::new(*f.freq_box(), spec)?.eval(f)
}

/// The two pieces of the direct convolution sum (before the sign is applied).
///
/// `off_diagonal` is the restricted sum over tuples whose conjugated indices avoid all
/// unconjugated ones (`n₂ ≠ n₁, n₃`, and `n₂, n₄ ∉ {n₁, n₃, n₅}` for the quintic);
/// `diagonal` is everything else the kind prescribes, so that
/// `𝒩 = sign · (off_diagonal + diagonal)`.
#[derive(Debug, Clone)]
pub struct RestrictedParts {
    pub off_diagonal: SpectralField,
    pub diagonal: SpectralField,
}

/// Direct lattice-sum evaluation of the nonlinearity, split into its restricted and
/// diagonal parts. Independent of the FFT path.
pub fn restricted_parts(f: &SpectralField, spec: NonlinearitySpec) -> Result<RestrictedParts> {
    let fb = *f.freq_box();
    spec.check_dim(fb.dim())?;
    let modes = fb.mode_count();
    let terms = modes.checked_pow(spec.degree() as u32 - 1).unwrap_or(usize::MAX);
    if terms > RESTRICTED_TERM_GUARD {
        return Err(Error::Resource(format!(
            "direct evaluation needs {terms} terms per output mode (guard {RESTRICTED_TERM_GUARD})"
        )));
    }
    match spec.kind {
        NonlinearityKind::Cubic | NonlinearityKind::WickCubic => Ok(cubic_parts(f, spec.kind)),
        NonlinearityKind::WickQuintic => Ok(quintic_parts(f)),
    }
}

/// `sign · (off_diagonal + diagonal)` from [`restricted_parts`].
pub fn nonlinearity_eval_restricted(f: &SpectralField, spec: NonlinearitySpec) -> Result<SpectralField> {
    let parts = restricted_parts(f, spec)?;
    Ok(parts.off_diagonal.add(&parts.diagonal)?.scale(Complex64::new(spec.sign.value(), 0.0)))
}

fn cubic_parts(f: &SpectralField, kind: NonlinearityKind) -> RestrictedParts {
    let fb = *f.freq_box();
    let a = f.coeffs();
    let mu: f64 = a.iter().map(|c| c.norm_sqr()).sum();
    let mut off = vec![Complex64::new(0.0, 0.0); a.len()];
    let mut diag = vec![Complex64::new(0.0, 0.0); a.len()];
    for (out_idx, n) in fb.modes().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i1, n1) in fb.modes().enumerate() {
            if a[i1].norm_sqr() == 0.0 {
                continue;
            }
            for (i2, n2) in fb.modes().enumerate() {
                if i2 == i1 {
                    continue;
                }
                let n3 = [n[0] - n1[0] + n2[0], n[1] - n1[1] + n2[1]];
                let Some(i3) = fb.index_of(n3) else { continue };
                if i3 == i2 {
                    continue;
                }
                acc += a[i1] * a[i2].conj() * a[i3];
            }
        }
        off[out_idx] = acc;
        let own = a[out_idx];
        // |u|²u = off + 2μû − |û|²û, and the Wick term removes the 2μû
        diag[out_idx] = match kind {
            NonlinearityKind::Cubic => own * (2.0 * mu - own.norm_sqr()),
            _ => -own * own.norm_sqr(),
        };
    }
    RestrictedParts {
        off_diagonal: SpectralField::from_raw(fb, off),
        diagonal: SpectralField::from_raw(fb, diag),
    }
}

fn quintic_parts(f: &SpectralField) -> RestrictedParts {
    let fb = *f.freq_box();
    let a = f.coeffs();
    let k = fb.half_width() as i64;
    let coeff = |n: i64| -> Complex64 {
        if n.abs() <= k {
            a[(n + k) as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    // μ = ⨍|u|⁴ = Σ_{n₁−n₂+n₃−n₄=0} û₁ ū₂ û₃ ū₄
    let mut mu = Complex64::new(0.0, 0.0);
    for n1 in -k..=k {
        for n2 in -k..=k {
            for n3 in -k..=k {
                let n4 = n1 - n2 + n3;
                mu += coeff(n1) * coeff(n2).conj() * coeff(n3) * coeff(n4).conj();
            }
        }
    }
    let mu = mu.re;
    let mut off = vec![Complex64::new(0.0, 0.0); a.len()];
    let mut diag = vec![Complex64::new(0.0, 0.0); a.len()];
    for n in -k..=k {
        let mut restricted = Complex64::new(0.0, 0.0);
        let mut resonant = Complex64::new(0.0, 0.0);
        for n1 in -k..=k {
            let c1 = coeff(n1);
            if c1.norm_sqr() == 0.0 {
                continue;
            }
            for n2 in -k..=k {
                let c12 = c1 * coeff(n2).conj();
                for n3 in -k..=k {
                    let c123 = c12 * coeff(n3);
                    for n4 in -k..=k {
                        let n5 = n - n1 + n2 - n3 + n4;
                        if n5.abs() > k {
                            continue;
                        }
                        let term = c123 * coeff(n4).conj() * coeff(n5);
                        let hit = |m: i64| m == n1 || m == n3 || m == n5;
                        if hit(n2) || hit(n4) {
                            resonant += term;
                        } else {
                            restricted += term;
                        }
                    }
                }
            }
        }
        let idx = (n + k) as usize;
        off[idx] = restricted;
        diag[idx] = resonant - 3.0 * mu * a[idx];
    }
    RestrictedParts {
        off_diagonal: SpectralField::from_raw(fb, off),
        diagonal: SpectralField::from_raw(fb, diag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagators::Sign;

    fn spec(kind: NonlinearityKind, sign: Sign) -> NonlinearitySpec {
        NonlinearitySpec::new(kind, sign)
    }

    fn cos2(fb: FrequencyBox) -> SpectralField {
        SpectralField::from_fn(fb, |n| {
            if n[0].abs() == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        })
    }

    #[test]
    fn single_mode_examples() {
        let fb = FrequencyBox::new(1, 6).unwrap();
        let a = Complex64::new(0.7, -1.2);
        let f = SpectralField::single_mode(fb, [2, 0], a).unwrap();
        let want = SpectralField::single_mode(fb, [2, 0], -a * a.norm_sqr()).unwrap();
        let wick = spec(NonlinearityKind::WickCubic, Sign::Defocusing);
        assert!(nonlinearity_eval(&f, wick).unwrap().max_abs_diff(&want).unwrap() < 1e-14);
        assert!(nonlinearity_eval_restricted(&f, wick).unwrap().max_abs_diff(&want).unwrap() < 1e-15);
        let cubic = spec(NonlinearityKind::Cubic, Sign::Defocusing);
        let want = SpectralField::single_mode(fb, [2, 0], a * a.norm_sqr()).unwrap();
        assert!(nonlinearity_eval(&f, cubic).unwrap().max_abs_diff(&want).unwrap() < 1e-14);
    }

    #[test]
    fn wick_cubic_of_cosine() {
        // oracle: explicit enumeration of (e^{ix} + e^{-ix})² (e^{ix} + e^{-ix})‾
        let fb = FrequencyBox::new(1, 4).unwrap();
        let f = cos2(fb);
        let mut oracle = [0.0f64; 9];
        for n1 in [-1i64, 1] {
            for n2 in [-1i64, 1] {
                for n3 in [-1i64, 1] {
                    oracle[(n1 - n2 + n3 + 4) as usize] += 1.0;
                }
            }
        }
        // subtract 2μu with μ = 2
        oracle[3] -= 4.0;
        oracle[5] -= 4.0;
        assert_eq!(oracle, [0.0, 1.0, 0.0, -1.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let wick = spec(NonlinearityKind::WickCubic, Sign::Defocusing);
        let fast = nonlinearity_eval(&f, wick).unwrap();
        let slow = nonlinearity_eval_restricted(&f, wick).unwrap();
        for n in -4..=4i64 {
            let want = Complex64::new(oracle[(n + 4) as usize], 0.0);
            assert!((fast.coeff([n, 0]) - want).norm() < 1e-12);
            assert!((slow.coeff([n, 0]) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn focusing_flips_the_sign() {
        let fb = FrequencyBox::new(2, 2).unwrap();
        let f = SpectralField::from_fn(fb, |n| Complex64::new(0.3 * n[0] as f64, 0.1 + n[1] as f64 * 0.2));
        for kind in [NonlinearityKind::Cubic, NonlinearityKind::WickCubic] {
            let d = nonlinearity_eval(&f, spec(kind, Sign::Defocusing)).unwrap();
            let g = nonlinearity_eval(&f, spec(kind, Sign::Focusing)).unwrap();
            assert!(d.add(&g).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn quintic_rejected_in_two_dimensions() {
        let fb = FrequencyBox::new(2, 2).unwrap();
        let q = spec(NonlinearityKind::WickQuintic, Sign::Defocusing);
        assert!(nonlinearity_eval(&SpectralField::zeros(fb), q).is_err());
        assert!(nonlinearity_eval_restricted(&SpectralField::zeros(fb), q).is_err());
    }

    #[test]
    fn quintic_fast_and_direct_agree() {
        let fb = FrequencyBox::new(1, 6).unwrap();
        let f = SpectralField::from_fn(fb, |n| Complex64::new(1.0 / (1.0 + n[0].abs() as f64), 0.2 * n[0] as f64 / 6.0));
        let q = spec(NonlinearityKind::WickQuintic, Sign::Focusing);
        let fast = nonlinearity_eval(&f, q).unwrap();
        let slow = nonlinearity_eval_restricted(&f, q).unwrap();
        assert!(fast.max_abs_diff(&slow).unwrap() <= 1e-12 * slow.max_abs());
        // plane wave: |a|⁴a − 3|a|⁴a
        let a = Complex64::new(0.5, 0.5);
        let p = SpectralField::single_mode(fb, [3, 0], a).unwrap();
        let out = nonlinearity_eval(&p, spec(NonlinearityKind::WickQuintic, Sign::Defocusing)).unwrap();
        assert!((out.coeff([3, 0]) + 2.0 * a * a.norm_sqr().powi(2)).norm() < 1e-14);
    }

    #[test]
    fn guard_rejects_large_boxes() {
        let fb = FrequencyBox::new(1, 200).unwrap();
        let wick = spec(NonlinearityKind::WickCubic, Sign::Defocusing);
        assert!(matches!(nonlinearity_eval_restricted(&SpectralField::zeros(fb), wick), Err(Error::Resource(_))));
        let fb = FrequencyBox::new(1, 9).unwrap();
        let q = spec(NonlinearityKind::WickQuintic, Sign::Defocusing);
        assert!(matches!(nonlinearity_eval_restricted(&SpectralField::zeros(fb), q), Err(Error::Resource(_))));
    }
}
