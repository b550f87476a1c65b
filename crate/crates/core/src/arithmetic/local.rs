//! Local (per-prime) generating functions of `I_{A,C}`.
//!
//! At a prime `p` the Dirichlet series `Π ζ(s+α) / Π ζ(s+γ)` has Euler factor
//! `Π_α (1 - p^{-α} x)^{-1} · Π_γ (1 - p^{-γ} x)` in `x = p^{-s}`, so the
//! coefficients `I_{A,C}(p^j)` are the Taylor coefficients of that factor.

use num_complex::Complex64;

use super::factor::{factorize, is_prime};
use crate::error::{Error, Result};
use crate::shiftsets::Shift;

/// `p^{-s}` for real `p > 0` and complex `s`.
#[inline]
pub fn pow_neg(p: f64, s: Complex64) -> Complex64 {
    (-s * p.ln()).exp()
}

/// Truncated series `coeffs[j] = I_{A,C}(p^j)`, `0 <= j <= jmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSeries {
    pub prime: u64,
    pub coeffs: Vec<Complex64>,
}

impl LocalSeries {
    pub fn jmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `I(p^j)`, with `I(p^{-1}) = 0` and zero beyond the truncation.
    pub fn get(&self, j: i64) -> Complex64 {
        if j < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(j as usize).copied().unwrap_or_default()
    }

    /// `Σ_{j} coeffs[j + offset] · ratio^j` over the stored coefficients.
    pub fn shifted_sum(&self, offset: usize, ratio: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        for c in self.coeffs.iter().skip(offset) {
            acc += c * pow;
            pow *= ratio;
        }
        acc
    }
}

/// Coefficients of `Π_α (1 - p^{-α} x)^{-1} Π_γ (1 - p^{-γ} x)` to order `jmax`.
pub fn local_series(a: &[Shift], c: &[Shift], p: u64, jmax: usize) -> Result<LocalSeries> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(local_series_unchecked(a, c, p, jmax))
}

pub(crate) fn local_series_unchecked(a: &[Shift], c: &[Shift], p: u64, jmax: usize) -> LocalSeries {
    let pf = p as f64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); jmax + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    for alpha in a {
        let y = pow_neg(pf, alpha.0);
        for j in 1..=jmax {
            let prev = coeffs[j - 1];
            coeffs[j] += y * prev;
        }
    }
    for gamma in c {
        let y = pow_neg(pf, gamma.0);
        for j in (1..=jmax).rev() {
            let prev = coeffs[j - 1];
            coeffs[j] -= y * prev;
        }
    }
    LocalSeries { prime: p, coeffs }
}

/// `I_{A,C}(p)`, the only coefficient needed for primes above `√X`.
#[inline]
pub(crate) fn first_coefficient(a: &[Shift], c: &[Shift], p: f64) -> Complex64 {
    let ln = p.ln();
    let plus: Complex64 = a.iter().map(|s| (-s.0 * ln).exp()).sum();
    let minus: Complex64 = c.iter().map(|s| (-s.0 * ln).exp()).sum();
    plus - minus
}

/// Largest `|p^{-x}|` over the shifts, `0` for an empty set. Together with
/// `|A| + |C| - 1` this bounds the growth of `I_{A,C}(p^j)` in `j`.
pub fn growth_rate(shifts: impl IntoIterator<Item = Shift>, p: u64) -> f64 {
    let ln = (p as f64).ln();
    shifts.into_iter().map(|s| (-s.0.re * ln).exp()).fold(0.0, f64::max)
}

/// Smallest `n` with `rate^n · (n + 1)^degree < tol`; `None` if `rate >= 1`
/// or no such `n <= cap` exists.
pub fn series_length(rate: f64, degree: usize, tol: f64, cap: usize) -> Option<usize> {
    if !(rate < 1.0) {
        return None;
    }
    if rate == 0.0 {
        return Some(1);
    }
    let (lr, lt) = (rate.ln(), tol.ln());
    (1..=cap).find(|&n| n as f64 * lr + degree as f64 * ((n + 1) as f64).ln() < lt)
}

/// `I_{A,C}(n)` for a single `n` from its factorization.
pub fn coefficient(a: &[Shift], c: &[Shift], n: u64) -> Complex64 {
    assert!(n >= 1, "coefficient: n must be positive");
    factorize(n)
        .into_iter()
        .map(|(p, e)| local_series_unchecked(a, c, p, e as usize).coeffs[e as usize])
        .product()
}

/// `Φ(x, q) = Π_{p | q} (1 - p^{-x})`.
pub fn phi_product(x: Complex64, q: u64) -> Complex64 {
    assert!(q >= 1, "phi_product: q must be positive");
    factorize(q)
        .into_iter()
        .map(|(p, _)| Complex64::new(1.0, 0.0) - pow_neg(p as f64, x))
        .product()
}
