//! Riemann zeta function by Euler–Maclaurin summation, the functional-equation
//! factor `χ(s)`, and the Mellin–χ identity check for a test function.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::special::{ln_gamma, ln_sin, BERNOULLI_EVEN};
use crate::testfn::TestFunction;

/// Euler–Maclaurin evaluator for `ζ(s)`.
#[derive(Clone, Debug)]
pub struct ZetaEvaluator {
    pub target_abs_error: f64,
    pub max_height: f64,
    /// Number of Bernoulli correction terms (order `2 * bernoulli_terms`).
    pub bernoulli_terms: usize,
}

impl Default for ZetaEvaluator {
    fn default() -> Self {
        ZetaEvaluator { target_abs_error: 1e-10, max_height: 1e4, bernoulli_terms: 6 }
    }
}

/// A value with an error bound.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: Complex64,
    pub error_bound: f64,
}

impl ZetaEvaluator {
    /// Default summation length `max(20, 2|Im s|, |s|)`.
    pub fn default_terms(&self, s: Complex64) -> usize {
        20usize.max((2.0 * s.im.abs()).ceil() as usize).max(s.norm().ceil() as usize)
    }

    pub fn zeta(&self, s: Complex64) -> Result<Complex64> {
        self.zeta_estimate(s).map(|e| e.value)
    }

    /// `ζ(s)` with the Euler–Maclaurin remainder bound. Doubles the summation
    /// length until the bound meets `target_abs_error`.
    pub fn zeta_estimate(&self, s: Complex64) -> Result<Estimate> {
        self.check(s)?;
        let mut n = self.default_terms(s);
        loop {
            let est = self.zeta_with_terms(s, n);
            if est.error_bound <= self.target_abs_error || n > 1 << 22 {
                return Ok(est);
            }
            n *= 2;
        }
    }

    fn check(&self, s: Complex64) -> Result<()> {
        if (s - 1.0).norm() < 1e-12 {
            return Err(Error::Pole { s, context: "ζ has a simple pole at s = 1".into() });
        }
        if s.im.abs() > self.max_height {
            return Err(Error::HeightExceeded { height: s.im.abs(), max: self.max_height });
        }
        Ok(())
    }

    /// Euler–Maclaurin with an explicit summation length `n`.
    pub fn zeta_with_terms(&self, s: Complex64, n: usize) -> Estimate {
        let mut head = Complex64::new(0.0, 0.0);
        for k in 1..n {
            head += (-s * (k as f64).ln()).exp();
        }
        self.finish(s, n, head)
    }

    /// Adds the Euler–Maclaurin tail to `head = Σ_{k<n} k^{-s}`.
    fn finish(&self, s: Complex64, n: usize, head: Complex64) -> Estimate {
        let nf = n as f64;
        let ln_n = nf.ln();
        let n_pow = (-s * ln_n).exp(); // N^{-s}
        let mut value = head + n_pow * nf / (s - 1.0) + 0.5 * n_pow;

        // Σ B_{2k}/(2k)! · s(s+1)…(s+2k-2) · N^{-s-2k+1}
        let m = self.bernoulli_terms.min(BERNOULLI_EVEN.len() - 1);
        let mut rising = s; // s(s+1)…(s+2k-2)
        let mut npow = n_pow / nf;
        let mut fact = 2.0; // (2k)!
        for k in 1..=m {
            value += BERNOULLI_EVEN[k - 1] / fact * rising * npow;
            let kf = k as f64;
            rising *= (s + 2.0 * kf - 1.0) * (s + 2.0 * kf);
            npow /= nf * nf;
            fact *= (2.0 * kf + 1.0) * (2.0 * kf + 2.0);
        }
        // Remainder: |s(s+1)…(s+2m) B_{2m+2} / (2m+2)! N^{-σ-2m-1}| · |s+2m+1| / (σ+2m+1)
        let sigma = s.re;
        let tail_den = sigma + 2.0 * m as f64 + 1.0;
        let error_bound = if tail_den > 0.0 {
            (rising * BERNOULLI_EVEN[m] / fact * npow).norm()
                * (s + 2.0 * m as f64 + 1.0).norm()
                / tail_den
        } else {
            f64::INFINITY
        };
        Estimate { value, error_bound }
    }
}

/// `ζ(s + σ_k)` for a fixed list of shifts `σ_k`, sharing `k^{-s}` between
/// them. Built for many evaluations at heights up to `max_height`.
#[derive(Clone, Debug)]
pub struct ShiftedZeta {
    evaluator: ZetaEvaluator,
    shifts: Vec<Complex64>,
    ln: Vec<f64>,
    /// `factors[k][i] = k^{-σ_i}`.
    factors: Vec<Vec<Complex64>>,
}

impl ShiftedZeta {
    pub fn new(evaluator: ZetaEvaluator, shifts: &[Complex64], max_height: f64) -> Self {
        let cap = 4 * (max_height.abs().ceil() as usize + 64);
        let mut ln = vec![0.0; cap + 1];
        let mut factors = vec![Vec::new(); cap + 1];
        for k in 1..=cap {
            ln[k] = (k as f64).ln();
            factors[k] = shifts.iter().map(|sh| (-sh * ln[k]).exp()).collect();
        }
        ShiftedZeta { evaluator, shifts: shifts.to_vec(), ln, factors }
    }

    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    pub fn eval(&self, s: Complex64) -> Result<Vec<Estimate>> {
        for sh in &self.shifts {
            self.evaluator.check(s + sh)?;
        }
        let cap = self.ln.len() - 1;
        let mut n = self.shifts.iter().map(|sh| self.evaluator.default_terms(s + sh)).max().unwrap_or(20);
        loop {
            if n > cap {
                return self.shifts.iter().map(|sh| self.evaluator.zeta_estimate(s + sh)).collect();
            }
            let mut heads = vec![Complex64::new(0.0, 0.0); self.shifts.len()];
            for k in 1..n {
                let base = (-s * self.ln[k]).exp();
                for (h, f) in heads.iter_mut().zip(&self.factors[k]) {
                    *h += base * f;
                }
            }
            let out: Vec<Estimate> = self
                .shifts
                .iter()
                .zip(heads)
                .map(|(sh, head)| self.evaluator.finish(s + sh, n, head))
                .collect();
            if out.iter().all(|e| e.error_bound <= self.evaluator.target_abs_error) {
                return Ok(out);
            }
            n *= 2;
        }
    }
}

/// `ζ(s)` with default accuracy settings.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    ZetaEvaluator::default().zeta(s)
}

/// `χ(s) = 2^s π^{s-1} sin(πs/2) Γ(1-s)`, so that `ζ(s) = χ(s) ζ(1-s)`.
pub fn chi(s: Complex64) -> Result<Complex64> {
    // Poles at s = 1, 3, 5, …; zeros at s = 0, -2, -4, …
    let nearest = s.re.round();
    if s.im.abs() < 1e-12 && (s.re - nearest).abs() < 1e-12 {
        let k = nearest as i64;
        if (k > 0 && k % 2 == 1) || (k <= 0 && k % 2 == 0) {
            return Err(Error::Singularity {
                s,
                context: "χ has poles at positive odd integers and zeros at non-positive even integers".into(),
            });
        }
    }
    let log = s * 2f64.ln() + (s - 1.0) * PI.ln() + ln_sin(0.5 * PI * s) + ln_gamma(1.0 - s);
    Ok(log.exp())
}

/// Both sides of `∫_0^∞ (ψ̂(v) + ψ̂(-v)) v^{A-1} dv = χ(1-A) ∫ ψ(t) t^{-A} dt`.
#[derive(Clone, Copy, Debug)]
pub struct MellinCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl MellinCheck {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).norm() / self.rhs.norm()
    }
}

/// Evaluates both sides of the Mellin–χ identity for `0 < Re A < 1`.
///
/// For real `ψ` the even part `ψ̂(v) + ψ̂(-v) = 2 Re ψ̂(v)` is the cosine
/// transform, so the left side reads `2 ∫_0^∞ Re ψ̂(v) v^{A-1} dv`.
pub fn mellin_chi_check(psi: &TestFunction, a: Complex64) -> Result<MellinCheck> {
    if !(a.re > 0.0 && a.re < 1.0) {
        return Err(Error::Domain(format!("Mellin–χ check needs 0 < Re A < 1, got A = {a}")));
    }
    let gl = GaussLegendre::new(24);
    let cos_part = |v: f64| psi.fourier(v).re;
    let c0 = cos_part(0.0);

    // ∫_0^1: C(0)/A + ∫_{-∞}^0 (C(e^x) - C(0)) e^{Ax} dx, the integrand decaying like e^{(A+2)x}.
    let lower = -60.0 / (a.re + 2.0);
    let near_zero = gl.integrate_panels(
        |x| {
            let v = x.exp();
            (cos_part(v) - c0) * (a * x).exp()
        },
        lower,
        0.0,
        64,
    );
    // ∫_1^{V} C(v) v^{A-1} dv, beyond V the transform is below machine precision.
    let vmax = psi.fourier_cutoff().max(2.0);
    let panels = ((vmax - 1.0) * 8.0).ceil() as usize;
    let far = gl.integrate_panels(|v| cos_part(v) * ((a - 1.0) * v.ln()).exp(), 1.0, vmax, panels);
    let lhs = 2.0 * (c0 / a + near_zero + far);

    let (c1, c2) = psi.support();
    let moment = gl.integrate_panels(|t| psi.eval(t) * (-a * t.ln()).exp(), c1, c2, 128);
    let rhs = chi(1.0 - a)? * moment;
    if !(lhs.re.is_finite() && lhs.im.is_finite()) {
        return Err(Error::Numerical(format!("Mellin–χ quadrature did not converge for A = {a}")));
    }
    Ok(MellinCheck { lhs, rhs })
}
