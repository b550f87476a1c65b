//! The Rankin–Selberg series `B_{A,B,C,D}(s) = Σ I_{A,C}(n) I_{B,D}(n) n^{-s}`
//! as a ζ-prefactored Euler product, and the local correction factors
//! `E_{A,C}(w, r)` and `𝓔_{A,C}(1 - α̂, q)`.
//!
//! The first-order local coefficient of `B` is
//! `Σ p^{-α-β} + Σ p^{-γ-δ} - Σ p^{-α-δ} - Σ p^{-β-γ}`, so the prefactor is
//! `Π ζ(s+α+β) Π ζ(s+γ+δ) / (Π ζ(s+α+δ) Π ζ(s+β+γ))` and the corrected
//! product converges like `Σ_p p^{-2(Re s + min shifts)}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{
    divisors, euler_phi, factorize, growth_rate, is_prime, local_series_unchecked, moebius,
    pow_neg, series_length, FactorizationSieve,
};
use crate::error::{Error, Result};
use crate::shiftsets::{Shift, ShiftSet};
use crate::zeta::ZetaEvaluator;

pub const DEFAULT_PRIME_CUTOFF: usize = 1_000_000;
pub const MAX_LOCAL_ORDER: usize = 60;
const SERIES_TOL: f64 = 1e-17;
const SERIES_CAP: usize = 400;
const POLE_RADIUS: f64 = 1e-6;
const BLOCK: usize = 2048;

/// A value together with an estimate of the neglected Euler-product tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerEstimate {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// `B_{A,B,C,D}` with a fixed prime cutoff.
#[derive(Clone, Debug)]
pub struct RankinSelberg {
    pub a: ShiftSet,
    pub b: ShiftSet,
    pub c: ShiftSet,
    pub d: ShiftSet,
    pub prime_cutoff: usize,
}

impl RankinSelberg {
    pub fn new(a: &ShiftSet, b: &ShiftSet, c: &ShiftSet, d: &ShiftSet) -> Self {
        RankinSelberg {
            a: a.clone(),
            b: b.clone(),
            c: c.clone(),
            d: d.clone(),
            prime_cutoff: DEFAULT_PRIME_CUTOFF,
        }
    }

    pub fn with_prime_cutoff(mut self, p: usize) -> Self {
        self.prime_cutoff = p;
        self
    }

    pub fn value(&self, s: Complex64) -> Result<EulerEstimate> {
        b_value(&self.a, &self.b, &self.c, &self.d, s, self.prime_cutoff)
    }
}

struct Family {
    shift: Complex64,
    label: String,
}

fn families(a: &ShiftSet, b: &ShiftSet, c: &ShiftSet, d: &ShiftSet) -> (Vec<Family>, Vec<Family>) {
    let cross = |x: &ShiftSet, y: &ShiftSet| {
        let mut out = Vec::new();
        for u in x.iter() {
            for v in y.iter() {
                out.push(Family {
                    shift: u.0 + v.0,
                    label: format!("{}={u}, {}={v}", x.role(), y.role()),
                });
            }
        }
        out
    };
    let mut numer = cross(a, b);
    numer.extend(cross(c, d));
    let mut denom = cross(a, d);
    denom.extend(cross(b, c));
    (numer, denom)
}

fn min_re(x: &ShiftSet, y: &ShiftSet) -> f64 {
    let m = x.iter().chain(y.iter()).map(|s| s.0.re).fold(f64::INFINITY, f64::min);
    if m.is_finite() {
        m
    } else {
        0.0
    }
}

fn degree(a: &ShiftSet, b: &ShiftSet, c: &ShiftSet, d: &ShiftSet) -> usize {
    (a.len() + b.len() + c.len() + d.len()).saturating_sub(2)
}

/// Truncation order for `L_p`: `|p^{-J σ}|·J^deg < 1e-16`, capped at 60.
fn local_order(p: u64, sigma: f64, deg: usize) -> usize {
    let rate = (-sigma * (p as f64).ln()).exp();
    series_length(rate, deg, 1e-16, MAX_LOCAL_ORDER).unwrap_or(MAX_LOCAL_ORDER)
}

fn local_sum(
    a: &ShiftSet,
    b: &ShiftSet,
    c: &ShiftSet,
    d: &ShiftSet,
    p: u64,
    s: Complex64,
    jmax: usize,
) -> (Complex64, f64) {
    let ac = local_series_unchecked(a, c, p, jmax);
    let bd = local_series_unchecked(b, d, p, jmax);
    let x = pow_neg(p as f64, s);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    let mut last = 0.0;
    for j in 0..=jmax {
        let term = ac.coeffs[j] * bd.coeffs[j] * pow;
        acc += term;
        last = term.norm();
        pow *= x;
    }
    (acc, last)
}

/// `L_p(s) = Σ_{j <= jmax} I_{A,C}(p^j) I_{B,D}(p^j) p^{-js}`.
pub fn local_factor(
    a: &ShiftSet,
    b: &ShiftSet,
    c: &ShiftSet,
    d: &ShiftSet,
    p: u64,
    s: Complex64,
    jmax: usize,
) -> Result<Complex64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let sigma = s.re + min_re(a, c) + min_re(b, d);
    if sigma <= 0.0 {
        return Err(Error::Domain(format!(
            "local factor at p = {p} diverges: Re s + min shifts = {sigma}"
        )));
    }
    let (value, last) = local_sum(a, b, c, d, p, s, jmax);
    if last > 1e-12 * value.norm().max(1.0) {
        return Err(Error::Truncation(format!(
            "L_{p}({s}) with jmax = {jmax}: last term {last:.3e}"
        )));
    }
    Ok(value)
}

/// `B_{A,B,C,D}(s)` from the prefactored product over `p <= prime_cutoff`.
pub fn b_value(
    a: &ShiftSet,
    b: &ShiftSet,
    c: &ShiftSet,
    d: &ShiftSet,
    s: Complex64,
    prime_cutoff: usize,
) -> Result<EulerEstimate> {
    if prime_cutoff < 100 {
        return Err(Error::Config(format!("prime cutoff {prime_cutoff} is below 100")));
    }
    let (numer, denom) = families(a, b, c, d);
    for f in numer.iter().chain(denom.iter()) {
        let w = s + f.shift;
        if (w - 1.0).norm() < POLE_RADIUS {
            return Err(Error::Pole { s: w, context: format!("B(s) at s = {s}, pair {}", f.label) });
        }
    }
    let sigma = s.re + min_re(a, c) + min_re(b, d);
    let kappa = 2.0 * sigma;
    if kappa <= 1.0 {
        return Err(Error::Domain(format!(
            "prefactored Euler product for B diverges at s = {s}: 2(Re s + min shifts) = {kappa}"
        )));
    }

    let zeta = ZetaEvaluator { target_abs_error: 1e-13, ..ZetaEvaluator::default() };
    let mut log_prefactor = Complex64::new(0.0, 0.0);
    for f in &numer {
        log_prefactor += zeta.zeta(s + f.shift)?.ln();
    }
    for f in &denom {
        let z = zeta.zeta(s + f.shift)?;
        if z.norm() < 1e-12 {
            return Err(Error::Singularity {
                s: s + f.shift,
                context: format!("zeta vanishes in the prefactor of B, pair {}", f.label),
            });
        }
        log_prefactor -= z.ln();
    }

    let sieve = FactorizationSieve::new(prime_cutoff);
    let primes = sieve.primes();
    let deg = degree(a, b, c, d);
    let corrected = |p: u64| -> Result<Complex64> {
        let (lp, _) = local_sum(a, b, c, d, p, s, local_order(p, sigma, deg));
        if lp.norm() == 0.0 {
            return Err(Error::Singularity { s, context: format!("local factor vanishes at p = {p}") });
        }
        let pf = p as f64;
        let mut acc = lp.ln();
        for f in &numer {
            acc += (1.0 - pow_neg(pf, s + f.shift)).ln();
        }
        for f in &denom {
            acc -= (1.0 - pow_neg(pf, s + f.shift)).ln();
        }
        Ok(acc)
    };

    let blocks: Vec<(Complex64, f64)> = primes
        .par_chunks(BLOCK)
        .map(|chunk| {
            let mut sum = Complex64::new(0.0, 0.0);
            let mut k = 0.0f64;
            for &p in chunk {
                let l = corrected(p as u64)?;
                sum += l;
                if 2 * p as usize > prime_cutoff {
                    k = k.max(l.norm() * (p as f64).powf(kappa));
                }
            }
            Ok((sum, k))
        })
        .collect::<Result<_>>()?;
    let mut log_product = Complex64::new(0.0, 0.0);
    let mut k = 0.0f64;
    for (sum, kb) in blocks {
        log_product += sum;
        k = k.max(kb);
    }

    let value = (log_prefactor + log_product).exp();
    let pc = prime_cutoff as f64;
    let tail_log = 2.0 * k * pc.powf(1.0 - kappa) / ((kappa - 1.0) * pc.ln());
    Ok(EulerEstimate { value, tail_bound: value.norm() * tail_log.exp_m1() })
}

fn joined(x: &ShiftSet, y: &ShiftSet) -> Vec<Shift> {
    x.iter().chain(y.iter()).copied().collect()
}

/// `Σ_{j} I_{A,C}(p^{j + offset}) p^{-jw}`, truncated adaptively.
fn tail_series(a: &ShiftSet, c: &ShiftSet, p: u64, w: Complex64, offset: usize) -> Result<Complex64> {
    let rate = growth_rate(joined(a, c), p) * (-w.re * (p as f64).ln()).exp();
    let deg = (a.len() + c.len()).saturating_sub(1);
    let n = series_length(rate, deg, SERIES_TOL, SERIES_CAP).ok_or_else(|| {
        if rate >= 1.0 {
            Error::Domain(format!("Σ I(p^j) p^(-jw) diverges at p = {p}, w = {w}"))
        } else {
            Error::Truncation(format!("Σ I(p^j) p^(-jw) at p = {p}, w = {w} needs more than {SERIES_CAP} terms"))
        }
    })?;
    let series = local_series_unchecked(a, c, p, n + offset);
    let x = pow_neg(p as f64, w);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    for j in 0..=n {
        acc += series.coeffs[j + offset] * pow;
        pow *= x;
    }
    Ok(acc)
}

/// `E_{A,C}(w, r) = Π_{p^λ || r} Σ_j I(p^{j+λ}) p^{-jw} / Σ_j I(p^j) p^{-jw}`.
pub fn e_factor(a: &ShiftSet, c: &ShiftSet, w: Complex64, r: u64) -> Result<Complex64> {
    if r == 0 {
        return Err(Error::Domain("E(w, r) needs r >= 1".into()));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for (p, lambda) in factorize(r) {
        let num = tail_series(a, c, p, w, lambda as usize)?;
        let den = tail_series(a, c, p, w, 0)?;
        if den.norm() < 1e-12 {
            return Err(Error::Singularity { s: w, context: format!("Σ I(p^j) p^(-jw) vanishes at p = {p}") });
        }
        acc *= num / den;
    }
    Ok(acc)
}

fn split_hat(a: &ShiftSet, alpha_hat: Shift) -> Result<ShiftSet> {
    a.position(alpha_hat)
        .map(|i| a.without(i))
        .ok_or_else(|| Error::Domain(format!("{alpha_hat} is not an element of {}", a.role())))
}

/// `𝓔_{A,C}(1 - α̂, q)` from the multiplicative closed form
/// `Π_{p^J || q} [Π_{A'} (1 - p^{-(1-α̂+α)}) / Π_C (1 - p^{-(1-α̂+γ)})] Σ_j I_{A',C}(p^{j+J}) p^{-j(1-α̂)}`.
pub fn script_e(a: &ShiftSet, c: &ShiftSet, alpha_hat: Shift, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::Domain("𝓔(w, q) needs q >= 1".into()));
    }
    let rest = split_hat(a, alpha_hat)?;
    let w = 1.0 - alpha_hat.0;
    let mut acc = Complex64::new(1.0, 0.0);
    for (p, j) in factorize(q) {
        let pf = p as f64;
        let mut local = tail_series(&rest, c, p, w, j as usize)?;
        for alpha in rest.iter() {
            local *= 1.0 - pow_neg(pf, w + alpha.0);
        }
        for gamma in c.iter() {
            local /= 1.0 - pow_neg(pf, w + gamma.0);
        }
        acc *= local;
    }
    Ok(acc)
}

/// `𝓔_{A,C}(1 - α̂, q)` from its defining double divisor sum
/// `Σ_{d|q} μ(d) d^{1-α̂}/φ(d) Σ_{e|d} μ(e) e^{-1+α̂} E_{A,C}(1 - α̂, qe/d)`.
pub fn script_e_defining(a: &ShiftSet, c: &ShiftSet, alpha_hat: Shift, q: u64) -> Result<Complex64> {
    if q == 0 {
        return Err(Error::Domain("𝓔(w, q) needs q >= 1".into()));
    }
    split_hat(a, alpha_hat)?;
    let w = 1.0 - alpha_hat.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for d in divisors(q) {
        let mu_d = moebius(d);
        if mu_d == 0 {
            continue;
        }
        let outer = f64::from(mu_d) * pow_neg(d as f64, -w) / euler_phi(d) as f64;
        let mut inner = Complex64::new(0.0, 0.0);
        for e in divisors(d) {
            let mu_e = moebius(e);
            if mu_e == 0 {
                continue;
            }
            inner += f64::from(mu_e) * pow_neg(e as f64, w) * e_factor(a, c, w, q / d * e)?;
        }
        acc += outer * inner;
    }
    Ok(acc)
}
