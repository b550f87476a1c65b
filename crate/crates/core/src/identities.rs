//! Numerical checkers for the coefficient identities: the three-parameter
//! power-series identity, its per-prime form, the Ramanujan-sum Dirichlet
//! series, the one-element recurrence for `I_{A,C}(p^J)` and the shift
//! identity for `B`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::arithmetic::{
    divisors, growth_rate, local_series_unchecked, moebius, phi_product, pow_neg, ramanujan_sum,
    series_length,
};
use crate::error::{Error, Result};
use crate::euler::b_value;
use crate::shiftsets::{Shift, ShiftSet};
use crate::zeta::ZetaEvaluator;

const SERIES_TOL: f64 = 1e-17;
pub const DEFAULT_SERIES_CAP: usize = 200;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Power series in a formal variable `X`, truncated after `X^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    pub fn zeros(order: usize) -> Self {
        TruncatedSeries { coeffs: vec![zero(); order + 1] }
    }

    /// Coefficients beyond `order` are dropped, missing ones are zero.
    pub fn from_coeffs(coeffs: &[Complex64], order: usize) -> Self {
        let mut s = Self::zeros(order);
        for (dst, src) in s.coeffs.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    pub fn scale(&self, k: Complex64) -> Self {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    /// Multiplication by `X^k`.
    pub fn shift(&self, k: usize) -> Self {
        let n = self.order();
        let mut out = Self::zeros(n);
        for i in k..=n {
            out.coeffs[i] = self.coeffs[i - k];
        }
        out
    }

    /// Horner evaluation at `X = x`.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(zero(), |acc, c| acc * x + c)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        TruncatedSeries { coeffs: (0..=n).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect() }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self + &(-rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        TruncatedSeries { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        let mut out = TruncatedSeries::zeros(n);
        for i in 0..=n {
            if self.coeffs[i] == zero() {
                continue;
            }
            for j in 0..=n - i {
                out.coeffs[i + j] += self.coeffs[i] * rhs.coeffs[j];
            }
        }
        out
    }
}

/// Sequences `a'`, `b'` with the parameters `Y`, `Z` and the derived
/// `ã_ℓ = Σ_{J<=ℓ} Z^{J-ℓ} a'_J`, `b̃_ℓ = Σ_{K<=ℓ} Y^{K-ℓ} b'_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SequencePair {
    pub a_prime: Vec<Complex64>,
    pub b_prime: Vec<Complex64>,
    pub y: Complex64,
    pub z: Complex64,
    pub a_tilde: Vec<Complex64>,
    pub b_tilde: Vec<Complex64>,
}

fn tilde(seq: &[Complex64], w: Complex64) -> Vec<Complex64> {
    // t_ℓ = Σ_{J<=ℓ} w^{J-ℓ} s_J = s_ℓ + t_{ℓ-1} / w
    let mut out = Vec::with_capacity(seq.len());
    let mut prev = zero();
    for s in seq {
        prev = s + prev / w;
        out.push(prev);
    }
    out
}

fn untilde(seq: &[Complex64], w: Complex64) -> Vec<Complex64> {
    let mut prev = zero();
    seq.iter()
        .map(|t| {
            let v = t - prev / w;
            prev = *t;
            v
        })
        .collect()
}

impl SequencePair {
    pub fn new(a_prime: Vec<Complex64>, b_prime: Vec<Complex64>, y: Complex64, z: Complex64) -> Self {
        let a_tilde = tilde(&a_prime, z);
        let b_tilde = tilde(&b_prime, y);
        SequencePair { a_prime, b_prime, y, z, a_tilde, b_tilde }
    }

    pub fn len(&self) -> usize {
        self.a_prime.len().min(self.b_prime.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `a'` and `b'` recovered from `ã_ℓ - ã_{ℓ-1}/Z` and `b̃_ℓ - b̃_{ℓ-1}/Y`.
    pub fn recovered(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (untilde(&self.a_tilde, self.z), untilde(&self.b_tilde, self.y))
    }

    /// Largest deviation of the recovered sequences from `a'`, `b'`.
    pub fn inverse_residual(&self) -> f64 {
        let (a, b) = self.recovered();
        let dev = |x: &[Complex64], y: &[Complex64]| {
            x.iter().zip(y).map(|(u, v)| (u - v).norm() / v.norm().max(1.0)).fold(0.0, f64::max)
        };
        dev(&a, &self.a_prime).max(dev(&b, &self.b_prime))
    }

    pub fn conj(&self) -> Self {
        let c = |v: &[Complex64]| v.iter().map(|x| x.conj()).collect::<Vec<_>>();
        SequencePair {
            a_prime: c(&self.a_prime),
            b_prime: c(&self.b_prime),
            y: self.y.conj(),
            z: self.z.conj(),
            a_tilde: c(&self.a_tilde),
            b_tilde: c(&self.b_tilde),
        }
    }
}

/// Both sides of an identity and their relative residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(lhs: Complex64, rhs: Complex64) -> Self {
        IdentityCheck { lhs, rhs, residual: (lhs - rhs).norm() / rhs.norm().max(1.0) }
    }
}

/// Left side as a series in `X` through order `n`:
/// `Σ_J Σ_{ℓ∈{0,1}} (-1)^ℓ X^{2ℓ+J} (YZ)^{-ℓ} (Σ_j a'_{j+ℓ+J} (X/Y)^j)(Σ_k b'_{k+ℓ+J} (X/Z)^k)`.
pub fn theorem3_lhs_series(pair: &SequencePair, n: usize) -> Result<TruncatedSeries> {
    check_length(pair, n)?;
    let (iy, iz) = (1.0 / pair.y, 1.0 / pair.z);
    let mut total = TruncatedSeries::zeros(n);
    for l in 0..=1usize {
        let sign = if l == 0 { 1.0 } else { -1.0 };
        let pref = (iy * iz).powu(l as u32) * sign;
        for big_j in 0..=n {
            let lead = 2 * l + big_j;
            if lead > n {
                break;
            }
            let m = n - lead;
            let geometric = |seq: &[Complex64], r: Complex64| {
                let mut pow = Complex64::new(1.0, 0.0);
                let coeffs: Vec<_> = (0..=m)
                    .map(|j| {
                        let v = seq[j + l + big_j] * pow;
                        pow *= r;
                        v
                    })
                    .collect();
                TruncatedSeries::from_coeffs(&coeffs, n)
            };
            let prod = &geometric(&pair.a_prime, iy) * &geometric(&pair.b_prime, iz);
            total = &total + &prod.shift(lead).scale(pref);
        }
    }
    Ok(total)
}

/// Right side `(1 - X/(YZ)) Σ ã_ℓ b̃_ℓ X^ℓ` through order `n`.
pub fn theorem3_rhs_series(pair: &SequencePair, n: usize) -> Result<TruncatedSeries> {
    check_length(pair, n)?;
    let prod: Vec<_> = (0..=n).map(|l| pair.a_tilde[l] * pair.b_tilde[l]).collect();
    let s = TruncatedSeries::from_coeffs(&prod, n);
    Ok(&s - &s.shift(1).scale(1.0 / (pair.y * pair.z)))
}

fn check_length(pair: &SequencePair, n: usize) -> Result<()> {
    let shortest = pair.len().min(pair.a_tilde.len()).min(pair.b_tilde.len());
    if shortest < n + 1 {
        return Err(Error::Truncation(format!(
            "sequences of length {shortest} cannot support X-order {n}"
        )));
    }
    Ok(())
}

/// Evaluates both sides of the power-series identity at `X = x`, each
/// truncated at total `X`-order `n`.
pub fn check_theorem3(pair: &SequencePair, x: Complex64, n: usize) -> Result<IdentityCheck> {
    let lhs = theorem3_lhs_series(pair, n)?.eval(x);
    let rhs = theorem3_rhs_series(pair, n)?.eval(x);
    Ok(IdentityCheck::new(lhs, rhs))
}

fn hat_removed(set: &ShiftSet, hat: Shift) -> Result<ShiftSet> {
    set.position(hat)
        .map(|i| set.without(i))
        .ok_or_else(|| Error::Domain(format!("{hat} is not an element of {}", set.role())))
}

fn terms(rate: f64, degree: usize, cap: usize, what: &str) -> Result<usize> {
    series_length(rate, degree, SERIES_TOL, cap).ok_or_else(|| {
        if rate >= 1.0 {
            Error::Domain(format!("{what} diverges (ratio {rate:.4})"))
        } else {
            Error::Truncation(format!("{what} needs more than {cap} terms (ratio {rate:.4})"))
        }
    })
}

/// Per-prime identity
/// `Σ_{ℓ∈{0,1}} (-1)^ℓ p^{-ℓ(2-α̂-β̂)} Σ_J p^{-J} Σ_j I_{A',C}(p^{j+ℓ+J}) p^{-j(1-α̂)} Σ_k I_{B',D}(p^{k+ℓ+J}) p^{-k(1-β̂)}
///   = (1 - p^{-(1-α̂-β̂)}) Σ_ℓ I_{A'∪{-β̂},C}(p^ℓ) I_{B'∪{-α̂},D}(p^ℓ) p^{-ℓ}`,
/// with every infinite sum cut where its terms drop below `1e-17`, and at
/// most `jmax` terms.
#[allow(clippy::too_many_arguments)]
pub fn check_local_theorem1(
    p: u64,
    a: &ShiftSet,
    b: &ShiftSet,
    c: &ShiftSet,
    d: &ShiftSet,
    alpha_hat: Shift,
    beta_hat: Shift,
    jmax: usize,
) -> Result<IdentityCheck> {
    let a1 = hat_removed(a, alpha_hat)?;
    let b1 = hat_removed(b, beta_hat)?;
    let a_sw = a1.with(-beta_hat);
    let b_sw = b1.with(-alpha_hat);
    let pf = p as f64;
    let lp = pf.ln();
    let (ah, bh) = (alpha_hat.0, beta_hat.0);
    let ra = pow_neg(pf, 1.0 - ah);
    let rb = pow_neg(pf, 1.0 - bh);

    let join = |x: &ShiftSet, y: &ShiftSet| x.iter().chain(y.iter()).copied().collect::<Vec<_>>();
    let ga = growth_rate(join(&a1, c), p);
    let gb = growth_rate(join(&b1, d), p);
    let deg_a = (a1.len() + c.len()).saturating_sub(1);
    let deg_b = (b1.len() + d.len()).saturating_sub(1);
    let na = terms(ga * ra.norm(), deg_a, jmax, "Σ_j I_{A',C}(p^j) p^{-j(1-α̂)}")?;
    let nb = terms(gb * rb.norm(), deg_b, jmax, "Σ_k I_{B',D}(p^k) p^{-k(1-β̂)}")?;
    let nj = terms(ga * gb / pf, deg_a + deg_b + 2, jmax, "Σ_J p^{-J}")?;
    let gs = growth_rate(join(&a_sw, c), p) * growth_rate(join(&b_sw, d), p) / pf;
    let deg_s = (a_sw.len() + c.len() + b_sw.len() + d.len()).saturating_sub(2);
    let nr = terms(gs, deg_s, jmax, "Σ_ℓ Ĩ(p^ℓ) Ĩ'(p^ℓ) p^{-ℓ}")?;

    let sa = local_series_unchecked(&a1, c, p, nj + 1 + na);
    let sb = local_series_unchecked(&b1, d, p, nj + 1 + nb);
    let partial = |coeffs: &[Complex64], r: Complex64, m: usize, len: usize| {
        let mut acc = zero();
        let mut pow = Complex64::new(1.0, 0.0);
        for j in 0..=len {
            acc += coeffs[j + m] * pow;
            pow *= r;
        }
        acc
    };
    let mut lhs = zero();
    for l in 0..=1usize {
        let pref = if l == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            -(-(2.0 - ah - bh) * lp).exp()
        };
        let mut inner = zero();
        for big_j in 0..=nj {
            let m = big_j + l;
            inner += pf.powi(-(big_j as i32))
                * partial(&sa.coeffs, ra, m, na)
                * partial(&sb.coeffs, rb, m, nb);
        }
        lhs += pref * inner;
    }

    let ta = local_series_unchecked(&a_sw, c, p, nr);
    let tb = local_series_unchecked(&b_sw, d, p, nr);
    let mut sum = zero();
    for l in (0..=nr).rev() {
        sum = sum / pf + ta.coeffs[l] * tb.coeffs[l];
    }
    let rhs = (1.0 - pow_neg(pf, 1.0 - ah - bh)) * sum;
    Ok(IdentityCheck::new(lhs, rhs))
}

/// The per-prime identity's inputs in the three-parameter form:
/// `X = 1/p`, `Y = p^{-α̂}`, `Z = p^{-β̂}`, `a'_j = I_{A',C}(p^j)`, `b'_k = I_{B',D}(p^k)`.
#[allow(clippy::too_many_arguments)]
pub fn local_sequence_pair(
    p: u64,
    a: &ShiftSet,
    b: &ShiftSet,
    c: &ShiftSet,
    d: &ShiftSet,
    alpha_hat: Shift,
    beta_hat: Shift,
    len: usize,
) -> Result<(SequencePair, Complex64)> {
    let a1 = hat_removed(a, alpha_hat)?;
    let b1 = hat_removed(b, beta_hat)?;
    let pf = p as f64;
    let sa = local_series_unchecked(&a1, c, p, len);
    let sb = local_series_unchecked(&b1, d, p, len);
    let pair = SequencePair::new(sa.coeffs, sb.coeffs, pow_neg(pf, alpha_hat.0), pow_neg(pf, beta_hat.0));
    Ok((pair, Complex64::new(1.0 / pf, 0.0)))
}

/// Partial sum, closed form and tail bound for
/// `Σ_h r_q(h) h^{-A} = q^{1-A} Φ(1-A, q) ζ(A)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RqCheck {
    pub lhs_partial: Complex64,
    pub rhs: Complex64,
    pub tail_bound: f64,
}

impl RqCheck {
    pub fn error(&self) -> f64 {
        (self.lhs_partial - self.rhs).norm()
    }

    /// Within the tail bound, with rounding slack.
    pub fn holds(&self) -> bool {
        self.error() <= self.tail_bound + 1e-12 * self.rhs.norm().max(1.0)
    }
}

pub fn check_rq_series(q: u64, a: Complex64, h_max: u64) -> Result<RqCheck> {
    let sigma = a.re;
    if sigma <= 1.0 {
        return Err(Error::Domain(format!("Σ r_q(h) h^(-A) needs Re A > 1, got A = {a}")));
    }
    if q == 0 || h_max < q {
        return Err(Error::Domain(format!("need 1 <= q <= H, got q = {q}, H = {h_max}")));
    }
    let period: Vec<f64> = (0..q).map(|r| ramanujan_sum(q, r) as f64).collect();
    let mut lhs = zero();
    for h in (1..=h_max).rev() {
        let r = period[(h % q) as usize];
        if r != 0.0 {
            lhs += r * pow_neg(h as f64, a);
        }
    }
    let zeta = ZetaEvaluator { target_abs_error: 1e-15, ..ZetaEvaluator::default() };
    let rhs = pow_neg(q as f64, a - 1.0) * phi_product(1.0 - a, q) * zeta.zeta(a)?;
    let tail_bound = divisors(q)
        .into_iter()
        .filter(|&d| moebius(q / d) != 0)
        .map(|d| {
            let m = (h_max / d) as f64;
            (d as f64).powf(1.0 - sigma) * m.powf(1.0 - sigma) / (sigma - 1.0)
        })
        .sum();
    Ok(RqCheck { lhs_partial: lhs, rhs, tail_bound })
}

/// `max_J |I_{A,C}(p^J) - I_{A',C}(p^J) - p^{-α} I_{A,C}(p^{J-1})|`, relative
/// to `max(1, |I_{A,C}(p^J)|)`, with `I(p^{-1}) = 0`.
pub fn check_recurrence(a: &ShiftSet, c: &ShiftSet, alpha: Shift, p: u64, jmax: usize) -> Result<f64> {
    let rest = hat_removed(a, alpha)?;
    let full = local_series_unchecked(a, c, p, jmax);
    let part = local_series_unchecked(&rest, c, p, jmax);
    let y = pow_neg(p as f64, alpha.0);
    Ok((0..=jmax as i64)
        .map(|j| {
            let v = full.get(j);
            (v - part.get(j) - y * full.get(j - 1)).norm() / v.norm().max(1.0)
        })
        .fold(0.0, f64::max))
}

/// Relative difference of `B_{A+s,B,C+s,D}(1)` and `B_{A,B,C,D}(s+1)`.
pub fn check_b_shift(
    a: &ShiftSet,
    b: &ShiftSet,
    c: &ShiftSet,
    d: &ShiftSet,
    s: Complex64,
    prime_cutoff: usize,
) -> Result<IdentityCheck> {
    let lhs = b_value(&a.translate(s), b, &c.translate(s), d, Complex64::new(1.0, 0.0), prime_cutoff)?;
    let rhs = b_value(a, b, c, d, s + 1.0, prime_cutoff)?;
    Ok(IdentityCheck {
        lhs: lhs.value,
        rhs: rhs.value,
        residual: (lhs.value - rhs.value).norm() / rhs.value.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::local_series;
    use crate::shiftsets::Role;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn set(role: Role, xs: &[(f64, f64)]) -> ShiftSet {
        ShiftSet::new(role, xs.iter().map(|&(r, i)| Shift::new(r, i)).collect())
    }

    fn unit_disk(rng: &mut ChaCha8Rng) -> Complex64 {
        let r = rng.gen::<f64>().sqrt();
        Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
    }

    fn random_pair(rng: &mut ChaCha8Rng, len: usize, y: Complex64, z: Complex64) -> SequencePair {
        let a: Vec<_> = (0..len).map(|_| unit_disk(rng)).collect();
        let b: Vec<_> = (0..len).map(|_| unit_disk(rng)).collect();
        SequencePair::new(a, b, y, z)
    }

    #[test]
    fn series_algebra() {
        let f = TruncatedSeries::from_coeffs(&[c(1.0, 0.0), c(2.0, 1.0), c(0.0, 3.0)], 4);
        let g = TruncatedSeries::from_coeffs(&[c(1.0, 0.0), c(-1.0, 0.0)], 4);
        let h = &f * &g;
        assert_eq!(h.coeffs(), &[c(1.0, 0.0), c(1.0, 1.0), c(-2.0, 2.0), c(0.0, -3.0), c(0.0, 0.0)]);
        let x = c(0.3, -0.2);
        assert!((h.eval(x) - f.eval(x) * g.eval(x)).norm() < 1e-15);
        assert_eq!(f.shift(3).coeffs()[3..], [c(1.0, 0.0), c(2.0, 1.0)]);
        assert_eq!((&f - &f).coeffs(), TruncatedSeries::zeros(4).coeffs());
    }

    #[test]
    fn delta_sequences_closed_form() {
        // a' = b' = δ: ã_ℓ = Z^{-ℓ}, b̃_ℓ = Y^{-ℓ}, and the left side is 1.
        let n = 30;
        let mut delta = vec![c(0.0, 0.0); n + 1];
        delta[0] = c(1.0, 0.0);
        let (y, z) = (c(0.9, 0.2), c(1.1, -0.3));
        let pair = SequencePair::new(delta.clone(), delta, y, z);
        for l in 0..=n {
            assert!((pair.a_tilde[l] - z.powi(-(l as i32))).norm() < 1e-13);
            assert!((pair.b_tilde[l] - y.powi(-(l as i32))).norm() < 1e-13);
        }
        let x = c(0.2, 0.1);
        let check = check_theorem3(&pair, x, n).unwrap();
        assert!((check.lhs - 1.0).norm() < 1e-15);
        let q = x / (y * z);
        let closed = (1.0 - q) * (1.0 - q.powu(n as u32 + 1)) / (1.0 - q);
        assert!((check.rhs - closed).norm() < 1e-12);
        assert!(check.residual <= 1e-12);
    }

    #[test]
    fn random_sequences_at_x_point_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pair = random_pair(&mut rng, 13, c(0.8, -0.1), c(1.2, 0.3));
        let check = check_theorem3(&pair, c(0.3, 0.0), 12).unwrap();
        assert!(check.residual <= 1e-10, "{check:?}");
    }

    #[test]
    fn x_zero_gives_constant_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pair = random_pair(&mut rng, 9, c(0.8, -0.1), c(1.2, 0.3));
        let check = check_theorem3(&pair, c(0.0, 0.0), 8).unwrap();
        assert_eq!(check.lhs, pair.a_prime[0] * pair.b_prime[0]);
        assert_eq!(check.rhs, pair.a_tilde[0] * pair.b_tilde[0]);
    }

    #[test]
    fn short_sequences_are_rejected() {
        let pair = SequencePair::new(vec![c(1.0, 0.0); 5], vec![c(1.0, 0.0); 5], c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(check_theorem3(&pair, c(0.1, 0.0), 5), Err(Error::Truncation(_))));
    }

    #[test]
    fn lhs_keeps_first_order_term_at_j_zero() {
        // Dropping ℓ = 1 at J = 0 breaks the identity at order X^2.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pair = random_pair(&mut rng, 5, c(0.8, -0.1), c(1.2, 0.3));
        let lhs = theorem3_lhs_series(&pair, 4).unwrap();
        let rhs = theorem3_rhs_series(&pair, 4).unwrap();
        let missing = pair.a_prime[1] * pair.b_prime[1] / (pair.y * pair.z);
        for k in 0..=4 {
            assert!((lhs.coeff(k) - rhs.coeff(k)).norm() < 1e-13);
        }
        assert!(missing.norm() > 1e-3);
    }

    #[test]
    fn truncation_error_shrinks_geometrically() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = c(0.3, 0.0);
        for _ in 0..10 {
            let pair = random_pair(&mut rng, 49, c(0.8, -0.1), c(1.2, 0.3));
            let at = |n| theorem3_lhs_series(&pair, n).unwrap().eval(x);
            let reference = at(48);
            let coarse = (at(12) - reference).norm();
            let fine = (at(24) - reference).norm();
            assert!(fine <= 1e-3 * coarse, "{fine:e} vs {coarse:e}");
        }
    }

    #[test]
    fn single_element_local_identity() {
        let a = set(Role::A, &[(0.1, 0.05)]);
        let b = set(Role::B, &[(0.12, -0.02)]);
        let e = ShiftSet::empty(Role::C);
        let check =
            check_local_theorem1(2, &a, &b, &e, &e.clone().with_role(Role::D), a[0], b[0], DEFAULT_SERIES_CAP)
                .unwrap();
        assert!((check.lhs - 1.0).norm() < 1e-15);
        assert!(check.residual <= 1e-10, "{check:?}");
    }

    #[test]
    fn doubleton_local_identity() {
        let a = set(Role::A, &[(0.1, 0.05), (-0.08, 0.12)]);
        let b = set(Role::B, &[(0.12, -0.02), (0.03, 0.15)]);
        let cc = set(Role::C, &[(0.18, -0.1)]);
        let d = set(Role::D, &[(0.05, 0.07)]);
        for ah in a.iter() {
            for bh in b.iter() {
                let check = check_local_theorem1(3, &a, &b, &cc, &d, *ah, *bh, DEFAULT_SERIES_CAP).unwrap();
                assert!(check.residual <= 1e-8, "{check:?}");
            }
        }
    }

    #[test]
    fn local_identity_matches_series_parameterization() {
        let a = set(Role::A, &[(0.1, 0.05), (-0.08, 0.12)]);
        let b = set(Role::B, &[(0.12, -0.02), (0.03, 0.15)]);
        let cc = set(Role::C, &[(0.18, -0.1)]);
        let d = set(Role::D, &[(0.05, 0.07)]);
        for p in [2u64, 3, 5, 7] {
            let direct = check_local_theorem1(p, &a, &b, &cc, &d, a[1], b[0], DEFAULT_SERIES_CAP).unwrap();
            let n = 150;
            let (pair, x) = local_sequence_pair(p, &a, &b, &cc, &d, a[1], b[0], n + 1).unwrap();
            let series = check_theorem3(&pair, x, n).unwrap();
            assert!((direct.residual - series.residual).abs() <= 1e-10);
            assert!((direct.lhs - series.lhs).norm() <= 1e-10 * direct.lhs.norm());
            assert!((direct.rhs - series.rhs).norm() <= 1e-10 * direct.rhs.norm());
            // ã from a' matches the coefficients of the swapped set
            let swapped = local_series(&a.without(1).with(-b[0]), &cc, p, 20).unwrap();
            for l in 0..=20 {
                assert!((pair.a_tilde[l] - swapped.coeffs[l]).norm() < 1e-12 * swapped.coeffs[l].norm().max(1.0));
            }
        }
    }

    #[test]
    fn local_identity_errors() {
        let a = set(Role::A, &[(0.1, 0.0)]);
        let b = set(Role::B, &[(0.12, 0.0)]);
        let e = ShiftSet::empty(Role::C);
        let d = e.clone().with_role(Role::D);
        assert!(matches!(
            check_local_theorem1(2, &a, &b, &e, &d, Shift::new(0.2, 0.0), b[0], 100),
            Err(Error::Domain(_))
        ));
        let big = set(Role::A, &[(-1.2, 0.0), (0.1, 0.0)]);
        assert!(matches!(check_local_theorem1(2, &big, &b, &e, &d, big[1], b[0], 100), Err(Error::Domain(_))));
        assert!(matches!(check_local_theorem1(2, &a, &b, &e, &d, a[0], b[0], 5), Err(Error::Truncation(_))));
    }

    #[test]
    fn rq_series_examples() {
        let one = check_rq_series(1, c(2.0, 0.0), 1000).unwrap();
        assert!((one.rhs - std::f64::consts::PI.powi(2) / 6.0).norm() < 1e-14);
        assert!(one.holds());
        for (q, a) in [(4u64, c(2.5, 0.0)), (12, c(3.0, 1.0))] {
            let check = check_rq_series(q, a, 100_000).unwrap();
            assert!(check.holds(), "{check:?}");
            assert!(check.tail_bound < 1e-6);
        }
        assert!(matches!(check_rq_series(4, c(1.0, 2.0), 100), Err(Error::Domain(_))));
        assert!(matches!(check_rq_series(40, c(2.0, 0.0), 10), Err(Error::Domain(_))));
    }

    #[test]
    fn recurrence_examples() {
        let single = set(Role::A, &[(0.2, -0.1)]);
        let e = ShiftSet::empty(Role::C);
        assert!(check_recurrence(&single, &e, single[0], 2, 40).unwrap() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pick = |rng: &mut ChaCha8Rng| (rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
        let a = set(Role::A, &[pick(&mut rng), pick(&mut rng), pick(&mut rng)]);
        let cc = set(Role::C, &[pick(&mut rng), pick(&mut rng)]);
        for alpha in a.iter() {
            assert!(check_recurrence(&a, &cc, *alpha, 5, 30).unwrap() <= 1e-11);
        }
        assert!(matches!(check_recurrence(&a, &cc, Shift::new(0.9, 0.0), 5, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn b_shift_examples() {
        let a = set(Role::A, &[(0.1, 0.0)]);
        let b = set(Role::B, &[(0.12, 0.0)]);
        let cc = set(Role::C, &[(0.3, 0.0)]);
        let d = set(Role::D, &[(0.35, 0.0)]);
        assert_eq!(check_b_shift(&a, &b, &cc, &d, c(0.0, 0.0), 1000).unwrap().residual, 0.0);
        assert!(check_b_shift(&a, &b, &cc, &d, c(0.3, 0.0), 10_000).unwrap().residual <= 1e-9);
        let a2 = set(Role::A, &[(0.1, 0.0), (0.05, 0.1)]);
        let b2 = set(Role::B, &[(0.12, 0.0), (0.02, -0.05)]);
        assert!(check_b_shift(&a2, &b2, &cc, &d, c(0.1, 2.0), 10_000).unwrap().residual <= 1e-8);
    }

    #[test]
    fn residuals_survive_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let pair = random_pair(&mut rng, 21, c(0.8, -0.1), c(1.2, 0.3));
        let x = c(0.25, 0.05);
        let r1 = check_theorem3(&pair, x, 20).unwrap();
        let r2 = check_theorem3(&pair.conj(), x.conj(), 20).unwrap();
        assert!((r1.residual - r2.residual).abs() <= 2.0 * f64::EPSILON);
        assert!((r1.lhs.conj() - r2.lhs).norm() <= 2.0 * f64::EPSILON * r1.lhs.norm());

        let a = set(Role::A, &[(0.1, 0.05), (-0.08, 0.12)]);
        let b = set(Role::B, &[(0.12, -0.02)]);
        let cc = set(Role::C, &[(0.18, -0.1)]);
        let d = set(Role::D, &[(0.05, 0.07)]);
        let conj = |s: &ShiftSet| ShiftSet::new(s.role(), s.iter().map(|x| Shift(x.0.conj())).collect());
        let l1 = check_local_theorem1(3, &a, &b, &cc, &d, a[0], b[0], 200).unwrap();
        let (ac, bc) = (conj(&a), conj(&b));
        let l2 = check_local_theorem1(3, &ac, &bc, &conj(&cc), &conj(&d), ac[0], bc[0], 200).unwrap();
        assert!((l1.residual - l2.residual).abs() <= 2.0 * f64::EPSILON);
        let q1 = check_rq_series(6, c(2.5, 1.0), 10_000).unwrap();
        let q2 = check_rq_series(6, c(2.5, -1.0), 10_000).unwrap();
        assert!((q1.error() - q2.error()).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn local_factors_multiply_to_product_form() {
        let a = set(Role::A, &[(0.1, 0.05)]);
        let b = set(Role::B, &[(0.12, -0.02), (0.03, 0.15)]);
        let cc = set(Role::C, &[(0.18, -0.1)]);
        let d = ShiftSet::empty(Role::D);
        let (mut left, mut right) = (c(1.0, 0.0), c(1.0, 0.0));
        for p in [2u64, 3, 5, 7] {
            let check = check_local_theorem1(p, &a, &b, &cc, &d, a[0], b[1], 200).unwrap();
            assert!(check.residual <= 1e-10);
            left *= check.lhs;
            right *= check.rhs;
        }
        assert!((left - right).norm() <= 1e-10 * right.norm());
    }

    proptest! {
        #[test]
        fn inverse_relations_round_trip(
            seed in any::<u64>(),
            yr in 0.5f64..1.5, yi in -0.5f64..0.5, zr in 0.5f64..1.5, zi in -0.5f64..0.5,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pair = random_pair(&mut rng, 30, c(yr, yi), c(zr, zi));
            let (a, b) = pair.recovered();
            for l in 0..30 {
                let scale_a = pair.a_tilde[l].norm().max(1.0);
                let scale_b = pair.b_tilde[l].norm().max(1.0);
                prop_assert!((a[l] - pair.a_prime[l]).norm() <= 1e-13 * scale_a);
                prop_assert!((b[l] - pair.b_prime[l]).norm() <= 1e-13 * scale_b);
            }
        }

        #[test]
        fn theorem3_holds_at_random_points(
            seed in any::<u64>(),
            yr in 0.7f64..1.3, yi in -0.3f64..0.3, zr in 0.7f64..1.3, zi in -0.3f64..0.3,
            xr in -0.25f64..0.25, xi in -0.25f64..0.25,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pair = random_pair(&mut rng, 25, c(yr, yi), c(zr, zi));
            let check = check_theorem3(&pair, c(xr, xi), 24).unwrap();
            prop_assert!(check.residual <= 1e-10, "{:?}", check);
        }
    }
}
