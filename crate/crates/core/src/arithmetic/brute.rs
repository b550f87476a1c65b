//! Direct Dirichlet-convolution evaluation of `I_{A,C}(n)`, used as an oracle
//! for the sieve.

use std::collections::HashMap;

use num_complex::Complex64;

use super::factor::{divisors, moebius};
use super::local::pow_neg;
use crate::shiftsets::Shift;

#[derive(Clone, Copy)]
enum Part {
    /// `d ↦ d^{-α}`
    Zeta(Complex64),
    /// `d ↦ μ(d) d^{-γ}`
    InverseZeta(Complex64),
}

impl Part {
    fn weight(self, d: u64) -> Complex64 {
        match self {
            Part::Zeta(alpha) => pow_neg(d as f64, alpha),
            Part::InverseZeta(gamma) => match moebius(d) {
                0 => Complex64::new(0.0, 0.0),
                m => m as f64 * pow_neg(d as f64, gamma),
            },
        }
    }
}

/// Sums `Π_α n_α^{-α} Π_γ μ(n_γ) n_γ^{-γ}` over all ordered factorizations
/// `n = Π n_α Π n_γ`.
pub fn brute_force_coefficient(a: &[Shift], c: &[Shift], n: u64) -> Complex64 {
    assert!(n >= 1, "brute_force_coefficient: n must be positive");
    let parts: Vec<Part> = a
        .iter()
        .map(|s| Part::Zeta(s.0))
        .chain(c.iter().map(|s| Part::InverseZeta(s.0)))
        .collect();
    let divs = divisors(n);
    let weights: Vec<Vec<Complex64>> = parts
        .iter()
        .map(|&part| divs.iter().map(|&d| part.weight(d)).collect())
        .collect();
    let index: HashMap<u64, usize> = divs.iter().enumerate().map(|(i, &d)| (d, i)).collect();

    // remaining[m] = convolution of parts[i..] evaluated at m, for m | n.
    let mut remaining: Vec<Complex64> = divs
        .iter()
        .map(|&m| if m == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect();
    for w in weights.iter().rev() {
        let next: Vec<Complex64> = divs
            .iter()
            .map(|&m| {
                divs.iter()
                    .enumerate()
                    .take_while(|&(_, &d)| d <= m)
                    .filter(|&(_, &d)| m % d == 0)
                    .map(|(di, &d)| w[di] * remaining[index[&(m / d)]])
                    .sum()
            })
            .collect();
        remaining = next;
    }
    remaining[index[&n]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let a = [Shift::new(0.1, 0.2)];
        let c = [Shift::new(0.2, -0.3)];
        assert_eq!(brute_force_coefficient(&a, &c, 1), Complex64::new(1.0, 0.0));
        let p = 7u64;
        let expected = pow_neg(7.0, a[0].0) - pow_neg(7.0, c[0].0);
        assert!((brute_force_coefficient(&a, &c, p) - expected).norm() < 1e-15);
        assert_eq!(brute_force_coefficient(&[], &[], 12), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn divisor_counts() {
        let zero = [Shift::real(0.0), Shift::real(0.0), Shift::real(0.0)];
        // d_3(12) = 18
        assert!((brute_force_coefficient(&zero, &[], 12) - 18.0).norm() < 1e-12);
    }
}
