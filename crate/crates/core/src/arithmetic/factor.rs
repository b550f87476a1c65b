//! Smallest-prime-factor table and the classical arithmetic functions built on it.

/// Linear sieve holding the smallest prime factor of every `n <= limit`.
#[derive(Clone, Debug)]
pub struct FactorizationSieve {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl FactorizationSieve {
    pub fn new(limit: usize) -> Self {
        assert!(limit < u32::MAX as usize, "sieve limit must fit in u32");
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::new();
        for n in 2..=limit {
            if spf[n] == 0 {
                spf[n] = n as u32;
                primes.push(n as u32);
            }
            let sn = spf[n];
            for &p in &primes {
                let m = n * p as usize;
                if p > sn || m > limit {
                    break;
                }
                spf[m] = p;
            }
        }
        if limit >= 1 {
            spf[1] = 1;
        }
        FactorizationSieve { spf, primes }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    #[inline]
    pub fn smallest_prime_factor(&self, n: usize) -> u32 {
        self.spf[n]
    }

    pub fn is_prime(&self, n: usize) -> bool {
        n >= 2 && self.spf[n] as usize == n
    }

    /// Prime factorization as `(p, e)` pairs in increasing `p`.
    pub fn factorize(&self, mut n: usize) -> Vec<(u64, u32)> {
        assert!(n >= 1 && n <= self.limit(), "factorize: {n} outside sieve range");
        let mut out = Vec::new();
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        out
    }

    pub fn moebius(&self, n: usize) -> i8 {
        moebius_of(&self.factorize(n))
    }

    pub fn euler_phi(&self, n: usize) -> u64 {
        euler_phi_of(&self.factorize(n))
    }
}

/// Prime factorization by trial division, for arguments outside any sieve.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize: n must be positive");
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

fn moebius_of(f: &[(u64, u32)]) -> i8 {
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn euler_phi_of(f: &[(u64, u32)]) -> u64 {
    f.iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product()
}

pub fn moebius(n: u64) -> i8 {
    moebius_of(&factorize(n))
}

pub fn euler_phi(n: u64) -> u64 {
    euler_phi_of(&factorize(n))
}

/// All positive divisors of `n` in increasing order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factorize(n) {
        let len = divs.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Ramanujan's sum `r_q(h) = Σ_{d | (q,h)} d μ(q/d)`.
pub fn ramanujan_sum(q: u64, h: u64) -> i64 {
    assert!(q >= 1, "ramanujan_sum: q must be positive");
    divisors(gcd(q, h))
        .into_iter()
        .map(|d| d as i64 * moebius(q / d) as i64)
        .sum()
}

/// Valuation of `p` in `n`.
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n.is_multiple_of(p) {
        n /= p;
        e += 1;
    }
    e
}
