//! Sieved coefficient tables `I_{A,C}(n)`, `1 <= n <= X`, and their on-disk form.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::factor::FactorizationSieve;
use super::local::{first_coefficient, local_series_unchecked, LocalSeries};
use crate::error::{Error, Result};
use crate::shiftsets::{Role, Shift, ShiftSet};

/// Default cap on sieve memory (values plus factor table), 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

const BLOCK: usize = 1 << 14;

/// Bytes needed to sieve up to `x`: 16 per complex value plus 4 per spf entry.
pub fn sieve_memory(x: usize) -> u64 {
    (x as u64 + 1) * 20
}

/// Default local truncation order `⌊log₂ X⌋ + 1`.
pub fn default_jmax(x: usize) -> usize {
    (usize::BITS - x.max(1).leading_zeros()) as usize
}

#[derive(Clone, Debug)]
pub struct CoefficientTable {
    a: ShiftSet,
    c: ShiftSet,
    values: Vec<Complex64>,
}

impl CoefficientTable {
    /// Builds a table from explicit values for `n = 1..=X`.
    pub fn from_values(a: ShiftSet, c: ShiftSet, values: &[Complex64]) -> Self {
        let mut v = Vec::with_capacity(values.len() + 1);
        v.push(Complex64::new(0.0, 0.0));
        v.extend_from_slice(values);
        CoefficientTable { a, c, values: v }
    }

    pub fn numerator(&self) -> &ShiftSet {
        &self.a
    }

    pub fn denominator(&self) -> &ShiftSet {
        &self.c
    }

    /// The cutoff `X`.
    pub fn limit(&self) -> usize {
        self.values.len() - 1
    }

    #[inline]
    pub fn get(&self, n: usize) -> Complex64 {
        self.values[n]
    }

    /// Values for `n = 1..=X`.
    pub fn values(&self) -> &[Complex64] {
        &self.values[1..]
    }

    /// Partial Dirichlet sum `Σ_{n <= N} I(n) n^{-s}` for `N <= X`.
    pub fn dirichlet_sum(&self, s: Complex64, upto: usize) -> Complex64 {
        assert!(upto <= self.limit());
        (1..=upto)
            .map(|n| self.values[n] * (-s * (n as f64).ln()).exp())
            .sum()
    }

    fn bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 * self.limit());
        for z in self.values() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.bytes()))
    }

    /// Sidecar path used by [`write`](Self::write): the binary path with `.json` appended.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut os = path.as_os_str().to_owned();
        os.push(".json");
        PathBuf::from(os)
    }

    /// Writes little-endian `(re, im)` doubles for `n = 1..=X` plus a JSON sidecar.
    pub fn write(&self, path: &Path) -> Result<TableSidecar> {
        let bytes = self.bytes();
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&bytes)?;
        w.flush()?;
        let sidecar = TableSidecar {
            a: self.a.elements().to_vec(),
            c: self.c.elements().to_vec(),
            roles: [self.a.role(), self.c.role()],
            x: self.limit(),
            checksum: hex::encode(Sha256::digest(&bytes)),
            format: "f64-le complex pairs, n = 1..=X".into(),
        };
        let json = serde_json::to_string_pretty(&sidecar)?;
        std::fs::write(Self::sidecar_path(path), json)?;
        Ok(sidecar)
    }

    /// Reads a table written by [`write`](Self::write), verifying length and checksum.
    pub fn read(path: &Path) -> Result<Self> {
        let sidecar: TableSidecar =
            serde_json::from_reader(BufReader::new(File::open(Self::sidecar_path(path))?))?;
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let found = hex::encode(Sha256::digest(&bytes));
        if found != sidecar.checksum {
            return Err(Error::Checksum {
                path: path.display().to_string(),
                expected: sidecar.checksum,
                found,
            });
        }
        if bytes.len() != 16 * sidecar.x {
            return Err(Error::Config(format!(
                "{}: expected {} bytes for X = {}, found {}",
                path.display(),
                16 * sidecar.x,
                sidecar.x,
                bytes.len()
            )));
        }
        let values: Vec<Complex64> = bytes
            .chunks_exact(16)
            .map(|ch| {
                let re = f64::from_le_bytes(ch[..8].try_into().unwrap());
                let im = f64::from_le_bytes(ch[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(CoefficientTable::from_values(
            ShiftSet::new(sidecar.roles[0], sidecar.a),
            ShiftSet::new(sidecar.roles[1], sidecar.c),
            &values,
        ))
    }
}

/// JSON metadata stored next to a binary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSidecar {
    #[serde(rename = "A")]
    pub a: Vec<Shift>,
    #[serde(rename = "C")]
    pub c: Vec<Shift>,
    pub roles: [Role; 2],
    #[serde(rename = "X")]
    pub x: usize,
    pub checksum: String,
    pub format: String,
}

#[derive(Clone, Debug)]
pub struct SieveOptions {
    pub memory_budget: u64,
}

impl Default for SieveOptions {
    fn default() -> Self {
        SieveOptions { memory_budget: DEFAULT_MEMORY_BUDGET }
    }
}

/// Sieves `I_{A,C}(n)` for `n <= X` with the default memory budget.
pub fn sieve_coefficients(a: &ShiftSet, c: &ShiftSet, x: usize) -> Result<CoefficientTable> {
    sieve_coefficients_with(a, c, x, &SieveOptions::default())
}

pub fn sieve_coefficients_with(
    a: &ShiftSet,
    c: &ShiftSet,
    x: usize,
    opts: &SieveOptions,
) -> Result<CoefficientTable> {
    check_budget(x, opts.memory_budget)?;
    let sieve = FactorizationSieve::new(x.max(1));
    Ok(sieve_on(&sieve, a, c, x))
}

pub(crate) fn check_budget(x: usize, budget: u64) -> Result<()> {
    if x < 1 {
        return Err(Error::Config("sieve cutoff X must be at least 1".into()));
    }
    let requested = sieve_memory(x);
    if requested > budget {
        return Err(Error::Resource { requested, budget });
    }
    Ok(())
}

/// Sieves on a prebuilt factor table (whose limit must be at least `x`).
pub fn sieve_on(sieve: &FactorizationSieve, a: &ShiftSet, c: &ShiftSet, x: usize) -> CoefficientTable {
    assert!(sieve.limit() >= x, "factor table too short for X = {x}");
    let (a_red, c_red) = cancel_common(a.elements(), c.elements());
    let (ra, rc) = (&a_red[..], &c_red[..]);
    let root = isqrt(x);
    // Memoized local series for the primes that can appear squared.
    let mut small_index = vec![u32::MAX; root + 1];
    let mut small: Vec<LocalSeries> = Vec::new();
    for &p in sieve.primes().iter().take_while(|&&p| (p as usize) <= root) {
        let jmax = max_exponent(p as usize, x).min(default_jmax(x));
        small_index[p as usize] = small.len() as u32;
        small.push(local_series_unchecked(ra, rc, p as u64, jmax));
    }

    let mut values = vec![Complex64::new(0.0, 0.0); x + 1];
    values.par_chunks_mut(BLOCK).enumerate().for_each(|(bi, chunk)| {
        for (k, slot) in chunk.iter_mut().enumerate() {
            let n0 = bi * BLOCK + k;
            if n0 == 0 {
                continue;
            }
            let mut n = n0;
            let mut acc = Complex64::new(1.0, 0.0);
            while n > 1 {
                let p = sieve.smallest_prime_factor(n) as usize;
                let mut e = 0;
                while n.is_multiple_of(p) {
                    n /= p;
                    e += 1;
                }
                if p <= root {
                    acc *= small[small_index[p] as usize].coeffs[e];
                } else {
                    acc *= first_coefficient(ra, rc, p as f64);
                }
            }
            *slot = acc;
        }
    });
    CoefficientTable { a: a.clone(), c: c.clone(), values }
}

/// Drops shifts present in both sets; their local factors cancel exactly.
fn cancel_common(a: &[Shift], c: &[Shift]) -> (Vec<Shift>, Vec<Shift>) {
    let mut c: Vec<Shift> = c.to_vec();
    let mut kept = Vec::with_capacity(a.len());
    for &s in a {
        match c.iter().position(|&g| g == s) {
            Some(j) => {
                c.remove(j);
            }
            None => kept.push(s),
        }
    }
    (kept, c)
}

fn max_exponent(p: usize, x: usize) -> usize {
    let mut e = 0;
    let mut pk = 1usize;
    while pk <= x / p {
        pk *= p;
        e += 1;
    }
    e
}

pub(crate) fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::factor::{gcd, moebius};

    fn near_zero(role: Role, k: usize) -> ShiftSet {
        ShiftSet::from_reals(role, &vec![0.0; k]).perturb_duplicates(1e-9)
    }

    #[test]
    fn zeta_and_inverse_zeta_coefficients() {
        let t = sieve_coefficients(&near_zero(Role::A, 1), &ShiftSet::empty(Role::C), 1000).unwrap();
        assert!(t.values().iter().all(|z| (z - 1.0).norm() < 1e-12));

        let t = sieve_coefficients(&ShiftSet::empty(Role::A), &near_zero(Role::C, 1), 1000).unwrap();
        for n in 1..=1000 {
            assert!((t.get(n) - moebius(n as u64) as f64).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn divisor_function() {
        let t = sieve_coefficients(&near_zero(Role::A, 2), &ShiftSet::empty(Role::C), 100).unwrap();
        assert!((t.get(6) - 4.0).norm() < 1e-6);
        assert!((t.get(1) - 1.0).norm() == 0.0);
        assert!((t.get(64) - 7.0).norm() < 1e-6);
    }

    #[test]
    fn multiplicativity() {
        let a = ShiftSet::new(Role::A, vec![Shift::new(0.1, 3.0), Shift::new(-0.2, 0.5)]);
        let c = ShiftSet::new(Role::C, vec![Shift::new(0.15, -1.0)]);
        let t = sieve_coefficients(&a, &c, 20000).unwrap();
        for m in 1..150usize {
            for n in 1..130usize {
                if gcd(m as u64, n as u64) == 1 {
                    let lhs = t.get(m * n);
                    let rhs = t.get(m) * t.get(n);
                    assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
                }
            }
        }
    }

    #[test]
    fn memory_budget_is_enforced() {
        let a = ShiftSet::empty(Role::A);
        let opts = SieveOptions { memory_budget: 1000 };
        assert!(matches!(
            sieve_coefficients_with(&a, &a, 10_000, &opts),
            Err(Error::Resource { .. })
        ));
        assert!(matches!(sieve_coefficients(&a, &a, 0), Err(Error::Config(_))));
    }

    #[test]
    fn binary_roundtrip_and_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let a = ShiftSet::new(Role::B, vec![Shift::new(0.12, 1.0)]);
        let c = ShiftSet::new(Role::D, vec![Shift::new(0.2, 0.0)]);
        let t = sieve_coefficients(&a, &c, 500).unwrap();
        let side = t.write(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 500 * 16);
        assert_eq!(side.checksum, t.checksum());
        let back = CoefficientTable::read(&path).unwrap();
        assert_eq!(back.values(), t.values());
        assert_eq!(back.numerator(), &a);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[3] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(CoefficientTable::read(&path), Err(Error::Checksum { .. })));
    }

    #[test]
    fn jmax_default() {
        assert_eq!(default_jmax(1), 1);
        assert_eq!(default_jmax(1024), 11);
        assert_eq!(max_exponent(2, 1024), 10);
        assert_eq!(isqrt(99), 9);
    }
}
