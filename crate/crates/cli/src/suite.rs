//! Randomized instances of the five identity families.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use zeta_ratios::identities::{
    check_b_shift, check_local_theorem1, check_recurrence, check_rq_series, check_theorem3,
    local_sequence_pair, DEFAULT_SERIES_CAP,
};
use zeta_ratios::shiftsets::{Role, Shift, ShiftSet};

/// Shifts are drawn uniformly from the disk of this radius.
pub const SHIFT_RADIUS: f64 = 0.2;
const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];
const THEOREM3_ORDER: usize = 60;
const RECURRENCE_ORDER: usize = 40;
const RQ_CUTOFF: u64 = 100_000;
const B_SHIFT_PRIMES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Theorem3,
    LocalTheorem1,
    RqSeries,
    Recurrence,
    BShift,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::Theorem3, Family::LocalTheorem1, Family::RqSeries, Family::Recurrence, Family::BShift];

    /// Default residual tolerance; power-series checks are held to rounding level.
    pub fn tolerance(self) -> f64 {
        match self {
            Family::Theorem3 | Family::Recurrence => 1e-10,
            Family::LocalTheorem1 | Family::RqSeries | Family::BShift => 1e-8,
        }
    }

    fn stream(self) -> u64 {
        Family::ALL.iter().position(|&f| f == self).unwrap() as u64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRecord {
    pub family: Family,
    pub instance: usize,
    pub parameters: serde_json::Value,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub count: usize,
    pub passed: usize,
    pub failed: usize,
    pub records: Vec<IdentityRecord>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn max_residual(&self) -> f64 {
        self.records.iter().filter_map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
}

fn shifts(rng: &mut ChaCha8Rng, role: Role, lo: usize, hi: usize) -> ShiftSet {
    let n = rng.gen_range(lo..=hi);
    ShiftSet::new(role, (0..n).map(|_| Shift(disk(rng, SHIFT_RADIUS))).collect())
}

fn show(set: &ShiftSet) -> Vec<[f64; 2]> {
    set.iter().map(|s| [s.0.re, s.0.im]).collect()
}

/// One drawn instance, evaluated later.
enum Instance {
    Local { p: u64, a: ShiftSet, b: ShiftSet, c: ShiftSet, d: ShiftSet },
    Rq { q: u64, exponent: Complex64 },
    Recurrence { p: u64, a: ShiftSet, c: ShiftSet, alpha: usize },
    BShift { a: ShiftSet, b: ShiftSet, c: ShiftSet, d: ShiftSet, s: Complex64 },
}

fn draw(family: Family, rng: &mut ChaCha8Rng) -> Instance {
    match family {
        Family::Theorem3 | Family::LocalTheorem1 => Instance::Local {
            p: PRIMES[rng.gen_range(0..PRIMES.len())],
            a: shifts(rng, Role::A, 1, 3),
            b: shifts(rng, Role::B, 1, 3),
            c: shifts(rng, Role::C, 0, 2),
            d: shifts(rng, Role::D, 0, 2),
        },
        Family::RqSeries => Instance::Rq { q: rng.gen_range(1..=200), exponent: 3.0 + disk(rng, SHIFT_RADIUS) },
        Family::Recurrence => {
            let a = shifts(rng, Role::A, 1, 3);
            let alpha = rng.gen_range(0..a.len());
            Instance::Recurrence { p: PRIMES[rng.gen_range(0..PRIMES.len())], a, c: shifts(rng, Role::C, 0, 2), alpha }
        }
        Family::BShift => Instance::BShift {
            a: shifts(rng, Role::A, 1, 2),
            b: shifts(rng, Role::B, 1, 2),
            c: shifts(rng, Role::C, 0, 1),
            d: shifts(rng, Role::D, 0, 1),
            s: 0.5 + disk(rng, SHIFT_RADIUS),
        },
    }
}

fn evaluate(family: Family, instance: &Instance) -> (serde_json::Value, zeta_ratios::Result<f64>) {
    match (family, instance) {
        (Family::Theorem3, Instance::Local { p, a, b, c, d }) => {
            let params = json!({"p": p, "A": show(a), "B": show(b), "C": show(c), "D": show(d), "order": THEOREM3_ORDER});
            let result = local_sequence_pair(*p, a, b, c, d, a[0], b[0], THEOREM3_ORDER + 1)
                .and_then(|(pair, x)| check_theorem3(&pair, x, THEOREM3_ORDER))
                .map(|check| check.residual);
            (params, result)
        }
        (Family::LocalTheorem1, Instance::Local { p, a, b, c, d }) => {
            let params = json!({"p": p, "A": show(a), "B": show(b), "C": show(c), "D": show(d)});
            let result =
                check_local_theorem1(*p, a, b, c, d, a[0], b[0], DEFAULT_SERIES_CAP).map(|check| check.residual);
            (params, result)
        }
        (Family::RqSeries, Instance::Rq { q, exponent }) => {
            let params = json!({"q": q, "A": [exponent.re, exponent.im], "H": RQ_CUTOFF});
            let result = check_rq_series(*q, *exponent, RQ_CUTOFF).and_then(|check| {
                if check.holds() {
                    Ok(check.error() / check.rhs.norm().max(1.0))
                } else {
                    Err(zeta_ratios::Error::Numerical(format!(
                        "partial sum misses the closed form by {:e}, beyond the tail bound {:e}",
                        check.error(),
                        check.tail_bound
                    )))
                }
            });
            (params, result)
        }
        (Family::Recurrence, Instance::Recurrence { p, a, c, alpha }) => {
            let params = json!({"p": p, "A": show(a), "C": show(c), "alpha": alpha, "order": RECURRENCE_ORDER});
            (params, check_recurrence(a, c, a[*alpha], *p, RECURRENCE_ORDER))
        }
        (Family::BShift, Instance::BShift { a, b, c, d, s }) => {
            let params = json!({"A": show(a), "B": show(b), "C": show(c), "D": show(d), "s": [s.re, s.im], "P": B_SHIFT_PRIMES});
            (params, check_b_shift(a, b, c, d, *s, B_SHIFT_PRIMES).map(|check| check.residual))
        }
        _ => unreachable!("instance drawn for another family"),
    }
}

/// `count` instances per family from a ChaCha stream per family. A
/// `tolerance` overrides every family default.
pub fn run_suite(seed: u64, count: usize, tolerance: Option<f64>) -> SuiteReport {
    let mut jobs = Vec::with_capacity(5 * count);
    for family in Family::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(family.stream());
        for k in 0..count {
            jobs.push((family, k, draw(family, &mut rng)));
        }
    }
    let records: Vec<IdentityRecord> = jobs
        .par_iter()
        .map(|(family, k, instance)| {
            let (parameters, result) = evaluate(*family, instance);
            let tolerance = tolerance.unwrap_or(family.tolerance());
            match result {
                Ok(residual) => IdentityRecord {
                    family: *family,
                    instance: *k,
                    parameters,
                    residual: Some(residual),
                    tolerance,
                    passed: residual <= tolerance,
                    error: None,
                },
                Err(e) => IdentityRecord {
                    family: *family,
                    instance: *k,
                    parameters,
                    residual: None,
                    tolerance,
                    passed: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let passed = records.iter().filter(|r| r.passed).count();
    SuiteReport { seed, count, passed, failed: records.len() - passed, records }
}
