//! Multiplicative machinery for the coefficients `I_{A,C}(n)` of
//! `Π_{α∈A} ζ(s+α) / Π_{γ∈C} ζ(s+γ)`, together with the classical functions
//! `μ`, `φ`, Ramanujan sums and `Φ(x, q)`.

mod brute;
mod factor;
mod local;
mod table;

pub use brute::brute_force_coefficient;
pub use factor::{
    divisors, euler_phi, factorize, gcd, is_prime, moebius, ramanujan_sum, valuation,
    FactorizationSieve,
};
pub use local::{
    coefficient, growth_rate, local_series, phi_product, pow_neg, series_length, LocalSeries,
};
pub(crate) use local::local_series_unchecked;
pub use table::{
    default_jmax, sieve_coefficients, sieve_coefficients_with, sieve_memory, sieve_on,
    CoefficientTable, SieveOptions, TableSidecar, DEFAULT_MEMORY_BUDGET,
};
