//! Experiments: the ratios average `R(T)`, the truncated average `M(T; X)` and
//! shifted coefficient correlations, each next to its predicted value.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{ramanujan_sum, sieve_coefficients_with, CoefficientTable, SieveOptions};
use crate::error::{Error, Result};
use crate::euler::{b_value, script_e, DEFAULT_PRIME_CUTOFF};
use crate::quadrature::GaussLegendre;
use crate::shiftsets::{enumerate_swaps, swap, Role, Shift, ShiftSet, SwapSelection};
use crate::testfn::TestFunction;
use crate::zeta::{Estimate, ShiftedZeta, ZetaEvaluator};

const CHUNK: usize = 256;
/// `ψ̂` is not resolved below this level, so narrower bands are refused.
const BAND_FLOOR: f64 = 1e-13;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// One experiment at a single height `T`.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub a: ShiftSet,
    pub b: ShiftSet,
    pub c: ShiftSet,
    pub d: ShiftSet,
    pub t: f64,
    /// `X = T^λ`.
    pub lambda: f64,
    pub psi: TestFunction,
    /// Relative `ψ̂` mass dropped by the pair-sum band.
    pub band_tolerance: f64,
    pub prime_cutoff: usize,
    /// Largest `|U| = |V|` in the ratios prediction; `None` means `min(|A|, |B|)`.
    pub max_swap: Option<usize>,
    /// Gauss–Legendre panels per unit `t` for the ratios integral.
    pub panels_per_unit: f64,
    pub nodes_per_panel: usize,
    /// Panels per piece for the smooth `t`-integrals of the predictions.
    pub weight_panels: usize,
    pub memory_budget: u64,
}

impl ExperimentConfig {
    pub fn new(a: &ShiftSet, b: &ShiftSet, c: &ShiftSet, d: &ShiftSet, t: f64, lambda: f64) -> Self {
        ExperimentConfig {
            a: a.clone(),
            b: b.clone(),
            c: c.clone(),
            d: d.clone(),
            t,
            lambda,
            psi: TestFunction::standard(),
            band_tolerance: 1e-10,
            prime_cutoff: DEFAULT_PRIME_CUTOFF,
            max_swap: None,
            panels_per_unit: 1.0,
            nodes_per_panel: 16,
            weight_panels: 8,
            memory_budget: SieveOptions::default().memory_budget,
        }
    }

    pub fn x(&self) -> usize {
        self.t.powf(self.lambda).floor() as usize
    }

    /// `T ψ̂(0)`, the size of the diagonal.
    pub fn scale(&self) -> f64 {
        self.t * self.psi.integral()
    }

    pub fn max_swap(&self) -> usize {
        self.max_swap.unwrap_or(self.a.len().min(self.b.len()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::Config(format!("T must be positive, got {}", self.t)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.lambda <= 1.0 {
            log::warn!("lambda = {} <= 1: the average is dominated by the diagonal", self.lambda);
        }
        if !(self.band_tolerance >= BAND_FLOOR && self.band_tolerance < 1.0) {
            return Err(Error::Config(format!(
                "band tolerance {} outside [{BAND_FLOOR:e}, 1): the cached transform is not that accurate",
                self.band_tolerance
            )));
        }
        if self.nodes_per_panel == 0 || !(self.panels_per_unit > 0.0) || self.weight_panels == 0 {
            return Err(Error::Config("quadrature sizes must be positive".into()));
        }
        for set in [&self.a, &self.b, &self.c, &self.d] {
            for v in set.validate() {
                log::debug!("{v}");
            }
            if let Some(big) = set.iter().find(|s| s.0.im.abs() > 50.0) {
                log::debug!("{} contains {big} with |Im| > 50", set.role());
            }
        }
        Ok(())
    }

    fn sieve_options(&self) -> SieveOptions {
        SieveOptions { memory_budget: self.memory_budget }
    }

    /// Conjugates every shift and exchanges `(A, C)` with `(B, D)`; `R` and `M`
    /// of the result are the complex conjugates of the originals.
    pub fn reflect(&self) -> Self {
        let conj = |s: &ShiftSet, role| ShiftSet::new(role, s.iter().map(|x| Shift(x.0.conj())).collect());
        ExperimentConfig {
            a: conj(&self.b, Role::A),
            b: conj(&self.a, Role::B),
            c: conj(&self.d, Role::C),
            d: conj(&self.c, Role::D),
            ..self.clone()
        }
    }
}

/// A labelled contribution to a prediction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub label: String,
    pub value: Complex64,
}

/// Empirical and predicted values of one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub experiment: String,
    pub t: f64,
    pub lambda: f64,
    pub empirical: Complex64,
    pub predicted: Complex64,
    pub components: Vec<Component>,
    pub abs_err: f64,
    pub rel_err: f64,
    pub diagnostics: BTreeMap<String, f64>,
    /// Not serialized, so reports of identical runs are byte-identical.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl ComparisonReport {
    /// `predicted` is the sequential sum of `components`.
    fn assemble(
        experiment: &str,
        cfg: &ExperimentConfig,
        empirical: Complex64,
        components: Vec<Component>,
        diagnostics: BTreeMap<String, f64>,
        started: Instant,
    ) -> Self {
        let predicted = components.iter().fold(zero(), |acc, c| acc + c.value);
        ComparisonReport {
            experiment: experiment.to_string(),
            t: cfg.t,
            lambda: cfg.lambda,
            empirical,
            predicted,
            abs_err: (empirical - predicted).norm(),
            rel_err: relative_error(empirical, predicted, cfg.scale()),
            components,
            diagnostics,
            runtime_secs: started.elapsed().as_secs_f64(),
        }
    }
}

/// `|e - p| / |p|`, or `|e - p| / scale` once `|p| < 1e-8 · scale`.
pub fn relative_error(empirical: Complex64, predicted: Complex64, scale: f64) -> f64 {
    let diff = (empirical - predicted).norm();
    if predicted.norm() < 1e-8 * scale {
        diff / scale
    } else {
        diff / predicted.norm()
    }
}

fn sum_ordered<F>(nodes: &[(f64, f64)], f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Result<Complex64> + Sync,
{
    let values: Vec<Complex64> = nodes
        .par_iter()
        .map(|&(x, w)| f(x).map(|v| v * w))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(zero(), |acc, v| acc + v))
}

/// `∫_{lo}^{hi} ψ(u) f(u) du` by composite Gauss–Legendre.
fn psi_integral<F>(psi: &TestFunction, lo: f64, hi: f64, panels: usize, f: F) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let gl = GaussLegendre::new(32);
    gl.composite(lo, hi, panels)
        .into_iter()
        .fold(zero(), |acc, (u, w)| acc + f(u) * (psi.eval(u) * w))
}

/// `∫ ψ(t/T) (t/2π)^{-σ} dt`.
pub fn weight_integral(cfg: &ExperimentConfig, sigma: Complex64) -> Complex64 {
    let (c1, c2) = cfg.psi.support();
    let t = cfg.t;
    psi_integral(&cfg.psi, c1, c2, 4 * cfg.weight_panels, |u| (-sigma * (t * u / (2.0 * PI)).ln()).exp()) * t
}

/// `R(T) = ∫ ψ(t/T) Πζ(s+α) Πζ(1-s+β) / (Πζ(s+γ) Πζ(1-s+δ)) dt`, `s = 1/2 + it`,
/// by composite Gauss–Legendre; the error is the change from halving the panel count.
pub fn ratios_lhs(cfg: &ExperimentConfig) -> Result<Estimate> {
    cfg.validate()?;
    let (c1, c2) = cfg.psi.support();
    let (lo, hi) = (c1 * cfg.t, c2 * cfg.t);
    // ζ(1 - s + β) = conj ζ(s + conj β) on the critical line.
    let mut shifts: Vec<Complex64> = cfg.a.values().collect();
    shifts.extend(cfg.c.values());
    shifts.extend(cfg.b.values().map(|z| z.conj()));
    shifts.extend(cfg.d.values().map(|z| z.conj()));
    let (na, nc, nb) = (cfg.a.len(), cfg.c.len(), cfg.b.len());
    let zeta = ShiftedZeta::new(ZetaEvaluator::default(), &shifts, hi);

    let integrand = |t: f64| -> Result<Complex64> {
        let z = zeta.eval(Complex64::new(0.5, t))?;
        let mut num = Complex64::new(1.0, 0.0);
        let mut den = Complex64::new(1.0, 0.0);
        for (k, e) in z.iter().enumerate() {
            let v = if k < na + nc { e.value } else { e.value.conj() };
            let denominator = (na..na + nc).contains(&k) || k >= na + nc + nb;
            if denominator {
                if v.norm() < 1e-6 {
                    log::warn!("denominator zeta factor {k} is {:.2e} at t = {t}", v.norm());
                }
                den *= v;
            } else {
                num *= v;
            }
        }
        Ok(num / den * cfg.psi.eval(t / cfg.t))
    };

    let gl = GaussLegendre::new(cfg.nodes_per_panel);
    let panels = ((hi - lo) * cfg.panels_per_unit).ceil().max(1.0) as usize;
    let coarse = sum_ordered(&gl.composite(lo, hi, panels), integrand)?;
    let fine = sum_ordered(&gl.composite(lo, hi, 2 * panels), integrand)?;
    Ok(Estimate { value: fine, error_bound: (fine - coarse).norm() })
}

/// One term per swap `|U| = |V| <= max_swap`:
/// `∫ ψ(t/T) (t/2π)^{-ΣU-ΣV} dt · B_{A-U+V⁻, B-V+U⁻, C, D}(1)`.
/// The second vector holds the Euler-product tail bound of each term.
pub fn ratios_rhs(cfg: &ExperimentConfig, max_swap: usize) -> Result<(Vec<Component>, Vec<f64>)> {
    let mut comps = Vec::new();
    let mut tails = Vec::new();
    for sel in enumerate_swaps(&cfg.a, &cfg.b, max_swap) {
        let label = sel.label(&cfg.a, &cfg.b);
        let (a_sw, b_sw) = swap(&cfg.a, &cfg.b, &sel)?;
        let weight = weight_integral(cfg, sel.shift_sum(&cfg.a, &cfg.b));
        let b = b_value(&a_sw, &b_sw, &cfg.c, &cfg.d, Complex64::new(1.0, 0.0), cfg.prime_cutoff)
            .map_err(|e| match e {
                Error::Pole { s, context } => Error::Pole { s, context: format!("{label}: {context}") },
                other => other,
            })?;
        comps.push(Component { label, value: weight * b.value });
        tails.push(weight.norm() * b.tail_bound);
    }
    Ok((comps, tails))
}

pub fn ratios_report(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let started = Instant::now();
    let lhs = ratios_lhs(cfg)?;
    let (components, tails) = ratios_rhs(cfg, cfg.max_swap())?;
    let mut diag = BTreeMap::new();
    diag.insert("quadrature_error".to_string(), lhs.error_bound);
    diag.insert("euler_tail_bound".to_string(), tails.iter().sum());
    Ok(ComparisonReport::assemble("ratios", cfg, lhs.value, components, diag, started))
}

fn require(table: &CoefficientTable, n: usize, what: &str) -> Result<()> {
    if table.limit() < n {
        return Err(Error::Config(format!(
            "coefficient table for {what} stops at {}, need {n}",
            table.limit()
        )));
    }
    Ok(())
}

/// `M(T; X) = T Σ_{m,n<=X} I_{A,C}(m) I_{B,D}(n) (mn)^{-1/2} ψ̂((T/2π) log(m/n))`
/// over the band `|ψ̂ argument| <= band`.
pub fn truncated_lhs_with_band(
    cfg: &ExperimentConfig,
    ac: &CoefficientTable,
    bd: &CoefficientTable,
    band: f64,
) -> Result<Complex64> {
    let x = cfg.x();
    require(ac, x, "(A, C)")?;
    require(bd, x, "(B, D)")?;
    let k = cfg.t / (2.0 * PI);
    let delta = band / k;
    let ln: Vec<f64> = (0..=x).map(|n| if n == 0 { 0.0 } else { (n as f64).ln() }).collect();
    let weighted_b: Vec<Complex64> =
        (0..=x).map(|n| if n == 0 { zero() } else { bd.get(n) / (n as f64).sqrt() }).collect();
    let ms: Vec<usize> = (1..=x).collect();
    let partials: Vec<Complex64> = ms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = zero();
            for &m in chunk {
                let am = ac.get(m);
                if am == zero() {
                    continue;
                }
                let lo = ((m as f64) * (-delta).exp()).ceil().max(1.0) as usize;
                let hi = (((m as f64) * delta.exp()).floor() as usize).min(x);
                let mut inner = zero();
                for n in lo..=hi {
                    inner += weighted_b[n] * cfg.psi.fourier(k * (ln[m] - ln[n]));
                }
                acc += am / (m as f64).sqrt() * inner;
            }
            acc
        })
        .collect();
    Ok(partials.into_iter().fold(zero(), |acc, v| acc + v) * cfg.t)
}

pub fn truncated_lhs(cfg: &ExperimentConfig, ac: &CoefficientTable, bd: &CoefficientTable) -> Result<Complex64> {
    cfg.validate()?;
    truncated_lhs_with_band(cfg, ac, bd, cfg.psi.band_width(cfg.band_tolerance))
}

/// Diagonal `T ψ̂(0) Σ_{m<=X} I_{A,C}(m) I_{B,D}(m) / m` followed by one term per
/// `(α̂, β̂) ∈ A × B`:
/// `∫ ψ(t/T) (t/2π)^{-α̂-β̂} Σ_{n <= 2πX/t} c_n / n dt`,
/// `c_n = I_{A-α̂+{-β̂},C}(n) I_{B-β̂+{-α̂},D}(n)`.
pub fn truncated_rhs(cfg: &ExperimentConfig, ac: &CoefficientTable, bd: &CoefficientTable) -> Result<Vec<Component>> {
    cfg.validate()?;
    let x = cfg.x();
    require(ac, x, "(A, C)")?;
    require(bd, x, "(B, D)")?;
    let mut diagonal = zero();
    for m in 1..=x {
        diagonal += ac.get(m) * bd.get(m) / m as f64;
    }
    let mut comps = vec![Component { label: "diagonal".into(), value: diagonal * cfg.scale() }];

    let (c1, c2) = cfg.psi.support();
    let t = cfg.t;
    let reach = 2.0 * PI * x as f64 / t;
    let nmax = (reach / c1).floor() as usize;
    for i in 0..cfg.a.len() {
        for j in 0..cfg.b.len() {
            let sel = SwapSelection::new(vec![i], vec![j])?;
            let (a_sw, b_sw) = swap(&cfg.a, &cfg.b, &sel)?;
            let sigma = sel.shift_sum(&cfg.a, &cfg.b);
            let mut partial = vec![zero(); nmax + 1];
            if nmax >= 1 {
                let ta = sieve_coefficients_with(&a_sw, &cfg.c, nmax, &cfg.sieve_options())?;
                let tb = sieve_coefficients_with(&b_sw, &cfg.d, nmax, &cfg.sieve_options())?;
                for n in 1..=nmax {
                    partial[n] = partial[n - 1] + ta.get(n) * tb.get(n) / n as f64;
                }
            }
            // n <= 2πX/(tu) changes only at u = reach/(nT)
            let mut cuts = vec![c1, c2];
            cuts.extend((1..=nmax).map(|n| reach / n as f64).filter(|&u| u > c1 && u < c2));
            cuts.sort_by(|p, q| p.total_cmp(q));
            let mut value = zero();
            for w in cuts.windows(2) {
                let count = ((reach / (0.5 * (w[0] + w[1]))).floor() as usize).min(nmax);
                if count == 0 {
                    continue;
                }
                let piece = psi_integral(&cfg.psi, w[0], w[1], cfg.weight_panels, |u| {
                    (-sigma * (t * u / (2.0 * PI)).ln()).exp()
                });
                value += piece * partial[count];
            }
            comps.push(Component { label: sel.label(&cfg.a, &cfg.b), value: value * t });
        }
    }
    Ok(comps)
}

/// Tables for `(A, C)` and `(B, D)` up to `n`.
pub fn build_tables(cfg: &ExperimentConfig, n: usize) -> Result<(CoefficientTable, CoefficientTable)> {
    let opts = cfg.sieve_options();
    let n = n.max(1);
    Ok((
        sieve_coefficients_with(&cfg.a, &cfg.c, n, &opts)?,
        sieve_coefficients_with(&cfg.b, &cfg.d, n, &opts)?,
    ))
}

pub fn moments_report_with(
    cfg: &ExperimentConfig,
    ac: &CoefficientTable,
    bd: &CoefficientTable,
) -> Result<ComparisonReport> {
    let started = Instant::now();
    let band = cfg.psi.band_width(cfg.band_tolerance);
    let lhs = truncated_lhs(cfg, ac, bd)?;
    let components = truncated_rhs(cfg, ac, bd)?;
    let mut diag = BTreeMap::new();
    diag.insert("X".to_string(), cfg.x() as f64);
    diag.insert("band".to_string(), band);
    Ok(ComparisonReport::assemble("moments", cfg, lhs, components, diag, started))
}

pub fn moments_report(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let (ac, bd) = build_tables(cfg, cfg.x())?;
    moments_report_with(cfg, &ac, &bd)
}

/// `Σ_{n<=X} I_{A,C}(n) I_{B,D}(n+h)`.
pub fn correlation_empirical(ac: &CoefficientTable, bd: &CoefficientTable, x: usize, h: usize) -> Result<Complex64> {
    if h == 0 {
        return Err(Error::Config("correlations need h >= 1".into()));
    }
    require(ac, x, "(A, C)")?;
    require(bd, x + h, "(B, D)")?;
    Ok((1..=x).fold(zero(), |acc, n| acc + ac.get(n) * bd.get(n + h)))
}

/// Integer window `u <= m <= u(1 + width)`.
pub fn window(u: f64, width: f64) -> (usize, usize) {
    (u.ceil().max(1.0) as usize, (u * (1.0 + width)).floor() as usize)
}

/// Mean of `I_{A,C}(m) I_{B,D}(m+h)` over the window.
pub fn correlation_window(
    ac: &CoefficientTable,
    bd: &CoefficientTable,
    u: f64,
    width: f64,
    h: usize,
) -> Result<Complex64> {
    let (lo, hi) = window(u, width);
    if hi < lo || h == 0 {
        return Err(Error::Config(format!("empty window [{u}, {u}(1+{width})] or h = 0")));
    }
    require(ac, hi, "(A, C)")?;
    require(bd, hi + h, "(B, D)")?;
    let sum = (lo..=hi).fold(zero(), |acc, m| acc + ac.get(m) * bd.get(m + h));
    Ok(sum / (hi - lo + 1) as f64)
}

/// Residues of `Σ I_{A,C}(m) e(m/q) m^{-w}` at `w = 1 - α̂`: the predicted mean
/// of `I_{A,C}(m) e(m/q)` near `m` is `Σ_α̂ R_α̂(q) m^{-α̂}` with
/// `R_α̂(q) = q^{α̂-1} 𝓔_{A,C}(1-α̂, q) Π_{A'} ζ(1-α̂+α) / Π_C ζ(1-α̂+γ)`.
#[derive(Clone, Debug)]
pub struct ResidueModel {
    a: ShiftSet,
    c: ShiftSet,
    /// `(α̂, Π ζ / Π ζ)` per element of `A`.
    poles: Vec<(Shift, Complex64)>,
}

impl ResidueModel {
    pub fn new(a: &ShiftSet, c: &ShiftSet) -> Result<Self> {
        if a.has_duplicates() {
            return Err(Error::Domain(format!(
                "{} has repeated shifts, so its poles are not simple; perturb them first",
                a.role()
            )));
        }
        let zeta = ZetaEvaluator { target_abs_error: 1e-13, ..ZetaEvaluator::default() };
        let mut poles = Vec::new();
        for (i, hat) in a.iter().enumerate() {
            let mut factor = Complex64::new(1.0, 0.0);
            for alpha in a.without(i).iter() {
                factor *= zeta.zeta(1.0 - hat.0 + alpha.0)?;
            }
            for gamma in c.iter() {
                let w = 1.0 - hat.0 + gamma.0;
                if (w - 1.0).norm() < 1e-12 {
                    factor = zero();
                } else {
                    factor /= zeta.zeta(w)?;
                }
            }
            poles.push((*hat, factor));
        }
        Ok(ResidueModel { a: a.clone(), c: c.clone(), poles })
    }

    /// `(α̂, R_α̂(q))` for each pole.
    pub fn residues(&self, q: u64) -> Result<Vec<(Complex64, Complex64)>> {
        self.poles
            .iter()
            .map(|&(hat, factor)| {
                let e = script_e(&self.a, &self.c, hat, q)?;
                let power = (hat.0 - 1.0) * (q as f64).ln();
                Ok((hat.0, power.exp() * e * factor))
            })
            .collect()
    }

    /// `Σ_α̂ R_α̂(q) m^{-α̂}`.
    pub fn mean_at(&self, q: u64, m: f64) -> Result<Complex64> {
        Ok(self.residues(q)?.into_iter().map(|(hat, r)| r * (-hat * m.ln()).exp()).sum())
    }
}

/// Window mean of `I_{A,C}(m) e(m/q)` and its prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpSumAverage {
    pub empirical: Complex64,
    pub predicted: Complex64,
    pub terms: usize,
}

/// `m^{-x}` averaged over the window, for each exponent.
fn window_means(lo: usize, hi: usize, exponents: &[Complex64]) -> Vec<Complex64> {
    let count = (hi - lo + 1) as f64;
    exponents
        .iter()
        .map(|x| (lo..=hi).fold(zero(), |acc, m| acc + (-x * (m as f64).ln()).exp()) / count)
        .collect()
}

/// Empirical mean of `I_{A,C}(m) e(m/q)` over `u <= m <= u(1+width)` from
/// `table`, next to the residue prediction averaged over the same window.
pub fn exp_sum_average(table: &CoefficientTable, q: u64, u: f64, width: f64) -> Result<ExpSumAverage> {
    if q == 0 {
        return Err(Error::Config("q must be positive".into()));
    }
    let (lo, hi) = window(u, width);
    if hi < lo {
        return Err(Error::Config(format!("empty window [{u}, {u}(1+{width})]")));
    }
    require(table, hi, "(A, C)")?;
    let terms = hi - lo + 1;
    if terms < 10_000 {
        log::warn!("window of {terms} terms is too short for a stable mean");
    }
    let mut sum = zero();
    for m in lo..=hi {
        let phase = 2.0 * PI * (m as u64 % q) as f64 / q as f64;
        sum += table.get(m) * Complex64::from_polar(1.0, phase);
    }
    let model = ResidueModel::new(table.numerator(), table.denominator())?;
    let residues = model.residues(q)?;
    let exps: Vec<Complex64> = residues.iter().map(|r| r.0).collect();
    let means = window_means(lo, hi, &exps);
    let predicted = residues.iter().zip(means).map(|(r, mean)| r.1 * mean).sum();
    Ok(ExpSumAverage { empirical: sum / terms as f64, predicted, terms })
}

/// Predicted window mean of `I_{A,C}(m) I_{B,D}(m+h)`:
/// `Σ_{q<=q_max} r_q(h) Σ_{α̂,β̂} R_α̂(q) R'_β̂(q) ⟨m^{-α̂} (m+h)^{-β̂}⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationPrediction {
    pub value: Complex64,
    /// `|Σ_{q > q_max/2}| / |value|`, a proxy for the neglected tail.
    pub tail_ratio: f64,
}

pub fn correlation_predicted(
    ac: &ResidueModel,
    bd: &ResidueModel,
    u: f64,
    width: f64,
    h: u64,
    q_max: u64,
) -> Result<CorrelationPrediction> {
    if h == 0 || q_max == 0 {
        return Err(Error::Config("need h >= 1 and q_max >= 1".into()));
    }
    let (lo, hi) = window(u, width);
    if hi < lo {
        return Err(Error::Config(format!("empty window [{u}, {u}(1+{width})]")));
    }
    let count = (hi - lo + 1) as f64;
    let mut means = Vec::new();
    for (ah, _) in &ac.poles {
        for (bh, _) in &bd.poles {
            let mean = (lo..=hi).fold(zero(), |acc, m| {
                acc + (-ah.0 * (m as f64).ln() - bh.0 * ((m as u64 + h) as f64).ln()).exp()
            }) / count;
            means.push(mean);
        }
    }
    let terms: Vec<Complex64> = (1..=q_max)
        .into_par_iter()
        .map(|q| -> Result<Complex64> {
            let r = ramanujan_sum(q, h);
            if r == 0 {
                return Ok(zero());
            }
            let ra = ac.residues(q)?;
            let rb = bd.residues(q)?;
            let mut acc = zero();
            let mut k = 0;
            for x in &ra {
                for y in &rb {
                    acc += x.1 * y.1 * means[k];
                    k += 1;
                }
            }
            Ok(acc * r as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let value = terms.iter().fold(zero(), |acc, v| acc + v);
    let late = terms[(q_max / 2) as usize..].iter().fold(zero(), |acc, v| acc + v);
    let tail_ratio = if value.norm() > 0.0 { late.norm() / value.norm() } else { 0.0 };
    if tail_ratio > 0.01 {
        log::warn!("q-sum up to {q_max} has not settled: late terms carry {:.1}%", 100.0 * tail_ratio);
    }
    Ok(CorrelationPrediction { value, tail_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::sieve_coefficients;
    use proptest::prelude::*;

    fn set(role: Role, values: &[f64]) -> ShiftSet {
        ShiftSet::from_reals(role, values)
    }

    fn singleton(t: f64, lambda: f64) -> ExperimentConfig {
        ExperimentConfig::new(
            &set(Role::A, &[0.10]),
            &set(Role::B, &[0.12]),
            &set(Role::C, &[0.30]),
            &set(Role::D, &[0.35]),
            t,
            lambda,
        )
    }

    fn complex_config(t: f64) -> ExperimentConfig {
        let s = |role, re, im| ShiftSet::new(role, vec![Shift::new(re, im)]);
        ExperimentConfig::new(
            &s(Role::A, 0.10, 0.03),
            &s(Role::B, 0.12, -0.02),
            &s(Role::C, 0.30, 0.05),
            &s(Role::D, 0.35, 0.01),
            t,
            1.1,
        )
    }

    fn collapsed(t: f64, lambda: f64) -> ExperimentConfig {
        let a = set(Role::A, &[0.10, 0.05]);
        let b = set(Role::B, &[0.12]);
        ExperimentConfig::new(&a, &b, &a.clone().with_role(Role::C), &b.clone().with_role(Role::D), t, lambda)
    }

    fn close(x: Complex64, y: Complex64, tol: f64) -> bool {
        (x - y).norm() <= tol * y.norm().max(1.0)
    }

    #[test]
    fn collapsed_truncated_average_is_the_single_term() {
        let cfg = collapsed(300.0, 1.1);
        let (ac, bd) = build_tables(&cfg, cfg.x()).unwrap();
        let m = truncated_lhs(&cfg, &ac, &bd).unwrap();
        assert!(close(m, Complex64::new(cfg.scale(), 0.0), 1e-12), "{m}");
        let comps = truncated_rhs(&cfg, &ac, &bd).unwrap();
        assert!(close(comps[0].value, Complex64::new(cfg.scale(), 0.0), 1e-12));
    }

    #[test]
    fn short_polynomial_keeps_one_term() {
        let cfg = singleton(1.5, 1.0);
        assert_eq!(cfg.x(), 1);
        let (ac, bd) = build_tables(&cfg, 1).unwrap();
        let m = truncated_lhs(&cfg, &ac, &bd).unwrap();
        assert!(close(m, Complex64::new(cfg.scale(), 0.0), 1e-13));
    }

    #[test]
    fn band_widening_is_stable() {
        let cfg = singleton(500.0, 1.1);
        let (ac, bd) = build_tables(&cfg, cfg.x()).unwrap();
        let w = cfg.psi.band_width(cfg.band_tolerance);
        let narrow = truncated_lhs_with_band(&cfg, &ac, &bd, w).unwrap();
        let wide = truncated_lhs_with_band(&cfg, &ac, &bd, 2.0 * w).unwrap();
        assert!((narrow - wide).norm() <= 1e-8 * wide.norm(), "{narrow} vs {wide}");
    }

    #[test]
    fn pair_sum_matches_direct_t_integral() {
        let cfg = complex_config(60.0);
        let x = cfg.x();
        let (ac, bd) = build_tables(&cfg, x).unwrap();
        let poly = |table: &CoefficientTable, t: f64, sign: f64| {
            (1..=x).fold(zero(), |acc, n| {
                let ln = (n as f64).ln();
                acc + table.get(n) * Complex64::from_polar((-0.5 * ln).exp(), -sign * t * ln)
            })
        };
        let gl = GaussLegendre::new(32);
        let (c1, c2) = cfg.psi.support();
        let direct = gl
            .composite(c1 * cfg.t, c2 * cfg.t, 400)
            .into_iter()
            .fold(zero(), |acc, (t, w)| {
                acc + poly(&ac, t, 1.0) * poly(&bd, t, -1.0) * (cfg.psi.eval(t / cfg.t) * w)
            });
        let m = truncated_lhs(&cfg, &ac, &bd).unwrap();
        assert!((m - direct).norm() <= 1e-9 * direct.norm(), "{m} vs {direct}");
    }

    #[test]
    fn prediction_is_sum_of_components() {
        let cfg = singleton(200.0, 1.1);
        let report = moments_report(&cfg).unwrap();
        assert_eq!(report.components.len(), 2);
        assert_eq!(report.components[0].label, "diagonal");
        let total = report.components.iter().fold(zero(), |acc, c| acc + c.value);
        assert_eq!(report.predicted, total);
        assert_eq!(report.abs_err, (report.empirical - report.predicted).norm());
    }

    #[test]
    fn reflection_conjugates_moments() {
        let cfg = complex_config(150.0);
        let r = moments_report(&cfg).unwrap();
        let rc = moments_report(&cfg.reflect()).unwrap();
        assert!(close(rc.empirical, r.empirical.conj(), 1e-9));
        for (x, y) in r.components.iter().zip(&rc.components) {
            assert!(close(y.value, x.value.conj(), 1e-9), "{}", x.label);
        }
        // plain conjugation is not a symmetry of the t-average
        let mirrored = cfg.reflect();
        let plain = ExperimentConfig {
            a: mirrored.b.with_role(Role::A),
            b: mirrored.a.with_role(Role::B),
            c: mirrored.d.with_role(Role::C),
            d: mirrored.c.with_role(Role::D),
            ..cfg.clone()
        };
        let rp = moments_report(&plain).unwrap();
        assert!((rp.empirical - r.empirical.conj()).norm() > 1e-6 * r.empirical.norm());
    }

    #[test]
    fn reflection_conjugates_ratios() {
        let cfg = complex_config(100.0);
        let r = ratios_report(&cfg).unwrap();
        let rc = ratios_report(&cfg.reflect()).unwrap();
        assert!(close(rc.empirical, r.empirical.conj(), 1e-9));
        assert!(close(rc.predicted, r.predicted.conj(), 1e-9));
    }

    #[test]
    fn short_polynomials_are_diagonal_dominated() {
        let cfg = singleton(500.0, 0.9);
        let report = moments_report(&cfg).unwrap();
        let diagonal = report.components[0].value;
        assert!((report.empirical - diagonal).norm() / diagonal.norm() <= 0.05);
    }

    #[test]
    fn swap_integrals_are_stable_under_refinement() {
        let cfg = singleton(300.0, 1.1);
        let (ac, bd) = build_tables(&cfg, cfg.x()).unwrap();
        let coarse = truncated_rhs(&cfg, &ac, &bd).unwrap();
        let fine_cfg = ExperimentConfig { weight_panels: 2 * cfg.weight_panels, ..cfg.clone() };
        let fine = truncated_rhs(&fine_cfg, &ac, &bd).unwrap();
        for (x, y) in coarse.iter().zip(&fine) {
            assert!(close(x.value, y.value, 1e-6), "{}", x.label);
        }
        let sigma = Complex64::new(0.22, 0.0);
        let w1 = weight_integral(&cfg, sigma);
        let w2 = weight_integral(&fine_cfg, sigma);
        assert!(close(w1, w2, 1e-10));
    }

    #[test]
    fn bad_band_tolerance_is_a_config_error() {
        let cfg = ExperimentConfig { band_tolerance: 1e-15, ..singleton(100.0, 1.1) };
        let (ac, bd) = build_tables(&cfg, cfg.x()).unwrap();
        assert!(matches!(truncated_lhs(&cfg, &ac, &bd), Err(Error::Config(_))));
    }

    #[test]
    fn short_table_is_rejected() {
        let cfg = singleton(100.0, 1.1);
        let (ac, bd) = build_tables(&cfg, 10).unwrap();
        assert!(matches!(truncated_lhs(&cfg, &ac, &bd), Err(Error::Config(_))));
        assert!(matches!(truncated_rhs(&cfg, &ac, &bd), Err(Error::Config(_))));
    }

    #[test]
    fn collapsed_ratio_integrates_psi() {
        let cfg = collapsed(100.0, 1.1);
        let r = ratios_lhs(&cfg).unwrap();
        assert!(close(r.value, Complex64::new(cfg.scale(), 0.0), 1e-10), "{}", r.value);
    }

    #[test]
    fn empty_sets_give_the_weight_integral() {
        let e = |role| ShiftSet::empty(role);
        let cfg = ExperimentConfig::new(&e(Role::A), &e(Role::B), &e(Role::C), &e(Role::D), 100.0, 1.1);
        let report = ratios_report(&cfg).unwrap();
        assert_eq!(report.components.len(), 1);
        assert!(close(report.empirical, Complex64::new(cfg.scale(), 0.0), 1e-10));
        assert!(close(report.predicted, Complex64::new(cfg.scale(), 0.0), 1e-10));
    }

    #[test]
    fn ratio_components_by_swap_size() {
        let cfg = singleton(200.0, 1.1);
        let (one, _) = ratios_rhs(&cfg, 1).unwrap();
        assert_eq!(one.len(), 2);
        let (none, _) = ratios_rhs(&cfg, 0).unwrap();
        let expected = weight_integral(&cfg, zero())
            * b_value(&cfg.a, &cfg.b, &cfg.c, &cfg.d, Complex64::new(1.0, 0.0), cfg.prime_cutoff).unwrap().value;
        assert_eq!(none.len(), 1);
        assert!(close(none[0].value, expected, 1e-14));
        let pair = ExperimentConfig::new(
            &set(Role::A, &[0.10, 0.05]),
            &set(Role::B, &[0.12, 0.07]),
            &cfg.c,
            &cfg.d,
            200.0,
            1.1,
        );
        assert_eq!(ratios_rhs(&pair, 2).unwrap().0.len(), 6);
    }

    #[test]
    fn singleton_ratio_is_stable_and_matches() {
        let cfg = singleton(200.0, 1.1);
        let report = ratios_report(&cfg).unwrap();
        assert!(report.diagnostics["quadrature_error"] <= 1e-6 * report.empirical.norm());
        assert!(report.rel_err <= 0.05, "{}", report.rel_err);
    }

    #[test]
    fn divisor_correlation_by_hand() {
        let a = set(Role::A, &[0.0, 0.0]);
        let b = set(Role::B, &[0.0, 0.0]);
        let ta = sieve_coefficients(&a, &ShiftSet::empty(Role::C), 20).unwrap();
        let tb = sieve_coefficients(&b, &ShiftSet::empty(Role::D), 20).unwrap();
        let s = correlation_empirical(&ta, &tb, 10, 1).unwrap();
        assert!(close(s, Complex64::new(74.0, 0.0), 1e-12), "{s}");
        assert!(matches!(correlation_empirical(&ta, &tb, 10, 0), Err(Error::Config(_))));
    }

    #[test]
    fn collapsed_correlation_is_one_term() {
        let a = set(Role::A, &[0.1, 0.2]);
        let b = ShiftSet::new(Role::B, vec![Shift::new(0.05, 0.3)]);
        let d = set(Role::D, &[0.25]);
        let ta = sieve_coefficients(&a, &a.clone().with_role(Role::C), 1000).unwrap();
        let tb = sieve_coefficients(&b, &d, 1010).unwrap();
        for h in [1, 2, 7] {
            let s = correlation_empirical(&ta, &tb, 1000, h).unwrap();
            assert_eq!(s, tb.get(1 + h));
        }
    }

    #[test]
    fn single_residue_prediction() {
        let a = set(Role::A, &[0.2]);
        let table = sieve_coefficients(&a, &ShiftSet::empty(Role::C), 20_000).unwrap();
        let avg = exp_sum_average(&table, 1, 1e4, 1.0).unwrap();
        let (lo, hi) = window(1e4, 1.0);
        let mean = (lo..=hi).map(|m| (m as f64).powf(-0.2)).sum::<f64>() / (hi - lo + 1) as f64;
        assert!(close(avg.predicted, Complex64::new(mean, 0.0), 1e-12));
        assert!(close(avg.empirical, avg.predicted, 1e-12));
    }

    #[test]
    fn constant_coefficients_cancel_mod_four() {
        let a = set(Role::A, &[1e-9]);
        let table = sieve_coefficients(&a, &ShiftSet::empty(Role::C), 30_000).unwrap();
        let avg = exp_sum_average(&table, 4, 1e4, 2.0).unwrap();
        assert!(avg.empirical.norm() <= 0.05);
        assert!(avg.predicted.norm() <= 0.05, "{}", avg.predicted);
    }

    #[test]
    fn doubleton_exp_sum_matches() {
        let a = set(Role::A, &[0.01, 0.03]);
        let table = sieve_coefficients(&a, &ShiftSet::empty(Role::C), 150_001).unwrap();
        let avg = exp_sum_average(&table, 6, 1e5, 0.5).unwrap();
        assert!((avg.empirical - avg.predicted).norm() <= 0.1 * avg.predicted.norm());
    }

    #[test]
    fn repeated_shifts_have_no_simple_residues() {
        let a = set(Role::A, &[0.1, 0.1]);
        assert!(matches!(ResidueModel::new(&a, &ShiftSet::empty(Role::C)), Err(Error::Domain(_))));
    }

    #[test]
    fn correlation_prediction_near_divisor_shifts() {
        let (u, width) = (1e5, 0.5);
        let a = set(Role::A, &[0.01, 0.03]);
        let b = set(Role::B, &[0.02, 0.04]);
        let (c, d) = (ShiftSet::empty(Role::C), ShiftSet::empty(Role::D));
        let ta = sieve_coefficients(&a, &c, 150_010).unwrap();
        let tb = sieve_coefficients(&b, &d, 150_010).unwrap();
        let ma = ResidueModel::new(&a, &c).unwrap();
        let mb = ResidueModel::new(&b, &d).unwrap();
        for h in [1, 2] {
            let emp = correlation_window(&ta, &tb, u, width, h).unwrap();
            let pred = correlation_predicted(&ma, &mb, u, width, h as u64, 1000).unwrap();
            assert!(pred.tail_ratio < 0.01);
            assert!((emp - pred.value).norm() <= 0.1 * pred.value.norm(), "h={h}: {emp} vs {:?}", pred);
        }
    }

    #[test]
    fn correlation_prediction_depends_on_h_only_through_ramanujan_sums() {
        let a = set(Role::A, &[0.01, 0.03]);
        let b = set(Role::B, &[0.02, 0.04]);
        let ma = ResidueModel::new(&a, &ShiftSet::empty(Role::C)).unwrap();
        let mb = ResidueModel::new(&b, &ShiftSet::empty(Role::D)).unwrap();
        let (u, width, q_max) = (1e4, 0.0, 60);
        let (lo, _) = window(u, width);
        for h in [1u64, 2, 6] {
            let pred = correlation_predicted(&ma, &mb, u, width, h, q_max).unwrap();
            let mut oracle = zero();
            for q in 1..=q_max {
                let mut inner = zero();
                for (x, rx) in ma.residues(q).unwrap() {
                    for (y, ry) in mb.residues(q).unwrap() {
                        inner += rx * ry * (-x * (lo as f64).ln() - y * ((lo as u64 + h) as f64).ln()).exp();
                    }
                }
                oracle += inner * ramanujan_sum(q, h) as f64;
            }
            assert!(close(pred.value, oracle, 1e-12));
        }
    }

    #[test]
    fn relative_error_falls_back_to_scale() {
        let e = Complex64::new(1e-3, 0.0);
        assert_eq!(relative_error(e, zero(), 100.0), 1e-5);
        assert_eq!(relative_error(e, Complex64::new(2e-3, 0.0), 1e-3), 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn correlations_respect_conjugation(
            ar in 0.0f64..0.25, ai in -1.0f64..1.0, br in 0.0f64..0.25, bi in -1.0f64..1.0, h in 1usize..20,
        ) {
            let a = ShiftSet::new(Role::A, vec![Shift::new(ar, ai)]);
            let b = ShiftSet::new(Role::B, vec![Shift::new(br, bi)]);
            let conj = |s: &ShiftSet| ShiftSet::new(s.role(), s.iter().map(|x| Shift(x.0.conj())).collect());
            let (c, d) = (ShiftSet::empty(Role::C), ShiftSet::empty(Role::D));
            let s = correlation_empirical(
                &sieve_coefficients(&a, &c, 2000).unwrap(), &sieve_coefficients(&b, &d, 2020).unwrap(), 2000, h,
            ).unwrap();
            let sc = correlation_empirical(
                &sieve_coefficients(&conj(&a), &c, 2000).unwrap(),
                &sieve_coefficients(&conj(&b), &d, 2020).unwrap(),
                2000,
                h,
            ).unwrap();
            prop_assert!(close(sc, s.conj(), 1e-9));
        }

        #[test]
        fn accounting_is_exact(t in 30.0f64..120.0, lambda in 0.8f64..1.3, g in 0.2f64..0.4) {
            let mut cfg = singleton(t, lambda);
            cfg.c = set(Role::C, &[g]);
            let report = moments_report(&cfg).unwrap();
            prop_assert_eq!(report.components.len(), 2);
            prop_assert_eq!(report.predicted, report.components[0].value + report.components[1].value);
        }
    }
}
