//! The smooth bump weight `ψ` and its Fourier transform
//! `ψ̂(y) = ∫ ψ(t) e^{-2πity} dt`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

const SUPPORT_NODES: usize = 2048;
const GRID_STEP: f64 = 1.0 / 512.0;
const SCAN_STEP: f64 = 0.05;
const SCAN_LIMIT: f64 = 400.0;
/// `|ψ̂|` below this (relative to `ψ̂(0)`) is treated as zero; the support
/// quadrature itself is only accurate to about `1e-14`.
const NEGLIGIBLE: f64 = 1e-13;

/// `ψ(t) = exp(-1/((t-c₁)(c₂-t))) / Z` on `[c₁, c₂]`, normalized so `∫ψ = 1`.
#[derive(Clone)]
pub struct TestFunction {
    inner: Arc<Inner>,
}

struct Inner {
    c1: f64,
    c2: f64,
    norm: f64,
    /// Support quadrature `(t_i, w_i ψ(t_i))`.
    weighted: Vec<(f64, f64)>,
    /// `ψ̂`, `ψ̂'` and `ψ̂''` on `y = k·GRID_STEP`, `0 <= y <= cutoff`.
    values: Vec<Complex64>,
    derivs: Vec<Complex64>,
    second: Vec<Complex64>,
    cutoff: f64,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("support", &(self.inner.c1, self.inner.c2))
            .field("fourier_cutoff", &self.inner.cutoff)
            .finish()
    }
}

fn raw_bump(c1: f64, c2: f64, t: f64) -> f64 {
    if t <= c1 || t >= c2 {
        0.0
    } else {
        (-1.0 / ((t - c1) * (c2 - t))).exp()
    }
}

impl TestFunction {
    /// The bump on `[1, 2]`, built once per process.
    pub fn standard() -> TestFunction {
        static STANDARD: OnceLock<TestFunction> = OnceLock::new();
        STANDARD
            .get_or_init(|| TestFunction::build(1.0, 2.0))
            .clone()
    }

    pub fn new(c1: f64, c2: f64) -> Result<TestFunction> {
        if !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
            return Err(Error::Config(format!("test function support [{c1}, {c2}] must satisfy 0 < c1 < c2")));
        }
        if c1 == 1.0 && c2 == 2.0 {
            return Ok(TestFunction::standard());
        }
        Ok(TestFunction::build(c1, c2))
    }

    fn build(c1: f64, c2: f64) -> TestFunction {
        let gl = GaussLegendre::new(SUPPORT_NODES);
        let nodes: Vec<(f64, f64)> = gl.mapped(c1, c2).collect();
        let norm: f64 = nodes.iter().map(|&(t, w)| w * raw_bump(c1, c2, t)).sum();
        let weighted: Vec<(f64, f64)> =
            nodes.iter().map(|&(t, w)| (t, w * raw_bump(c1, c2, t) / norm)).collect();

        // Coarse scan for the point beyond which ψ̂ is negligible.
        let scan: Vec<f64> = (0..=(SCAN_LIMIT / SCAN_STEP) as usize)
            .into_par_iter()
            .map(|k| direct(&weighted, k as f64 * SCAN_STEP).norm())
            .collect();
        let last = scan.iter().rposition(|&v| v > NEGLIGIBLE).unwrap_or(0);
        let cutoff = ((last + 1) as f64 * SCAN_STEP + 1.0).min(SCAN_LIMIT);

        let count = (cutoff / GRID_STEP).ceil() as usize + 1;
        let triples: Vec<[Complex64; 3]> = (0..count)
            .into_par_iter()
            .map(|k| direct_with_derivatives(&weighted, k as f64 * GRID_STEP))
            .collect();
        let values = triples.iter().map(|t| t[0]).collect();
        let derivs = triples.iter().map(|t| t[1]).collect();
        let second = triples.iter().map(|t| t[2]).collect();
        TestFunction {
            inner: Arc::new(Inner { c1, c2, norm, weighted, values, derivs, second, cutoff }),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.inner.c1, self.inner.c2)
    }

    pub fn eval(&self, t: f64) -> f64 {
        raw_bump(self.inner.c1, self.inner.c2, t) / self.inner.norm
    }

    /// `∫ ψ = ψ̂(0)`.
    pub fn integral(&self) -> f64 {
        self.inner.values[0].re
    }

    /// `ψ̂(y)` by direct quadrature over the support.
    pub fn fourier_direct(&self, y: f64) -> Complex64 {
        direct(&self.inner.weighted, y)
    }

    /// `ψ̂(y)` from the cached grid (quintic Hermite), zero beyond the cutoff.
    pub fn fourier(&self, y: f64) -> Complex64 {
        let inner = &*self.inner;
        let ay = y.abs();
        if ay >= inner.cutoff {
            return Complex64::new(0.0, 0.0);
        }
        let pos = ay / GRID_STEP;
        let k = (pos as usize).min(inner.values.len() - 2);
        let u = pos - k as f64;
        let (u2, u3) = (u * u, u * u * u);
        let (u4, u5) = (u3 * u, u3 * u2);
        let h = GRID_STEP;
        let v = inner.values[k] * (1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5)
            + inner.derivs[k] * (h * (u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5))
            + inner.second[k] * (h * h * 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5))
            + inner.second[k + 1] * (h * h * 0.5 * (u3 - 2.0 * u4 + u5))
            + inner.derivs[k + 1] * (h * (-4.0 * u3 + 7.0 * u4 - 3.0 * u5))
            + inner.values[k + 1] * (10.0 * u3 - 15.0 * u4 + 6.0 * u5);
        if y < 0.0 {
            v.conj()
        } else {
            v
        }
    }

    /// `|y|` beyond which `ψ̂` is treated as zero.
    pub fn fourier_cutoff(&self) -> f64 {
        self.inner.cutoff
    }

    /// Smallest `W` with `∫_{|y| > W} |ψ̂(y)| dy <= rel_tol · ψ̂(0)`, from the grid.
    pub fn band_width(&self, rel_tol: f64) -> f64 {
        let inner = &*self.inner;
        let budget = rel_tol * self.integral();
        let mut tail = 0.0;
        for k in (0..inner.values.len()).rev() {
            // both signs of y
            tail += 2.0 * inner.values[k].norm() * GRID_STEP;
            if tail > budget {
                return ((k + 1) as f64 * GRID_STEP).min(inner.cutoff);
            }
        }
        0.0
    }
}

fn direct(weighted: &[(f64, f64)], y: f64) -> Complex64 {
    weighted
        .iter()
        .filter(|&&(_, w)| w != 0.0)
        .map(|&(t, w)| {
            let (s, c) = (-2.0 * PI * t * y).sin_cos();
            Complex64::new(c, s) * w
        })
        .sum()
}

/// `[ψ̂(y), ψ̂'(y), ψ̂''(y)]` by quadrature.
fn direct_with_derivatives(weighted: &[(f64, f64)], y: f64) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for &(t, w) in weighted {
        if w == 0.0 {
            continue;
        }
        let (s, c) = (-2.0 * PI * t * y).sin_cos();
        let e = Complex64::new(c, s) * w;
        let factor = Complex64::new(0.0, -2.0 * PI * t);
        out[0] += e;
        out[1] += e * factor;
        out[2] += e * factor * factor;
    }
    out
}
