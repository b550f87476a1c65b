//! The JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zeta_ratios::arithmetic::DEFAULT_MEMORY_BUDGET;
use zeta_ratios::averages::ExperimentConfig;
use zeta_ratios::euler::DEFAULT_PRIME_CUTOFF;
use zeta_ratios::shiftsets::{Role, Shift, ShiftSet};
use zeta_ratios::testfn::TestFunction;

use crate::error::{io_context, CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    pub u: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    pub h: Vec<u64>,
    #[serde(default = "default_q_max")]
    pub q_max: u64,
}

/// Shifts are `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "A", default)]
    pub a: Vec<[f64; 2]>,
    #[serde(rename = "B", default)]
    pub b: Vec<[f64; 2]>,
    #[serde(rename = "C", default)]
    pub c: Vec<[f64; 2]>,
    #[serde(rename = "D", default)]
    pub d: Vec<[f64; 2]>,
    #[serde(rename = "T", default = "default_t")]
    pub t: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_support")]
    pub psi_support: [f64; 2],
    /// Sieve cutoff for `sieve`; defaults to the largest `T^λ`.
    #[serde(default)]
    pub x: Option<usize>,
    #[serde(default = "default_band")]
    pub band_tolerance: f64,
    #[serde(default = "default_prime_cutoff")]
    pub prime_cutoff: usize,
    #[serde(default)]
    pub max_swap: Option<usize>,
    #[serde(default = "default_panels")]
    pub panels_per_unit: f64,
    #[serde(default = "default_nodes")]
    pub nodes_per_panel: usize,
    #[serde(default = "default_weight_panels")]
    pub weight_panels: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_budget")]
    pub memory_budget: u64,
    /// Contour radius around the shifts; recorded, not used by the closed forms.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Reports with a larger relative error count as verification failures.
    #[serde(default)]
    pub max_rel_err: Option<f64>,
    #[serde(default)]
    pub correlations: Option<CorrelationConfig>,
}

fn default_t() -> Vec<f64> {
    vec![1000.0]
}
fn default_lambda() -> f64 {
    1.1
}
fn default_support() -> [f64; 2] {
    [1.0, 2.0]
}
fn default_band() -> f64 {
    1e-10
}
fn default_prime_cutoff() -> usize {
    DEFAULT_PRIME_CUTOFF
}
fn default_panels() -> f64 {
    1.0
}
fn default_nodes() -> usize {
    16
}
fn default_weight_panels() -> usize {
    8
}
fn default_output() -> PathBuf {
    PathBuf::from("zratios-out")
}
fn default_budget() -> u64 {
    DEFAULT_MEMORY_BUDGET
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_seed() -> u64 {
    1
}
fn default_width() -> f64 {
    0.5
}
fn default_q_max() -> u64 {
    1000
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

impl RunConfig {
    /// Reads and validates a config file. Relative output paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_context(format!("reading {}", path.display())))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Parses `text`; `origin` prefixes error messages as `origin:line:column`.
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
        cfg.validate(text, origin)?;
        Ok(cfg)
    }

    fn validate(&self, text: &str, origin: &str) -> CliResult<()> {
        let fail = |key: &str, msg: String| {
            let at = line_of(text, key).map(|l| format!(":{l}")).unwrap_or_default();
            Err(CliError::Config(format!("{origin}{at}: {key}: {msg}")))
        };
        for (key, values) in [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d)] {
            if values.iter().flatten().any(|v| !v.is_finite()) {
                return fail(key, "shifts must be finite".into());
            }
        }
        for (key, set) in self.shift_sets() {
            if set.has_duplicates() {
                return fail(key, "repeated shift; poles must be simple".into());
            }
            for v in set.validate() {
                log::warn!("{key}: {v}");
            }
            if let Some(big) = set.iter().find(|s| s.0.im.abs() > 50.0) {
                log::warn!("{key}: {big} has |Im| > 50, beyond the tested range");
            }
        }
        if self.t.is_empty() || self.t.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return fail("T", format!("heights must be positive, got {:?}", self.t));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail("lambda", format!("must be positive, got {}", self.lambda));
        }
        let [c1, c2] = self.psi_support;
        if !(c1 > 0.0 && c2 > c1) {
            return fail("psi_support", format!("need 0 < c1 < c2, got [{c1}, {c2}]"));
        }
        if !(self.band_tolerance > 0.0 && self.band_tolerance < 1.0) {
            return fail("band_tolerance", format!("must lie in (0, 1), got {}", self.band_tolerance));
        }
        if self.prime_cutoff < 100 {
            return fail("prime_cutoff", format!("must be at least 100, got {}", self.prime_cutoff));
        }
        if self.nodes_per_panel == 0 || self.weight_panels == 0 || !(self.panels_per_unit > 0.0) {
            return fail("nodes_per_panel", "quadrature sizes must be positive".into());
        }
        if !(self.epsilon > 0.0) {
            return fail("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if let Some(corr) = &self.correlations {
            if !(corr.u >= 1.0 && corr.width >= 0.0) {
                return fail("correlations", format!("need u >= 1 and width >= 0, got u = {}, width = {}", corr.u, corr.width));
            }
            if corr.h.contains(&0) || corr.q_max == 0 {
                return fail("correlations", "h values and q_max must be at least 1".into());
            }
        }
        Ok(())
    }

    fn set(role: Role, values: &[[f64; 2]]) -> ShiftSet {
        ShiftSet::new(role, values.iter().map(|&[re, im]| Shift::new(re, im)).collect())
    }

    pub fn shift_sets(&self) -> [(&'static str, ShiftSet); 4] {
        [
            ("A", Self::set(Role::A, &self.a)),
            ("B", Self::set(Role::B, &self.b)),
            ("C", Self::set(Role::C, &self.c)),
            ("D", Self::set(Role::D, &self.d)),
        ]
    }

    pub fn test_function(&self) -> CliResult<TestFunction> {
        Ok(TestFunction::new(self.psi_support[0], self.psi_support[1])?)
    }

    /// The experiment at height `t`.
    pub fn experiment(&self, t: f64, psi: &TestFunction) -> ExperimentConfig {
        let [(_, a), (_, b), (_, c), (_, d)] = self.shift_sets();
        let mut cfg = ExperimentConfig::new(&a, &b, &c, &d, t, self.lambda);
        cfg.psi = psi.clone();
        cfg.band_tolerance = self.band_tolerance;
        cfg.prime_cutoff = self.prime_cutoff;
        cfg.max_swap = self.max_swap;
        cfg.panels_per_unit = self.panels_per_unit;
        cfg.nodes_per_panel = self.nodes_per_panel;
        cfg.weight_panels = self.weight_panels;
        cfg.memory_budget = self.memory_budget;
        cfg
    }

    /// Largest `floor(T^λ)` over the grid.
    pub fn max_x(&self) -> usize {
        self.t.iter().map(|t| t.powf(self.lambda).floor() as usize).max().unwrap_or(1)
    }
}
