//! The five subcommands. Each writes its outputs plus a manifest into the
//! output directory and returns whether its checks passed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use zeta_ratios::arithmetic::{sieve_coefficients_with, CoefficientTable, SieveOptions};
use zeta_ratios::averages::{
    correlation_predicted, correlation_window, moments_report_with, ratios_report, relative_error, window,
    ComparisonReport, ResidueModel,
};
use zeta_ratios::shiftsets::ShiftSet;

use crate::config::RunConfig;
use crate::error::{io_context, CliError, CliResult};
use crate::manifest::RunManifest;
use crate::suite::run_suite;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub passed: bool,
    pub outputs: Vec<PathBuf>,
    pub summary: String,
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(io_context(format!("creating {}", dir.display())))
}

fn config_value(cfg: &RunConfig) -> CliResult<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(path, json).map_err(io_context(format!("writing {}", path.display())))
}

fn finish(mut manifest: RunManifest, dir: &Path, files: Vec<PathBuf>, started: Instant) -> CliResult<Vec<PathBuf>> {
    for f in &files {
        manifest.record_output(f)?;
    }
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    let mut files = files;
    files.push(manifest.write(dir)?);
    Ok(files)
}

/// Paths of the sieved `(A, C)` and `(B, D)` tables.
pub fn table_paths(dir: &Path) -> (PathBuf, PathBuf) {
    let tables = dir.join("tables");
    (tables.join("ac.bin"), tables.join("bd.bin"))
}

fn sieve_to(a: &ShiftSet, c: &ShiftSet, x: usize, budget: u64, path: &Path) -> CliResult<CoefficientTable> {
    let table = sieve_coefficients_with(a, c, x, &SieveOptions { memory_budget: budget })?;
    ensure_dir(path.parent().unwrap())?;
    table.write(path)?;
    Ok(table)
}

fn usable(path: &Path, a: &ShiftSet, c: &ShiftSet, need: usize) -> CliResult<Option<CoefficientTable>> {
    if !path.exists() {
        return Ok(None);
    }
    let table = CoefficientTable::read(path)?;
    let matches = table.numerator().same_multiset(a) && table.denominator().same_multiset(c);
    Ok((matches && table.limit() >= need).then_some(table))
}

/// Sieved tables covering `n <= need`, read from the output directory when
/// they match the config, otherwise built (unless `no_build`).
fn load_tables(cfg: &RunConfig, need: usize, no_build: bool) -> CliResult<(CoefficientTable, CoefficientTable)> {
    let [(_, a), (_, b), (_, c), (_, d)] = cfg.shift_sets();
    let (pac, pbd) = table_paths(&cfg.output_dir);
    let mut out = Vec::new();
    for (path, num, den) in [(&pac, &a, &c), (&pbd, &b, &d)] {
        let table = match usable(path, num, den, need)? {
            Some(t) => t,
            None if no_build => {
                return Err(CliError::Dependency(format!(
                    "{} is missing, stale or shorter than {need}; run `zratios sieve` or drop --no-build",
                    path.display()
                )))
            }
            None => sieve_to(num, den, need, cfg.memory_budget, path)?,
        };
        out.push(table);
    }
    let bd = out.pop().unwrap();
    let ac = out.pop().unwrap();
    Ok((ac, bd))
}

/// Tables must reach this far for the correlation window.
fn correlation_need(cfg: &RunConfig) -> usize {
    cfg.correlations.as_ref().map_or(0, |corr| {
        let (_, hi) = window(corr.u, corr.width);
        hi + corr.h.iter().copied().max().unwrap_or(0) as usize
    })
}

pub fn cmd_sieve(cfg: &RunConfig) -> CliResult<Outcome> {
    let started = Instant::now();
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let x = cfg.x.unwrap_or_else(|| cfg.max_x().max(correlation_need(cfg)));
    let [(_, a), (_, b), (_, c), (_, d)] = cfg.shift_sets();
    let (pac, pbd) = table_paths(dir);
    sieve_to(&a, &c, x, cfg.memory_budget, &pac)?;
    sieve_to(&b, &d, x, cfg.memory_budget, &pbd)?;
    let mut manifest = RunManifest::new("sieve", config_value(cfg)?, cfg.seed);
    manifest.diagnostics.insert("X".into(), x as f64);
    let files = vec![pac.clone(), CoefficientTable::sidecar_path(&pac), pbd.clone(), CoefficientTable::sidecar_path(&pbd)];
    let outputs = finish(manifest, dir, files, started)?;
    Ok(Outcome { passed: true, outputs, summary: format!("sieved (A, C) and (B, D) up to X = {x}") })
}

pub fn cmd_check_identities(
    dir: &Path,
    config: Option<&RunConfig>,
    seed: u64,
    count: usize,
    tolerance: Option<f64>,
) -> CliResult<Outcome> {
    let started = Instant::now();
    ensure_dir(dir)?;
    let report = run_suite(seed, count, tolerance);
    for r in report.records.iter().filter(|r| !r.passed) {
        log::error!(
            "{:?} instance {} failed: residual {:?}, tolerance {:e}{}",
            r.family,
            r.instance,
            r.residual,
            r.tolerance,
            r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
        );
    }
    let path = dir.join("identities.json");
    write_json(&path, &report)?;
    let config = match config {
        Some(cfg) => config_value(cfg)?,
        None => serde_json::Value::Null,
    };
    let mut manifest = RunManifest::new("check-identities", config, seed);
    manifest.diagnostics.insert("max_residual".into(), report.max_residual());
    manifest.diagnostics.insert("count".into(), count as f64);
    let outputs = finish(manifest, dir, vec![path], started)?;
    Ok(Outcome {
        passed: report.all_passed(),
        outputs,
        summary: format!("{} of {} identity checks passed", report.passed, report.records.len()),
    })
}

const REPORT_HEADER: [&str; 6] = ["T", "lambda", "component", "re", "im", "relErr"];

/// One row per component plus the empirical and predicted totals.
fn write_reports(path: &Path, reports: &[ComparisonReport]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        let mut row = |label: &str, z: Complex64| {
            w.write_record([
                r.t.to_string(),
                r.lambda.to_string(),
                label.to_string(),
                z.re.to_string(),
                z.im.to_string(),
                r.rel_err.to_string(),
            ])
        };
        row("empirical", r.empirical)?;
        row("predicted", r.predicted)?;
        for c in &r.components {
            row(&c.label, c.value)?;
        }
    }
    w.flush().map_err(io_context(format!("writing {}", path.display())))?;
    Ok(())
}

fn write_plot_data(path: &Path, reports: &[ComparisonReport]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["T", "relErr"])?;
    for r in reports {
        w.write_record([r.t.to_string(), r.rel_err.to_string()])?;
    }
    w.flush().map_err(io_context(format!("writing {}", path.display())))?;
    Ok(())
}

fn report_outputs(
    name: &str,
    cfg: &RunConfig,
    reports: Vec<ComparisonReport>,
    emit_plot_data: bool,
    started: Instant,
) -> CliResult<Outcome> {
    let dir = &cfg.output_dir;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.json"));
    write_reports(&csv_path, &reports)?;
    write_json(&json_path, &reports)?;
    let mut files = vec![csv_path, json_path];
    if emit_plot_data {
        let plot = dir.join(format!("{name}_plot.csv"));
        write_plot_data(&plot, &reports)?;
        files.push(plot);
    }
    let mut manifest = RunManifest::new(name, config_value(cfg)?, cfg.seed);
    for r in &reports {
        for (k, v) in &r.diagnostics {
            manifest.diagnostics.insert(format!("T={}/{k}", r.t), *v);
        }
        manifest.diagnostics.insert(format!("T={}/runtime_secs", r.t), r.runtime_secs);
    }
    let outputs = finish(manifest, dir, files, started)?;
    let worst = reports.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let passed = cfg.max_rel_err.is_none_or(|tol| worst <= tol);
    let summary = reports
        .iter()
        .map(|r| format!("T={} relErr={:.4e}", r.t, r.rel_err))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome { passed, outputs, summary: format!("{name}: {summary}") })
}

pub fn cmd_moments(cfg: &RunConfig, no_build: bool, emit_plot_data: bool) -> CliResult<Outcome> {
    let started = Instant::now();
    ensure_dir(&cfg.output_dir)?;
    let psi = cfg.test_function()?;
    let (ac, bd) = load_tables(cfg, cfg.max_x().max(1), no_build)?;
    let reports = cfg
        .t
        .iter()
        .map(|&t| moments_report_with(&cfg.experiment(t, &psi), &ac, &bd))
        .collect::<zeta_ratios::Result<Vec<_>>>()?;
    report_outputs("moments", cfg, reports, emit_plot_data, started)
}

pub fn cmd_ratios(cfg: &RunConfig, emit_plot_data: bool) -> CliResult<Outcome> {
    let started = Instant::now();
    ensure_dir(&cfg.output_dir)?;
    let psi = cfg.test_function()?;
    let reports = cfg
        .t
        .iter()
        .map(|&t| ratios_report(&cfg.experiment(t, &psi)))
        .collect::<zeta_ratios::Result<Vec<_>>>()?;
    report_outputs("ratios", cfg, reports, emit_plot_data, started)
}

pub fn cmd_correlations(cfg: &RunConfig, no_build: bool) -> CliResult<Outcome> {
    let started = Instant::now();
    let corr = cfg
        .correlations
        .as_ref()
        .ok_or_else(|| CliError::Config("correlations: section missing from config".into()))?;
    ensure_dir(&cfg.output_dir)?;
    let (ac, bd) = load_tables(cfg, correlation_need(cfg), no_build)?;
    let ac_model = ResidueModel::new(ac.numerator(), ac.denominator())?;
    let bd_model = ResidueModel::new(bd.numerator(), bd.denominator())?;

    let path = cfg.output_dir.join("correlations.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["u", "width", "h", "empirical_re", "empirical_im", "predicted_re", "predicted_im", "relErr", "qTailRatio"])?;
    let mut manifest = RunManifest::new("correlations", config_value(cfg)?, cfg.seed);
    let mut worst: f64 = 0.0;
    for &h in &corr.h {
        let empirical = correlation_window(&ac, &bd, corr.u, corr.width, h as usize)?;
        let predicted = correlation_predicted(&ac_model, &bd_model, corr.u, corr.width, h, corr.q_max)?;
        let rel = relative_error(empirical, predicted.value, 1.0);
        worst = worst.max(rel);
        manifest.diagnostics.insert(format!("h={h}/q_tail_ratio"), predicted.tail_ratio);
        w.write_record([
            corr.u.to_string(),
            corr.width.to_string(),
            h.to_string(),
            empirical.re.to_string(),
            empirical.im.to_string(),
            predicted.value.re.to_string(),
            predicted.value.im.to_string(),
            rel.to_string(),
            predicted.tail_ratio.to_string(),
        ])?;
    }
    w.flush().map_err(io_context(format!("writing {}", path.display())))?;
    let outputs = finish(manifest, &cfg.output_dir, vec![path], started)?;
    Ok(Outcome {
        passed: cfg.max_rel_err.is_none_or(|tol| worst <= tol),
        outputs,
        summary: format!("correlations: {} shifts, worst relErr {worst:.4e}", corr.h.len()),
    })
}
