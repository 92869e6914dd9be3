use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::accel::{Accelerator, AcceleratorKind};
use crate::elasticity::DisplacementField;
use crate::engine::{run_schwarz, ConvergenceReport, CoupledProblem};
use crate::error::{Result, SchwarzError};
use crate::interface::{InterfaceLayout, InterfaceState};
use crate::laplace1d::Laplace1DProblem;
use crate::orchestrator::{monolithic_reference, subdomain_errors, ChainProblem, ElasticityConfig};

use super::config::{Backend, ExperimentConfig, RunSpec};

/// Everything measured for one run.
#[derive(Debug)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub report: ConvergenceReport,
    /// `|g - x_bar|` at the last iterate (1D only).
    pub true_error: Option<f64>,
    /// `e_max` of each subdomain against the monolithic reference (2D only).
    pub e_max: Vec<f64>,
    pub wall_time: f64,
}

impl RunOutcome {
    pub fn failure_message(&self) -> Option<String> {
        self.report.failure.as_ref().map(|e| e.to_string())
    }

    pub fn mean_iteration_time(&self) -> f64 {
        let n = self.report.records.len();
        if n == 0 {
            0.0
        } else {
            self.report.records.iter().map(|r| r.wall_time).sum::<f64>() / n as f64
        }
    }

    pub fn max_e_max(&self) -> Option<f64> {
        if self.e_max.is_empty() {
            None
        } else {
            Some(self.e_max.iter().cloned().fold(0.0, f64::max))
        }
    }
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutcome>,
}

impl ExperimentResult {
    pub fn failures(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.report.aborted())
    }

    pub fn all_succeeded(&self) -> bool {
        self.failures().next().is_none()
    }
}

fn aborted_report(g: InterfaceState, e: SchwarzError) -> ConvergenceReport {
    ConvergenceReport {
        records: Vec::new(),
        converged: false,
        iterations: 0,
        final_state: g,
        failure: Some(e),
    }
}

fn drive<P: CoupledProblem>(
    problem: &mut P,
    spec: &RunSpec,
    g_init: InterfaceState,
) -> ConvergenceReport {
    let mut accel = match Accelerator::new(spec.accelerator) {
        Ok(a) => a,
        Err(e) => return aborted_report(g_init, e),
    };
    match run_schwarz(problem, &mut accel, &spec.criteria, g_init.clone()) {
        Ok(r) => r,
        Err(e) => aborted_report(g_init, e),
    }
}

type References = BTreeMap<usize, std::result::Result<Vec<DisplacementField>, String>>;

/// Executes a single run. `references` holds monolithic solutions keyed by
/// `n_dd`; missing or failed references leave `e_max` empty.
pub fn execute_run(spec: &RunSpec, references: &References) -> RunOutcome {
    let start = Instant::now();
    let mut true_error = None;
    let mut e_max = Vec::new();
    let report = match spec.backend {
        Backend::Laplace1d => {
            let cfg = spec.laplace.expect("laplace run without laplace settings");
            match Laplace1DProblem::new(cfg) {
                Ok(mut p) => {
                    let g0 = p.initial_state();
                    let r = drive(&mut p, spec, g0);
                    true_error = Some((r.final_state.values()[0] - cfg.x_bar).abs());
                    r
                }
                Err(e) => aborted_report(InterfaceState::zeros(InterfaceLayout::single(1)), e),
            }
        }
        Backend::Elasticity2d => {
            let cfg = spec
                .elasticity
                .expect("elasticity run without elasticity settings");
            match ChainProblem::new(cfg) {
                Ok(mut p) => {
                    let g0 = p.zero_state();
                    let mut r = drive(&mut p, spec, g0);
                    match references.get(&cfg.n_dd) {
                        Some(Ok(reference)) if !r.aborted() => {
                            match subdomain_errors(p.fields(), reference) {
                                Ok(v) => e_max = v,
                                Err(e) => r.failure = Some(e),
                            }
                        }
                        Some(Err(msg)) if !r.aborted() => {
                            r.failure = Some(SchwarzError::Backend(msg.clone()));
                        }
                        _ => {}
                    }
                    r
                }
                Err(e) => aborted_report(InterfaceState::zeros(InterfaceLayout::single(0)), e),
            }
        }
    };
    let outcome = RunOutcome {
        spec: spec.clone(),
        report,
        true_error,
        e_max,
        wall_time: start.elapsed().as_secs_f64(),
    };
    match outcome.failure_message() {
        Some(msg) => warn!("{} ({}) aborted: {msg}", spec.id, spec.label()),
        None => info!(
            "{} ({}): converged = {}, iterations = {}",
            spec.id,
            spec.label(),
            outcome.report.converged,
            outcome.report.iterations
        ),
    }
    outcome
}

fn references_for(runs: &[RunSpec]) -> References {
    let mut configs: BTreeMap<usize, ElasticityConfig> = BTreeMap::new();
    for r in runs {
        if let Some(c) = r.elasticity {
            configs.entry(c.n_dd).or_insert(c);
        }
    }
    let configs: Vec<(usize, ElasticityConfig)> = configs.into_iter().collect();
    configs
        .par_iter()
        .map(|(n, c)| (*n, monolithic_reference(c).map_err(|e| e.to_string())))
        .collect()
}

/// Runs every point of the sweep, in parallel, returning outcomes in sweep order.
/// Individual run failures are recorded, never propagated.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let specs = config.expand()?;
    let references = references_for(&specs);
    let runs: Vec<RunOutcome> = specs
        .par_iter()
        .map(|s| execute_run(s, &references))
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        runs,
    })
}

/// Runs the sweep and writes `iterations.csv`, `errors.csv`, `emax.csv`,
/// `trace_<run>.csv`, `timings.csv`, `failures.csv` and `summary.json` into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentResult> {
    let result = execute(config)?;
    write_outputs(&result, out_dir)?;
    Ok(result)
}

/// Like [`run_experiment`], plus `comparison.csv` and `comparison_timing.csv`
/// with one row per sweep point and method.
pub fn compare_methods(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentResult> {
    let result = run_experiment(config, out_dir)?;
    write_comparison(&result, out_dir)?;
    Ok(result)
}

const PARAM_HEADER: [&str; 19] = [
    "run",
    "backend",
    "x_bar",
    "n_points",
    "g_init",
    "n_dd",
    "nx",
    "ny",
    "method",
    "rho",
    "rho_init",
    "n0",
    "m_and",
    "memory_adaptation",
    "m_bar",
    "eps_and",
    "eps_abs",
    "eps_rel",
    "maxit",
];

/// Floats are written in scientific notation with 16 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.15e}")
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn param_fields(spec: &RunSpec) -> Vec<String> {
    let a = &spec.accelerator;
    let is = |k: AcceleratorKind| a.kind == k;
    let uses_rho = is(AcceleratorKind::Classical) || is(AcceleratorKind::Anderson);
    let aitken = is(AcceleratorKind::Aitken);
    let anderson = is(AcceleratorKind::Anderson);
    let adaptive = anderson && a.memory_adaptation;
    vec![
        spec.id.clone(),
        spec.backend.to_string(),
        opt(spec.laplace.map(|l| l.x_bar), fmt_f64),
        opt(spec.laplace.map(|l| l.n_points), |n| n.to_string()),
        opt(spec.laplace.map(|l| l.g_init), fmt_f64),
        opt(spec.elasticity.map(|e| e.n_dd), |n| n.to_string()),
        opt(spec.elasticity.map(|e| e.nx), |n| n.to_string()),
        opt(spec.elasticity.map(|e| e.ny), |n| n.to_string()),
        a.kind.to_string(),
        opt(uses_rho.then_some(a.rho), fmt_f64),
        opt(aitken.then_some(a.rho_init), fmt_f64),
        opt(aitken.then_some(a.n0), |n| n.to_string()),
        opt(anderson.then_some(a.m_and), |n| n.to_string()),
        opt(anderson.then_some(a.memory_adaptation), |b| b.to_string()),
        opt(adaptive.then_some(a.m_bar), |n| n.to_string()),
        opt(adaptive.then_some(a.eps_and), fmt_f64),
        fmt_f64(spec.criteria.eps_abs),
        fmt_f64(spec.criteria.eps_rel),
        spec.criteria.maxit.to_string(),
    ]
}

fn writer(path: &Path, extra: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<&str> = PARAM_HEADER.iter().chain(extra).copied().collect();
    w.write_record(&header)?;
    Ok(w)
}

fn row(spec: &RunSpec, extra: Vec<String>) -> Vec<String> {
    let mut r = param_fields(spec);
    r.extend(extra);
    r
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

fn write_trace(run: &RunOutcome, path: &Path) -> Result<()> {
    let mut w = writer(path, &["k", "e_abs", "e_rel", "rho_used", "m_k", "alpha"])?;
    for rec in &run.report.records {
        w.write_record(row(
            &run.spec,
            vec![
                rec.k.to_string(),
                fmt_f64(rec.e_abs),
                fmt_f64(rec.e_rel),
                join(&rec.rho_used),
                opt(rec.m_k, |m| m.to_string()),
                rec.alpha.as_deref().map(join).unwrap_or_default(),
            ],
        ))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    run: &'a str,
    label: String,
    converged: bool,
    aborted: bool,
    iterations: usize,
    trace: String,
}

#[derive(Serialize)]
struct Environment {
    package: &'static str,
    version: &'static str,
    os: &'static str,
    arch: &'static str,
    threads: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    config: &'a ExperimentConfig,
    environment: Environment,
    runs: Vec<RunSummary<'a>>,
}

fn trace_name(spec: &RunSpec) -> String {
    format!("trace_{}.csv", spec.id)
}

pub fn write_outputs(result: &ExperimentResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;

    let mut it = writer(
        &out_dir.join("iterations.csv"),
        &["converged", "aborted", "iterations"],
    )?;
    let mut er = writer(
        &out_dir.join("errors.csv"),
        &["e_abs", "e_rel", "true_error", "e_max"],
    )?;
    let mut em = writer(&out_dir.join("emax.csv"), &["subdomain", "e_max"])?;
    for run in &result.runs {
        let r = &run.report;
        it.write_record(row(
            &run.spec,
            vec![
                r.converged.to_string(),
                r.aborted().to_string(),
                r.iterations.to_string(),
            ],
        ))?;
        let last = r.last();
        er.write_record(row(
            &run.spec,
            vec![
                opt(last.map(|l| l.e_abs), fmt_f64),
                opt(last.map(|l| l.e_rel), fmt_f64),
                opt(run.true_error, fmt_f64),
                opt(run.max_e_max(), fmt_f64),
            ],
        ))?;
        for (i, e) in run.e_max.iter().enumerate() {
            em.write_record(row(&run.spec, vec![(i + 1).to_string(), fmt_f64(*e)]))?;
        }
        write_trace(run, &out_dir.join(trace_name(&run.spec)))?;
    }
    it.flush()?;
    er.flush()?;
    em.flush()?;

    let mut tm = csv::Writer::from_path(out_dir.join("timings.csv"))?;
    tm.write_record([
        "run",
        "method",
        "iterations",
        "total_seconds",
        "mean_iteration_seconds",
    ])?;
    for run in &result.runs {
        tm.write_record([
            run.spec.id.clone(),
            run.spec.accelerator.label(),
            run.report.iterations.to_string(),
            fmt_f64(run.wall_time),
            fmt_f64(run.mean_iteration_time()),
        ])?;
    }
    tm.flush()?;

    let mut fl = csv::Writer::from_path(out_dir.join("failures.csv"))?;
    fl.write_record(["run", "label", "error"])?;
    for run in result.failures() {
        fl.write_record([
            run.spec.id.clone(),
            run.spec.label(),
            run.failure_message().unwrap_or_default(),
        ])?;
    }
    fl.flush()?;

    let summary = Summary {
        name: &result.config.name,
        config: &result.config,
        environment: Environment {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
        },
        runs: result
            .runs
            .iter()
            .map(|r| RunSummary {
                run: &r.spec.id,
                label: r.spec.label(),
                converged: r.report.converged,
                aborted: r.report.aborted(),
                iterations: r.report.iterations,
                trace: trace_name(&r.spec),
            })
            .collect(),
    };
    let json =
        serde_json::to_string_pretty(&summary).map_err(|e| SchwarzError::Parse(e.to_string()))?;
    std::fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(())
}

pub fn write_comparison(result: &ExperimentResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut w = writer(
        &out_dir.join("comparison.csv"),
        &[
            "label",
            "converged",
            "aborted",
            "iterations",
            "e_abs",
            "e_max",
            "e_max_per_subdomain",
        ],
    )?;
    for run in &result.runs {
        let r = &run.report;
        w.write_record(row(
            &run.spec,
            vec![
                run.spec.accelerator.label(),
                r.converged.to_string(),
                r.aborted().to_string(),
                r.iterations.to_string(),
                opt(r.last().map(|l| l.e_abs), fmt_f64),
                opt(run.max_e_max(), fmt_f64),
                join(&run.e_max),
            ],
        ))?;
    }
    w.flush()?;

    let mut t = csv::Writer::from_path(out_dir.join("comparison_timing.csv"))?;
    t.write_record([
        "run",
        "label",
        "iterations",
        "mean_iteration_seconds",
        "total_seconds",
    ])?;
    for run in &result.runs {
        t.write_record([
            run.spec.id.clone(),
            run.spec.label(),
            run.report.iterations.to_string(),
            fmt_f64(run.mean_iteration_time()),
            fmt_f64(run.wall_time),
        ])?;
    }
    t.flush()?;
    Ok(())
}
