//! Config-driven sweeps behind the `chainglue` binary.
//!
//! Every command writes one or more CSV files whose rows carry the config hash,
//! plus a `meta.json` holding timings and timestamps so that the CSV bodies are
//! reproducible byte for byte.

pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{AlphaSpec, ExperimentConfig, GammaUnits, StepKind, StepsConfig};

use crate::adiabatic::{error_certificate, evolve_converged, evolve_path, qa_provider, transported_reference, uniform_grid, HamiltonianPath, LinearPath, Schedule};
use crate::chain::{ChainFamily, SupportInterval};
use crate::circuit::{apply_circuit_dense, fidelity, phase_distance};
use crate::error::{Error, Result};
use crate::filter::make_filter;
use crate::gluing::stage::scaled_gamma;
use crate::gluing::{iterate_gluing, split, truncation_distance, unitary_truncation_check, Alpha, EngineParams};
use crate::linalg;
use crate::locality::{attach_bounds, fit_lr_constants, lr_commutator_scan_with, LrProbe};
use crate::oracle::{eigendecompose, ground_and_gap};

/// Bumped whenever a CSV column is added, removed or reordered.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Glue,
    Certify,
    Truncation,
    Lr,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Glue => "glue",
            Command::Certify => "certify",
            Command::Truncation => "truncation",
            Command::Lr => "lr",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub jobs: usize,
    pub cap: usize,
}

#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub rows: usize,
    pub config_hash: String,
    /// First cell failure; the rows of failed cells are flagged in the CSV.
    pub failure: Option<Error>,
}

/// Process exit code for an error: 2 for configuration and validation
/// problems, 3 for numerical failures (gap, sweep, fit), 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::OverCap { .. } | Error::Dimension(_) => 2,
        Error::Degenerate { .. }
        | Error::GapCollapse { .. }
        | Error::AncillaProjection { .. }
        | Error::Endpoint { .. }
        | Error::Fit(_)
        | Error::Stage { .. }
        | Error::Eigensolver(_)
        | Error::NotHermitian { .. } => 3,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
    }
}

fn is_cell_failure(err: &Error) -> bool {
    exit_code(err) == 3
}

/// Run `f` on every cell index with `jobs` workers; results are in index order.
fn par_cells<T: Send>(jobs: usize, count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(&f).collect()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    config_hash: &'a str,
    csv_schema_version: u32,
    seed: u64,
    cap: usize,
    jobs: usize,
    started_at: String,
    finished_at: String,
    runtime_ms: f64,
    cell_runtime_ms: Vec<f64>,
    rows: usize,
    status: String,
    files: Vec<String>,
}

struct Outcome {
    files: Vec<PathBuf>,
    rows: usize,
    cell_ms: Vec<f64>,
    failure: Option<Error>,
}

/// Execute a command and write its outputs under `opts.out`.
pub fn run(command: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    std::fs::create_dir_all(&opts.out)?;
    let hash = cfg.hash(opts.cap);
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let outcome = match command {
        Command::Glue => cmd_glue(cfg, opts, &hash)?,
        Command::Certify => cmd_certify(cfg, opts, &hash)?,
        Command::Truncation => cmd_truncation(cfg, opts, &hash)?,
        Command::Lr => cmd_lr(cfg, opts, &hash)?,
    };
    let meta = Meta {
        command: command.name(),
        config_hash: &hash,
        csv_schema_version: CSV_SCHEMA_VERSION,
        seed: cfg.seed,
        cap: opts.cap,
        jobs: opts.jobs,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        runtime_ms: clock.elapsed().as_secs_f64() * 1e3,
        cell_runtime_ms: outcome.cell_ms,
        rows: outcome.rows,
        status: outcome.failure.as_ref().map_or("ok".to_string(), |e| format!("partial: {e}")),
        files: outcome.files.iter().map(|p| p.display().to_string()).collect(),
    };
    let meta_path = opts.out.join("meta.json");
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    let mut files = outcome.files;
    files.push(meta_path);
    Ok(RunSummary {
        files,
        rows: outcome.rows,
        config_hash: hash,
        failure: outcome.failure,
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64() * 1e3)
}

/// `γ` for a grid entry, given `|x|·ΔE` of the relevant seam.
fn resolve_gamma(cfg: &ExperimentConfig, value: f64, x_gap: impl FnOnce() -> Result<f64>) -> Result<(f64, Option<f64>)> {
    match cfg.gamma_units {
        GammaUnits::Absolute => Ok((value, None)),
        GammaUnits::GapScaled => Ok((scaled_gamma(value, x_gap()?, 1.0), Some(value))),
    }
}

#[derive(Serialize)]
struct GlueRow {
    experiment: &'static str,
    cell: usize,
    gamma: f64,
    gamma_scale: Option<f64>,
    alpha: String,
    filter: String,
    stages: usize,
    fidelity: Option<f64>,
    measured_error: Option<f64>,
    sweep_infidelity: Option<f64>,
    min_ancilla_weight: Option<f64>,
    max_steps: Option<usize>,
    error_bound: Option<f64>,
    gap: Option<f64>,
    x_used: Option<f64>,
    status: String,
    config_hash: String,
}

fn cmd_glue(cfg: &ExperimentConfig, opts: &RunOptions, hash: &str) -> Result<Outcome> {
    crate::chain::check_cap(cfg.n, opts.cap)?;
    let exact = ground_and_gap(&cfg.model.build(cfg.n, opts.cap)?.dense)?.require_gapped()?.state;
    let x_gap = || -> Result<f64> {
        let s = split(&cfg.model, 2 * cfg.m, cfg.m, opts.cap)?;
        Ok(s.overlap().norm() * s.delta_e())
    };
    let mut gammas = Vec::new();
    for &g in &cfg.gamma_grid {
        gammas.push(resolve_gamma(cfg, g, x_gap)?);
    }
    let cells: Vec<(f64, Option<f64>, AlphaSpec)> = gammas
        .iter()
        .flat_map(|&(g, c)| cfg.alpha_grid.iter().map(move |&a| (g, c, a)))
        .collect();
    let lr = cfg.lr_constants();
    let results = par_cells(opts.jobs, cells.len(), |i| {
        let (gamma, scale, alpha) = cells[i];
        timed(|| -> Result<(GlueRow, Option<Error>)> {
            let params = EngineParams {
                gamma,
                alpha: alpha.0,
                filter_kind: cfg.filter_kind,
                steps: cfg.steps.policy(),
                order: cfg.steps.order,
            };
            let mut row = GlueRow {
                experiment: "glue",
                cell: i,
                gamma,
                gamma_scale: scale,
                alpha: alpha.to_string(),
                filter: cfg.filter_kind.to_string(),
                stages: 0,
                fidelity: None,
                measured_error: None,
                sweep_infidelity: None,
                min_ancilla_weight: None,
                max_steps: None,
                error_bound: None,
                gap: None,
                x_used: None,
                status: "ok".into(),
                config_hash: hash.to_string(),
            };
            let circuit = match iterate_gluing(&cfg.model, cfg.m, cfg.n, &params, &lr, opts.cap) {
                Ok(c) => c,
                Err(e) if is_cell_failure(&e) => {
                    if let Error::Stage { prefix, .. } = &e {
                        row.stages = prefix.stages.len();
                    }
                    row.status = format!("failed: {e}");
                    return Ok((row, Some(e)));
                }
                Err(e) => return Err(e),
            };
            let psi = apply_circuit_dense(&circuit, opts.cap)?;
            row.stages = circuit.stages.len();
            row.fidelity = Some(fidelity(&exact, &psi)?);
            row.measured_error = Some(phase_distance(&exact, &psi)?);
            let reports = circuit.stages.iter().map(|s| &s.report);
            row.sweep_infidelity = reports.clone().map(|r| 1.0 - r.sweep_fidelity).reduce(f64::max);
            row.min_ancilla_weight = reports.clone().map(|r| r.ancilla_weight).reduce(f64::min);
            row.max_steps = reports.map(|r| r.steps).max();
            if let Some(b) = &circuit.budget {
                row.error_bound = Some(b.total);
                row.gap = Some(b.delta_e);
                row.x_used = Some(b.x);
            }
            Ok((row, None))
        })
    })?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut cell_ms = Vec::new();
    for (r, ms) in results {
        let (row, err) = r?;
        rows.push(row);
        failures.push(err);
        cell_ms.push(ms);
    }
    let failure = failures.into_iter().flatten().next();
    let path = opts.out.join("glue.csv");
    write_csv(&path, &rows)?;
    Ok(Outcome {
        files: vec![path],
        rows: rows.len(),
        cell_ms,
        failure,
    })
}

#[derive(Serialize)]
struct CertifyRow {
    experiment: &'static str,
    cell: usize,
    gamma: f64,
    filter: String,
    eta_star: f64,
    f_star: f64,
    bound: f64,
    measured_error: f64,
    phase_distance: f64,
    gap: f64,
    steps: usize,
    certified: bool,
    config_hash: String,
}

/// Slack allowed when comparing a measured error with its certificate.
pub const CERTIFY_SLACK: f64 = 1e-7;

fn cmd_certify(cfg: &ExperimentConfig, opts: &RunOptions, hash: &str) -> Result<Outcome> {
    let c = cfg
        .certify
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("the certify command needs a [certify] section".into()))?;
    let path = LinearPath::field_ramp(&cfg.model, c.n, c.field_start, c.field_end, opts.cap)?;
    let grid = uniform_grid(c.grid_points);
    let start = ground_and_gap(&path.hamiltonian(0.0))?.require_gapped()?.state;
    let reference = transported_reference(&path, c.reference_steps)?;
    let min_gap = grid
        .iter()
        .map(|&s| eigendecompose(&path.hamiltonian(s)).map(|d| d.gap()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut gammas = Vec::new();
    for &g in &cfg.gamma_grid {
        gammas.push(resolve_gamma(cfg, g, || Ok(min_gap))?.0);
    }
    let results = par_cells(opts.jobs, gammas.len(), |i| {
        timed(|| -> Result<CertifyRow> {
            let filter = make_filter(cfg.filter_kind, gammas[i])?;
            let cert = error_certificate(&path, &filter, &grid)?;
            let (u, steps) = match cfg.steps.policy {
                StepKind::Fixed => (
                    evolve_path(&mut qa_provider(&path, &filter), path.dim(), Schedule { steps: cfg.steps.steps, order: cfg.steps.order })?,
                    cfg.steps.steps,
                ),
                StepKind::Converge => {
                    let ev = evolve_converged(&mut qa_provider(&path, &filter), path.dim(), cfg.steps.order, cfg.steps.convergence(), &start, &reference)?;
                    (ev.unitary, ev.steps)
                }
            };
            let phi = &u * &start;
            let measured = linalg::norm(&(&phi - &reference));
            Ok(CertifyRow {
                experiment: "certify",
                cell: i,
                gamma: gammas[i],
                filter: cfg.filter_kind.to_string(),
                eta_star: cert.eta_star,
                f_star: cert.f_star,
                bound: cert.bound,
                measured_error: measured,
                phase_distance: phase_distance(&reference, &phi)?,
                gap: cert.delta_gap,
                steps,
                certified: measured <= cert.bound + CERTIFY_SLACK,
                config_hash: hash.to_string(),
            })
        })
    })?;
    let mut rows = Vec::new();
    let mut cell_ms = Vec::new();
    for (r, ms) in results {
        rows.push(r?);
        cell_ms.push(ms);
    }
    let failure = rows.iter().find(|r| !r.certified).map(|r| {
        Error::Fit(format!(
            "cell {}: measured error {:.3e} exceeds the certificate {:.3e}",
            r.cell, r.measured_error, r.bound
        ))
    });
    let out = opts.out.join("certify.csv");
    write_csv(&out, &rows)?;
    Ok(Outcome {
        files: vec![out],
        rows: rows.len(),
        cell_ms,
        failure,
    })
}

#[derive(Serialize)]
struct TruncationCsvRow {
    experiment: &'static str,
    cell: usize,
    gamma: f64,
    s: f64,
    alpha: String,
    distance: f64,
    config_hash: String,
}

#[derive(Serialize)]
struct UnitaryCsvRow {
    experiment: &'static str,
    cell: usize,
    gamma: f64,
    alpha: String,
    unitary_distance: f64,
    integral_bound: f64,
    holds: bool,
    config_hash: String,
}

fn alpha_label(a: Option<usize>) -> String {
    a.map_or("full".to_string(), |a| a.to_string())
}

fn cmd_truncation(cfg: &ExperimentConfig, opts: &RunOptions, hash: &str) -> Result<Outcome> {
    let t = cfg
        .truncation
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("the truncation command needs a [truncation] section".into()))?;
    crate::chain::check_cap(cfg.n, opts.cap)?;
    let sys = split(&cfg.model, cfg.n, cfg.m, opts.cap)?;
    let mut alphas: Vec<Alpha> = cfg.alpha_grid.iter().map(|a| a.0).collect();
    alphas.sort_by_key(|a| a.radius().unwrap_or(usize::MAX));
    alphas.dedup();
    let mut gammas = Vec::new();
    for &g in &cfg.gamma_grid {
        gammas.push(resolve_gamma(cfg, g, || Ok(sys.overlap().norm() * sys.delta_e()))?.0);
    }
    let results = par_cells(opts.jobs, gammas.len(), |i| {
        timed(|| -> Result<(Vec<TruncationCsvRow>, Vec<UnitaryCsvRow>)> {
            let rows = truncation_distance(&sys, &t.s_grid, gammas[i], &alphas, cfg.filter_kind)?
                .into_iter()
                .map(|r| TruncationCsvRow {
                    experiment: "truncation",
                    cell: i,
                    gamma: gammas[i],
                    s: r.s,
                    alpha: alpha_label(r.alpha),
                    distance: r.distance,
                    config_hash: hash.to_string(),
                })
                .collect();
            let unitary = if t.unitary_steps > 0 {
                unitary_truncation_check(&sys, gammas[i], &alphas, t.unitary_steps, cfg.filter_kind)?
                    .into_iter()
                    .map(|r| UnitaryCsvRow {
                        experiment: "truncation_unitary",
                        cell: i,
                        gamma: gammas[i],
                        alpha: alpha_label(r.alpha),
                        unitary_distance: r.unitary_distance,
                        integral_bound: r.integral_bound,
                        holds: r.unitary_distance <= r.integral_bound + 1e-12,
                        config_hash: hash.to_string(),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            Ok((rows, unitary))
        })
    })?;
    let mut rows = Vec::new();
    let mut unitary = Vec::new();
    let mut cell_ms = Vec::new();
    for (r, ms) in results {
        let (a, b) = r?;
        rows.extend(a);
        unitary.extend(b);
        cell_ms.push(ms);
    }
    let path = opts.out.join("truncation.csv");
    write_csv(&path, &rows)?;
    let mut files = vec![path];
    if t.unitary_steps > 0 {
        let p = opts.out.join("truncation_unitary.csv");
        write_csv(&p, &unitary)?;
        files.push(p);
    }
    Ok(Outcome {
        files,
        rows: rows.len() + unitary.len(),
        cell_ms,
        failure: None,
    })
}

#[derive(Serialize)]
struct LrCsvRow {
    t: f64,
    distance: usize,
    commutator_norm: f64,
    bound_value: Option<f64>,
    config_hash: String,
}

#[derive(Serialize)]
struct LrConstantsFile<'a> {
    v: f64,
    kappa_lr: f64,
    residual: f64,
    samples_used: usize,
    config_hash: &'a str,
}

fn cmd_lr(cfg: &ExperimentConfig, opts: &RunOptions, hash: &str) -> Result<Outcome> {
    let l = cfg.lr.as_ref().ok_or_else(|| Error::InvalidArgument("the lr command needs an [lr] section".into()))?;
    let n = l.n.unwrap_or(cfg.n);
    let h = cfg.model.build(n, opts.cap)?;
    let probe = LrProbe::sigma_z(l.a_site);
    for &d in &l.d_grid {
        probe.b_support(d, n)?;
    }
    SupportInterval::new(l.a_site, l.a_site, n)?;
    let decomp = eigendecompose(&h.dense)?;
    let results = par_cells(opts.jobs, l.t_grid.len(), |i| timed(|| lr_commutator_scan_with(&decomp, n, &probe, &[l.t_grid[i]], &l.d_grid)))?;
    let mut samples = Vec::new();
    let mut cell_ms = Vec::new();
    for (r, ms) in results {
        samples.extend(r?);
        cell_ms.push(ms);
    }
    let mut files = Vec::new();
    let fit = fit_lr_constants(&samples);
    if let Ok(f) = &fit {
        attach_bounds(&mut samples, &f.constants);
        let p = opts.out.join("lr_constants.json");
        let doc = LrConstantsFile {
            v: f.constants.v,
            kappa_lr: f.constants.kappa_lr,
            residual: f.residual,
            samples_used: f.samples_used,
            config_hash: hash,
        };
        std::fs::write(&p, serde_json::to_string_pretty(&doc)?)?;
        files.push(p);
    }
    let rows: Vec<LrCsvRow> = samples
        .iter()
        .map(|s| LrCsvRow {
            t: s.t,
            distance: s.distance,
            commutator_norm: s.commutator_norm,
            bound_value: s.bound_value,
            config_hash: hash.to_string(),
        })
        .collect();
    let path = opts.out.join("lr.csv");
    write_csv(&path, &rows)?;
    files.insert(0, path);
    Ok(Outcome {
        files,
        rows: rows.len(),
        cell_ms,
        failure: fit.err(),
    })
}
