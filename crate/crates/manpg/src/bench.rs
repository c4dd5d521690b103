//! Benchmark harness: reproduces the synthetic sparse PCA and sparse CCA
//! experiment protocols and renders the results as CSV or Markdown tables.
//!
//! Every numeric output except the CPU columns is deterministic given the
//! configuration and master seed: repetition k draws its streams from
//! [`derive_seed`]`(seed, 4k + purpose)`, so runs reproduce regardless of
//! `--threads`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{ama_spca, palm_spca, vp_spca, BaselineOptions};
use crate::error::{Error, Result};
use crate::experiments::{
    build_covariance, canonical_correlations, center_columns, derive_seed, gen_canonical_truth,
    gen_cca_data, gen_spca_data, loss_subspace, loss_vector, read_matrix_csv, sparsity_stats,
    CcaTruth, CovarianceKind, SPARSITY_THRESHOLD,
};
use crate::linalg::{self, Mat};
use crate::penalty::Penalty;
use crate::problems::{scca_init, scca_problem, spca_init, spca_problem, SccaConfig, SpcaConfig};
use crate::solver::{amanpg, Mode, SolverOptions, SolverTrace, SPCA_OBJ_CHANGE_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Algorithm {
    AManPg,
    ManPgJacobi,
    Ama,
    Palm,
    Vp,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "amanpg" => Ok(Algorithm::AManPg),
            "manpg-jacobi" => Ok(Algorithm::ManPgJacobi),
            "ama" => Ok(Algorithm::Ama),
            "palm" => Ok(Algorithm::Palm),
            "vp" => Ok(Algorithm::Vp),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected amanpg, manpg-jacobi, ama, palm, vp)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::AManPg => "amanpg",
            Algorithm::ManPgJacobi => "manpg-jacobi",
            Algorithm::Ama => "ama",
            Algorithm::Palm => "palm",
            Algorithm::Vp => "vp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TableFormat {
    Csv,
    Md,
}

impl TableFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "md" => Ok(TableFormat::Md),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

/// Which benchmark a row belongs to; fixes the emitted column set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    Spca,
    SccaVector,
    SccaMatrix,
}

/// Median-over-repetitions summary of one algorithm/penalty setting.
/// Fields not applicable to the experiment stay `None` and render empty.
#[derive(Clone, Debug, Default)]
pub struct ResultRow {
    pub algorithm: String,
    pub b: Option<f64>,
    /// Marks the best-b row of the vector CCA protocol.
    pub best: Option<bool>,
    pub objective: Option<f64>,
    /// Percent of zero entries of B.
    pub sparsity: Option<f64>,
    pub cpu_seconds: f64,
    pub iterations: Option<u64>,
    pub loss_u: Option<f64>,
    pub loss_v: Option<f64>,
    pub nnz_a: Option<u64>,
    pub nnz_b: Option<u64>,
    pub rho: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpcaBenchConfig {
    pub n: usize,
    pub p: usize,
    pub r: usize,
    pub mu: f64,
    pub mu1: f64,
    pub reps: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub threads: usize,
    /// Optional external dataset (headerless CSV of rows); columns are
    /// centered on load and the generator sizes are ignored.
    pub data_csv: Option<PathBuf>,
}

impl SpcaBenchConfig {
    pub fn new(n: usize, p: usize, r: usize, mu: f64, mu1: f64) -> Self {
        SpcaBenchConfig {
            n,
            p,
            r,
            mu,
            mu1,
            reps: 20,
            seed: 2024,
            algorithms: vec![Algorithm::Ama, Algorithm::AManPg, Algorithm::Palm, Algorithm::Vp],
            threads: 1,
            data_csv: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SccaBenchConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub covariance: CovarianceKind,
    pub b_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
    pub data_x_csv: Option<PathBuf>,
    pub data_y_csv: Option<PathBuf>,
}

impl SccaBenchConfig {
    /// Vector-case defaults: r = 1, b ∈ {1, 1.2, 1.4, 1.6}.
    pub fn vector(n: usize, p: usize, q: usize) -> Self {
        SccaBenchConfig {
            n,
            p,
            q,
            r: 1,
            covariance: CovarianceKind::Identity,
            b_grid: vec![1.0, 1.2, 1.4, 1.6],
            reps: 20,
            seed: 2024,
            threads: 1,
            data_x_csv: None,
            data_y_csv: None,
        }
    }

    /// Matrix-case defaults: r = 2, b ∈ {0.8, 1, 1.2, 1.4, 1.6}.
    pub fn matrix(n: usize, p: usize, q: usize) -> Self {
        SccaBenchConfig {
            r: 2,
            b_grid: vec![0.8, 1.0, 1.2, 1.4, 1.6],
            ..SccaBenchConfig::vector(n, p, q)
        }
    }
}

/// True canonical correlations by pair count: 0.9 for the vector problem,
/// (0.9, 0.8) for the matrix problem.
pub fn planted_correlations(r: usize) -> Result<Array1<f64>> {
    match r {
        1 => Ok(ndarray::array![0.9]),
        2 => Ok(ndarray::array![0.9, 0.8]),
        other => Err(Error::Config(format!(
            "no planted-correlation protocol for r = {other} (expected 1 or 2)"
        ))),
    }
}

fn lower_median_f64(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

fn lower_median_u64(values: &[u64]) -> u64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}

fn run_reps<T: Send, F: Fn(usize) -> Result<T> + Sync>(
    reps: usize,
    threads: usize,
    job: F,
) -> Result<Vec<T>> {
    if reps == 0 {
        return Err(Error::Config("reps must be positive".into()));
    }
    if threads <= 1 {
        (0..reps).map(job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| (0..reps).into_par_iter().map(|rep| job(rep)).collect())
    }
}

/// Solver options of the sparse PCA protocol: stop on |ΔF| < 1e-5, coupled
/// to a target objective when the PALM baseline ran first.
fn spca_solver_options(mode: Mode, target: Option<f64>) -> SolverOptions {
    SolverOptions {
        mode,
        eps_tol: 0.0,
        obj_change_tol: Some(SPCA_OBJ_CHANGE_TOL),
        obj_target: target,
        max_iter: 10_000,
        ..Default::default()
    }
}

/// Solver options of the CCA protocol: stop on max direction norm² ≤ 1e-8.
fn scca_solver_options() -> SolverOptions {
    SolverOptions {
        eps_tol: 1e-8,
        obj_change_tol: None,
        max_iter: 10_000,
        ..Default::default()
    }
}

fn verify_amanpg_trace(trace: &SolverTrace, opts: &SolverOptions) -> Result<()> {
    trace.verify_descent(opts.delta)?;
    trace.verify_iteration_bound(opts.delta, opts.eps_tol)?;
    trace.verify_feasibility(1e-10)?;
    Ok(())
}

#[derive(Clone, Copy)]
struct SpcaStats {
    objective: f64,
    sparsity: f64,
    cpu: f64,
    iterations: u64,
}

fn load_spca_data(cfg: &SpcaBenchConfig, rep: usize) -> Result<Mat> {
    match &cfg.data_csv {
        Some(path) => {
            let mut x = read_matrix_csv(path)?;
            center_columns(&mut x);
            Ok(x)
        }
        None => Ok(gen_spca_data(cfg.n, cfg.p, derive_seed(cfg.seed, 4 * rep as u64))),
    }
}

fn spca_rep(cfg: &SpcaBenchConfig, rep: usize) -> Result<Vec<SpcaStats>> {
    let x = load_spca_data(cfg, rep)?;
    // the tables report F without the constant ‖X‖²_F term
    let offset = linalg::fro_sq(&x);
    let spca_cfg = SpcaConfig::uniform(x, cfg.r, cfg.mu, cfg.mu1)?;
    let init = spca_init(&spca_cfg)?;

    // the protocol runs PALM first and couples the other stopping rules
    // to its final objective
    let palm_run = if cfg.algorithms.contains(&Algorithm::Palm) {
        let opts = BaselineOptions::default();
        let t0 = Instant::now();
        let (_, b, trace) = palm_spca(&spca_cfg, (&init.0, &init.1), &opts)?;
        let cpu = t0.elapsed().as_secs_f64();
        trace.verify_feasibility(1e-10)?;
        Some((trace.final_objective(), stats_of(&trace, &b, offset, cpu)))
    } else {
        None
    };
    let target = palm_run.as_ref().map(|(f, _)| *f);

    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for alg in &cfg.algorithms {
        let stats = match alg {
            Algorithm::Palm => palm_run.as_ref().expect("palm ran first").1,
            Algorithm::Ama => {
                let opts = BaselineOptions {
                    obj_target: target,
                    ..BaselineOptions::ama()
                };
                let t0 = Instant::now();
                let (_, b, trace) = ama_spca(&spca_cfg, (&init.0, &init.1), &opts)?;
                let cpu = t0.elapsed().as_secs_f64();
                trace.verify_feasibility(1e-10)?;
                stats_of(&trace, &b, offset, cpu)
            }
            Algorithm::Vp => {
                let opts = BaselineOptions {
                    obj_target: target,
                    ..Default::default()
                };
                let t0 = Instant::now();
                let (_, b, trace) = vp_spca(&spca_cfg, (&init.0, &init.1), &opts)?;
                let cpu = t0.elapsed().as_secs_f64();
                trace.verify_feasibility(1e-10)?;
                stats_of(&trace, &b, offset, cpu)
            }
            Algorithm::AManPg | Algorithm::ManPgJacobi => {
                let mode = if *alg == Algorithm::AManPg {
                    Mode::GaussSeidel
                } else {
                    Mode::Jacobi
                };
                let problem = spca_problem(&spca_cfg)?;
                let opts = spca_solver_options(mode, target);
                let t0 = Instant::now();
                let (_, b, trace) = amanpg(&problem, &init.0, &init.1, &opts)?;
                let cpu = t0.elapsed().as_secs_f64();
                verify_amanpg_trace(&trace, &opts)?;
                stats_of(&trace, &b, offset, cpu)
            }
        };
        out.push(stats);
    }
    Ok(out)
}

fn stats_of(trace: &SolverTrace, b: &Mat, offset: f64, cpu: f64) -> SpcaStats {
    SpcaStats {
        objective: trace.final_objective() - offset,
        sparsity: sparsity_stats(b, SPARSITY_THRESHOLD).0,
        cpu,
        iterations: trace.iterations.len() as u64,
    }
}

/// Run the sparse PCA benchmark: one row per algorithm with the median
/// objective (reported without the constant ‖X‖² term), sparsity percent,
/// CPU seconds, and iteration count over the repetitions.
pub fn run_spca(cfg: &SpcaBenchConfig) -> Result<Vec<ResultRow>> {
    if cfg.algorithms.is_empty() {
        return Err(Error::Config("no algorithms selected".into()));
    }
    let reps = if cfg.data_csv.is_some() { 1 } else { cfg.reps };
    let all = run_reps(reps, cfg.threads, |rep| spca_rep(cfg, rep))?;

    let mut rows = Vec::new();
    for (i, alg) in cfg.algorithms.iter().enumerate() {
        let f: Vec<f64> = all.iter().map(|r| r[i].objective).collect();
        let sp: Vec<f64> = all.iter().map(|r| r[i].sparsity).collect();
        let cpu: Vec<f64> = all.iter().map(|r| r[i].cpu).collect();
        let iters: Vec<u64> = all.iter().map(|r| r[i].iterations).collect();
        rows.push(ResultRow {
            algorithm: alg.label().to_string(),
            objective: Some(lower_median_f64(&f)),
            sparsity: Some(lower_median_f64(&sp)),
            cpu_seconds: lower_median_f64(&cpu),
            iterations: Some(lower_median_u64(&iters)),
            ..Default::default()
        });
    }
    Ok(rows)
}

struct SccaRepStats {
    cpu: f64,
    loss_u: Option<f64>,
    loss_v: Option<f64>,
    nnz_a: u64,
    nnz_b: u64,
    rho: Vec<f64>,
    iterations: u64,
}

fn scca_penalty_weight(b: f64, p: usize, q: usize, n: usize) -> f64 {
    0.5 * b * (((p + q) as f64).ln() / n as f64).sqrt()
}

struct SccaData {
    x: Mat,
    y: Mat,
    truth: Option<CcaTruth>,
}

fn load_scca_data(cfg: &SccaBenchConfig, rep: usize) -> Result<SccaData> {
    match (&cfg.data_x_csv, &cfg.data_y_csv) {
        (Some(px), Some(py)) => {
            let scale = |mut m: Mat| {
                center_columns(&mut m);
                let n = m.nrows() as f64;
                m.mapv_inplace(|v| v / (n - 1.0).max(1.0).sqrt());
                m
            };
            let x = scale(read_matrix_csv(px)?);
            let y = scale(read_matrix_csv(py)?);
            if x.nrows() != y.nrows() {
                return Err(Error::Config("X and Y datasets disagree on sample count".into()));
            }
            Ok(SccaData { x, y, truth: None })
        }
        (None, None) => {
            let sigma_x = build_covariance(cfg.covariance, cfg.p)?;
            let sigma_y = build_covariance(cfg.covariance, cfg.q)?;
            let corr = planted_correlations(cfg.r)?;
            let truth = gen_canonical_truth(
                &sigma_x,
                &sigma_y,
                &corr,
                derive_seed(cfg.seed, 4 * rep as u64 + 1),
            )?;
            let (x, y) = gen_cca_data(
                cfg.n,
                &sigma_x,
                &sigma_y,
                &truth,
                derive_seed(cfg.seed, 4 * rep as u64 + 2),
            )?;
            Ok(SccaData { x, y, truth: Some(truth) })
        }
        _ => Err(Error::Config("provide both --data-x and --data-y or neither".into())),
    }
}

fn scca_rep(cfg: &SccaBenchConfig, rep: usize, matrix_loss: bool) -> Result<Vec<SccaRepStats>> {
    let data = load_scca_data(cfg, rep)?;
    let base = SccaConfig::new(data.x.clone(), data.y.clone(), cfg.r, 0.0, 0.0)?;
    let problem_base = scca_problem(&base)?;
    let init = scca_init(&base)?;
    let opts = scca_solver_options();

    let mut out = Vec::with_capacity(cfg.b_grid.len());
    for &b_val in &cfg.b_grid {
        let tau = scca_penalty_weight(b_val, data.x.ncols(), data.y.ncols(), data.x.nrows());
        let mut problem = problem_base.clone();
        problem.penalty_a = Penalty::row_l21(tau)?;
        problem.penalty_b = Penalty::row_l21(tau)?;
        let t0 = Instant::now();
        let (a, bm, trace) = amanpg(&problem, &init.a, &init.b, &opts)?;
        let cpu = t0.elapsed().as_secs_f64();
        verify_amanpg_trace(&trace, &opts)?;

        let (loss_u, loss_v) = match &data.truth {
            None => (None, None),
            Some(truth) => {
                if matrix_loss {
                    (
                        Some(loss_subspace(&truth.u, &a)?),
                        Some(loss_subspace(&truth.v, &bm)?),
                    )
                } else {
                    (
                        Some(loss_vector(
                            &truth.u.column(0).to_owned(),
                            &a.column(0).to_owned(),
                        )),
                        Some(loss_vector(
                            &truth.v.column(0).to_owned(),
                            &bm.column(0).to_owned(),
                        )),
                    )
                }
            }
        };
        out.push(SccaRepStats {
            cpu,
            loss_u,
            loss_v,
            nnz_a: sparsity_stats(&a, SPARSITY_THRESHOLD).1 as u64,
            nnz_b: sparsity_stats(&bm, SPARSITY_THRESHOLD).1 as u64,
            rho: canonical_correlations(&data.x, &data.y, &a, &bm).to_vec(),
            iterations: trace.iterations.len() as u64,
        });
    }
    Ok(out)
}

fn scca_rows(cfg: &SccaBenchConfig, matrix_loss: bool) -> Result<Vec<ResultRow>> {
    let reps = if cfg.data_x_csv.is_some() { 1 } else { cfg.reps };
    let all = run_reps(reps, cfg.threads, |rep| scca_rep(cfg, rep, matrix_loss))?;

    let mut rows = Vec::new();
    for (i, &b_val) in cfg.b_grid.iter().enumerate() {
        let med = |f: &dyn Fn(&SccaRepStats) -> Option<f64>| -> Option<f64> {
            let v: Vec<f64> = all.iter().filter_map(|r| f(&r[i])).collect();
            if v.is_empty() {
                None
            } else {
                Some(lower_median_f64(&v))
            }
        };
        let rho_len = all[0][i].rho.len();
        let rho: Vec<f64> = (0..rho_len)
            .map(|k| lower_median_f64(&all.iter().map(|r| r[i].rho[k]).collect::<Vec<_>>()))
            .collect();
        rows.push(ResultRow {
            algorithm: Algorithm::AManPg.label().to_string(),
            b: Some(b_val),
            cpu_seconds: lower_median_f64(&all.iter().map(|r| r[i].cpu).collect::<Vec<_>>()),
            loss_u: med(&|s| s.loss_u),
            loss_v: med(&|s| s.loss_v),
            nnz_a: Some(lower_median_u64(
                &all.iter().map(|r| r[i].nnz_a).collect::<Vec<_>>(),
            )),
            nnz_b: Some(lower_median_u64(
                &all.iter().map(|r| r[i].nnz_b).collect::<Vec<_>>(),
            )),
            rho,
            iterations: Some(lower_median_u64(
                &all.iter().map(|r| r[i].iterations).collect::<Vec<_>>(),
            )),
            ..Default::default()
        });
    }
    Ok(rows)
}

/// Vector sparse CCA benchmark: per-b median rows, with the row minimizing
/// median lossu + lossv flagged as the selected candidate.
pub fn run_scca_vec(cfg: &SccaBenchConfig) -> Result<Vec<ResultRow>> {
    if cfg.r != 1 {
        return Err(Error::Config("the vector benchmark requires r = 1".into()));
    }
    let mut rows = scca_rows(cfg, false)?;
    let best = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.loss_u.is_some())
        .min_by(|(_, a), (_, b)| {
            let la = a.loss_u.unwrap() + a.loss_v.unwrap();
            let lb = b.loss_u.unwrap() + b.loss_v.unwrap();
            la.total_cmp(&lb)
        })
        .map(|(i, _)| i);
    for (i, row) in rows.iter_mut().enumerate() {
        row.best = Some(Some(i) == best);
    }
    Ok(rows)
}

/// Matrix sparse CCA benchmark: per-b median rows with subspace losses and
/// both canonical correlations.
pub fn run_scca_mat(cfg: &SccaBenchConfig) -> Result<Vec<ResultRow>> {
    if cfg.r != 2 {
        return Err(Error::Config("the matrix benchmark requires r = 2".into()));
    }
    scca_rows(cfg, true)
}

fn columns(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Spca => &["alg", "F", "sp", "cpu", "iter"],
        ExperimentKind::SccaVector => &[
            "alg", "b", "best", "cpu", "lossu", "lossv", "rho", "nu", "nv", "iter",
        ],
        ExperimentKind::SccaMatrix => &[
            "alg", "b", "cpu", "lossu", "lossv", "nA", "nB", "rho1", "rho2", "iter",
        ],
    }
}

fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

fn opt_sig6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

fn opt_u64(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn cells(kind: ExperimentKind, row: &ResultRow) -> Vec<String> {
    match kind {
        ExperimentKind::Spca => vec![
            row.algorithm.clone(),
            opt_sig6(row.objective),
            row.sparsity.map(|v| format!("{v:.2}")).unwrap_or_default(),
            format!("{:.4}", row.cpu_seconds),
            opt_u64(row.iterations),
        ],
        ExperimentKind::SccaVector => vec![
            row.algorithm.clone(),
            row.b.map(|v| format!("{v}")).unwrap_or_default(),
            row.best.map(|v| (v as u8).to_string()).unwrap_or_default(),
            format!("{:.4}", row.cpu_seconds),
            opt_sig6(row.loss_u),
            opt_sig6(row.loss_v),
            row.rho.first().map(|v| sig6(*v)).unwrap_or_default(),
            opt_u64(row.nnz_a),
            opt_u64(row.nnz_b),
            opt_u64(row.iterations),
        ],
        ExperimentKind::SccaMatrix => vec![
            row.algorithm.clone(),
            row.b.map(|v| format!("{v}")).unwrap_or_default(),
            format!("{:.4}", row.cpu_seconds),
            opt_sig6(row.loss_u),
            opt_sig6(row.loss_v),
            opt_u64(row.nnz_a),
            opt_u64(row.nnz_b),
            row.rho.first().map(|v| sig6(*v)).unwrap_or_default(),
            row.rho.get(1).map(|v| sig6(*v)).unwrap_or_default(),
            opt_u64(row.iterations),
        ],
    }
}

fn render(kind: ExperimentKind, rows: &[ResultRow], format: TableFormat) -> String {
    let header = columns(kind);
    match format {
        TableFormat::Csv => {
            let mut out = header.join(",");
            out.push('\n');
            for row in rows {
                out.push_str(&cells(kind, row).join(","));
                out.push('\n');
            }
            out
        }
        TableFormat::Md => {
            let mut out = format!("| {} |\n", header.join(" | "));
            out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
            for row in rows {
                out.push_str(&format!("| {} |\n", cells(kind, row).join(" | ")));
            }
            out
        }
    }
}

/// Render the result table and, when a path is given, write it to disk along
/// with a sibling `<path>.config.json` echoing the full configuration.
/// Returns the rendered table either way.
pub fn emit(
    kind: ExperimentKind,
    rows: &[ResultRow],
    format: TableFormat,
    out_path: Option<&Path>,
    config_echo: Option<&str>,
) -> Result<String> {
    let table = render(kind, rows, format);
    if let Some(path) = out_path {
        std::fs::write(path, &table)?;
        if let Some(echo) = config_echo {
            let mut sibling = path.as_os_str().to_owned();
            sibling.push(".config.json");
            std::fs::write(PathBuf::from(sibling), echo)?;
        }
    }
    Ok(table)
}

/// Full configuration echo of a sparse PCA run, including the fixed solver
/// constants, as pretty JSON.
pub fn spca_config_echo(cfg: &SpcaBenchConfig) -> String {
    serde_json::to_string_pretty(&serde_json::json!({
        "command": "spca",
        "config": cfg,
        "protocol": {
            "delta": 1e-4,
            "gamma": 0.5,
            "obj_change_tol": SPCA_OBJ_CHANGE_TOL,
            "palm_max_iter": 10_000,
            "ama_max_iter": 1_000,
            "ama_fista_max_iter": 500,
            "ama_fista_tol": 1e-8,
            "amanpg_t1": "100/p",
            "amanpg_t2": "1/(2 lambda_max(X'X))",
            "sparsity_threshold": SPARSITY_THRESHOLD,
            "objective_offset": "reported F omits the constant ||X||_F^2 term",
            "median": "lower median over repetitions",
        },
    }))
    .expect("config serializes")
}

/// Full configuration echo of a sparse CCA run.
pub fn scca_config_echo(cfg: &SccaBenchConfig, matrix: bool) -> String {
    serde_json::to_string_pretty(&serde_json::json!({
        "command": if matrix { "scca-mat" } else { "scca-vec" },
        "config": cfg,
        "protocol": {
            "delta": 1e-4,
            "gamma": 0.5,
            "t1": 1.0,
            "t2": 1.0,
            "eps_tol": 1e-8,
            "ssn_tol": 1e-5,
            "alpha_metric": 1e-4,
            "tau": "0.5 * b * sqrt(log(p+q)/n)",
            "planted_correlations": if matrix { vec![0.9, 0.8] } else { vec![0.9] },
            "sparsity_threshold": SPARSITY_THRESHOLD,
            "median": "lower median over repetitions",
        },
    }))
    .expect("config serializes")
}
