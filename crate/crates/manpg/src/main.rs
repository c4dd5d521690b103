//! Thin command-line front end over the benchmark harness in
//! [`manpg::bench`]. Each subcommand reproduces one synthetic experiment
//! protocol and prints (or writes) a CSV/Markdown table.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manpg::bench::{
    emit, run_scca_mat, run_scca_vec, run_spca, scca_config_echo, spca_config_echo, Algorithm,
    ExperimentKind, SccaBenchConfig, SpcaBenchConfig, TableFormat,
};
use manpg::experiments::CovarianceKind;

#[derive(Parser)]
#[command(
    name = "manpg-bench",
    about = "Sparse PCA / sparse CCA benchmarks of the alternating manifold proximal gradient solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output table format.
    #[arg(long = "out-format", default_value = "csv", value_parser = ["csv", "md"])]
    out_format: String,
    /// Write the table here (plus a sibling <path>.config.json); stdout when
    /// absent.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Repetitions to aggregate (medians).
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// Master seed; repetition streams are derived from it.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Worker threads for repetitions (1 preserves timing fidelity).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse PCA benchmark (elastic-net formulation).
    Spca {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        p: usize,
        #[arg(long, default_value_t = 6)]
        r: usize,
        /// Ridge weight μ.
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Lasso weight μ₁ (applied to every component).
        #[arg(long, default_value_t = 0.1)]
        mu1: f64,
        /// Comma-separated subset of amanpg,manpg-jacobi,ama,palm,vp.
        #[arg(long, default_value = "ama,amanpg,palm,vp", value_delimiter = ',')]
        algs: Vec<String>,
        /// External dataset: headerless CSV of rows (forces reps = 1).
        #[arg(long = "data")]
        data: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Single (vector) sparse CCA benchmark.
    SccaVec {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 800)]
        p: usize,
        #[arg(long, default_value_t = 800)]
        q: usize,
        #[command(flatten)]
        scca: SccaArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Multiple (matrix) sparse CCA benchmark.
    SccaMat {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 300)]
        p: usize,
        #[arg(long, default_value_t = 300)]
        q: usize,
        #[command(flatten)]
        scca: SccaArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct SccaArgs {
    /// Covariance family for Σx and Σy.
    #[arg(long, default_value = "identity", value_parser = ["identity", "toeplitz", "sparse-inverse"])]
    cov: String,
    /// Toeplitz decay ρ (defaults: 0.9 vector case, 0.3 matrix case).
    #[arg(long = "toeplitz-rho")]
    toeplitz_rho: Option<f64>,
    /// Penalty grid: τ = (b/2)√(log(p+q)/n) per candidate b.
    #[arg(long = "b-grid", value_delimiter = ',')]
    b_grid: Option<Vec<f64>>,
    /// External X dataset (headerless CSV of rows; forces reps = 1).
    #[arg(long = "data-x")]
    data_x: Option<PathBuf>,
    /// External Y dataset.
    #[arg(long = "data-y")]
    data_y: Option<PathBuf>,
}

impl SccaArgs {
    fn covariance(&self, default_rho: f64) -> CovarianceKind {
        match self.cov.as_str() {
            "toeplitz" => CovarianceKind::Toeplitz {
                rho: self.toeplitz_rho.unwrap_or(default_rho),
            },
            "sparse-inverse" => CovarianceKind::SparseInverse,
            _ => CovarianceKind::Identity,
        }
    }
}

fn parse_algorithms(names: &[String]) -> manpg::Result<Vec<Algorithm>> {
    names.iter().map(|s| Algorithm::parse(s)).collect()
}

fn run() -> manpg::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Spca { n, p, r, mu, mu1, algs, data, output } => {
            let cfg = SpcaBenchConfig {
                reps: output.reps,
                seed: output.seed,
                threads: output.threads,
                algorithms: parse_algorithms(&algs)?,
                data_csv: data,
                ..SpcaBenchConfig::new(n, p, r, mu, mu1)
            };
            let rows = run_spca(&cfg)?;
            let table = emit(
                ExperimentKind::Spca,
                &rows,
                TableFormat::parse(&output.out_format)?,
                output.out.as_deref(),
                Some(&spca_config_echo(&cfg)),
            )?;
            if output.out.is_none() {
                print!("{table}");
            }
        }
        Command::SccaVec { n, p, q, scca, output } => {
            let mut cfg = SccaBenchConfig::vector(n, p, q);
            cfg.covariance = scca.covariance(0.9);
            if let Some(grid) = &scca.b_grid {
                cfg.b_grid = grid.clone();
            }
            cfg.reps = output.reps;
            cfg.seed = output.seed;
            cfg.threads = output.threads;
            cfg.data_x_csv = scca.data_x;
            cfg.data_y_csv = scca.data_y;
            let rows = run_scca_vec(&cfg)?;
            let table = emit(
                ExperimentKind::SccaVector,
                &rows,
                TableFormat::parse(&output.out_format)?,
                output.out.as_deref(),
                Some(&scca_config_echo(&cfg, false)),
            )?;
            if output.out.is_none() {
                print!("{table}");
            }
        }
        Command::SccaMat { n, p, q, scca, output } => {
            let mut cfg = SccaBenchConfig::matrix(n, p, q);
            cfg.covariance = scca.covariance(0.3);
            if let Some(grid) = &scca.b_grid {
                cfg.b_grid = grid.clone();
            }
            cfg.reps = output.reps;
            cfg.seed = output.seed;
            cfg.threads = output.threads;
            cfg.data_x_csv = scca.data_x;
            cfg.data_y_csv = scca.data_y;
            let rows = run_scca_mat(&cfg)?;
            let table = emit(
                ExperimentKind::SccaMatrix,
                &rows,
                TableFormat::parse(&output.out_format)?,
                output.out.as_deref(),
                Some(&scca_config_echo(&cfg, true)),
            )?;
            if output.out.is_none() {
                print!("{table}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
