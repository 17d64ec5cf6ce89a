use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use espca::experiments::{
    verify_lemmas, write_rates_csv, write_records_csv, write_summary_json, Experiment, ExperimentConfig,
};
use espca::linalg::{fantope_project, sym_eigen, SymmetricMatrix};
use espca::Error;

#[derive(Parser)]
#[command(name = "espca", version, about = "Debiased sparse PCA simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials of a single (n, s) cell.
    Simulate(RunArgs),
    /// Run the full n grid and fit log-log rates.
    RateSweep(RunArgs),
    /// Run the lemma-level empirical suites.
    VerifyLemmas(RunArgs),
    /// Project a symmetric matrix onto the Fantope of rank k.
    FantopeProject {
        /// Whitespace-delimited square matrix, one row per line.
        matrix: PathBuf,
        #[arg(short, long)]
        k: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config; the built-in reference sweep when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set n=4000` or `--set selector.kind=fps`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (replaces `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, env = "ESP_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> espca::Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("master_seed={seed}"));
        }
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides)?,
            None => ExperimentConfig::reference_with(&overrides)?,
        };
        if let Some(out) = &self.out {
            config.output.dir = out.clone();
        }
        Ok(config)
    }
}

fn exit_code(err: &Error) -> ExitCode {
    match err {
        Error::Internal(_) | Error::NotPsd { .. } | Error::DegenerateGap { .. } | Error::UndefinedFit(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn simulate(args: &RunArgs) -> espca::Result<ExitCode> {
    let mut config = args.load()?;
    config.n_grid.truncate(1);
    config.s_grid = None;
    let sweep = Experiment::new(config.clone())?.run(args.workers)?;
    write_records_csv(&config.output.records_path(), &sweep.records)?;
    write_summary_json(&config.output.summary_path(), &sweep.summary)?;
    let cell = &sweep.summary.cells[0];
    println!(
        "n={} s={} selector={} trials={} failed={} support_rate={:.3} mean_err_2inf={:.6e} mean_err_frob={:.6e}",
        cell.n,
        cell.s,
        config.selector.kind.name(),
        cell.trials,
        cell.failed,
        cell.support_recovery_rate,
        cell.err_2inf.mean,
        cell.err_frob.mean
    );
    println!("wrote {} and {}", config.output.records_path().display(), config.output.summary_path().display());
    Ok(ExitCode::SUCCESS)
}

fn rate_sweep(args: &RunArgs) -> espca::Result<ExitCode> {
    let config = args.load()?;
    let sweep = Experiment::new(config.clone())?.run(args.workers)?;
    write_records_csv(&config.output.records_path(), &sweep.records)?;
    write_summary_json(&config.output.summary_path(), &sweep.summary)?;
    write_rates_csv(&config.output.rates_path(), &sweep.summary)?;
    for c in &sweep.summary.cells {
        println!(
            "n={:<7} s={:<4} mean_err_2inf={:.6e} mean_err_frob={:.6e} cor_bound={:.6e} failed={}",
            c.n, c.s, c.err_2inf.mean, c.err_frob.mean, c.cor_bound, c.failed
        );
    }
    match sweep.summary.slope_n {
        Some(slope) => println!("slope_n = {slope:.4}"),
        None => println!("slope_n undefined (fewer than two distinct n)"),
    }
    println!("wrote {}", config.output.dir.display());
    Ok(ExitCode::SUCCESS)
}

fn lemmas(args: &RunArgs) -> espca::Result<ExitCode> {
    let config = args.load()?;
    let outcomes = verify_lemmas(&config, args.workers)?;
    for o in &outcomes {
        println!("{}", o.line());
    }
    Ok(if outcomes.iter().all(|o| o.passed) { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn read_matrix(path: &Path) -> espca::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn fantope(path: &Path, k: usize) -> espca::Result<ExitCode> {
    let rows = read_matrix(path)?;
    let dim = rows.len();
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidInput(format!("{} is not a square matrix", path.display())));
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().take(i) {
            if (v - rows[j][i]).abs() > 1e-8 {
                return Err(Error::InvalidInput(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let projected = fantope_project(&SymmetricMatrix::from_rows(&refs)?, k)?;
    for i in 0..dim {
        let line: Vec<String> = (0..dim).map(|j| format!("{:.12}", projected.get(i, j))).collect();
        println!("{}", line.join(" "));
    }
    let eig = sym_eigen(&projected)?;
    println!("trace = {:.12}", projected.trace());
    println!(
        "eigenvalues in [{:.12}, {:.12}]",
        eig.values.last().unwrap_or(0.0),
        eig.values.first().unwrap_or(0.0)
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::RateSweep(args) => rate_sweep(args),
        Command::VerifyLemmas(args) => lemmas(args),
        Command::FantopeProject { matrix, k } => fantope(matrix, *k),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}
