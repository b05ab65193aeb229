//! Command-line front end: APUB estimation on CSV data, two-stage solves on
//! JSON problem files (decomposition or one monolithic LP), and the canned
//! experiment runners. All randomness is controlled by `--seed`; errors are
//! reported as a JSON record on stderr with a nonzero exit code.

use apub::bounds::{apub_bootstrap, apub_exact, SampleSet};
use apub::experiments::{run_experiment_to_dir, ExperimentConfig};
use apub::lp::{solve_lp, LpStatus};
use apub::lshaped::{solve_apub_lshaped, LShapedConfig};
use apub::model::{build_extensive_form, TwoStageProblem};
use apub::sampling::{derive_substream, draw_bootstrap_weights, BootstrapWeights};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "apub", version, about = "Average percentile upper bounds and bootstrap-risk two-stage solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the mean upper bound of a univariate sample.
    Estimate(EstimateArgs),
    /// Solve a two-stage problem file.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Run a canned experiment and write CSV/JSON output.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV file with one numeric value per line (a header line is skipped).
    #[arg(long)]
    data: PathBuf,
    /// Tail level in (0, 1].
    #[arg(long)]
    alpha: f64,
    /// Exact enumeration of the resampling support (N <= 8).
    #[arg(long, conflicts_with = "bootstrap")]
    exact: bool,
    /// Bootstrap approximation with this many resamples.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum SolveCommand {
    /// Cut-generating decomposition solve.
    Lshaped(SolveArgs),
    /// Monolithic extensive-form LP solve.
    Extensive(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Two-stage problem JSON file.
    #[arg(long)]
    problem: PathBuf,
    /// Tail level in (0, 1].
    #[arg(long)]
    alpha: f64,
    /// Number of bootstrap weight vectors.
    #[arg(long = "m-bootstrap")]
    m_bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of: ev, productmix, gamma-bounds, m-convergence.
    name: String,
    /// Experiment configuration JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV and summary files.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).unwrap());
        }
        Err(err) => {
            eprintln!("{}", json!({ "error": err.to_string() }));
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<serde_json::Value, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Estimate(args) => estimate(args),
        Command::Solve(SolveCommand::Lshaped(args)) => solve_lshaped(args),
        Command::Solve(SolveCommand::Extensive(args)) => solve_extensive(args),
        Command::Experiment(args) => {
            let text = std::fs::read_to_string(&args.config)?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)?;
            let summary = run_experiment_to_dir(&args.name, &cfg, &args.out)?;
            Ok(json!({ "status": "ok", "out_dir": args.out, "summary": summary }))
        }
    }
}

fn read_sample_csv(path: &PathBuf) -> Result<SampleSet, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim().trim_end_matches(',');
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(e) if lineno == 0 => {
                // Header line.
                let _ = e;
            }
            Err(e) => return Err(format!("line {}: {e}", lineno + 1).into()),
        }
    }
    Ok(SampleSet::new(values)?)
}

fn estimate(args: EstimateArgs) -> Result<serde_json::Value, Box<dyn std::error::Error>> {
    let sample = read_sample_csv(&args.data)?;
    let est = if args.exact {
        apub_exact(&sample, args.alpha)?
    } else {
        let m = args.bootstrap.unwrap_or(5000);
        let mut rng = derive_substream(args.seed, 0);
        apub_bootstrap(&sample, args.alpha, m, &mut rng)?
    };
    Ok(json!({
        "value": est.value,
        "alpha": est.alpha,
        "mode": if args.exact { "exact" } else { "bootstrap" },
        "n_bootstrap": est.n_bootstrap,
        "std_error": est.std_error,
        "n": sample.len(),
        "sample_mean": sample.mean(),
    }))
}

/// Weight vectors for the solve commands come from substream `(seed, 0)`,
/// so the decomposition and extensive routes see identical draws.
fn solve_weights(problem: &TwoStageProblem, m: usize, seed: u64) -> Vec<BootstrapWeights> {
    let mut rng = derive_substream(seed, 0);
    (0..m)
        .map(|_| draw_bootstrap_weights(problem.n_scenarios(), &mut rng))
        .collect()
}

fn solve_lshaped(args: SolveArgs) -> Result<serde_json::Value, Box<dyn std::error::Error>> {
    let problem = TwoStageProblem::from_json(&std::fs::read_to_string(&args.problem)?)?;
    let weights = solve_weights(&problem, args.m_bootstrap, args.seed);
    let out = solve_apub_lshaped(&problem, args.alpha, &weights, &LShapedConfig::default())?;
    Ok(json!({
        "method": "lshaped",
        "value": out.value,
        "x": out.x,
        "log": out.log,
    }))
}

fn solve_extensive(args: SolveArgs) -> Result<serde_json::Value, Box<dyn std::error::Error>> {
    let problem = TwoStageProblem::from_json(&std::fs::read_to_string(&args.problem)?)?;
    let weights = solve_weights(&problem, args.m_bootstrap, args.seed);
    let lp = build_extensive_form(&problem, args.alpha, &weights)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(json!({
            "method": "extensive",
            "value": sol.objective_value,
            "x": sol.primal[..problem.first_stage_dim()],
            "lp_rows": lp.n_rows(),
            "lp_cols": lp.n_vars(),
        })),
        LpStatus::Infeasible => Err("extensive LP is infeasible".into()),
        LpStatus::Unbounded => Err("extensive LP is unbounded".into()),
    }
}
