//! Command-line front end: rigidity analysis, simulation, Monte-Carlo basin
//! studies, gradient checking and plot-data extraction over JSON scenarios.
//!
//! Exit codes: 0 on success (and GIWR for `analyze`), 2 when `analyze` finds
//! a non-GIWR framework, 1 on any error (including a failed gradient check).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use weakrig::dynamics::{log_err_decay, simulate};
use weakrig::equilibria::{
    classify_equilibrium, monte_carlo_basin, BasinSampling, EquilibriumTolerances,
};
use weakrig::rigidity::{
    classify_with_tol, finite_difference_jacobian, sample_configuration, weak_rigidity_matrix,
    RankTolerance,
};
use weakrig::scenario::{load_scenario, ExperimentKind, ScenarioInstance};
use weakrig::trace_io::{self, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "weakrig", version, about = "Weak rigidity analysis and formation-control runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file (reports) or directory (simulate, plotdata).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override; falls back to the scenario's sim.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reject unknown scenario keys instead of warning.
    #[arg(long, global = true)]
    strict: bool,
    /// Absolute singular-value cutoff for rank decisions (default: relative).
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Report format for stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the scenario's initial configuration.
    Analyze { scenario: PathBuf },
    /// Integrate the gradient flow and write trace CSVs plus a summary.
    Simulate { scenario: PathBuf },
    /// Monte-Carlo basin study for 3-agent scenarios in 2D.
    Montecarlo {
        scenario: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        /// Half-width of the sampling box.
        #[arg(long = "box")]
        box_half: Option<f64>,
    },
    /// Compare the analytic Jacobian against central finite differences.
    CheckGradient {
        scenario: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Classify the initial configuration against the equilibrium sets.
    Equilibrium { scenario: PathBuf },
    /// Convert a trace directory into gnuplot-ready data files.
    Plotdata { trace_dir: PathBuf },
}

fn emit<T: Serialize>(report: &T, format: Format, out: Option<&Path>) -> weakrig::Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| weakrig::Error::Io(e.to_string()))?;
    let text = match format {
        Format::Json => json,
        Format::Csv => {
            // Flat two-row CSV: header of keys, row of values; nested values
            // are embedded as compact JSON.
            let value: Value =
                serde_json::from_str(&json).map_err(|e| weakrig::Error::Io(e.to_string()))?;
            match value {
                Value::Object(map) => {
                    let keys: Vec<String> = map.keys().cloned().collect();
                    let vals: Vec<String> = map
                        .values()
                        .map(|v| match v {
                            Value::String(s) => s.clone(),
                            other => other.to_string().replace(',', ";"),
                        })
                        .collect();
                    format!("{}\n{}", keys.join(","), vals.join(","))
                }
                other => other.to_string(),
            }
        }
    };
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| weakrig::Error::Io(format!("{}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn load(path: &Path, strict: bool) -> weakrig::Result<ScenarioInstance> {
    let (instance, warnings) = load_scenario(path, strict)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(instance)
}

fn run(cli: Cli) -> weakrig::Result<u8> {
    let rank_tol = match cli.tol_rank {
        Some(t) => RankTolerance::Absolute(t),
        None => RankTolerance::Relative,
    };
    match &cli.command {
        Command::Analyze { scenario } => {
            let instance = load(scenario, cli.strict)?;
            let report = classify_with_tol(&instance.spec, &instance.initial, rank_tol)?;
            let giwr = report.is_giwr;
            emit(&report, cli.format, cli.out.as_deref())?;
            Ok(if giwr { 0 } else { 2 })
        }
        Command::Simulate { scenario } => {
            let instance = load(scenario, cli.strict)?;
            let out_dir = cli.out.clone().unwrap_or_else(|| {
                let stem = scenario
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scenario".into());
                PathBuf::from(format!("{stem}_out"))
            });
            let started = Instant::now();
            let trace = simulate(&instance.spec, &instance.initial, &instance.sim)?;
            let wall_time = started.elapsed().as_secs_f64();
            trace_io::write_trace_dir(&trace, &out_dir)?;
            let fit = log_err_decay(&trace);
            let summary = RunSummary {
                flag: trace.flag,
                final_err: trace.final_err_norm(),
                t_end: trace.final_time(),
                steps: trace.steps_taken,
                slope_log_err: fit.map(|f| f.slope),
                r_squared: fit.map(|f| f.r_squared),
                wall_time,
            };
            let summary_json = serde_json::to_string_pretty(&summary)
                .map_err(|e| weakrig::Error::Io(e.to_string()))?;
            std::fs::write(out_dir.join(trace_io::SUMMARY_FILE), summary_json + "\n")?;
            emit(&summary, cli.format, None)?;
            Ok(0)
        }
        Command::Montecarlo { scenario, trials, box_half } => {
            let instance = load(scenario, cli.strict)?;
            let params = instance
                .experiment
                .as_ref()
                .filter(|e| e.kind == ExperimentKind::Montecarlo)
                .map(|e| e.parameters.clone())
                .unwrap_or_default();
            let trials = trials.or(params.trials).unwrap_or(100);
            let box_half = box_half.or(params.box_half).unwrap_or(20.0);
            let seed = cli.seed.unwrap_or(instance.seed);
            let stats = monte_carlo_basin(
                &instance.spec,
                trials,
                seed,
                &instance.sim,
                BasinSampling::NonCollinear,
                box_half,
            )?;
            emit(&stats, cli.format, cli.out.as_deref())?;
            Ok(0)
        }
        Command::CheckGradient { scenario, samples } => {
            let instance = load(scenario, cli.strict)?;
            let params = instance
                .experiment
                .as_ref()
                .filter(|e| e.kind == ExperimentKind::CheckGradient)
                .map(|e| e.parameters.clone())
                .unwrap_or_default();
            let samples = samples.or(params.samples).unwrap_or(50);
            if samples == 0 {
                return Err(weakrig::Error::InvalidArgument(
                    "check-gradient needs at least one sample".into(),
                ));
            }
            let seed = cli.seed.unwrap_or(instance.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut max_error: f64 = 0.0;
            for _ in 0..samples {
                let cfg = sample_configuration(&instance.spec, &mut rng, 10.0);
                let analytic = weak_rigidity_matrix(&instance.spec, &cfg)?;
                let fd = finite_difference_jacobian(&instance.spec, &cfg)?;
                max_error = max_error.max((analytic - fd).amax());
            }
            #[derive(Serialize)]
            struct GradientReport {
                samples: usize,
                seed: u64,
                max_error: f64,
                tolerance: f64,
                pass: bool,
            }
            let tolerance = 1e-6;
            let report = GradientReport {
                samples,
                seed,
                max_error,
                tolerance,
                pass: max_error <= tolerance,
            };
            let pass = report.pass;
            emit(&report, cli.format, cli.out.as_deref())?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Equilibrium { scenario } => {
            let instance = load(scenario, cli.strict)?;
            let report = classify_equilibrium(
                &instance.spec,
                &instance.initial,
                EquilibriumTolerances::default(),
            )?;
            emit(&report, cli.format, cli.out.as_deref())?;
            Ok(0)
        }
        Command::Plotdata { trace_dir } => {
            let out_dir = cli.out.clone().unwrap_or_else(|| trace_dir.join("plot"));
            let plot = trace_io::plotdata(trace_dir, &out_dir)?;
            emit(&plot, cli.format, None)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
