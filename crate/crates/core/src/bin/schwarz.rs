use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use schwarz_core::experiment::{
    builtin, compare_methods, order_from_trace, run_experiment, ExperimentConfig, ExperimentResult,
    OrderWindow, BUILTIN_NAMES,
};
use schwarz_core::orchestrator::ElasticityConfig;
use schwarz_core::SchwarzError;

#[derive(Parser)]
#[command(
    name = "schwarz",
    version,
    about = "Accelerated Dirichlet-Neumann Schwarz experiments"
)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory; defaults to the config's output_dir or results/<name>.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every point of a TOML experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a config and also write per-method comparison tables.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimate the convergence order from a trace CSV.
    Order {
        trace: PathBuf,
        /// Error column to analyse.
        #[arg(long, default_value = "e_rel")]
        column: String,
        /// Errors at or above this are considered pre-asymptotic.
        #[arg(long, default_value_t = 0.1)]
        upper: f64,
        /// Errors at or below this are considered roundoff.
        #[arg(long, default_value_t = 1e-14)]
        lower: f64,
        /// Keep the final iteration in the window.
        #[arg(long)]
        keep_last: bool,
        /// Print the estimate as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one of the built-in experiments.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_NAMES))]
        name: String,
        #[command(flatten)]
        out: OutArgs,
        /// Use 101 x 101 nodes per subdomain for the elasticity experiments.
        #[arg(long)]
        full_scale: bool,
        /// Print the built-in config as TOML and exit.
        #[arg(long)]
        print_config: bool,
    },
}

fn out_dir(config: &ExperimentConfig, out: &OutArgs) -> PathBuf {
    out.out.clone().unwrap_or_else(|| config.output_dir())
}

fn print_result(result: &ExperimentResult, dir: &Path) {
    println!(
        "{:<8}  {:<55}  {:>9}  {:>5}  {:>10}  {:>10}",
        "run", "label", "converged", "iters", "e_abs", "e_max"
    );
    for run in &result.runs {
        let status = if run.report.aborted() {
            "aborted".to_string()
        } else {
            run.report.converged.to_string()
        };
        let e_abs = run
            .report
            .last()
            .map(|r| format!("{:.3e}", r.e_abs))
            .unwrap_or_else(|| "-".into());
        let e_max = run
            .max_e_max()
            .map(|e| format!("{e:.3e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<8}  {:<55}  {:>9}  {:>5}  {:>10}  {:>10}",
            run.spec.id,
            run.spec.label(),
            status,
            run.report.iterations,
            e_abs,
            e_max
        );
    }
    println!("outputs written to {}", dir.display());
}

fn finish(result: ExperimentResult, dir: &Path) -> ExitCode {
    print_result(&result, dir);
    let failures: Vec<_> = result.failures().collect();
    if failures.is_empty() {
        return ExitCode::SUCCESS;
    }
    eprintln!(
        "{} run(s) aborted (see {}):",
        failures.len(),
        dir.join("failures.csv").display()
    );
    for f in failures {
        eprintln!(
            "  {} {}: {}",
            f.spec.id,
            f.spec.label(),
            f.failure_message().unwrap_or_default()
        );
    }
    ExitCode::from(1)
}

fn report_error(e: SchwarzError) -> ExitCode {
    match e {
        SchwarzError::InvalidConfig(problems) => {
            eprintln!("invalid configuration:");
            for p in problems {
                eprintln!("  - {p}");
            }
        }
        other => eprintln!("error: {other}"),
    }
    ExitCode::from(2)
}

fn execute(config: ExperimentConfig, out: &OutArgs, compare: bool) -> ExitCode {
    let dir = out_dir(&config, out);
    let result = if compare {
        compare_methods(&config, &dir)
    } else {
        run_experiment(&config, &dir)
    };
    match result {
        Ok(r) => finish(r, &dir),
        Err(e) => report_error(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match cli.command {
        Command::Run { config, out } => match ExperimentConfig::load(&config) {
            Ok(c) => execute(c, &out, false),
            Err(e) => report_error(e),
        },
        Command::Compare { config, out } => match ExperimentConfig::load(&config) {
            Ok(c) => execute(c, &out, true),
            Err(e) => report_error(e),
        },
        Command::Order {
            trace,
            column,
            upper,
            lower,
            keep_last,
            json,
        } => {
            let window = OrderWindow {
                upper,
                lower,
                drop_last: !keep_last,
            };
            match order_from_trace(&trace, &column, window) {
                Ok(est) if json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&est).expect("serializable")
                    );
                    ExitCode::SUCCESS
                }
                Ok(est) => {
                    println!("order  {:.4}", est.order);
                    println!("factor {:.4e}", est.factor);
                    println!("points {}", est.errors.len());
                    for (i, c) in est.c_k.iter().enumerate() {
                        println!("C_{:<3} {c:.4e}", i + 1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => report_error(e),
            }
        }
        Command::Reproduce {
            name,
            out,
            full_scale,
            print_config,
        } => {
            let mut config = builtin(&name).expect("name checked by clap");
            if full_scale {
                let scaled = ElasticityConfig::full_scale(config.elasticity2d.n_dd);
                config.elasticity2d.nx = scaled.nx;
                config.elasticity2d.ny = scaled.ny;
            }
            if print_config {
                return match config.to_toml_string() {
                    Ok(s) => {
                        print!("{s}");
                        ExitCode::SUCCESS
                    }
                    Err(e) => report_error(e),
                };
            }
            let compare = !matches!(name.as_str(), "table1" | "table2");
            execute(config, &out, compare)
        }
    }
}
