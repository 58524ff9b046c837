//! Command-line front end: `verify`, `sweep` and `report`.
//!
//! Exit status is 0 when every row passes, 1 when some row fails and 2 on
//! configuration or usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use splicelab::config::{RunConfig, Spacing, SweepConfig};
use splicelab::harness::{CheckId, Param};
use splicelab::report::{self, RunReport};

#[derive(Parser)]
#[command(name = "splicelab", version, about = "Numerical checks of spliced Cauchy-Riemann sections on glued cylinders")]
struct Cli {
    /// JSON run configuration; defaults are used for omitted fields.
    #[arg(long, global = true, env = "SPLICELAB_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory, overriding the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every enabled check and write results.csv and summary.json.
    Verify,
    /// Run one check over a range of one parameter and fit rates to the results.
    Sweep {
        #[arg(long)]
        check: String,
        /// One of R, theta, delta, k, p, l, d, r, h_t.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = SpacingArg::Linear)]
        spacing: SpacingArg,
        /// Tolerance replacing that of every row.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Print the results of the last `verify` run.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Failure of the invocation itself, as opposed to a failing check.
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, UsageError> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, UsageError> {
    let cfg = load_config(cli.config.as_deref())?;
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    match cli.command {
        Command::Verify => {
            let rep = report::verify(&cfg)?;
            let (csv, json) = report::verify_paths(&dir);
            report::write_report(&rep, &csv, &json)?;
            print_summary(&rep);
            println!("wrote {} and {}", csv.display(), json.display());
            Ok(rep.all_pass)
        }
        Command::Sweep {
            check,
            param,
            from,
            to,
            steps,
            spacing,
            tolerance,
        } => {
            let id: CheckId = check.parse()?;
            let param: Param = param.parse()?;
            if let Some(t) = tolerance {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(UsageError(format!("tolerance must be finite and >= 0, got {t}")));
                }
            }
            let sweep = SweepConfig {
                param,
                from,
                to,
                steps,
                spacing: match spacing {
                    SpacingArg::Linear => Spacing::Linear,
                    SpacingArg::Log => Spacing::Log,
                },
            }
            .to_sweep()?;
            let rep = report::sweep(&cfg, id, sweep, tolerance)?;
            let (csv, json) = report::sweep_paths(&dir, id, param);
            report::write_report(&rep, &csv, &json)?;
            print_summary(&rep);
            for f in &rep.fits {
                println!(
                    "fit {:<24} {:>5}: rate {:+.6e}  residual {:.3e}  ({} points)",
                    f.quantity,
                    format!("{:?}", f.fit.model).to_lowercase(),
                    f.fit.rate,
                    f.fit.residual,
                    f.fit.n_points
                );
            }
            println!("wrote {} and {}", csv.display(), json.display());
            Ok(rep.all_pass)
        }
        Command::Report { format } => {
            let rep = report::read_report(&report::verify_paths(&dir).1)?;
            let text = match format {
                Format::Csv => report::to_csv_string(&rep.results)?,
                Format::Json => report::to_json_string(&rep) + "\n",
            };
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(rep.all_pass)
        }
    }
}

fn print_summary(rep: &RunReport) {
    for c in &rep.checks {
        println!(
            "{} {:<22} {:>4} rows, {} failing",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_id.as_str(),
            c.rows,
            c.failures
        );
    }
    for s in &rep.skipped {
        println!("SKIP {:<22} {}", s.check_id.as_str(), s.reason);
    }
    let failing = rep.results.iter().filter(|r| !r.pass).take(10);
    for r in failing {
        println!(
            "  failing {} {}: measured {:.6e} vs {:.6e} ({})",
            r.check_id, r.quantity, r.measured, r.bound, r.formula
        );
    }
    println!("{}", if rep.all_pass { "all checks pass" } else { "some checks fail" });
}
