use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relax_core::harness::analysis::thread_count;
use relax_core::harness::{compare, converge, corrector_report, run, Norm, RunConfig, Snapshot};
use relax_core::models::{build_model, ModelParams, MODEL_NAMES};
use relax_core::system::{validate_model, RelaxationModel};
use relax_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "relax",
    version,
    about = "Late-time solvers for hyperbolic systems with stiff relaxation",
    after_help = "RELAX_THREADS bounds the number of concurrent runs in `converge`."
)]
struct Cli {
    /// Exit with a nonzero status on diagnostic violations.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML configuration.
    Run { config: PathBuf },
    /// Check a model's structural assumptions at random samples.
    Validate {
        model: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Model parameter override, `key=value`; repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Compare numeric and closed-form correctors.
    Corrector {
        model: String,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Grid-refinement study, doubling the cell count per level.
    Converge {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Distance between the equilibrium variables of two snapshots.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "L1")]
        norm: String,
    },
}

fn model_from_args(name: &str, overrides: &[String]) -> Result<Box<dyn RelaxationModel>> {
    let mut params = ModelParams::default();
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
        let value = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad value in `{kv}`")))?;
        params.set(k.trim(), value)?;
    }
    build_model(name, &params)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("({})", parts.join(", "))
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config } => {
            let mut cfg = RunConfig::from_file(&config)?;
            cfg.output.strict |= cli.strict;
            let (_, report) = run(&cfg)?;
            println!("steps        {}", report.steps);
            println!("final time   {}", report.final_time);
            println!("wall time    {:.3?}", report.wall_time);
            println!("mass         {}", fmt_vec(&report.final_mass));
            println!("mass drift   {:.3e}", report.mass_drift());
            println!("floor events {}", report.floor_events);
            println!("snapshots    {}", report.snapshots);
            if report.entropy_violations > 0 {
                eprintln!(
                    "warning: entropy increased on {} steps",
                    report.entropy_violations
                );
                return Ok(!cfg.output.strict);
            }
            Ok(true)
        }
        Command::Validate {
            model,
            samples,
            seed,
            params,
        } => {
            let m = model_from_args(&model, &params)?;
            let report = validate_model(m.as_ref(), samples, seed)?;
            println!("{report}");
            Ok(true)
        }
        Command::Corrector {
            model,
            samples,
            seed,
            params,
        } => {
            let m = model_from_args(&model, &params)?;
            let report = corrector_report(m.as_ref(), samples, seed)?;
            println!("model {}", report.model);
            for r in &report.rows {
                println!(
                    "u={} du={} U1={} closed={} err={} M err={}",
                    fmt_vec(r.u.as_slice()),
                    fmt_vec(r.du_dx.as_slice()),
                    fmt_vec(r.u1_numeric.as_slice()),
                    r.u1_closed_form
                        .as_ref()
                        .map_or("-".into(), |c| fmt_vec(c.as_slice())),
                    r.u1_error.map_or("-".into(), |e| format!("{e:.2e}")),
                    r.m_error.map_or("-".into(), |e| format!("{e:.2e}")),
                );
            }
            println!("max relative error {:.3e}", report.max_error());
            Ok(!cli.strict || report.max_error() <= 1e-8)
        }
        Command::Converge { config, levels } => {
            let cfg = RunConfig::from_file(&config)?;
            let r = converge(&cfg, levels, thread_count())?;
            println!("cells      L1 diff to next   order");
            for (k, e) in r.errors.iter().enumerate() {
                let order = if k == 0 {
                    "-".to_string()
                } else {
                    format!("{:.3}", r.orders[k - 1])
                };
                println!("{:<10} {:<17.6e} {order}", r.cells[k], e);
            }
            Ok(true)
        }
        Command::Compare { a, b, norm } => {
            let norm: Norm = norm.parse()?;
            let d = compare(&Snapshot::read(&a)?, &Snapshot::read(&b)?, norm)?;
            println!("{norm} {d:.17e}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e @ Error::EntropyIncrease { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::UnknownModel(_)) {
                eprintln!("known models: {}", MODEL_NAMES.join(", "));
            }
            ExitCode::FAILURE
        }
    }
}
