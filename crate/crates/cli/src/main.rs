use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use radreact_cli::compare::{compare, Metric};
use radreact_cli::poles::survey;
use radreact_cli::run::{run_scenario, RunOptions};
use radreact_cli::scenario::ModelSel;
use radreact_cli::{exit_code, EXIT_VERDICT, OUT_DIR_ENV};
use radreact_core::phys::{Constants, ParticleParams};

/// Radiation-reaction scenarios: integrate, compare, and tabulate poles.
#[derive(Debug, Parser)]
#[command(name = "radreact", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file and write its trajectory and report.
    Run {
        scenario: PathBuf,
        /// Output directory (default: $RADREACT_OUT_DIR, else the current directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Exit 2 without integrating when the model has upper half-plane poles.
        #[arg(long)]
        strict_causal: bool,
        /// Override the noise seed and ensemble base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare two runs (directory, report.json, CSV, or poles.json).
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// max_position_deviation, power_ratio_series or pole_tables.
        #[arg(long)]
        metric: Metric,
        /// Pass threshold on the normalized value (metric default when absent).
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the pole table of a model, or of all models with `all`.
    Poles {
        /// newton, ald, fo, fo_sharp, series(N), oscillator or all.
        model: String,
        /// Oscillator binding as omega_0 tau_e.
        #[arg(long, conflicts_with = "spring_constant_dyn_per_cm")]
        omega0_tau: Option<f64>,
        #[arg(long)]
        spring_constant_dyn_per_cm: Option<f64>,
        /// Use an explicit particle instead of the electron.
        #[arg(long, requires = "mass_g")]
        charge_statc: Option<f64>,
        #[arg(long, requires = "charge_statc")]
        mass_g: Option<f64>,
    },
}

fn poles_cmd(
    model: &str,
    omega0_tau: Option<f64>,
    spring: Option<f64>,
    charge: Option<f64>,
    mass: Option<f64>,
) -> Result<i32> {
    let consts = Constants::GAUSSIAN;
    let particle = match (charge, mass) {
        (Some(q), Some(m)) => ParticleParams::new(q, m, None, &consts)?,
        _ => ParticleParams::electron(&consts),
    };
    let spring = match (omega0_tau, spring) {
        (Some(z), None) => {
            let w0 = z / particle.tau_e();
            Some(particle.mass() * w0 * w0)
        }
        (None, k) => k,
        (Some(_), Some(_)) => bail!("give either --omega0-tau or --spring-constant-dyn-per-cm"),
    };
    let models = if model == "all" {
        let mut m = vec![
            ModelSel::Newton,
            ModelSel::Ald,
            ModelSel::Fo,
            ModelSel::FoSharp,
            ModelSel::Series(3),
            ModelSel::Series(4),
            ModelSel::Series(5),
        ];
        if spring.is_some() {
            m.push(ModelSel::Oscillator);
        }
        m
    } else {
        vec![ModelSel::parse(model)?]
    };
    let table = survey(&models, &particle, spring)?;
    print!("{}", table.to_json()?);
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run {
            scenario,
            out_dir,
            strict_causal,
            seed,
        } => {
            let out_dir = out_dir
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let outcome = run_scenario(
                &scenario,
                &RunOptions {
                    out_dir,
                    strict_causal,
                    seed,
                },
            )
            .with_context(|| format!("running {}", scenario.display()))?;
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            match outcome.verdict {
                Some(v) => {
                    eprintln!("verdict: {v}");
                    Ok(EXIT_VERDICT)
                }
                None => Ok(0),
            }
        }
        Command::Compare {
            run_a,
            run_b,
            metric,
            tol,
            out,
        } => {
            let report = compare(&run_a, &run_b, metric, tol)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            if let Some(path) = out {
                std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{text}");
            Ok(0)
        }
        Command::Poles {
            model,
            omega0_tau,
            spring_constant_dyn_per_cm,
            charge_statc,
            mass_g,
        } => poles_cmd(&model, omega0_tau, spring_constant_dyn_per_cm, charge_statc, mass_g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
