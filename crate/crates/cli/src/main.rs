use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hedopt_cli::commands::{self, PlotKind, SimulateArgs};
use hedopt_cli::{load_config, CliError, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "hedopt", version, about = "Epidemic control timing: simulation and bi-objective optimization")]
struct Cli {
    /// Experiment configuration (JSON). Omitted fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configured one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides the configured one).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs and grid evaluations.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Integration step. For `simulate`, a step different from the
    /// configured one also reports the objective deviation between the two.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and write its trajectory and objectives.
    Simulate {
        /// Social distancing trigger time; omitted means no social distancing.
        #[arg(long)]
        t_sd: Option<f64>,
        /// Lockdown trigger time; omitted means no lockdown.
        #[arg(long)]
        t_ld: Option<f64>,
    },
    /// Run every configured algorithm for the configured number of runs.
    Optimize,
    /// Indicator table for a campaign directory (defaults to the output directory).
    Indicators {
        dir: Option<PathBuf>,
        /// Reference front CSV for IGD and spread.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Brute-force front over a regular grid of trigger pairs.
    FrontGrid {
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// SVG charts from front, trajectory or HV-history CSVs.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// front, set, trajectory or hv; inferred from the header when omitted.
        #[arg(long)]
        kind: Option<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.optimization.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| config.output.clone());
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Validation("invalid --workers: must be >= 1".into()));
    }

    match cli.command {
        Command::Simulate { t_sd, t_ld } => {
            let args = SimulateArgs {
                t_sd,
                t_ld,
                dt: cli.dt,
                plot: cli.plot,
            };
            let s = commands::simulate(&config, &args, &out)?;
            println!("f1 (peak active cases) = {:.6}", s.f1);
            println!("f2 (GDP loss)          = {:.6}", s.f2);
            println!("GDP minimum            = {:.6}", s.gdp_min);
            if let Some(c) = s.dt_check {
                println!(
                    "max objective deviation vs dt = {}: {:.3e}",
                    c.reference_dt, c.max_deviation
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Optimize => {
            if let Some(dt) = cli.dt {
                config.scenario.dt = dt;
            }
            config.validate()?;
            let (campaign, manifest) = commands::optimize(&config, &out, workers, cli.plot)?;
            print!("{}", commands::campaign_summary(&campaign));
            let failed = manifest.runs.iter().filter(|r| r.error.is_some()).count();
            println!("wrote {} ({failed} failed runs)", out.join("manifest.json").display());
        }
        Command::Indicators { dir, reference } => {
            let dir = dir.unwrap_or(out);
            let report = commands::indicators(&config, &dir, reference.as_deref())?;
            print!("{}", report.table());
        }
        Command::FrontGrid { resolution } => {
            if let Some(dt) = cli.dt {
                config.scenario.dt = dt;
            }
            let front = commands::front_grid(&config, resolution, &out, workers)?;
            println!(
                "{} nondominated of {} grid points; wrote {}",
                front.len(),
                resolution * resolution,
                out.join("grid_front.csv").display()
            );
        }
        Command::Plot { inputs, kind } => {
            let kind: Option<PlotKind> = kind.map(|k| k.parse()).transpose()?;
            let target: Option<&Path> = cli.out.as_deref();
            for path in commands::plot(&inputs, kind, target)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
