use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use ocsim::io::{self, RunConfig};
use ocsim::scenario::{self, DemandScenario, Strategy};
use ocsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ocsim",
    version,
    about = "Oxygen concentrator epidemic and supply chain simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    /// Base seed; replication k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to `output.dir` from the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replications: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every demand scenario and strategy listed in a grid file.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare modeled infectious counts with reported cases.
    Validate {
        config: PathBuf,
        #[arg(long)]
        actuals: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the fulfillment table of a finished run or sweep.
    Report { out_dir: PathBuf },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Grid {
    #[serde(default = "all_scenarios")]
    demand_scenarios: Vec<DemandScenario>,
    #[serde(default = "all_strategies")]
    strategies: Vec<Strategy>,
}

fn all_scenarios() -> Vec<DemandScenario> {
    DemandScenario::ALL.to_vec()
}

fn all_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn load(config: &Path, o: &Overrides) -> Result<(RunConfig, PathBuf, PathBuf)> {
    let (mut cfg, base) = RunConfig::load(config)?;
    if let Some(s) = o.seed {
        cfg.scenario.seed = s;
    }
    if let Some(r) = o.replications {
        cfg.scenario.replications = r;
    }
    cfg.validate()?;
    let out = o.out.clone().unwrap_or_else(|| {
        if cfg.output.dir.is_absolute() {
            cfg.output.dir.clone()
        } else {
            base.join(&cfg.output.dir)
        }
    });
    Ok((cfg, base, out))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let (cfg, base, out) = load(&config, &overrides)?;
            let inputs = io::load_inputs(&cfg, &base)?;
            let run = scenario::run_scenario(&cfg.spec()?, &inputs)?;
            io::emit_outputs(&out, &run)?;
            let row = io::ReportRow::from(&run.report);
            print!("{}", io::render_table(&[row]));
            println!("outputs written to {}", out.display());
        }
        Command::Sweep {
            config,
            grid,
            overrides,
        } => {
            let (cfg, base, out) = load(&config, &overrides)?;
            let text = std::fs::read_to_string(&grid)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", grid.display())))?;
            let grid: Grid = toml::from_str(&text).map_err(|e| Error::Config(e.message().to_string()))?;
            if grid.demand_scenarios.is_empty() || grid.strategies.is_empty() {
                return Err(Error::Config("grid lists no scenarios or no strategies".into()));
            }
            let inputs = io::load_inputs(&cfg, &base)?;
            let reports = scenario::run_matrix(
                &inputs,
                &grid.demand_scenarios,
                &grid.strategies,
                cfg.horizon()?,
                cfg.scenario.seed,
                cfg.scenario.replications,
            )?;
            io::emit_sweep(&out, &reports)?;
            let rows: Vec<io::ReportRow> = reports.iter().map(io::ReportRow::from).collect();
            print!("{}", io::render_table(&rows));
            println!("outputs written to {}", out.display());
        }
        Command::Validate {
            config,
            actuals,
            overrides,
        } => {
            let (cfg, base, out) = load(&config, &overrides)?;
            let inputs = io::load_inputs(&cfg, &base)?;
            let reported = io::load_actuals(&cfg, &base, actuals.as_deref())?;
            let demand =
                scenario::generate_demand(&inputs, cfg.scenario.demand_scenario, cfg.horizon()?, cfg.scenario.seed)?;
            let mut model = std::collections::BTreeMap::<String, Vec<f64>>::new();
            for e in &demand.epidemic {
                model
                    .entry(e.region_id.clone())
                    .or_default()
                    .push(e.infectious_count as f64);
            }
            let fits = io::validate_against_actuals(&model, &reported)?;
            io::write_fit(&out.join("fit.csv"), &fits)?;
            println!(
                "{:<8}{:>6}{:>12}{:>14}{:>8}",
                "region", "days", "MAPE %", "RMSE", "peak"
            );
            for f in &fits {
                let mape = f.mape.map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
                println!(
                    "{:<8}{:>6}{:>12}{:>14.1}{:>8}",
                    f.region_id, f.days, mape, f.rmse, f.peak_day_offset
                );
            }
        }
        Command::Report { out_dir } => {
            let rows = io::read_report(&out_dir.join("report.csv"))?;
            print!("{}", io::render_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ocsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
