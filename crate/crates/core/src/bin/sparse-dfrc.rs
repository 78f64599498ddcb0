use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use sparse_dfrc::experiment::{solve_scenario, sweep_k, sweep_m};
use sparse_dfrc::io::{write_design, write_sweep, Provenance};
use sparse_dfrc::scenario::load_scenario;
use sparse_dfrc::{DfrcError, Scenario};

#[derive(Parser)]
#[command(name = "sparse-dfrc", version, about = "Sparse DFRC transmit array design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design one K-antenna array and write report.json, beampattern.csv, history.csv
    Solve(Common),
    /// Proposed vs random selection over a list of K
    SweepK {
        #[command(flatten)]
        common: Common,
        /// Comma-separated K values (default: M..=N)
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
    },
    /// Fixed K over a list of user counts
    SweepM {
        #[command(flatten)]
        common: Common,
        /// Comma-separated M values
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4])]
        m: Vec<usize>,
    },
    /// Load and validate a scenario, print its summary
    CheckConfig(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo trials for the random baseline
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

impl Common {
    fn load(&self) -> Result<(Scenario, Provenance), DfrcError> {
        if self.parallel == 0 {
            return Err(DfrcError::Config("--parallel must be at least 1".into()));
        }
        let mut scenario = load_scenario(&self.scenario)?;
        let hash = scenario.hash();
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        let mut prov = Provenance::new(hash, scenario.seed);
        prov.git_commit = git_commit();
        Ok((scenario, prov))
    }
}

fn git_commit() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn run(cli: Cli) -> Result<(), DfrcError> {
    match cli.command {
        Command::Solve(c) => {
            let (scenario, prov) = c.load()?;
            let design = solve_scenario(&scenario, c.parallel)?;
            for path in write_design(&c.out, &design, &scenario, &prov)? {
                info!("wrote {}", path.display());
            }
            let r = &design.report;
            println!("support {:?}", r.support);
            println!("tx_power {}", r.tx_power);
            println!("msrr {} ({} dB)", r.msrr, r.msrr_db);
            println!("sinr_db {:?}", r.sinr_db);
            if !r.feasibility.feasible {
                return Err(DfrcError::Infeasible {
                    context: "refit design violates constraints".into(),
                    worst: Vec::new(),
                });
            }
        }
        Command::SweepK { common: c, k } => {
            let (scenario, prov) = c.load()?;
            let ks = if k.is_empty() {
                (scenario.num_users().min(scenario.array.num_antennas)..=scenario.array.num_antennas).collect()
            } else {
                k
            };
            let rows = sweep_k(&scenario, &ks, c.trials, c.parallel)?;
            println!("wrote {}", write_sweep(&c.out, "K", &rows, &prov)?.display());
        }
        Command::SweepM { common: c, m } => {
            let (scenario, prov) = c.load()?;
            let rows = sweep_m(&scenario, &m, c.trials, c.parallel)?;
            println!("wrote {}", write_sweep(&c.out, "M", &rows, &prov)?.display());
        }
        Command::CheckConfig(c) => {
            let (scenario, prov) = c.load()?;
            let problem = scenario.assemble()?;
            println!("scenario_hash {}", prov.scenario_hash);
            println!("N {} M {} K {}", problem.num_antennas(), problem.num_users(), scenario.num_selected);
            println!("constraints {}", problem.len());
            if let Some(w) = scenario.admm_config(1).premise_warning(scenario.admm.eta, problem.len()) {
                println!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_infeasible() { 2 } else { 1 })
        }
    }
}
