use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beamplace::coverage_graph::{run_stage1, Stage1Config};
use beamplace::error::{Error, Result};
use beamplace::scenario::{run, write_outputs, Algorithm, ScenarioConfig};
use beamplace::{balancer, example1};

/// Beam placement for a single non-geostationary satellite.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo scenario and write results to a directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated subset of two_stage, stage1_only, beam_aperture, homo_balance.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<Algorithm>>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Plan the ten-user worked example and print its partition.
    Example1,
    /// Check a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            trials,
            seed,
            algorithms,
            workers,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(t) = trials {
                cfg.n_trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(a) = algorithms {
                cfg.algorithms = a;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            cfg.validate()?;
            log::info!(
                "running {} trial(s) for K in {:?}",
                cfg.n_trials,
                cfg.user_counts()
            );
            let doc = run(&cfg)?;
            write_outputs(&doc, &out)?;
            for row in &doc.summary {
                println!(
                    "{:<14} K={:<3} min_cnr={:8.3} dB  avg_cnr={:8.3} dB  load_gap={:6.3}  beams={:6.3}",
                    row.algorithm.name(),
                    row.n_users,
                    row.min_cnr_db,
                    row.avg_cnr_db,
                    row.avg_load_gap,
                    row.avg_n_beams
                );
            }
            if let Some(v) = doc.violations.first() {
                return Err(Error::Infeasible(format!(
                    "{} plan(s) exceed the beam limit, first: {} K={} trial {} uses {} > {}",
                    doc.violations.len(),
                    v.algorithm,
                    v.n_users,
                    v.trial,
                    v.n_beams,
                    v.max_beams
                )));
            }
            Ok(())
        }
        Command::Example1 => {
            let users = example1::users();
            let g = example1::graph()?;
            let s1 = run_stage1(&g, &users, &Stage1Config::default())?;
            let refined = balancer::refine(&s1.plan, &users, &g, &Default::default())?;
            let show = |name: &str, plan: &beamplace::coverage_graph::BeamPlan| {
                let groups: Vec<String> = plan
                    .partition()
                    .iter()
                    .map(|b| {
                        let ids: Vec<String> = b.iter().map(|k| (k + 1).to_string()).collect();
                        format!("{{{}}}", ids.join(","))
                    })
                    .collect();
                println!("{name}: {} beams {}", plan.n_beams(), groups.join(" "));
            };
            show("stage1", &s1.plan);
            show("two_stage", &refined.plan);
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            println!(
                "ok: K in {:?}, {} trial(s), {} algorithm(s)",
                cfg.user_counts(),
                cfg.n_trials,
                cfg.algorithms.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BEAM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
