use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use faep::bench::{error_exit_code, exit_code, run_bench, BenchOptions};
use faep::config::Config;

/// Runs seeded exploration episodes and writes per-run and summary CSVs.
#[derive(Parser, Debug)]
#[command(name = "faep-bench", version)]
struct Args {
    /// Fixture name or world file path.
    #[arg(long, default_value = "office")]
    world: String,
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sim-time limit per run (s).
    #[arg(long, default_value_t = 600.0)]
    max_time: f64,
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
    /// Write the first tour cost matrix of the first run here.
    #[arg(long)]
    dump_tsp: Option<PathBuf>,
    #[arg(long)]
    disable_edge_priority: bool,
    #[arg(long)]
    disable_bottom_ray: bool,
    #[arg(long)]
    disable_two_stage: bool,
    #[arg(long)]
    disable_guided: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut config = match &args.config {
        Some(p) => match Config::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    config.edge_priority &= !args.disable_edge_priority;
    config.bottom_ray &= !args.disable_bottom_ray;
    config.two_stage &= !args.disable_two_stage;
    config.guided &= !args.disable_guided;
    let opts = BenchOptions {
        world: args.world,
        config,
        runs: args.runs,
        seed: args.seed,
        max_time: args.max_time,
        out: args.out,
        dump_tsp: args.dump_tsp,
    };
    match run_bench(&opts) {
        Ok(runs) => {
            for (k, m) in runs.iter().enumerate() {
                println!(
                    "run {k}: {} in {:.1} s, {:.1} m, {:.1} m^3",
                    m.outcome.as_str(),
                    m.exploration_time,
                    m.flight_distance,
                    m.coverage
                );
            }
            ExitCode::from(exit_code(&runs) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
