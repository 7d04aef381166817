//! Multi-run benchmark: per-run CSVs plus avg/std/max/min summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::sim::{RunMetrics, RunOutcome, Simulation};
use crate::world::{make_world, TrueWorld};

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub world: String,
    pub config: Config,
    pub runs: usize,
    pub seed: u64,
    pub max_time: f64,
    pub out: PathBuf,
    pub dump_tsp: Option<PathBuf>,
}

/// Fixture name, or a path to a world file.
pub fn load_world(name: &str) -> Result<TrueWorld> {
    let path = Path::new(name);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
        return TrueWorld::parse(stem, &text);
    }
    make_world(name)
}

/// `(avg, population std, max, min)`.
pub fn stats(xs: &[f64]) -> (f64, f64, f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let avg = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / n;
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    (avg, var.sqrt(), max, min)
}

/// CSV `metric,avg,std,max,min` over exploration time, flight distance and coverage.
pub fn summary_csv(runs: &[RunMetrics]) -> String {
    let mut s = String::from("metric,avg,std,max,min\n");
    let rows: [(&str, fn(&RunMetrics) -> f64); 3] = [
        ("exploration_time_s", |m| m.exploration_time),
        ("flight_distance_m", |m| m.flight_distance),
        ("coverage_m3", |m| m.coverage),
    ];
    for (name, f) in rows {
        let xs: Vec<f64> = runs.iter().map(f).collect();
        let (avg, std, max, min) = stats(&xs);
        let _ = writeln!(s, "{name},{avg:.4},{std:.4},{max:.4},{min:.4}");
    }
    s
}

/// Runs the benchmark and writes the CSVs. Returns the per-run metrics.
pub fn run_bench(opts: &BenchOptions) -> Result<Vec<RunMetrics>> {
    opts.config.validate()?;
    let world = load_world(&opts.world)?;
    fs::create_dir_all(&opts.out)?;
    let mut all = Vec::with_capacity(opts.runs);
    for k in 0..opts.runs {
        let seed = opts.seed.wrapping_add(k as u64);
        info!("run {k} on '{}' with seed {seed}", world.name);
        let sim = Simulation::new(&world, opts.config.clone(), seed)?;
        let (metrics, matrix) = if k == 0 && opts.dump_tsp.is_some() {
            sim.run_capturing_first_matrix(opts.max_time)?
        } else {
            (sim.run(opts.max_time)?, None)
        };
        if let (Some(path), Some(text)) = (&opts.dump_tsp, matrix) {
            fs::write(path, text)?;
        }
        fs::write(opts.out.join(format!("run_{k}.csv")), metrics.timeline_csv())?;
        fs::write(opts.out.join(format!("events_{k}.csv")), metrics.events_csv())?;
        all.push(metrics);
    }
    fs::write(opts.out.join("summary.csv"), summary_csv(&all))?;
    Ok(all)
}

/// Process exit code for a finished benchmark: 0 when every run Finished.
pub fn exit_code(runs: &[RunMetrics]) -> i32 {
    if runs.iter().all(|m| m.outcome == RunOutcome::Finished) {
        0
    } else {
        1
    }
}

/// Exit code for an error raised before or during the runs.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::UnknownWorld { .. } | Error::WorldFile { .. } => 2,
        _ => 1,
    }
}
