//! Full exploration run on a fixture, with safety and coverage checks.
//!
//! `cargo run --release --example explore -- office 0 [max_time_s]`

use faep::config::Config;
use faep::fsm::TickOutcome;
use faep::sim::run_exploration;
use faep::world::make_world;

fn main() -> Result<(), faep::error::Error> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "office".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let max_time: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1200.0);
    let world = make_world(&name)?;
    let cfg = Config::default();
    let m = run_exploration(&world, &cfg, seed, max_time)?;
    let reachable = world.reachable_volume(cfg.resolution);
    let count = |o: TickOutcome| m.ticks.iter().filter(|t| t.outcome == o).count();
    println!("outcome        {}", m.outcome.as_str());
    println!("time           {:.1} s", m.exploration_time);
    println!("distance       {:.1} m", m.flight_distance);
    println!("coverage       {:.1} m^3 ({:.1}% of {:.1} reachable)", m.coverage, 100.0 * m.coverage / reachable, reachable);
    println!(
        "ticks          {} committed, {} overrun, {} failed",
        count(TickOutcome::Committed),
        count(TickOutcome::Replanned),
        count(TickOutcome::Failed)
    );
    println!("collisions     {}", m.collisions);
    println!("limit excess   {} of {} samples", m.limit_violations, m.samples);
    let worst = m.ticks.iter().filter_map(|t| t.splice_error).fold(0.0f64, |a, (p, v)| a.max(p).max(v));
    println!("splice error   {worst:.2e}");
    let max_ms = m.ticks.iter().map(|t| t.plan_ms).fold(0.0, f64::max);
    println!("max plan time  {max_ms:.1} ms");
    Ok(())
}
