//! Visiting order over the frontier clusters: cost matrix, heuristic tour and exact optimum.
//!
//! `cargo run --release --example tour`

use faep::atsp::{held_karp, tour_cost};
use faep::config::Config;
use faep::frontier::FrontierManager;
use faep::state::DroneState;
use faep::tour::{build_cost_matrix, solve_tour};
use faep::voxel_map::{OccupancyGrid, SensorPose};
use faep::world::make_world;

fn main() -> Result<(), faep::error::Error> {
    let world = make_world("outdoor")?;
    let cfg = Config::default();
    let mut grid = OccupancyGrid::new(world.bounds, cfg.resolution);
    for k in 0..8 {
        let pose = SensorPose {
            position: world.start,
            yaw: k as f64 * std::f64::consts::FRAC_PI_4,
            fov_h: cfg.fov_h_deg.to_radians(),
            fov_v: cfg.fov_v_deg.to_radians(),
            max_range: cfg.max_range,
        };
        grid.integrate_scan(&pose, &world)?;
    }
    let mut frontier = FrontierManager::new(cfg.frontier(), &grid);
    frontier.detect_all(&grid);
    let clusters = frontier.active_clusters();
    let state = DroneState::hover(world.start, world.start_yaw);
    let problem = build_cost_matrix(&state, &clusters, &grid, &cfg.tour(), &cfg.limits());
    let m = &problem.matrix;
    println!("{} clusters in the tour, {} dropped", problem.cluster_ids.len(), problem.dropped.len());
    for k in 1..=m.n {
        println!("  vehicle -> cluster {:>3}: {:.3}", problem.cluster_ids[k - 1], m.get(0, k));
    }
    let tour = solve_tour(m);
    let ids: Vec<u64> = tour.iter().map(|&k| problem.cluster_ids[k - 1]).collect();
    println!("heuristic order {ids:?}, cost {:.3}", tour_cost(m, &tour));
    if m.n <= 12 {
        let (best, cost) = held_karp(m);
        let ids: Vec<u64> = best.iter().map(|&k| problem.cluster_ids[k - 1]).collect();
        println!("optimal order   {ids:?}, cost {cost:.3}");
    }
    Ok(())
}
