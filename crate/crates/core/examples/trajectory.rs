//! Position planning out of a room: geometric path, guided kinodynamic search with and without
//! guidance, and the refined B-spline.
//!
//! `cargo run --release --example trajectory`

use faep::config::Config;
use faep::geom::Vec3;
use faep::path::astar::astar_geometric;
use faep::path::kinodynamic::{guided_search, KinoConfig};
use faep::path::{closed_form_optimal, prune_path, refine_bspline, TimedPath};
use faep::state::DroneState;
use faep::voxel_map::OccupancyGrid;
use faep::world::make_world;

fn main() -> Result<(), faep::error::Error> {
    let world = make_world("room_exit")?;
    let cfg = Config::default();
    let lim = cfg.limits();
    let mut grid = OccupancyGrid::new(world.bounds, cfg.resolution);
    world.rasterize(&mut grid);
    let goal = Vec3::new(6.2, 6.5, 1.0);

    let raw = astar_geometric(&world.start, &goal, &grid)?;
    let guide = prune_path(&raw.points, &grid);
    println!("A*: {:.2} m over {} cells, pruned to {} waypoints", raw.length, raw.cells.len(), guide.waypoints.len());

    let guided = cfg.kino();
    let unguided = KinoConfig { lambda: [guided.lambda[0], 0.0, 0.0], ..guided.clone() };
    let kino = guided_search(world.start, Vec3::zeros(), goal, &guide, &grid, &lim, &guided)?;
    println!("guided search: {} expansions, {} primitives", kino.expanded, kino.primitives.len());
    match guided_search(world.start, Vec3::zeros(), goal, &guide, &grid, &lim, &unguided) {
        Ok(p) => println!("unguided search: {} expansions", p.expanded),
        Err(e) => println!("unguided search failed: {e}"),
    }

    let start = DroneState::hover(world.start, world.start_yaw);
    let refined = refine_bspline(&kino, &start, 0.0, &grid, &lim, &cfg.refine())?;
    let t = &refined.trajectory;
    println!(
        "B-spline: {:.2} s, {} control points, max control speed {:.2} m/s, accel {:.2} m/s^2",
        t.duration(),
        t.control_points.len(),
        t.max_control_speed(),
        t.max_control_accel()
    );

    let hop = closed_form_optimal(world.start, Vec3::zeros(), world.start + Vec3::new(2.0, 0.0, 0.0), Vec3::zeros(), &lim, 0.0, 10.0);
    println!("closed-form 2 m hop: {:.2} s, peak speed {:.2} m/s", hop.duration, hop.max_speed());
    Ok(())
}
