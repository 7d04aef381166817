//! One sensor scan into an empty map, then a voxel traversal through the result.
//!
//! `cargo run --release --example mapping`

use faep::config::Config;
use faep::geom::Vec3;
use faep::voxel_map::{CellState, OccupancyGrid, SensorPose};
use faep::world::make_world;

fn main() -> Result<(), faep::error::Error> {
    let world = make_world("office")?;
    let cfg = Config::default();
    let mut grid = OccupancyGrid::new(world.bounds, cfg.resolution);
    let pose = SensorPose {
        position: world.start,
        yaw: world.start_yaw,
        fov_h: cfg.fov_h_deg.to_radians(),
        fov_v: cfg.fov_v_deg.to_radians(),
        max_range: cfg.max_range,
    };
    let changed = grid.integrate_scan(&pose, &world)?;
    println!("scan from {:?} changed {changed} cells", world.start.as_slice());
    println!("known volume {:.2} m^3 of {:.1} m^3", grid.known_volume(), world.bounds.volume());

    let ahead = world.start + Vec3::new(world.start_yaw.cos(), world.start_yaw.sin(), 0.0) * cfg.max_range;
    let cells = grid.raycast(&world.start, &ahead);
    let count = |s: CellState| cells.iter().filter(|&&c| grid.state(c) == Some(s)).count();
    println!(
        "ray straight ahead crosses {} cells: {} free, {} occupied, {} unknown",
        cells.len(),
        count(CellState::Free),
        count(CellState::Occupied),
        count(CellState::Unknown)
    );
    Ok(())
}
