//! Frontier clusters and their viewpoints after a few scans of the office.
//!
//! `cargo run --release --example frontiers`

use faep::config::Config;
use faep::frontier::FrontierManager;
use faep::geom::Vec3;
use faep::voxel_map::{OccupancyGrid, SensorPose};
use faep::world::make_world;

fn main() -> Result<(), faep::error::Error> {
    let world = make_world("office")?;
    let cfg = Config::default();
    let mut grid = OccupancyGrid::new(world.bounds, cfg.resolution);
    let mut frontier = FrontierManager::new(cfg.frontier(), &grid);
    // a full turn in place, one scan every 45 degrees, updating the clusters incrementally
    for k in 0..8 {
        let pose = SensorPose {
            position: world.start,
            yaw: k as f64 * std::f64::consts::FRAC_PI_4,
            fov_h: cfg.fov_h_deg.to_radians(),
            fov_v: cfg.fov_v_deg.to_radians(),
            max_range: cfg.max_range,
        };
        grid.integrate_scan(&pose, &world)?;
        let changed = grid.take_changed_region();
        frontier.update(&grid, changed);
    }
    println!("{} clusters, {} with viewpoints", frontier.clusters().len(), frontier.active_clusters().len());
    for c in frontier.active_clusters() {
        let vp = c.best_viewpoint().expect("active clusters have viewpoints");
        println!(
            "cluster {:>3}: {:>4} cells around {}, best viewpoint {} yaw {:+.2} covering {}",
            c.id,
            c.cells.len(),
            fmt(&c.average),
            fmt(&vp.position),
            vp.yaw,
            vp.coverage_count
        );
    }
    Ok(())
}

fn fmt(p: &Vec3) -> String {
    format!("({:.2}, {:.2}, {:.2})", p.x, p.y, p.z)
}
