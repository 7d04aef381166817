//! Two-stage heading: turning towards an extra viewpoint on the way to the target.
//!
//! `cargo run --release --example heading`

use faep::config::Config;
use faep::frontier::Viewpoint;
use faep::geom::Vec3;
use faep::heading::{plan_heading_with, prepare_heading, HeadingMode};
use faep::state::DroneState;
use faep::voxel_map::{CellState, ExplorationBounds, OccupancyGrid};

fn main() -> Result<(), faep::error::Error> {
    let cfg = Config::default();
    let mut grid = OccupancyGrid::new(ExplorationBounds::new(Vec3::zeros(), Vec3::new(20.0, 20.0, 3.0))?, cfg.resolution);
    for i in 0..grid.len() {
        let c = grid.unlinear(i);
        grid.set(c, CellState::Free);
    }
    let state = DroneState::hover(Vec3::new(5.0, 10.0, 1.5), 0.0);
    let vp = |x: f64, y: f64, yaw: f64| Viewpoint { position: Vec3::new(x, y, 1.5), yaw, coverage_count: 5 };
    let vps = [vp(7.0, 11.0, 1.2), vp(8.0, 9.0, -0.4), vp(9.0, 10.0, 0.3)];
    let target = vps[2];
    let (lim, hcfg) = (cfg.limits(), cfg.heading());

    let decision = prepare_heading(&vps, &target, &state, &grid, &lim, &hcfg);
    println!("{} viewpoints on the way, minimum heading time {:.3} s", decision.local.len(), decision.t_min());
    let t_real = 1.2 * decision.t_min();
    let plan = plan_heading_with(&decision, state.yaw, target.yaw, t_real, &lim, &hcfg);
    match plan.mode {
        HeadingMode::TwoStage { middle_yaw, ratio } => {
            let at = plan.boundary_time();
            println!("two stages via yaw {middle_yaw:+.3} rad, first stage {:.0}% of the flight", 100.0 * ratio);
            println!("yaw at the stage boundary ({at:.2} s): {:+.3} rad", plan.eval(at).0);
        }
        HeadingMode::Single => println!("single turn"),
    }
    for k in 0..=10 {
        let t = t_real * k as f64 / 10.0;
        let (yaw, rate, _) = plan.eval(t);
        println!("  t {t:5.2} s  yaw {yaw:+.3}  rate {rate:+.3}");
    }
    Ok(())
}
