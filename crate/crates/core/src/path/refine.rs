//! B-spline refinement of a searched or closed-form trajectory.

use nalgebra::{DMatrix, DVector};

use crate::bspline;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::optim::gradient_descent;
use crate::state::{DroneState, DynamicLimits};
use crate::voxel_map::OccupancyGrid;

use super::{trajectory_clear, TimedPath};

#[derive(Debug, Clone)]
pub struct RefineConfig {
    /// Target knot span (s).
    pub knot_span: f64,
    /// Clearance penalty activates closer than this to an Occupied cell (m).
    pub clearance: f64,
    pub w_smooth: f64,
    pub w_clearance: f64,
    pub w_feasibility: f64,
    pub max_iterations: usize,
    /// Allowed overshoot of the control-point velocity/acceleration bounds.
    pub feasibility_tolerance: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            knot_span: 0.2,
            clearance: 0.4,
            w_smooth: 10.0,
            w_clearance: 10.0,
            w_feasibility: 10.0,
            max_iterations: 100,
            feasibility_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionTrajectory {
    pub control_points: Vec<Vec3>,
    pub knot_span: f64,
}

impl PositionTrajectory {
    /// Holds `p` for `duration` seconds.
    pub fn hover(p: Vec3, duration: f64) -> Self {
        let spans = 3usize;
        Self {
            control_points: vec![p; spans + 3],
            knot_span: duration.max(1e-3) / spans as f64,
        }
    }

    pub fn max_control_speed(&self) -> f64 {
        bspline::velocity_points(&self.control_points, self.knot_span)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_control_accel(&self) -> f64 {
        bspline::acceleration_points(&self.control_points, self.knot_span)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// CSV `t,x,y,z,vx,vy,vz` sampled at 100 Hz.
    pub fn debug_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("t,x,y,z,vx,vy,vz\n");
        let n = (self.duration() * 100.0).ceil() as usize;
        for k in 0..=n {
            let t = (k as f64 * 0.01).min(self.duration());
            let (p, v, _) = self.state(t);
            let _ = writeln!(s, "{t:.2},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}", p.x, p.y, p.z, v.x, v.y, v.z);
        }
        s
    }
}

impl TimedPath for PositionTrajectory {
    fn duration(&self) -> f64 {
        (self.control_points.len() - 3) as f64 * self.knot_span
    }

    fn state(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        bspline::eval(&self.control_points, self.knot_span, t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub trajectory: PositionTrajectory,
    /// False when the optimised spline was rejected and a plain fit was used instead.
    pub refined: bool,
    pub iterations: usize,
}

/// Smoothness, clearance and feasibility cost over the free (interior) control points.
///
/// The first three control points pin the start state and the last three pin the goal at rest.
pub struct SplineProblem<'a> {
    pub head: [Vec3; 3],
    pub tail: Vec3,
    pub knot_span: f64,
    pub grid: &'a OccupancyGrid,
    pub lim: DynamicLimits,
    pub cfg: RefineConfig,
}

impl SplineProblem<'_> {
    pub fn assemble(&self, x: &[f64]) -> Vec<Vec3> {
        let mut cps: Vec<Vec3> = self.head.to_vec();
        cps.extend(x.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])));
        cps.extend([self.tail; 3]);
        cps
    }

    pub fn cost(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let cps = self.assemble(x);
        let n = cps.len();
        let dt = self.knot_span;
        let mut grad = vec![Vec3::zeros(); n];
        let mut cost = 0.0;

        for i in 0..n.saturating_sub(3) {
            let j = cps[i + 3] - cps[i + 2] * 3.0 + cps[i + 1] * 3.0 - cps[i];
            cost += self.cfg.w_smooth * j.norm_squared();
            let gj = j * (2.0 * self.cfg.w_smooth);
            grad[i + 3] += gj;
            grad[i + 2] -= gj * 3.0;
            grad[i + 1] += gj * 3.0;
            grad[i] -= gj;
        }

        let d0 = self.cfg.clearance;
        for i in 3..n - 3 {
            if let Some((d, diff)) = self.grid.nearest_occupied(&cps[i], d0) {
                if d < d0 && d > 1e-9 {
                    let e = d0 - d;
                    cost += self.cfg.w_clearance * e * e;
                    grad[i] -= diff * (2.0 * self.cfg.w_clearance * e / d);
                }
            }
        }

        let wf = self.cfg.w_feasibility;
        for i in 0..n - 1 {
            let v = (cps[i + 1] - cps[i]) / dt;
            let s = v.norm();
            if s > self.lim.v_max {
                let e = s - self.lim.v_max;
                cost += wf * e * e;
                let g = v * (2.0 * wf * e / (s * dt));
                grad[i + 1] += g;
                grad[i] -= g;
            }
        }
        for i in 0..n - 2 {
            let a = (cps[i + 2] - cps[i + 1] * 2.0 + cps[i]) / (dt * dt);
            let s = a.norm();
            if s > self.lim.a_max {
                let e = s - self.lim.a_max;
                cost += wf * e * e;
                let g = a * (2.0 * wf * e / (s * dt * dt));
                grad[i + 2] += g;
                grad[i + 1] -= g * 2.0;
                grad[i] += g;
            }
        }

        let free: Vec<f64> = grad[3..n - 3].iter().flat_map(|g| [g.x, g.y, g.z]).collect();
        (cost, free)
    }
}

/// Fits and optimises a uniform cubic B-spline following `input`, starting exactly at `start`
/// and ending at rest at the input's final position.
///
/// The duration is `max(input duration, t_min)`; extra time is spent hovering at the goal.
pub fn refine_bspline(
    input: &dyn TimedPath,
    start: &DroneState,
    t_min: f64,
    grid: &OccupancyGrid,
    lim: &DynamicLimits,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    let base = input.duration().max(t_min);
    let goal = input.state(input.duration()).0;
    let try_fit = |stretch: f64, optimise: bool| -> (PositionTrajectory, usize) {
        let total = (base * stretch).max(3.0 * cfg.knot_span);
        let spans = ((total / cfg.knot_span).ceil() as usize).max(3);
        let dt = total / spans as f64;
        let head = bspline::start_control_points(start.position, start.velocity, start.acceleration, dt);
        let n_cps = spans + 3;
        let n_free = n_cps - 6;
        let sample = |t: f64| input.state((t / stretch).min(input.duration())).0;
        let x0 = least_squares_fit(&head, goal, n_cps, dt, total, sample);
        let problem = SplineProblem {
            head,
            tail: goal,
            knot_span: dt,
            grid,
            lim: *lim,
            cfg: cfg.clone(),
        };
        if !optimise || n_free == 0 {
            return (
                PositionTrajectory {
                    control_points: problem.assemble(&x0),
                    knot_span: dt,
                },
                0,
            );
        }
        let m = gradient_descent(x0, |x| problem.cost(x), cfg.max_iterations, 1e-8);
        (
            PositionTrajectory {
                control_points: problem.assemble(&m.x),
                knot_span: dt,
            },
            m.iterations,
        )
    };
    let valid = |t: &PositionTrajectory| {
        t.max_control_speed() <= lim.v_max * (1.0 + cfg.feasibility_tolerance)
            && t.max_control_accel() <= lim.a_max * (1.0 + cfg.feasibility_tolerance)
            && trajectory_clear(t, grid, lim.v_max, &start.position)
    };

    let (opt, iterations) = try_fit(1.0, true);
    if valid(&opt) {
        return Ok(RefineOutcome { trajectory: opt, refined: true, iterations });
    }
    for stretch in [1.0, 1.3, 1.6, 2.0] {
        let (fit, _) = try_fit(stretch, false);
        if valid(&fit) {
            return Ok(RefineOutcome { trajectory: fit, refined: false, iterations });
        }
        let (opt, it) = try_fit(stretch, true);
        if stretch > 1.0 && valid(&opt) {
            return Ok(RefineOutcome { trajectory: opt, refined: true, iterations: iterations + it });
        }
    }
    Err(Error::NoPath)
}

/// Least-squares interior control points reproducing `sample` on `[0, total]`.
fn least_squares_fit<F: Fn(f64) -> Vec3>(head: &[Vec3; 3], tail: Vec3, n_cps: usize, dt: f64, total: f64, sample: F) -> Vec<f64> {
    let n_free = n_cps - 6;
    if n_free == 0 {
        return Vec::new();
    }
    let m = 4 * (n_cps - 3) + 1;
    let mut a = DMatrix::<f64>::zeros(m, n_free);
    let mut b = DMatrix::<f64>::zeros(m, 3);
    for k in 0..m {
        let t = total * k as f64 / (m - 1) as f64;
        let target = sample(t);
        let (j, w) = bspline::basis(n_cps, dt, t);
        let mut rhs = target;
        for (q, wq) in w.iter().enumerate() {
            let idx = j + q;
            if idx < 3 {
                rhs -= head[idx] * *wq;
            } else if idx >= n_cps - 3 {
                rhs -= tail * *wq;
            } else {
                a[(k, idx - 3)] += wq;
            }
        }
        for d in 0..3 {
            b[(k, d)] = rhs[d];
        }
    }
    let mut ata = a.transpose() * &a;
    for i in 0..n_free {
        ata[(i, i)] += 1e-9;
    }
    let atb = a.transpose() * b;
    let sol = ata
        .cholesky()
        .map(|c| c.solve(&atb))
        .unwrap_or_else(|| DMatrix::zeros(n_free, 3));
    let mut out = Vec::with_capacity(3 * n_free);
    for i in 0..n_free {
        let row: DVector<f64> = sol.row(i).transpose();
        out.extend([row[0], row[1], row[2]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::closed_form::closed_form_optimal;
    use crate::voxel_map::{CellState, ExplorationBounds};

    fn open_grid() -> OccupancyGrid {
        let mut g = OccupancyGrid::new(ExplorationBounds::new(Vec3::zeros(), Vec3::new(8.0, 4.0, 2.0)).unwrap(), 0.15);
        for i in 0..g.len() {
            let c = g.unlinear(i);
            g.set(c, CellState::Free);
        }
        g
    }

    #[test]
    fn straight_input_gives_collinear_control_points() {
        let g = open_grid();
        let lim = DynamicLimits::default();
        let a = Vec3::new(1.0, 2.0, 1.0);
        let b = Vec3::new(6.0, 2.0, 1.0);
        let cf = closed_form_optimal(a, Vec3::zeros(), b, Vec3::zeros(), &lim, 0.0, 10.0);
        let out = refine_bspline(&cf, &DroneState::hover(a, 0.0), 0.0, &g, &lim, &RefineConfig::default()).unwrap();
        for c in &out.trajectory.control_points {
            assert!((c.y - 2.0).abs() < 1e-3 && (c.z - 1.0).abs() < 1e-3);
        }
        let (p, v, _) = out.trajectory.state(out.trajectory.duration());
        assert!((p - b).norm() < 1e-9 && v.norm() < 1e-9);
    }

    #[test]
    fn duration_floor_extends_the_trajectory() {
        let g = open_grid();
        let lim = DynamicLimits::default();
        let a = Vec3::new(1.0, 2.0, 1.0);
        let cf = closed_form_optimal(a, Vec3::zeros(), Vec3::new(1.6, 2.0, 1.0), Vec3::zeros(), &lim, 0.0, 10.0);
        assert!(cf.duration < 4.084);
        let out = refine_bspline(&cf, &DroneState::hover(a, 0.0), 4.084, &g, &lim, &RefineConfig::default()).unwrap();
        assert!(out.trajectory.duration() >= 4.084 - 1e-12);
    }

    #[test]
    fn start_state_is_reproduced() {
        let g = open_grid();
        let lim = DynamicLimits::default();
        let s = DroneState {
            position: Vec3::new(1.0, 1.0, 1.0),
            yaw: 0.0,
            velocity: Vec3::new(0.8, 0.3, 0.0),
            acceleration: Vec3::new(0.1, -0.2, 0.0),
        };
        let cf = closed_form_optimal(s.position, s.velocity, Vec3::new(5.0, 3.0, 1.2), Vec3::zeros(), &lim, 0.0, 10.0);
        let out = refine_bspline(&cf, &s, 0.0, &g, &lim, &RefineConfig::default()).unwrap();
        let (p, v, a) = out.trajectory.state(0.0);
        assert!((p - s.position).norm() < 1e-6);
        assert!((v - s.velocity).norm() < 1e-6);
        assert!((a - s.acceleration).norm() < 1e-6);
    }
}
