//! Yaw planning along a flight.
//!
//! When other viewpoints near the flight direction are visible from the start, the yaw sweeps
//! first to the one that needs the largest turn and then to the target yaw (two stages).
//! Otherwise it turns straight to the target yaw. Each stage is a uniform cubic B-spline
//! optimised for smoothness, endpoint agreement and rate/acceleration limits.

use crate::bspline;
use crate::error::{Error, Result};
use crate::frontier::Viewpoint;
use crate::geom::{angle_between, signed_yaw_delta, wrap_angle, yaw_distance, Vec3};
use crate::optim::gradient_descent;
use crate::state::{DroneState, DynamicLimits};
use crate::voxel_map::OccupancyGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct HeadingConfig {
    /// Safety factor on the minimum heading time.
    pub tau: f64,
    /// Radius for viewpoints considered on the way (m).
    pub local_radius: f64,
    /// Weights: smoothness, start residual, end residual, feasibility.
    pub gamma: [f64; 4],
    /// Target knot span of the yaw spline (s).
    pub knot_span: f64,
    pub max_iterations: usize,
    pub two_stage: bool,
}

impl Default for HeadingConfig {
    fn default() -> Self {
        Self {
            tau: 1.3,
            local_radius: 6.0,
            gamma: [1.0, 100.0, 100.0, 10.0],
            knot_span: 0.3,
            max_iterations: 300,
            two_stage: true,
        }
    }
}

/// Uniform cubic B-spline over unwrapped yaw.
#[derive(Debug, Clone, PartialEq)]
pub struct YawTrajectory {
    pub control_points: Vec<f64>,
    pub knot_span: f64,
    /// False when the optimiser hit its iteration cap.
    pub converged: bool,
    pub iterations: usize,
}

impl YawTrajectory {
    /// Constant-rate turn from `start` to the unwrapped value `end`.
    pub fn linear(start: f64, end: f64, duration: f64, knot_target: f64) -> Self {
        let n_cps = control_point_count(duration, knot_target);
        let spans = n_cps - 3;
        let dt = duration / spans as f64;
        let d = (end - start) / spans as f64;
        Self {
            control_points: (0..n_cps).map(|i| start + (i as f64 - 1.0) * d).collect(),
            knot_span: dt,
            converged: true,
            iterations: 0,
        }
    }

    pub fn duration(&self) -> f64 {
        (self.control_points.len() - 3) as f64 * self.knot_span
    }

    /// Unwrapped yaw, yaw rate and yaw acceleration.
    pub fn eval_unwrapped(&self, t: f64) -> (f64, f64, f64) {
        bspline::eval(&self.control_points, self.knot_span, t)
    }

    /// Wrapped yaw, yaw rate, yaw acceleration.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (y, r, a) = self.eval_unwrapped(t);
        (wrap_angle(y), r, a)
    }

    pub fn max_control_rate(&self) -> f64 {
        bspline::velocity_points(&self.control_points, self.knot_span)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

fn control_point_count(duration: f64, knot_target: f64) -> usize {
    (((duration / knot_target).ceil() as usize) + 3).max(6)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadingMode {
    Single,
    TwoStage { middle_yaw: f64, ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadingPlan {
    pub mode: HeadingMode,
    pub segments: Vec<YawTrajectory>,
}

impl HeadingPlan {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration()).sum()
    }

    /// Time at which the first segment ends (the full duration in single mode).
    pub fn boundary_time(&self) -> f64 {
        self.segments[0].duration()
    }

    /// Wrapped yaw, yaw rate and yaw acceleration at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let mut t = t.max(0.0);
        for (k, s) in self.segments.iter().enumerate() {
            if t <= s.duration() || k + 1 == self.segments.len() {
                return s.eval(t);
            }
            t -= s.duration();
        }
        unreachable!("a heading plan has at least one segment")
    }

    /// CSV `t,yaw` sampled at 100 Hz.
    pub fn debug_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("t,yaw\n");
        let n = (self.duration() * 100.0).ceil() as usize;
        for k in 0..=n {
            let t = (k as f64 * 0.01).min(self.duration());
            let _ = writeln!(s, "{t:.2},{:.6}", self.eval(t).0);
        }
        s
    }
}

/// Viewpoints closer than `radius`, visible from `p0` and less than 90 degrees off the
/// direction to the target.
pub fn viewpoints_in_local(
    vps: &[Viewpoint],
    v_n: &Viewpoint,
    p0: &Vec3,
    grid: &OccupancyGrid,
    radius: f64,
) -> Vec<Viewpoint> {
    let to_target = v_n.position - p0;
    vps.iter()
        .filter(|v| {
            let d = v.position - p0;
            if d.norm() >= radius {
                return false;
            }
            if d.norm() > 1e-9 && to_target.norm() > 1e-9 && angle_between(&d, &to_target) >= std::f64::consts::FRAC_PI_2 {
                return false;
            }
            grid.line_of_sight(p0, &v.position)
        })
        .copied()
        .collect()
}

/// Yaw of the viewpoint needing the largest wrapped turn from `yaw0`; ties go to the viewpoint
/// nearest `p0`.
pub fn find_middle_yaw(local: &[Viewpoint], yaw0: f64, p0: &Vec3) -> Result<f64> {
    if local.len() < 2 {
        return Err(Error::NotEnoughViewpoints(local.len()));
    }
    let mut best = &local[0];
    for v in &local[1..] {
        let (a, b) = (yaw_distance(yaw0, v.yaw), yaw_distance(yaw0, best.yaw));
        if a > b + 1e-12 || ((a - b).abs() <= 1e-12 && (v.position - p0).norm() < (best.position - p0).norm()) {
            best = v;
        }
    }
    Ok(best.yaw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageTiming {
    pub t1: f64,
    pub t2: f64,
    pub t_min: f64,
    /// Share of the flight spent on the first turn.
    pub ratio: f64,
}

impl TwoStageTiming {
    pub fn is_degenerate(&self) -> bool {
        self.t1 + self.t2 <= 0.0
    }
}

pub fn two_stage_min_time(yaw0: f64, yaw_m: f64, yaw_n: f64, yaw_rate_max: f64, tau: f64) -> TwoStageTiming {
    let t1 = yaw_distance(yaw0, yaw_m) / yaw_rate_max;
    let t2 = yaw_distance(yaw_m, yaw_n) / yaw_rate_max;
    let t_min = tau * (t1 + t2);
    let ratio = if t_min > 0.0 { t1 / t_min } else { 0.0 };
    TwoStageTiming { t1, t2, t_min, ratio }
}

/// Minimum time for a direct turn, with the same safety factor.
pub fn single_min_time(yaw0: f64, yaw_n: f64, yaw_rate_max: f64, tau: f64) -> f64 {
    tau * yaw_distance(yaw0, yaw_n) / yaw_rate_max
}

/// Everything decided before the position trajectory is known.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadingDecision {
    pub local: Vec<Viewpoint>,
    /// Middle yaw and timing when two stages apply.
    pub two_stage: Option<(f64, TwoStageTiming)>,
    pub single_t_min: f64,
}

impl HeadingDecision {
    /// Lower bound on the flight duration requested from the position planner.
    pub fn t_min(&self) -> f64 {
        match &self.two_stage {
            Some((_, t)) => t.t_min,
            None => self.single_t_min,
        }
    }
}

pub fn prepare_heading(
    vps: &[Viewpoint],
    v_n: &Viewpoint,
    state: &DroneState,
    grid: &OccupancyGrid,
    lim: &DynamicLimits,
    cfg: &HeadingConfig,
) -> HeadingDecision {
    let local = viewpoints_in_local(vps, v_n, &state.position, grid, cfg.local_radius);
    let single_t_min = single_min_time(state.yaw, v_n.yaw, lim.yaw_rate_max, cfg.tau);
    let two_stage = if cfg.two_stage && local.len() > 1 {
        find_middle_yaw(&local, state.yaw, &state.position).ok().and_then(|m| {
            let t = two_stage_min_time(state.yaw, m, v_n.yaw, lim.yaw_rate_max, cfg.tau);
            (!t.is_degenerate()).then_some((m, t))
        })
    } else {
        None
    };
    HeadingDecision { local, two_stage, single_t_min }
}

/// Yaw plan of total duration `t_real` from `yaw0` to `yaw_n`.
pub fn plan_heading_with(
    decision: &HeadingDecision,
    yaw0: f64,
    yaw_n: f64,
    t_real: f64,
    lim: &DynamicLimits,
    cfg: &HeadingConfig,
) -> HeadingPlan {
    if let Some((m, timing)) = decision.two_stage {
        if t_real >= timing.t_min {
            let t1 = t_real * timing.ratio;
            let s1 = optimize_yaw(yaw0, m, t1, lim, cfg);
            let s2 = optimize_yaw(m, yaw_n, t_real - t1, lim, cfg);
            return HeadingPlan {
                mode: HeadingMode::TwoStage { middle_yaw: m, ratio: timing.ratio },
                segments: vec![s1, s2],
            };
        }
    }
    HeadingPlan {
        mode: HeadingMode::Single,
        segments: vec![optimize_yaw(yaw0, yaw_n, t_real, lim, cfg)],
    }
}

pub fn plan_heading(
    vps: &[Viewpoint],
    v_n: &Viewpoint,
    state: &DroneState,
    grid: &OccupancyGrid,
    t_real: f64,
    lim: &DynamicLimits,
    cfg: &HeadingConfig,
) -> HeadingPlan {
    let d = prepare_heading(vps, v_n, state, grid, lim, cfg);
    plan_heading_with(&d, state.yaw, v_n.yaw, t_real, lim, cfg)
}

/// Cost and gradient of the yaw spline objective over all control points.
pub fn yaw_cost(
    cps: &[f64],
    dt: f64,
    start: f64,
    end: f64,
    lim: &DynamicLimits,
    gamma: &[f64; 4],
) -> (f64, Vec<f64>) {
    let n = cps.len();
    let mut g = vec![0.0; n];
    let mut cost = 0.0;
    for i in 0..n - 3 {
        let j = cps[i + 3] - 3.0 * cps[i + 2] + 3.0 * cps[i + 1] - cps[i];
        cost += gamma[0] * j * j;
        let gj = 2.0 * gamma[0] * j;
        g[i + 3] += gj;
        g[i + 2] -= 3.0 * gj;
        g[i + 1] += 3.0 * gj;
        g[i] -= gj;
    }
    let r0 = (cps[0] + 4.0 * cps[1] + cps[2]) / 6.0 - start;
    cost += gamma[1] * r0 * r0;
    for (k, w) in [(0, 1.0), (1, 4.0), (2, 1.0)] {
        g[k] += 2.0 * gamma[1] * r0 * w / 6.0;
    }
    let r1 = (cps[n - 3] + 4.0 * cps[n - 2] + cps[n - 1]) / 6.0 - end;
    cost += gamma[2] * r1 * r1;
    for (k, w) in [(n - 3, 1.0), (n - 2, 4.0), (n - 1, 1.0)] {
        g[k] += 2.0 * gamma[2] * r1 * w / 6.0;
    }
    for i in 0..n - 1 {
        let v = (cps[i + 1] - cps[i]) / dt;
        let e = v.abs() - lim.yaw_rate_max;
        if e > 0.0 {
            cost += gamma[3] * e * e;
            let gv = 2.0 * gamma[3] * e * v.signum() / dt;
            g[i + 1] += gv;
            g[i] -= gv;
        }
    }
    for i in 0..n - 2 {
        let a = (cps[i + 2] - 2.0 * cps[i + 1] + cps[i]) / (dt * dt);
        let e = a.abs() - lim.yaw_accel_max;
        if e > 0.0 {
            cost += gamma[3] * e * e;
            let ga = 2.0 * gamma[3] * e * a.signum() / (dt * dt);
            g[i + 2] += ga;
            g[i + 1] -= 2.0 * ga;
            g[i] += ga;
        }
    }
    (cost, g)
}

/// Optimised yaw spline turning the short way from `start` to `end` in `duration` seconds.
pub fn optimize_yaw(start: f64, end: f64, duration: f64, lim: &DynamicLimits, cfg: &HeadingConfig) -> YawTrajectory {
    let duration = duration.max(1e-3);
    let end_unwrapped = start + signed_yaw_delta(start, end);
    let init = YawTrajectory::linear(start, end_unwrapped, duration, cfg.knot_span);
    let dt = init.knot_span;
    let m = gradient_descent(
        init.control_points,
        |x| yaw_cost(x, dt, start, end_unwrapped, lim, &cfg.gamma),
        cfg.max_iterations,
        1e-9,
    );
    YawTrajectory {
        control_points: m.x,
        knot_span: dt,
        converged: m.converged,
        iterations: m.iterations,
    }
}
