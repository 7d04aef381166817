//! Simulated exploration runs.
//!
//! The vehicle tracks the commanded motion exactly. A depth sensor is integrated into the map
//! at a fixed rate and the planner is invoked according to the replanning rules in
//! [`crate::fsm`]. Planning time is charged to the sim clock: a motion planned at `now` with
//! budget `t_i` takes over at `now + t_i`.

use std::fmt::Write as _;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::Result;
use crate::fsm::{ExplorationPlanner, PlannedMotion, PlannerTick, ReplanPolicy, TickOutcome};
use crate::geom::Vec3;
use crate::path::trajectory_clear;
use crate::state::DroneState;
use crate::voxel_map::{CellIndex, OccupancyGrid, SensorPose};
use crate::world::TrueWorld;

/// Hover time after a Failed tick before planning again (s).
const FAILED_RETRY_DELAY: f64 = 0.5;
/// A run is abandoned after this long without a successful plan (s).
const STALL_LIMIT: f64 = 15.0;
/// Share of the target cluster's cells that must remain frontier for the target to stay valid.
const TARGET_ALIVE_FRACTION: f64 = 0.2;
const TIMELINE_PERIOD: f64 = 0.1;
const LIMIT_TOLERANCE: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Finished,
    Failed,
    TimedOut,
}

impl RunOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunOutcome::Finished => "Finished",
            RunOutcome::Failed => "Failed",
            RunOutcome::TimedOut => "TimedOut",
        }
    }
}

/// Why a planning tick was started.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// Less than the remaining horizon left on the current motion.
    RemainingTime,
    /// A new obstacle blocks the rest of the current motion.
    MapChange,
    /// The target cluster was mostly observed on the way.
    TargetVanished,
    /// Retry after an overrun.
    Retry,
    /// Retry after a Failed tick.
    AfterFailure,
}

impl Trigger {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trigger::RemainingTime => "remaining_time",
            Trigger::MapChange => "map_change",
            Trigger::TargetVanished => "target_vanished",
            Trigger::Retry => "retry",
            Trigger::AfterFailure => "after_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub index: usize,
    /// Sim time the tick started.
    pub time: f64,
    pub budget: f64,
    pub plan_ms: f64,
    pub outcome: TickOutcome,
    pub n_clusters: usize,
    pub target: Option<Vec3>,
    pub trigger: Trigger,
    /// Remaining duration of the active motion when the tick started.
    pub remaining: f64,
    /// Position and velocity mismatch at the swap instant (Committed ticks only).
    pub splice_error: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineSample {
    pub t: f64,
    pub position: Vec3,
    pub yaw: f64,
    pub distance: f64,
    pub coverage: f64,
    pub n_frontiers: usize,
}

/// Reaching (or abandoning for the next plan) a targeted viewpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub target: Vec3,
    pub known_volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub outcome: RunOutcome,
    pub exploration_time: f64,
    pub flight_distance: f64,
    pub coverage: f64,
    pub timeline: Vec<TimelineSample>,
    pub ticks: Vec<TickRecord>,
    pub arrivals: Vec<Arrival>,
    /// Samples inside an obstacle.
    pub collisions: usize,
    /// Samples exceeding a dynamic limit by more than 5%.
    pub limit_violations: usize,
    pub samples: usize,
    pub start: Vec3,
}

impl RunMetrics {
    /// CSV `t,x,y,z,yaw,dist_m,coverage_m3,n_frontiers`.
    pub fn timeline_csv(&self) -> String {
        let mut s = String::from("t,x,y,z,yaw,dist_m,coverage_m3,n_frontiers\n");
        for r in &self.timeline {
            let _ = writeln!(
                s,
                "{:.2},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{}",
                r.t, r.position.x, r.position.y, r.position.z, r.yaw, r.distance, r.coverage, r.n_frontiers
            );
        }
        s
    }

    /// CSV `tick,i,t_i,plan_ms,outcome,n_clusters,target_x,target_y,target_z`; `tick` is the
    /// sim time the tick started.
    pub fn events_csv(&self) -> String {
        let mut s = String::from("tick,i,t_i,plan_ms,outcome,n_clusters,target_x,target_y,target_z\n");
        for r in &self.ticks {
            let (x, y, z) = match r.target {
                Some(p) => (format!("{:.4}", p.x), format!("{:.4}", p.y), format!("{:.4}", p.z)),
                None => ("nan".into(), "nan".into(), "nan".into()),
            };
            let _ = writeln!(
                s,
                "{:.2},{},{:.4},{:.3},{},{},{x},{y},{z}",
                r.time,
                r.index,
                r.budget,
                r.plan_ms,
                r.outcome.as_str(),
                r.n_clusters
            );
        }
        s
    }
}

/// Start position with a seeded horizontal offset of up to `cfg.start_jitter` per axis.
pub fn jittered_start(world: &TrueWorld, cfg: &Config, seed: u64) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if cfg.start_jitter <= 0.0 {
        return world.start;
    }
    for _ in 0..20 {
        let dx = rng.random_range(-cfg.start_jitter..=cfg.start_jitter);
        let dy = rng.random_range(-cfg.start_jitter..=cfg.start_jitter);
        let p = world.start + Vec3::new(dx, dy, 0.0);
        let clear = world.bounds.contains(&p) && crate::voxel_map::neighbors_26().all(|d| {
            let q = p + Vec3::new(d[0] as f64, d[1] as f64, d[2] as f64) * cfg.resolution;
            !world.collides(&q)
        });
        if clear {
            return p;
        }
    }
    world.start
}

/// One exploration run on `world` until Finished, Failed or `max_time`.
pub struct Simulation<'w> {
    world: &'w TrueWorld,
    cfg: Config,
    grid: OccupancyGrid,
    planner: ExplorationPlanner,
    policy: ReplanPolicy,
    now: f64,
    current: PlannedMotion,
    pending: Option<PlannedMotion>,
    hold_until: f64,
    retry_budget: Option<f64>,
    last_success: f64,
    new_occupied: Vec<CellIndex>,
    changed: Option<(CellIndex, CellIndex)>,
    metrics: RunMetrics,
    next_scan: f64,
    next_sample: f64,
    steps: u64,
    prev: Vec3,
    started: bool,
}

impl<'w> Simulation<'w> {
    pub fn new(world: &'w TrueWorld, cfg: Config, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let grid = OccupancyGrid::new(world.bounds, cfg.resolution);
        let planner = ExplorationPlanner::new(cfg.clone(), &grid);
        let start = jittered_start(world, &cfg, seed);
        let s0 = DroneState::hover(start, world.start_yaw);
        let current = PlannedMotion::spin(&s0, 0.0, cfg.yaw_rate_max);
        Ok(Self {
            world,
            policy: ReplanPolicy::from_config(&cfg),
            cfg,
            grid,
            planner,
            now: 0.0,
            current,
            pending: None,
            hold_until: 0.0,
            retry_budget: None,
            last_success: 0.0,
            new_occupied: Vec::new(),
            changed: None,
            metrics: RunMetrics {
                outcome: RunOutcome::TimedOut,
                exploration_time: 0.0,
                flight_distance: 0.0,
                coverage: 0.0,
                timeline: Vec::new(),
                ticks: Vec::new(),
                arrivals: Vec::new(),
                collisions: 0,
                limit_violations: 0,
                samples: 0,
                start,
            },
            next_scan: 0.0,
            next_sample: 0.0,
            steps: 0,
            prev: start,
            started: false,
        })
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn planner(&self) -> &ExplorationPlanner {
        &self.planner
    }

    /// Motion committed by the last planning tick that has not started yet.
    pub fn pending_motion(&self) -> Option<&PlannedMotion> {
        self.pending.as_ref()
    }

    /// Commanded state at the current sim time.
    pub fn state(&self) -> DroneState {
        self.motion_at(self.now).state(self.now)
    }

    fn motion_at(&self, t: f64) -> &PlannedMotion {
        match &self.pending {
            Some(p) if t >= p.start_time => p,
            _ => &self.current,
        }
    }

    fn scan(&mut self) -> Result<()> {
        let s = self.state();
        let pose = SensorPose {
            position: s.position,
            yaw: s.yaw,
            fov_h: self.cfg.fov_h_deg.to_radians(),
            fov_v: self.cfg.fov_v_deg.to_radians(),
            max_range: self.cfg.max_range,
        };
        self.grid.integrate_scan(&pose, self.world)?;
        if let Some((lo, hi)) = self.grid.take_changed_region() {
            self.changed = Some(match self.changed {
                None => (lo, hi),
                Some((a, b)) => ([0, 1, 2].map(|i| a[i].min(lo[i])), [0, 1, 2].map(|i| b[i].max(hi[i]))),
            });
        }
        self.new_occupied.extend(self.grid.take_new_occupied());
        Ok(())
    }

    fn trigger(&mut self) -> Option<Trigger> {
        if self.pending.is_some() || self.now + 1e-9 < self.hold_until {
            return None;
        }
        if self.retry_budget.is_some() {
            return Some(Trigger::Retry);
        }
        if self.metrics.ticks.last().is_some_and(|t| t.outcome == TickOutcome::Failed) {
            return Some(Trigger::AfterFailure);
        }
        let remaining = self.current.end_time() - self.now;
        if remaining < self.policy.remaining_horizon {
            return Some(Trigger::RemainingTime);
        }
        if !self.new_occupied.is_empty() {
            self.new_occupied.clear();
            if !self.remaining_path_clear() {
                return Some(Trigger::MapChange);
            }
        }
        if !self.current.target_cells.is_empty() {
            let alive = self.current.target_cells.iter().filter(|&&c| self.grid.is_frontier(c)).count();
            if (alive as f64) < TARGET_ALIVE_FRACTION * self.current.target_cells.len() as f64 {
                return Some(Trigger::TargetVanished);
            }
        }
        None
    }

    fn remaining_path_clear(&self) -> bool {
        struct Rest<'a>(&'a PlannedMotion, f64);
        impl crate::path::TimedPath for Rest<'_> {
            fn duration(&self) -> f64 {
                (self.0.end_time() - self.1).max(0.0)
            }
            fn state(&self, t: f64) -> (Vec3, Vec3, Vec3) {
                let s = self.0.state(self.1 + t);
                (s.position, s.velocity, s.acceleration)
            }
        }
        let start = self.current.state(self.current.start_time).position;
        trajectory_clear(&Rest(&self.current, self.now), &self.grid, self.cfg.v_max, &start)
    }

    fn plan(&mut self, trigger: Trigger) {
        let budget = self.retry_budget.unwrap_or_else(|| self.policy.next_budget());
        let remaining = self.current.end_time() - self.now;
        if trigger == Trigger::RemainingTime {
            if let Some(vp) = self.current.target {
                self.planner.ban_viewpoint(&vp);
                self.metrics.arrivals.push(Arrival {
                    time: self.now,
                    target: vp.position,
                    known_volume: self.grid.known_volume(),
                });
            }
        }
        let swap = self.now + budget;
        let predicted = self.current.state(swap);
        let changed = self.changed.take();
        let tick: PlannerTick = self.planner.plan_iteration(&predicted, swap, &self.grid, changed, budget);
        let plan_s = tick.plan_ms * 1e-3;
        self.policy.record(plan_s);
        let mut record = TickRecord {
            index: tick.index,
            time: self.now,
            budget,
            plan_ms: tick.plan_ms,
            outcome: tick.outcome,
            n_clusters: tick.n_clusters,
            target: tick.target,
            trigger,
            remaining,
            splice_error: None,
        };
        match tick.outcome {
            TickOutcome::Committed => {
                let motion = tick.motion.expect("committed ticks carry a motion");
                let (a, b) = (self.current.state(swap), motion.state(swap));
                record.splice_error = Some(((a.position - b.position).norm(), (a.velocity - b.velocity).norm()));
                self.pending = Some(motion);
                self.retry_budget = None;
                self.last_success = self.now;
            }
            TickOutcome::Replanned => {
                if self.retry_budget.is_none() {
                    // never below what the budget rule gives for the time just measured
                    self.retry_budget = Some((2.0 * budget).max(self.policy.next_budget()));
                    self.hold_until = self.now + plan_s;
                } else {
                    // second overrun: finish the current motion (it ends at rest) and plan from hover
                    warn!("planning overran twice at t = {:.2}; waiting for the current motion to end", self.now);
                    self.retry_budget = None;
                    self.hold_until = self.current.end_time().max(self.now + plan_s);
                }
            }
            TickOutcome::Failed => {
                self.retry_budget = None;
                self.hold_until = self.now + FAILED_RETRY_DELAY;
            }
            TickOutcome::Finished => {}
        }
        self.metrics.ticks.push(record);
    }

    fn record_sample(&mut self) {
        let s = self.state();
        let rate = self.motion_at(self.now).yaw_rate(self.now);
        self.metrics.samples += 1;
        if self.world.collides(&s.position) {
            self.metrics.collisions += 1;
        }
        let lim = self.cfg.limits();
        if s.velocity.norm() > lim.v_max * LIMIT_TOLERANCE
            || s.acceleration.norm() > lim.a_max * LIMIT_TOLERANCE
            || rate.abs() > lim.yaw_rate_max * LIMIT_TOLERANCE
        {
            self.metrics.limit_violations += 1;
        }
    }

    /// Runs until the planner reports Finished, the run stalls, or `max_time` passes.
    pub fn run(self, max_time: f64) -> Result<RunMetrics> {
        Ok(self.run_inner(max_time, false)?.0)
    }

    /// Like [`Simulation::run`], also returning the text of the first tour cost matrix built.
    pub fn run_capturing_first_matrix(self, max_time: f64) -> Result<(RunMetrics, Option<String>)> {
        self.run_inner(max_time, true)
    }

    fn run_inner(mut self, max_time: f64, capture: bool) -> Result<(RunMetrics, Option<String>)> {
        let mut matrix = None;
        loop {
            let outcome = self.step(max_time)?;
            if capture && matrix.is_none() {
                matrix = self.planner.last_problem().map(|p| p.matrix.to_text());
            }
            if let Some(o) = outcome {
                self.finish(o);
                break;
            }
        }
        Ok((self.metrics, matrix))
    }

    /// Advances until `t` (or an earlier end of the run). Returns the run outcome if it ended.
    pub fn run_until(&mut self, t: f64) -> Result<Option<RunOutcome>> {
        loop {
            if let Some(o) = self.step(t)? {
                if o != RunOutcome::TimedOut {
                    self.finish(o);
                    return Ok(Some(o));
                }
                return Ok(None);
            }
        }
    }

    /// One simulation step: sensing, sampling, replanning, then motion over `sim_dt`.
    /// Returns `Some` when the run ends; `TimedOut` once `max_time` is reached.
    fn step(&mut self, max_time: f64) -> Result<Option<RunOutcome>> {
        if !self.started {
            self.started = true;
            self.record_sample();
        }
        let dt = self.cfg.sim_dt;
        let scan_period = 1.0 / self.cfg.sensor_rate;
        if let Some(p) = &self.pending {
            if self.now + 1e-9 >= p.start_time {
                self.current = self.pending.take().expect("checked above");
            }
        }
        if self.now + 1e-9 >= self.next_scan {
            self.scan()?;
            self.next_scan += scan_period;
        }
        if self.now + 1e-9 >= self.next_sample {
            let s = self.state();
            self.metrics.timeline.push(TimelineSample {
                t: self.now,
                position: s.position,
                yaw: s.yaw,
                distance: self.metrics.flight_distance,
                coverage: self.grid.known_volume(),
                n_frontiers: self.planner.frontier().active_clusters().len(),
            });
            self.next_sample += TIMELINE_PERIOD;
        }
        if let Some(trigger) = self.trigger() {
            self.plan(trigger);
            if self.metrics.ticks.last().is_some_and(|t| t.outcome == TickOutcome::Finished) {
                return Ok(Some(RunOutcome::Finished));
            }
        }
        if self.now - self.last_success > STALL_LIMIT && self.now >= self.current.end_time() {
            warn!("no successful plan for {STALL_LIMIT} s; giving up");
            return Ok(Some(RunOutcome::Failed));
        }
        if self.now >= max_time {
            return Ok(Some(RunOutcome::TimedOut));
        }
        // advance with a midpoint collision sample
        let mid = self.now + 0.5 * dt;
        if self.world.collides(&self.motion_at(mid).state(mid).position) {
            self.metrics.collisions += 1;
        }
        self.steps += 1;
        self.now = self.steps as f64 * dt;
        let p = self.state().position;
        self.metrics.flight_distance += (p - self.prev).norm();
        self.prev = p;
        self.record_sample();
        Ok(None)
    }

    fn finish(&mut self, outcome: RunOutcome) {
        self.metrics.outcome = outcome;
        self.metrics.exploration_time = self.now;
        self.metrics.coverage = self.grid.known_volume();
        info!(
            "{} after {:.1} s: {:.1} m flown, {:.1} m^3 known, {} ticks",
            outcome.as_str(),
            self.now,
            self.metrics.flight_distance,
            self.metrics.coverage,
            self.metrics.ticks.len()
        );
    }
}

/// Convenience wrapper: one run with the given config and seed.
pub fn run_exploration(world: &TrueWorld, cfg: &Config, seed: u64, max_time: f64) -> Result<RunMetrics> {
    Simulation::new(world, cfg.clone(), seed)?.run(max_time)
}

