//! Receding-horizon exploration planner.
//!
//! Each tick plans from the state the vehicle will have `t_i` seconds in the future, where
//! `t_i = max(rho * t_{i-1}, t_min)` and `t_{i-1}` is the previous tick's planning time. If the
//! planning time fits in `t_i` the new motion replaces the old one at that instant.

use std::collections::HashMap;
use std::time::Instant;

use log::{debug, warn};

use crate::config::{Config, PlanningClock};
use crate::error::{Error, Result};
use crate::frontier::{FrontierManager, Viewpoint};
use crate::geom::Vec3;
use crate::heading::{plan_heading_with, prepare_heading, HeadingMode, HeadingPlan, YawTrajectory};
use crate::path::astar::{astar_with_budget, lengths_from, take_expansions, Reach, DEFAULT_MAX_EXPANSIONS};
use crate::path::{
    closed_form_optimal, guided_search, prune_path, refine_bspline, segment_clear, trajectory_clear, use_closed_form, PositionTrajectory,
    SegmentChain, TimedPath,
};
use crate::state::DroneState;
use crate::tour::{build_cost_matrix_with, solve_tour, PathQuery, TourProblem};
use crate::voxel_map::{CellIndex, OccupancyGrid};

/// `t_i = max(rho * t_{i-1}, t_min)`.
pub fn next_budget(last_plan_time: f64, rho: f64, t_min: f64) -> f64 {
    (rho * last_plan_time.max(0.0)).max(t_min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplanPolicy {
    pub rho: f64,
    pub t_min: f64,
    /// Replan when less than this much of the current motion remains (s).
    pub remaining_horizon: f64,
    pub last_plan_time: f64,
}

impl ReplanPolicy {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            rho: cfg.rho,
            t_min: cfg.t_min,
            remaining_horizon: cfg.remaining_horizon,
            last_plan_time: 0.0,
        }
    }

    pub fn next_budget(&self) -> f64 {
        next_budget(self.last_plan_time, self.rho, self.t_min)
    }

    pub fn record(&mut self, plan_time: f64) {
        self.last_plan_time = plan_time;
    }

    /// Remaining-time rule plus the two safety triggers.
    pub fn should_replan(&self, now: f64, motion_end: f64, map_changed_near_path: bool, target_vanished: bool) -> bool {
        motion_end - now < self.remaining_horizon || map_changed_near_path || target_vanished
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOutcome {
    Committed,
    Replanned,
    Finished,
    Failed,
}

impl TickOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            TickOutcome::Committed => "Committed",
            TickOutcome::Replanned => "Replanned",
            TickOutcome::Finished => "Finished",
            TickOutcome::Failed => "Failed",
        }
    }
}

/// Position and heading over absolute sim time, starting at `start_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedMotion {
    pub start_time: f64,
    pub position: PositionTrajectory,
    pub heading: HeadingPlan,
    pub target: Option<Viewpoint>,
    pub target_cluster: Option<u64>,
    /// Frontier cells of the target cluster when the motion was planned.
    pub target_cells: Vec<CellIndex>,
}

impl PlannedMotion {
    pub fn hover(state: &DroneState, start_time: f64, duration: f64) -> Self {
        let yaw = YawTrajectory::linear(state.yaw, state.yaw, duration, duration / 3.0);
        Self::untargeted(start_time, PositionTrajectory::hover(state.position, duration), yaw)
    }

    /// Full turn in place at 80% of the yaw rate limit.
    pub fn spin(state: &DroneState, start_time: f64, yaw_rate_max: f64) -> Self {
        let turn = 2.0 * std::f64::consts::PI;
        let duration = turn / (0.8 * yaw_rate_max);
        let yaw = YawTrajectory::linear(state.yaw, state.yaw + turn, duration, 0.3);
        Self::untargeted(start_time, PositionTrajectory::hover(state.position, duration), yaw)
    }

    fn untargeted(start_time: f64, position: PositionTrajectory, yaw: YawTrajectory) -> Self {
        Self {
            start_time,
            position,
            heading: HeadingPlan {
                mode: HeadingMode::Single,
                segments: vec![yaw],
            },
            target: None,
            target_cluster: None,
            target_cells: Vec::new(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.position.duration().max(self.heading.duration())
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration()
    }

    /// Commanded state at absolute time `t` (clamped to the motion).
    pub fn state(&self, t: f64) -> DroneState {
        let local = (t - self.start_time).clamp(0.0, self.duration());
        let (p, v, a) = self.position.state(local);
        DroneState {
            position: p,
            yaw: self.heading.eval(local).0,
            velocity: v,
            acceleration: a,
        }
    }

    pub fn yaw_rate(&self, t: f64) -> f64 {
        let local = (t - self.start_time).clamp(0.0, self.duration());
        self.heading.eval(local).1
    }
}

/// Record of one planning iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerTick {
    pub index: usize,
    /// Budget `t_i` (s).
    pub budget: f64,
    pub start_state: DroneState,
    /// Cluster ids in visiting order.
    pub tour: Vec<u64>,
    pub motion: Option<PlannedMotion>,
    pub plan_ms: f64,
    pub outcome: TickOutcome,
    pub n_clusters: usize,
    pub target: Option<Vec3>,
}

// Modeled planning clock, microseconds per unit of work.
const BASE_US: f64 = 2000.0;
const FRONTIER_UNIT_US: f64 = 0.1;
const ASTAR_EXPANSION_US: f64 = 0.5;
const KINO_EXPANSION_US: f64 = 10.0;
const POSITION_OPT_US: f64 = 1.0;
const YAW_OPT_US: f64 = 0.2;
const ATSP_UNIT_US: f64 = 0.01;

/// Expansion cap per cluster-to-cluster search.
const BETWEEN_MAX_EXPANSIONS: usize = 4_000;
/// Cluster pairs farther apart than this are not searched (m).
const BETWEEN_SEARCH_RADIUS: f64 = 5.0;
/// Expansion cap for the single search from the vehicle to all clusters.
const VEHICLE_SWEEP_EXPANSIONS: usize = 60_000;
/// Estimated path length over straight-line distance when the capped search gives up.
const DETOUR_ESTIMATE: f64 = 1.5;
/// Cached cluster-to-cluster lengths are recomputed after this many ticks.
const CACHE_MAX_AGE: usize = 10;
/// Endpoint quantization of the path-length cache (m).
const CACHE_KEY_STEP: f64 = 0.3;
/// Ticks a straight-segment clearance result is kept.
const CLEARANCE_MAX_AGE: usize = 50;
/// Targets tried per tick, in tour order.
const TARGET_ATTEMPTS: usize = 3;
/// A viewpoint that failed this many times is banned.
const FAILURES_BEFORE_BAN: usize = 2;

fn endpoint_key(p: &Vec3) -> [i64; 3] {
    [p.x, p.y, p.z].map(|v| (v * 1e6).round() as i64)
}

/// Cache key that also matches endpoints within [`CACHE_KEY_STEP`] of each other.
fn coarse_pair_key(a: &Vec3, b: &Vec3) -> ([i64; 3], [i64; 3]) {
    let q = |p: &Vec3| [p.x, p.y, p.z].map(|v| (v / CACHE_KEY_STEP).floor() as i64);
    let (ka, kb) = (q(a), q(b));
    if ka <= kb {
        (ka, kb)
    } else {
        (kb, ka)
    }
}

#[derive(Debug, Clone)]
struct CachedLength {
    cells: Vec<CellIndex>,
    length: Option<f64>,
    tick: usize,
}

#[derive(Debug, Default)]
struct Work {
    frontier: u64,
    astar: u64,
    kino: u64,
    position_opt: u64,
    yaw_opt: u64,
    atsp: u64,
}

impl Work {
    fn micros(&self) -> f64 {
        BASE_US
            + FRONTIER_UNIT_US * self.frontier as f64
            + ASTAR_EXPANSION_US * self.astar as f64
            + KINO_EXPANSION_US * self.kino as f64
            + POSITION_OPT_US * self.position_opt as f64
            + YAW_OPT_US * self.yaw_opt as f64
            + ATSP_UNIT_US * self.atsp as f64
    }
}

/// Frontier bookkeeping, tour selection and trajectory generation for one run.
pub struct ExplorationPlanner {
    cfg: Config,
    frontier: FrontierManager,
    cache: HashMap<([i64; 3], [i64; 3]), CachedLength>,
    clearance: ClearanceCache,
    failures: Vec<(Viewpoint, usize)>,
    last_problem: Option<TourProblem>,
    ticks: usize,
}

impl ExplorationPlanner {
    pub fn new(cfg: Config, grid: &OccupancyGrid) -> Self {
        let frontier = FrontierManager::new(cfg.frontier(), grid);
        Self {
            cfg,
            frontier,
            cache: HashMap::new(),
            clearance: ClearanceCache::default(),
            failures: Vec::new(),
            last_problem: None,
            ticks: 0,
        }
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn frontier(&self) -> &FrontierManager {
        &self.frontier
    }

    /// Tour problem of the most recent tick that reached the tour stage.
    pub fn last_problem(&self) -> Option<&TourProblem> {
        self.last_problem.as_ref()
    }

    /// Runs one planning iteration from `start`, whose motion would begin at `start_time`.
    ///
    /// `changed` is the box of cells modified since the previous call.
    pub fn plan_iteration(
        &mut self,
        start: &DroneState,
        start_time: f64,
        grid: &OccupancyGrid,
        changed: Option<(CellIndex, CellIndex)>,
        budget: f64,
    ) -> PlannerTick {
        let wall = Instant::now();
        take_expansions();
        let mut work = Work::default();
        let index = self.ticks;
        self.ticks += 1;

        self.frontier.update(grid, changed);
        self.clearance.note_change(self.ticks, changed);
        work.frontier += self.frontier.take_work();
        let n_clusters = self.frontier.active_clusters().len();
        let mut tick = PlannerTick {
            index,
            budget,
            start_state: *start,
            tour: Vec::new(),
            motion: None,
            plan_ms: 0.0,
            outcome: TickOutcome::Failed,
            n_clusters,
            target: None,
        };

        if n_clusters == 0 {
            tick.outcome = TickOutcome::Finished;
        } else {
            let problem = self.build_problem(start, grid);
            work.astar += take_expansions();
            let n = problem.cluster_ids.len();
            work.atsp += (n * n * n) as u64;
            let order = solve_tour(&problem.matrix);
            tick.tour = order.iter().map(|&k| problem.cluster_ids[k - 1]).collect();
            for &k in order.iter().take(TARGET_ATTEMPTS) {
                let vp = problem.viewpoints[k - 1];
                let cluster = problem.cluster_ids[k - 1];
                match self.plan_to(start, &problem.viewpoints, &vp, grid, &mut work) {
                    Ok((position, heading)) => {
                        let target_cells = self.frontier.cluster(cluster).map(|c| c.cells.clone()).unwrap_or_default();
                        tick.motion = Some(PlannedMotion {
                            start_time,
                            position,
                            heading,
                            target: Some(vp),
                            target_cluster: Some(cluster),
                            target_cells,
                        });
                        tick.target = Some(vp.position);
                        break;
                    }
                    Err(e) => {
                        debug!("tick {index}: no trajectory to cluster {cluster}: {e}");
                        self.note_failure(&vp);
                    }
                }
            }
            if tick.motion.is_none() && n == 0 {
                warn!("tick {index}: every cluster is unreachable");
            }
            self.last_problem = Some(problem);
        }

        work.astar += take_expansions();
        let seconds = match self.cfg.planning_clock {
            PlanningClock::Modeled => work.micros() * 1e-6,
            PlanningClock::Wall => wall.elapsed().as_secs_f64(),
        };
        tick.plan_ms = seconds * 1e3;
        debug!("tick {index}: {:.1} ms, clusters {n_clusters}, {work:?}", tick.plan_ms);
        if let Some(m) = &tick.motion {
            let end = m.position.duration();
            debug!(
                "tick {index}: motion {:.2} s, heading {:.2} s, {:.2} m, yaw {:.2} -> {:.2}",
                end,
                m.heading.duration(),
                (m.state(start_time + end).position - start.position).norm(),
                start.yaw,
                m.target.map_or(f64::NAN, |v| v.yaw)
            );
        }
        if tick.outcome != TickOutcome::Finished && tick.motion.is_some() {
            tick.outcome = if seconds <= budget {
                TickOutcome::Committed
            } else {
                TickOutcome::Replanned
            };
        }
        tick
    }

    fn build_problem(&mut self, start: &DroneState, grid: &OccupancyGrid) -> TourProblem {
        let tick = self.ticks;
        let active = self.frontier.active_clusters();
        let points: Vec<Vec3> = active.iter().filter_map(|c| c.best_viewpoint()).map(|v| v.position).collect();
        let between = pairwise_lengths(&points, grid, &mut self.cache, &mut self.clearance, tick);
        let from_vehicle = vehicle_lengths(&start.position, &points, grid);
        let mut oracle = |a: &Vec3, b: &Vec3, q: PathQuery| -> Option<f64> {
            let known = match q {
                PathQuery::Between(..) => between.get(&pair_key(a, b)),
                PathQuery::FromVehicle(_) => from_vehicle.get(&endpoint_key(b)),
            };
            match known {
                Some(len) => *len,
                None => astar_with_budget(a, b, grid, DEFAULT_MAX_EXPANSIONS).ok().map(|p| p.length),
            }
        };
        let lim = self.cfg.limits();
        let problem = build_cost_matrix_with(start, &active, grid, &self.cfg.tour(), &lim, &mut oracle);
        let dropped: Vec<Viewpoint> = problem
            .dropped
            .iter()
            .filter_map(|id| self.frontier.cluster(*id).and_then(|c| c.best_viewpoint()).copied())
            .collect();
        for vp in dropped {
            self.frontier.ban_viewpoint(&vp);
        }
        self.cache.retain(|_, c| tick - c.tick <= CACHE_MAX_AGE);
        self.clearance.prune(tick);
        problem
    }

    fn note_failure(&mut self, vp: &Viewpoint) {
        let count = match self.failures.iter_mut().find(|(v, _)| v == vp) {
            Some((_, n)) => {
                *n += 1;
                *n
            }
            None => {
                self.failures.push((*vp, 1));
                1
            }
        };
        if count >= FAILURES_BEFORE_BAN {
            warn!("banning viewpoint ({:.2}, {:.2}, {:.2}) after repeated failures", vp.position.x, vp.position.y, vp.position.z);
            self.frontier.ban_viewpoint(vp);
        }
    }

    /// Bans a viewpoint outright (used after arriving at it).
    pub fn ban_viewpoint(&mut self, vp: &Viewpoint) {
        self.frontier.ban_viewpoint(vp);
    }

    fn plan_to(
        &self,
        start: &DroneState,
        vps: &[Viewpoint],
        vp: &Viewpoint,
        grid: &OccupancyGrid,
        work: &mut Work,
    ) -> Result<(PositionTrajectory, HeadingPlan)> {
        let lim = self.cfg.limits();
        let hcfg = self.cfg.heading();
        let decision = prepare_heading(vps, vp, start, grid, &lim, &hcfg);
        let t_floor = decision.t_min();

        let raw = astar_with_budget(&start.position, &vp.position, grid, DEFAULT_MAX_EXPANSIONS)?;
        let gp = prune_path(&raw.points, grid);
        let w = self.cfg.closed_form_time_weight;

        let mut input: Option<Box<dyn TimedPath>> = None;
        if use_closed_form(&gp) {
            let cf = closed_form_optimal(start.position, start.velocity, vp.position, Vec3::zeros(), &lim, t_floor, w);
            if trajectory_clear(&cf, grid, lim.v_max, &start.position) {
                input = Some(Box::new(cf));
            }
        }
        if input.is_none() {
            match guided_search(start.position, start.velocity, vp.position, &gp, grid, &lim, &self.cfg.kino()) {
                Ok(kp) => {
                    work.kino += kp.expanded as u64;
                    input = Some(Box::new(kp));
                }
                Err(e) => {
                    if let Error::SearchFailed { expanded } = e {
                        work.kino += expanded as u64;
                    }
                    let chain = SegmentChain::through(&gp.waypoints, start.velocity, &lim, w);
                    if !trajectory_clear(&chain, grid, lim.v_max, &start.position) {
                        return Err(e);
                    }
                    input = Some(Box::new(chain));
                }
            }
        }
        let input = input.expect("set by one of the branches above");
        let out = refine_bspline(input.as_ref(), start, t_floor, grid, &lim, &self.cfg.refine())?;
        work.position_opt += (out.iterations * out.trajectory.control_points.len()) as u64;
        let heading = plan_heading_with(&decision, start.yaw, vp.yaw, out.trajectory.duration(), &lim, &hcfg);
        work.yaw_opt += heading.segments.iter().map(|s| (s.iterations * s.control_points.len()) as u64).sum::<u64>();
        Ok((out.trajectory, heading))
    }
}

/// Straight-segment clearance results, kept until a later map change touches the segment.
#[derive(Debug, Clone, Default)]
struct ClearanceCache {
    entries: HashMap<([i64; 3], [i64; 3]), (bool, usize)>,
    /// Changed cell boxes by tick.
    changes: Vec<(usize, CellIndex, CellIndex)>,
}

impl ClearanceCache {
    fn note_change(&mut self, tick: usize, changed: Option<(CellIndex, CellIndex)>) {
        if let Some((lo, hi)) = changed {
            self.changes.push((tick, lo, hi));
        }
    }

    /// Same answer as [`segment_clear`] from `a`. Passability of a cell depends on its
    /// 26-neighbourhood only, so a result stays valid while no change lands within two cells
    /// of the segment's box.
    fn segment_clear(&mut self, grid: &OccupancyGrid, a: &Vec3, b: &Vec3, tick: usize) -> bool {
        let (Some(ca), Some(cb)) = (grid.cell_of(a), grid.cell_of(b)) else {
            return false;
        };
        let key = (endpoint_key(a), endpoint_key(b));
        let lo = [0, 1, 2].map(|i| ca[i].min(cb[i]) - 2);
        let hi = [0, 1, 2].map(|i| ca[i].max(cb[i]) + 2);
        if let Some(&(clear, at)) = self.entries.get(&key) {
            let touched = self
                .changes
                .iter()
                .any(|(t, clo, chi)| *t > at && (0..3).all(|i| clo[i] <= hi[i] && lo[i] <= chi[i]));
            if !touched {
                return clear;
            }
        }
        let clear = segment_clear(grid, a, b, a);
        self.entries.insert(key, (clear, tick));
        clear
    }

    fn prune(&mut self, tick: usize) {
        self.entries.retain(|_, (_, at)| tick - *at <= CLEARANCE_MAX_AGE);
        self.changes.retain(|(t, _, _)| tick - *t <= CLEARANCE_MAX_AGE + 1);
    }
}

fn pair_key(a: &Vec3, b: &Vec3) -> ([i64; 3], [i64; 3]) {
    let (ka, kb) = (endpoint_key(a), endpoint_key(b));
    if ka <= kb {
        (ka, kb)
    } else {
        (kb, ka)
    }
}

/// Path lengths between all pairs of `points`. Straight traversable segments and still-valid
/// cached paths are used directly. Pairs farther apart than [`BETWEEN_SEARCH_RADIUS`], or whose
/// capped search gives up, get [`DETOUR_ESTIMATE`] times the straight-line distance.
fn pairwise_lengths(
    points: &[Vec3],
    grid: &OccupancyGrid,
    cache: &mut HashMap<([i64; 3], [i64; 3]), CachedLength>,
    clearance: &mut ClearanceCache,
    tick: usize,
) -> HashMap<([i64; 3], [i64; 3]), Option<f64>> {
    let n = points.len();
    let mut known = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&points[i], &points[j]);
            let key = pair_key(a, b);
            let dist = (b - a).norm();
            if clearance.segment_clear(grid, a, b, tick) {
                known.insert(key, Some(dist));
                continue;
            }
            let coarse = coarse_pair_key(a, b);
            if let Some(c) = cache.get(&coarse) {
                let interior_ok = c.cells.len() < 3 || c.cells[1..c.cells.len() - 1].iter().all(|&x| grid.is_traversable(x));
                if tick - c.tick <= CACHE_MAX_AGE && interior_ok {
                    known.insert(key, c.length);
                    continue;
                }
            }
            let (cells, length) = if dist > BETWEEN_SEARCH_RADIUS {
                (Vec::new(), Some(DETOUR_ESTIMATE * dist))
            } else {
                match astar_with_budget(a, b, grid, BETWEEN_MAX_EXPANSIONS) {
                    Ok(p) => (p.cells, Some(p.length)),
                    Err(Error::SearchFailed { .. }) => (Vec::new(), Some(DETOUR_ESTIMATE * dist)),
                    Err(_) => (Vec::new(), None),
                }
            };
            known.insert(key, length);
            cache.insert(coarse, CachedLength { cells, length, tick });
        }
    }
    known
}

/// Path lengths from the vehicle to every point: straight traversable segments directly, the
/// rest from one capped search. Points the search did not settle get [`DETOUR_ESTIMATE`]
/// times the straight-line distance.
fn vehicle_lengths(start: &Vec3, points: &[Vec3], grid: &OccupancyGrid) -> HashMap<[i64; 3], Option<f64>> {
    let mut out = HashMap::new();
    let mut far = Vec::new();
    for p in points {
        if segment_clear(grid, start, p, start) {
            out.insert(endpoint_key(p), Some((p - start).norm()));
        } else {
            far.push(*p);
        }
    }
    let reach = lengths_from(start, &far, grid, VEHICLE_SWEEP_EXPANSIONS);
    for (p, r) in far.iter().zip(reach) {
        let len = match r {
            Reach::Reached(len, _) => Some(len),
            Reach::Unreachable => None,
            Reach::Capped => Some(DETOUR_ESTIMATE * (p - start).norm()),
        };
        out.insert(endpoint_key(p), len);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel_map::{CellState, ExplorationBounds};

    #[test]
    fn budget_examples() {
        assert!((next_budget(0.2, 1.3, 0.1) - 0.26).abs() < 1e-12);
        assert_eq!(next_budget(0.05, 1.3, 0.1), 0.1);
        assert_eq!(next_budget(0.0, 1.3, 0.1), 0.1);
    }

    #[test]
    fn remaining_time_rule() {
        let p = ReplanPolicy::from_config(&Config::default());
        assert!(p.should_replan(10.0, 10.8, false, false));
        assert!(!p.should_replan(10.0, 15.0, false, false));
        assert!(p.should_replan(10.0, 15.0, true, false));
        assert!(p.should_replan(10.0, 15.0, false, true));
    }

    fn grid_with<F: Fn(&Vec3) -> CellState>(f: F) -> OccupancyGrid {
        let b = ExplorationBounds::new(Vec3::zeros(), Vec3::new(8.0, 6.0, 2.0)).unwrap();
        let mut g = OccupancyGrid::new(b, 0.15);
        for i in 0..g.len() {
            let c = g.unlinear(i);
            let s = f(&g.center(c));
            g.set(c, s);
        }
        g
    }

    #[test]
    fn no_frontiers_finishes() {
        let g = grid_with(|_| CellState::Free);
        let mut planner = ExplorationPlanner::new(Config::default(), &g);
        let s = DroneState::hover(Vec3::new(1.0, 1.0, 1.0), 0.0);
        let t = planner.plan_iteration(&s, 0.1, &g, Some(([0, 0, 0], [60, 60, 20])), 0.1);
        assert_eq!(t.outcome, TickOutcome::Finished);
    }

    #[test]
    fn open_space_tick_commits_from_start_state() {
        // known free box on the left, unknown beyond x = 4
        let g = grid_with(|p| if p.x < 4.0 { CellState::Free } else { CellState::Unknown });
        let mut planner = ExplorationPlanner::new(Config::default(), &g);
        let s = DroneState {
            position: Vec3::new(1.0, 3.0, 1.0),
            yaw: 0.0,
            velocity: Vec3::new(0.3, 0.0, 0.0),
            acceleration: Vec3::zeros(),
        };
        let d = g.dims();
        let t = planner.plan_iteration(&s, 2.0, &g, Some(([0, 0, 0], [d[0] as i32 - 1, d[1] as i32 - 1, d[2] as i32 - 1])), 0.1);
        assert_eq!(t.outcome, TickOutcome::Committed, "plan_ms {}", t.plan_ms);
        let m = t.motion.unwrap();
        let p = m.state(2.0);
        assert!((p.position - s.position).norm() < 1e-6);
        assert!((p.velocity - s.velocity).norm() < 1e-6);
        assert!(m.target.is_some());
    }

    #[test]
    fn sealed_viewpoints_fail() {
        // vehicle boxed in by walls with unknown space beyond
        let g = grid_with(|p| {
            let inside = (p.x - 2.0).abs() < 0.8 && (p.y - 3.0).abs() < 0.8 && (p.z - 1.0).abs() < 0.8;
            let wall = (p.x - 2.0).abs() < 1.1 && (p.y - 3.0).abs() < 1.1 && (p.z - 1.0).abs() < 1.1;
            if inside {
                CellState::Free
            } else if wall {
                CellState::Occupied
            } else if p.x < 4.0 {
                CellState::Free
            } else {
                CellState::Unknown
            }
        });
        let mut planner = ExplorationPlanner::new(Config::default(), &g);
        let s = DroneState::hover(Vec3::new(2.0, 3.0, 1.0), 0.0);
        let d = g.dims();
        let t = planner.plan_iteration(&s, 0.1, &g, Some(([0, 0, 0], [d[0] as i32 - 1, d[1] as i32 - 1, d[2] as i32 - 1])), 0.1);
        assert_eq!(t.outcome, TickOutcome::Failed);
        assert!(t.motion.is_none());
    }

    #[test]
    fn spin_turns_once_within_rate_limit() {
        let s = DroneState::hover(Vec3::new(1.0, 1.0, 1.0), 0.5);
        let m = PlannedMotion::spin(&s, 3.0, 1.0);
        assert!((m.state(3.0).yaw - 0.5).abs() < 1e-9);
        assert!((m.state(m.end_time()).yaw - 0.5).abs() < 1e-9);
        assert!((m.yaw_rate(3.0 + m.duration() / 2.0) - 0.8).abs() < 1e-9);
    }
}

