//! Frontier visiting order: asymmetric cost matrix and its open-tour solution.
//!
//! Row 0 is the vehicle. Leaving the vehicle towards cluster `k` costs the motion lower bound
//! plus a velocity-change term, an edge-priority term (clusters near the exploration bounds are
//! cheaper) and a pocket bonus from the bottom ray (shallow unknown pockets are cheaper). The
//! inner block is the symmetric motion lower bound; returning to the vehicle is free.

use std::fmt::Write as _;

use log::warn;

use crate::atsp::{self, CostMatrix};
use crate::error::{Error, Result};
use crate::frontier::{FrontierCluster, Viewpoint};
use crate::geom::{angle_between, yaw_distance, Vec3};
use crate::path::astar_geometric;
use crate::state::{DroneState, DynamicLimits};
use crate::voxel_map::{Classification, ExplorationBounds, OccupancyGrid};

/// Inner-block cost used when two reachable clusters have no path between each other.
const DISCONNECTED_COST: f64 = 1.0e4;

#[derive(Debug, Clone, PartialEq)]
pub struct TourConfig {
    pub w_c: f64,
    pub w_b: f64,
    pub w_f: f64,
    /// Bottom-ray cap (m).
    pub h_max: f64,
    /// Bottom rays are only cast for viewpoints closer than this to the vehicle (m).
    pub d_thr: f64,
    /// Axes whose bound extent is below this are ignored by the edge-priority term (m).
    pub b_min: Vec3,
}

impl Default for TourConfig {
    fn default() -> Self {
        Self {
            w_c: 1.5,
            w_b: 0.3,
            w_f: 0.3,
            h_max: 4.5,
            d_thr: 10.0,
            b_min: Vec3::new(15.0, 15.0, 10.0),
        }
    }
}

impl TourConfig {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("w_c", self.w_c), ("w_b", self.w_b), ("w_f", self.w_f)] {
            if !(v >= 0.0) {
                return Err(Error::Config { key: k.into(), msg: "must be >= 0".into() });
            }
        }
        if !(self.h_max > 0.0) {
            return Err(Error::Config { key: "h_max".into(), msg: "must be > 0".into() });
        }
        if !(self.b_min.min() > 0.0) {
            return Err(Error::Config { key: "b_min".into(), msg: "components must be > 0".into() });
        }
        Ok(())
    }
}

/// Distance from `average` to the nearest bound face, over axes whose extent is at least
/// `b_min` on that axis. Zero when every axis is removed.
pub fn edge_priority_distance(average: &Vec3, bounds: &ExplorationBounds, b_min: &Vec3) -> f64 {
    let ext = bounds.extent();
    let mut best = f64::INFINITY;
    for i in 0..3 {
        if ext[i] < b_min[i] {
            continue;
        }
        let d = (average[i] - bounds.box_min[i]).min(bounds.box_max[i] - average[i]).max(0.0);
        best = best.min(d);
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Depth of the unknown region behind a cluster, measured along the ray from the viewpoint
/// through the cluster average and beyond, one voxel per step.
pub fn bottom_ray(viewpoint: &Vec3, average: &Vec3, grid: &OccupancyGrid, h_max: f64) -> f64 {
    let d = average - viewpoint;
    if d.norm() < 1e-12 {
        return h_max;
    }
    let dir = d.normalize();
    let exit = match grid.bounds().aabb().ray_interval(average, &dir) {
        Some((t0, t1)) if t0 <= 0.0 => t1.max(0.0),
        _ => return 0.0,
    };
    let step = grid.resolution();
    let mut k = 1;
    loop {
        let s = k as f64 * step;
        if s > h_max {
            return h_max;
        }
        let q = average + dir * s;
        match grid.classify(&q) {
            Classification::Unknown => {}
            Classification::OutOfBounds => return exit.clamp(0.0, h_max),
            Classification::Free | Classification::Occupied => return s.min(h_max),
        }
        k += 1;
    }
}

/// `max(path length / v_max, wrapped yaw change / yaw_rate_max)`; infinite without a path.
pub fn motion_lower_bound(
    from: &Vec3,
    from_yaw: f64,
    to: &Vec3,
    to_yaw: f64,
    grid: &OccupancyGrid,
    lim: &DynamicLimits,
) -> f64 {
    match astar_geometric(from, to, grid) {
        Ok(p) => lower_bound_from_length(p.length, from_yaw, to_yaw, lim),
        Err(_) => f64::INFINITY,
    }
}

pub fn lower_bound_from_length(length: f64, from_yaw: f64, to_yaw: f64, lim: &DynamicLimits) -> f64 {
    (length / lim.v_max).max(yaw_distance(from_yaw, to_yaw) / lim.yaw_rate_max)
}

/// Angle between the current velocity and the direction to the viewpoint; zero near hover.
pub fn velocity_change_cost(viewpoint: &Vec3, state: &DroneState) -> f64 {
    if state.velocity.norm() < 0.01 {
        return 0.0;
    }
    let d = viewpoint - state.position;
    if d.norm() < 1e-12 {
        return 0.0;
    }
    angle_between(&d, &state.velocity)
}

/// `(n+1) x (n+1)` costs; index 0 is the vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct TourCostMatrix {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl TourCostMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![0.0; (n + 1) * (n + 1)] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * (self.n + 1) + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n;
        self.entries[i * (n + 1) + j] = v;
    }

    /// Header line `n`, then `n + 1` rows of space-separated values.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for i in 0..=self.n {
            let row: Vec<String> = (0..=self.n).map(|j| format!("{}", self.get(i, j))).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| Error::WorldFile { line, msg: msg.into() };
        let n: usize = lines
            .next()
            .ok_or_else(|| bad(1, "missing header"))?
            .trim()
            .parse()
            .map_err(|_| bad(1, "bad header"))?;
        let mut m = Self::zeros(n);
        for i in 0..=n {
            let row = lines.next().ok_or_else(|| bad(i + 2, "missing row"))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(i + 2, "bad number"))?;
            if vals.len() != n + 1 {
                return Err(bad(i + 2, "wrong row length"));
            }
            for (j, v) in vals.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }
}

impl CostMatrix for TourCostMatrix {
    fn size(&self) -> usize {
        self.n + 1
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// The matrix plus the mapping from matrix index `k >= 1` to clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct TourProblem {
    pub matrix: TourCostMatrix,
    pub cluster_ids: Vec<u64>,
    pub viewpoints: Vec<Viewpoint>,
    /// Clusters with no path from the vehicle.
    pub dropped: Vec<u64>,
}

/// Which pair a path-length query is for: the vehicle to a cluster, or two clusters by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathQuery {
    FromVehicle(u64),
    Between(u64, u64),
}

/// Builds the matrix with A* path lengths.
pub fn build_cost_matrix(
    state: &DroneState,
    clusters: &[&FrontierCluster],
    grid: &OccupancyGrid,
    cfg: &TourConfig,
    lim: &DynamicLimits,
) -> TourProblem {
    build_cost_matrix_with(state, clusters, grid, cfg, lim, &mut |a, b, _| {
        astar_geometric(a, b, grid).ok().map(|p| p.length)
    })
}

/// Same as [`build_cost_matrix`] with a caller-supplied path-length oracle (for caching).
pub fn build_cost_matrix_with(
    state: &DroneState,
    clusters: &[&FrontierCluster],
    grid: &OccupancyGrid,
    cfg: &TourConfig,
    lim: &DynamicLimits,
    path_length: &mut dyn FnMut(&Vec3, &Vec3, PathQuery) -> Option<f64>,
) -> TourProblem {
    let mut ids = Vec::new();
    let mut vps = Vec::new();
    let mut row0 = Vec::new();
    let mut dropped = Vec::new();
    for c in clusters {
        let Some(vp) = c.best_viewpoint() else {
            dropped.push(c.id);
            continue;
        };
        let Some(len) = path_length(&state.position, &vp.position, PathQuery::FromVehicle(c.id)) else {
            warn!("cluster {} unreachable from the vehicle, dropped from the tour", c.id);
            dropped.push(c.id);
            continue;
        };
        let t_lb = lower_bound_from_length(len, state.yaw, vp.yaw, lim);
        let c_c = velocity_change_cost(&vp.position, state);
        let d_kmin = edge_priority_distance(&c.average, grid.bounds(), &cfg.b_min);
        let h_k = if (vp.position - state.position).norm() < cfg.d_thr {
            bottom_ray(&vp.position, &c.average, grid, cfg.h_max)
        } else {
            cfg.h_max
        };
        let m0 = t_lb + cfg.w_c * c_c + cfg.w_b * d_kmin - cfg.w_f * (cfg.h_max - h_k);
        row0.push(m0.max(0.0));
        ids.push(c.id);
        vps.push(*vp);
    }
    let n = ids.len();
    let mut m = TourCostMatrix::zeros(n);
    for k in 0..n {
        m.set(0, k + 1, row0[k]);
    }
    for a in 0..n {
        for b in a + 1..n {
            let t = match path_length(&vps[a].position, &vps[b].position, PathQuery::Between(ids[a], ids[b])) {
                Some(len) => lower_bound_from_length(len, vps[a].yaw, vps[b].yaw, lim),
                None => DISCONNECTED_COST,
            };
            m.set(a + 1, b + 1, t);
            m.set(b + 1, a + 1, t);
        }
    }
    TourProblem {
        matrix: m,
        cluster_ids: ids,
        viewpoints: vps,
        dropped,
    }
}

/// Heuristic open tour; indices refer to the matrix (1-based clusters).
pub fn solve_tour(m: &TourCostMatrix) -> Vec<usize> {
    atsp::solve_atsp(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel_map::CellState;

    fn bounds(x: f64, y: f64, z: f64) -> ExplorationBounds {
        ExplorationBounds::new(Vec3::zeros(), Vec3::new(x, y, z)).unwrap()
    }

    #[test]
    fn edge_priority_examples() {
        let b = bounds(30.0, 16.0, 2.0);
        let bm = Vec3::new(15.0, 15.0, 10.0);
        assert!((edge_priority_distance(&Vec3::new(2.0, 8.0, 1.0), &b, &bm) - 2.0).abs() < 1e-9);
        assert_eq!(edge_priority_distance(&Vec3::new(0.0, 8.0, 1.0), &b, &bm), 0.0);
        assert_eq!(edge_priority_distance(&Vec3::new(5.0, 5.0, 1.0), &bounds(10.0, 10.0, 2.0), &bm), 0.0);
    }

    #[test]
    fn velocity_change_examples() {
        let mut s = DroneState::hover(Vec3::zeros(), 0.0);
        assert_eq!(velocity_change_cost(&Vec3::new(1.0, 0.0, 0.0), &s), 0.0);
        s.velocity = Vec3::new(1.0, 0.0, 0.0);
        assert!(velocity_change_cost(&Vec3::new(3.0, 0.0, 0.0), &s).abs() < 1e-12);
        assert!((velocity_change_cost(&Vec3::new(0.0, 2.0, 0.0), &s) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_examples() {
        let lim = DynamicLimits::default();
        assert!((lower_bound_from_length(4.0, 0.3, 0.3, &lim) - 2.0).abs() < 1e-12);
        assert!((lower_bound_from_length(0.0, 0.0, std::f64::consts::PI, &lim) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn matrix_text_round_trip() {
        let mut m = TourCostMatrix::zeros(2);
        m.set(0, 1, 2.5);
        m.set(0, 2, 1.25);
        m.set(1, 2, 3.0);
        m.set(2, 1, 3.0);
        let t = m.to_text();
        assert_eq!(t.lines().count(), 4);
        assert_eq!(t.lines().next(), Some("2"));
        assert_eq!(TourCostMatrix::parse(&t).unwrap(), m);
    }

    fn pocket_grid() -> OccupancyGrid {
        let mut g = OccupancyGrid::new(bounds(10.0, 10.0, 2.0), 0.15);
        for i in 0..g.len() {
            let c = g.unlinear(i);
            let p = g.center(c);
            let s = if p.x < 5.0 {
                CellState::Free
            } else if p.x < 5.45 {
                CellState::Unknown
            } else {
                CellState::Occupied
            };
            g.set(c, s);
        }
        g
    }

    #[test]
    fn bottom_ray_measures_pocket_depth() {
        let g = pocket_grid();
        let avg = Vec3::new(4.925, 5.0, 1.0);
        let h = bottom_ray(&Vec3::new(2.0, 5.0, 1.0), &avg, &g, 4.5);
        assert!((h - 0.45).abs() <= 0.15 + 1e-9, "h = {h}");
    }

    #[test]
    fn bottom_ray_caps_and_stops() {
        let mut g = OccupancyGrid::new(bounds(10.0, 10.0, 2.0), 0.15);
        for i in 0..g.len() {
            let c = g.unlinear(i);
            if g.center(c).x < 2.0 {
                g.set(c, CellState::Free);
            }
        }
        let avg = Vec3::new(1.925, 5.0, 1.0);
        assert_eq!(bottom_ray(&Vec3::new(0.5, 5.0, 1.0), &avg, &g, 4.5), 4.5);
        // looking back into known free space stops after one step
        let back = bottom_ray(&Vec3::new(3.0, 5.0, 1.0), &Vec3::new(1.0, 5.0, 1.0), &g, 4.5);
        assert!(back <= 0.15 + 1e-12);
        // leaving the bounds immediately
        assert_eq!(bottom_ray(&Vec3::new(9.0, 5.0, 1.0), &Vec3::new(10.0, 5.0, 1.0), &g, 4.5), 0.0);
    }
}
