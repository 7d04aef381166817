//! Position trajectory generation.
//!
//! A geometric A* path is pruned into a guide path. Short or nearly straight guide paths are
//! flown with the closed-form minimum-effort primitive; longer ones go through the guided
//! kinodynamic search. Either result is then refined into a uniform cubic B-spline.

pub mod astar;
pub mod closed_form;
pub mod kinodynamic;
pub mod refine;

use crate::geom::Vec3;
use crate::voxel_map::{CellIndex, CellState, OccupancyGrid};

pub use astar::{astar_geometric, GridPath};
pub use closed_form::{closed_form, closed_form_optimal, ClosedFormTrajectory};
pub use kinodynamic::{guided_search, KinoConfig, KinoPath};
pub use refine::{refine_bspline, PositionTrajectory, RefineConfig, RefineOutcome};

/// Free cells this close to the planning start are usable even without full clearance, so a
/// vehicle next to a freshly mapped wall can still move away from it.
pub const START_EXEMPT_RADIUS: f64 = 0.3;

/// Below this start-to-goal distance the closed-form primitive is always used.
pub const CLOSED_FORM_DISTANCE: f64 = 3.0;

/// A trajectory that can be sampled in time.
pub trait TimedPath {
    fn duration(&self) -> f64;
    /// Position, velocity and acceleration at `t`, clamped to `[0, duration]`.
    fn state(&self, t: f64) -> (Vec3, Vec3, Vec3);
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidePath {
    pub waypoints: Vec<Vec3>,
    pub inflection_count: usize,
    /// Straight-line distance from the first to the last waypoint.
    pub end_distance: f64,
}

impl GuidePath {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Closest point on the polyline to `p`: `(distance to it, arc length at it, segment index)`.
    pub fn project(&self, p: &Vec3) -> (f64, f64, usize) {
        if self.waypoints.len() == 1 {
            return ((p - self.waypoints[0]).norm(), 0.0, 0);
        }
        let mut best = (f64::INFINITY, 0.0, 0);
        let mut acc = 0.0;
        for (k, w) in self.waypoints.windows(2).enumerate() {
            let d = w[1] - w[0];
            let len2 = d.norm_squared();
            let s = if len2 < 1e-18 { 0.0 } else { ((p - w[0]).dot(&d) / len2).clamp(0.0, 1.0) };
            let q = w[0] + d * s;
            let dist = (p - q).norm();
            if dist < best.0 {
                best = (dist, acc + s * len2.sqrt(), k);
            }
            acc += len2.sqrt();
        }
        best
    }

    /// Unit direction of segment `k` (zero for degenerate segments).
    pub fn segment_direction(&self, k: usize) -> Vec3 {
        if self.waypoints.len() < 2 {
            return Vec3::zeros();
        }
        let k = k.min(self.waypoints.len() - 2);
        let d = self.waypoints[k + 1] - self.waypoints[k];
        let n = d.norm();
        if n < 1e-12 {
            Vec3::zeros()
        } else {
            d / n
        }
    }
}

/// Closed-form hops through guide waypoints, stopping at each one. Used when the kinodynamic
/// search fails: every hop after the first is a straight rest-to-rest segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentChain {
    pub segments: Vec<ClosedFormTrajectory>,
}

impl SegmentChain {
    pub fn through(waypoints: &[Vec3], v0: Vec3, lim: &crate::state::DynamicLimits, time_weight: f64) -> Self {
        let mut segments = Vec::new();
        let mut v = v0;
        for w in waypoints.windows(2) {
            segments.push(closed_form_optimal(w[0], v, w[1], Vec3::zeros(), lim, 0.0, time_weight));
            v = Vec3::zeros();
        }
        Self { segments }
    }
}

impl TimedPath for SegmentChain {
    fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn state(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let mut t = t.max(0.0);
        for (k, s) in self.segments.iter().enumerate() {
            if t <= s.duration || k + 1 == self.segments.len() {
                return s.state(t);
            }
            t -= s.duration;
        }
        (Vec3::zeros(), Vec3::zeros(), Vec3::zeros())
    }
}

/// Usable by the planners from a start at `start`.
pub fn passable(grid: &OccupancyGrid, c: CellIndex, start: &Vec3) -> bool {
    if grid.is_traversable(c) {
        return true;
    }
    grid.state(c) == Some(CellState::Free) && (grid.center(c) - start).norm() <= START_EXEMPT_RADIUS
}

/// Every cell crossed by the segment is passable.
pub fn segment_clear(grid: &OccupancyGrid, a: &Vec3, b: &Vec3, start: &Vec3) -> bool {
    if grid.cell_of(a).is_none() || grid.cell_of(b).is_none() {
        return false;
    }
    let mut ok = true;
    grid.traverse(a, b, |c| {
        ok = passable(grid, c, start);
        ok
    });
    ok
}

/// Dense sampling check (spacing at most a quarter voxel at `v_max`).
pub fn trajectory_clear(traj: &dyn TimedPath, grid: &OccupancyGrid, v_max: f64, start: &Vec3) -> bool {
    let dt = grid.resolution() / (4.0 * v_max.max(1e-3));
    let n = (traj.duration() / dt).ceil().max(1.0) as usize;
    (0..=n).all(|k| {
        let t = traj.duration() * k as f64 / n as f64;
        let p = traj.state(t).0;
        grid.cell_of(&p).is_some_and(|c| passable(grid, c, start))
    })
}

/// Greedy line-of-sight shortcutting of a raw point path.
pub fn prune_path(raw: &[Vec3], grid: &OccupancyGrid) -> GuidePath {
    assert!(!raw.is_empty(), "cannot prune an empty path");
    let start = raw[0];
    let mut out = vec![raw[0]];
    let mut anchor = 0;
    while anchor < raw.len() - 1 {
        let mut next = anchor + 1;
        for j in (anchor + 2..raw.len()).rev() {
            if segment_clear(grid, &raw[anchor], &raw[j], &start) {
                next = j;
                break;
            }
        }
        out.push(raw[next]);
        anchor = next;
    }
    // second pass: drop interior waypoints whose neighbours see each other
    let mut k = 1;
    while k + 1 < out.len() {
        if segment_clear(grid, &out[k - 1], &out[k + 1], &start) {
            out.remove(k);
        } else {
            k += 1;
        }
    }
    // two waypoints hugging the same corner: try a single nearby cell that sees both neighbours
    let mut k = 1;
    while k + 2 < out.len() {
        if (out[k + 1] - out[k]).norm() < CORNER_MERGE_DISTANCE {
            if let Some(c) = merge_corner(grid, &out[k - 1], &out[k], &out[k + 1], &out[k + 2], &start) {
                out[k] = c;
                out.remove(k + 1);
                continue;
            }
        }
        k += 1;
    }
    let inflection_count = out
        .windows(3)
        .filter(|w| {
            let a = w[1] - w[0];
            let b = w[2] - w[1];
            a.norm() > 1e-12 && b.norm() > 1e-12 && crate::geom::angle_between(&a, &b) > 1e-6
        })
        .count();
    let end_distance = (out[out.len() - 1] - out[0]).norm();
    GuidePath {
        waypoints: out,
        inflection_count,
        end_distance,
    }
}

/// Consecutive waypoints closer than this are candidates for a corner merge (m).
const CORNER_MERGE_DISTANCE: f64 = 1.5;

fn merge_corner(grid: &OccupancyGrid, prev: &Vec3, a: &Vec3, b: &Vec3, next: &Vec3, start: &Vec3) -> Option<Vec3> {
    let mut best: Option<(f64, Vec3)> = None;
    let mid = (a + b) * 0.5;
    for p in [a, &mid, b] {
        let Some(c) = grid.cell_of(p) else { continue };
        for dz in -2..=2 {
            for dy in -2..=2 {
                for dx in -2..=2 {
                    let q = grid.center([c[0] + dx, c[1] + dy, c[2] + dz]);
                    let len = (q - prev).norm() + (next - q).norm();
                    if best.is_some_and(|(l, _)| l <= len) {
                        continue;
                    }
                    if segment_clear(grid, prev, &q, start) && segment_clear(grid, &q, next, start) {
                        best = Some((len, q));
                    }
                }
            }
        }
    }
    best.map(|(_, q)| q)
}

/// Closed form for short hops or guide paths with fewer than two inflections.
pub fn use_closed_form(gp: &GuidePath) -> bool {
    gp.end_distance < CLOSED_FORM_DISTANCE || gp.inflection_count < 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::voxel_map::ExplorationBounds;

    fn guide(wp: Vec<Vec3>, infl: usize, d: f64) -> GuidePath {
        GuidePath {
            waypoints: wp,
            inflection_count: infl,
            end_distance: d,
        }
    }

    #[test]
    fn closed_form_switch() {
        assert!(use_closed_form(&guide(vec![], 5, 2.0)));
        assert!(use_closed_form(&guide(vec![], 1, 10.0)));
        assert!(!use_closed_form(&guide(vec![], 3, 10.0)));
    }

    fn l_grid() -> OccupancyGrid {
        let mut g = OccupancyGrid::new(ExplorationBounds::new(Vec3::zeros(), Vec3::new(6.0, 6.0, 1.5)).unwrap(), 0.15);
        let wall = Aabb::new(Vec3::new(0.0, 1.5, 0.0), Vec3::new(4.5, 6.0, 1.5));
        for i in 0..g.len() {
            let c = g.unlinear(i);
            let s = if wall.contains(&g.center(c)) { CellState::Occupied } else { CellState::Free };
            g.set(c, s);
        }
        g
    }

    #[test]
    fn straight_path_prunes_to_two_points() {
        let g = l_grid();
        let a = Vec3::new(0.6, 0.75, 0.75);
        let b = Vec3::new(5.0, 0.75, 0.75);
        let raw = astar_geometric(&a, &b, &g).unwrap();
        let gp = prune_path(&raw.points, &g);
        assert_eq!(gp.waypoints.len(), 2);
        assert_eq!(gp.inflection_count, 0);
    }

    #[test]
    fn l_corner_prunes_to_three_points() {
        let g = l_grid();
        let a = Vec3::new(1.0, 0.75, 0.75);
        let b = Vec3::new(5.25, 5.0, 0.75);
        let raw = astar_geometric(&a, &b, &g).unwrap();
        let gp = prune_path(&raw.points, &g);
        assert!(gp.length() <= raw.length + 1e-9);
        assert_eq!(gp.waypoints.len(), 3, "{:?}", gp.waypoints);
        assert_eq!(gp.inflection_count, 1);
        for w in gp.waypoints.windows(2) {
            assert!(segment_clear(&g, &w[0], &w[1], &a));
        }
    }

    #[test]
    fn projection_tracks_arc_length() {
        let gp = guide(vec![Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), Vec3::new(2.0, 2.0, 0.0)], 1, 2.8);
        let (d, s, k) = gp.project(&Vec3::new(2.5, 1.0, 0.0));
        assert!((d - 0.5).abs() < 1e-12);
        assert!((s - 3.0).abs() < 1e-12);
        assert_eq!(k, 1);
        assert_eq!(gp.segment_direction(1), Vec3::new(0.0, 1.0, 0.0));
    }
}
