//! Ground-truth worlds: obstacle geometry, named fixtures and the world-file format.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::voxel_map::{CellState, ExplorationBounds, OccupancyGrid, NEIGHBORS_6};

/// A solid obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    Box(Aabb),
    /// Vertical cylinder with axis at `(cx, cy)` spanning `z_min..z_max`.
    Cylinder {
        cx: f64,
        cy: f64,
        r: f64,
        z_min: f64,
        z_max: f64,
    },
}

impl Obstacle {
    pub fn aabb(&self) -> Aabb {
        match *self {
            Obstacle::Box(b) => b,
            Obstacle::Cylinder { cx, cy, r, z_min, z_max } => {
                Aabb::new(Vec3::new(cx - r, cy - r, z_min), Vec3::new(cx + r, cy + r, z_max))
            }
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: &Vec3) -> bool {
        const EPS: f64 = 1e-9;
        match *self {
            Obstacle::Box(b) => (0..3).all(|i| p[i] > b.min[i] + EPS && p[i] < b.max[i] - EPS),
            Obstacle::Cylinder { cx, cy, r, z_min, z_max } => {
                let dx = p.x - cx;
                let dy = p.y - cy;
                p.z > z_min + EPS && p.z < z_max - EPS && dx * dx + dy * dy < (r - EPS) * (r - EPS)
            }
        }
    }

    /// First intersection parameter of `origin + t * dir` with t >= 0.
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        match *self {
            Obstacle::Box(b) => {
                let (t0, t1) = b.ray_interval(origin, dir)?;
                if t1 < 0.0 {
                    None
                } else {
                    Some(t0.max(0.0))
                }
            }
            Obstacle::Cylinder { cx, cy, r, z_min, z_max } => {
                // radial interval
                let ox = origin.x - cx;
                let oy = origin.y - cy;
                let a = dir.x * dir.x + dir.y * dir.y;
                let c = ox * ox + oy * oy - r * r;
                let (mut lo, mut hi) = if a < 1e-15 {
                    if c > 0.0 {
                        return None;
                    }
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    let b = ox * dir.x + oy * dir.y;
                    let disc = b * b - a * c;
                    if disc < 0.0 {
                        return None;
                    }
                    let s = disc.sqrt();
                    ((-b - s) / a, (-b + s) / a)
                };
                // vertical slab
                if dir.z.abs() < 1e-15 {
                    if origin.z < z_min || origin.z > z_max {
                        return None;
                    }
                } else {
                    let mut t0 = (z_min - origin.z) / dir.z;
                    let mut t1 = (z_max - origin.z) / dir.z;
                    if t0 > t1 {
                        std::mem::swap(&mut t0, &mut t1);
                    }
                    lo = lo.max(t0);
                    hi = hi.min(t1);
                }
                if lo > hi || hi < 0.0 {
                    None
                } else {
                    Some(lo.max(0.0))
                }
            }
        }
    }
}

/// Ground-truth environment the simulated sensor observes.
#[derive(Debug, Clone)]
pub struct TrueWorld {
    pub name: String,
    pub bounds: ExplorationBounds,
    pub obstacles: Vec<Obstacle>,
    pub start: Vec3,
    pub start_yaw: f64,
}

pub const FIXTURES: [&str; 6] = ["empty", "office", "outdoor", "pocket", "room_exit", "junction"];

impl TrueWorld {
    pub fn new(name: &str, bounds: ExplorationBounds, obstacles: Vec<Obstacle>, start: Vec3) -> Self {
        Self {
            name: name.to_string(),
            bounds,
            obstacles,
            start,
            start_yaw: 0.0,
        }
    }

    pub fn collides(&self, p: &Vec3) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Nearest obstacle hit along a unit direction within `max_t`.
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3, max_t: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for o in &self.obstacles {
            if let Some(t) = o.ray_hit(origin, dir) {
                if t <= max_t && best.is_none_or(|b| t < b) {
                    best = Some(t);
                }
            }
        }
        best
    }

    /// Copy of this world restricted to the obstacles that can affect rays from `center`
    /// within `radius`.
    pub fn local_view(&self, center: &Vec3, radius: f64) -> TrueWorld {
        let reach = Aabb::new(center - Vec3::repeat(radius), center + Vec3::repeat(radius));
        TrueWorld {
            name: self.name.clone(),
            bounds: self.bounds,
            obstacles: self
                .obstacles
                .iter()
                .filter(|o| o.aabb().intersects(&reach))
                .copied()
                .collect(),
            start: self.start,
            start_yaw: self.start_yaw,
        }
    }

    /// Marks every cell Free or Occupied by its centre, as a fully explored map.
    pub fn rasterize(&self, grid: &mut OccupancyGrid) {
        for idx in 0..grid.len() {
            let c = grid.unlinear(idx);
            let s = if self.collides(&grid.center(c)) {
                CellState::Occupied
            } else {
                CellState::Free
            };
            grid.set(c, s);
        }
        grid.take_changed_region();
        grid.take_new_occupied();
    }

    /// Volume of the obstacle-free cells 6-connected to the start cell (flood fill over cell
    /// centres), clipped to the bounds.
    pub fn reachable_volume(&self, resolution: f64) -> f64 {
        let grid = OccupancyGrid::new(self.bounds, resolution);
        let start = match grid.cell_of(&self.start) {
            Some(c) => c,
            None => return 0.0,
        };
        let mut seen = vec![false; grid.len()];
        let mut queue = VecDeque::new();
        seen[grid.linear(start)] = true;
        queue.push_back(start);
        let mut vol = 0.0;
        while let Some(c) = queue.pop_front() {
            vol += grid.cell_volume(c);
            for d in NEIGHBORS_6 {
                let n = [c[0] + d[0], c[1] + d[1], c[2] + d[2]];
                if !grid.in_grid(n) {
                    continue;
                }
                let li = grid.linear(n);
                if seen[li] || self.collides(&grid.center(n)) {
                    continue;
                }
                seen[li] = true;
                queue.push_back(n);
            }
        }
        vol
    }

    /// Parses the world-file format: `bounds x0 y0 z0 x1 y1 z1`, `start x y z [yaw]`,
    /// `box cx cy cz sx sy sz` and `cyl cx cy r h` (cylinders stand on the bounds floor).
    pub fn parse(name: &str, text: &str) -> Result<TrueWorld> {
        let mut bounds: Option<ExplorationBounds> = None;
        let mut start: Option<(Vec3, f64)> = None;
        let mut pending: Vec<(usize, Vec<f64>, bool)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap();
            let nums: Vec<f64> = parts
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::WorldFile {
                        line: line_no,
                        msg: format!("'{t}' is not a number"),
                    })
                })
                .collect::<Result<_>>()?;
            let want = |n: usize| -> Result<()> {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(Error::WorldFile {
                        line: line_no,
                        msg: format!("'{kind}' expects {n} values, got {}", nums.len()),
                    })
                }
            };
            match kind {
                "bounds" => {
                    want(6)?;
                    bounds = Some(
                        ExplorationBounds::new(
                            Vec3::new(nums[0], nums[1], nums[2]),
                            Vec3::new(nums[3], nums[4], nums[5]),
                        )
                        .map_err(|e| Error::WorldFile { line: line_no, msg: e.to_string() })?,
                    );
                }
                "start" => {
                    if nums.len() != 3 && nums.len() != 4 {
                        want(3)?;
                    }
                    start = Some((Vec3::new(nums[0], nums[1], nums[2]), nums.get(3).copied().unwrap_or(0.0)));
                }
                "box" => {
                    want(6)?;
                    pending.push((line_no, nums, true));
                }
                "cyl" => {
                    want(4)?;
                    pending.push((line_no, nums, false));
                }
                other => {
                    return Err(Error::WorldFile {
                        line: line_no,
                        msg: format!("unknown entry '{other}'"),
                    })
                }
            }
        }
        let bounds = bounds.ok_or(Error::WorldFile { line: 0, msg: "missing 'bounds' line".into() })?;
        let (start, start_yaw) = start.unwrap_or((bounds.aabb().center(), 0.0));
        let obstacles = pending
            .into_iter()
            .map(|(_, v, is_box)| {
                if is_box {
                    Obstacle::Box(Aabb::from_center_size(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5])))
                } else {
                    Obstacle::Cylinder {
                        cx: v[0],
                        cy: v[1],
                        r: v[2],
                        z_min: bounds.box_min.z,
                        z_max: bounds.box_min.z + v[3],
                    }
                }
            })
            .collect();
        let mut w = TrueWorld::new(name, bounds, obstacles, start);
        w.start_yaw = start_yaw;
        if !bounds.contains(&w.start) || w.collides(&w.start) {
            return Err(Error::WorldFile { line: 0, msg: "start pose is outside bounds or in collision".into() });
        }
        Ok(w)
    }
}

/// Builds one of the named procedural fixtures.
pub fn make_world(name: &str) -> Result<TrueWorld> {
    match name {
        "empty" => Ok(empty()),
        "office" => Ok(office()),
        "outdoor" => Ok(outdoor()),
        "pocket" => Ok(pocket()),
        "room_exit" => Ok(room_exit()),
        "junction" => Ok(junction()),
        _ => Err(Error::UnknownWorld {
            name: name.to_string(),
            available: FIXTURES.join(", "),
        }),
    }
}

fn bx(x0: f64, y0: f64, z0: f64, x1: f64, y1: f64, z1: f64) -> Obstacle {
    Obstacle::Box(Aabb::new(Vec3::new(x0, y0, z0), Vec3::new(x1, y1, z1)))
}

fn bounds(x: f64, y: f64, z: f64) -> ExplorationBounds {
    ExplorationBounds::new(Vec3::zeros(), Vec3::new(x, y, z)).unwrap()
}

/// Wall segment along x at `y` (thickness `t`) with door gaps `(x_lo, x_hi)`.
fn wall_x(x0: f64, x1: f64, y: f64, t: f64, h: f64, doors: &[(f64, f64)], out: &mut Vec<Obstacle>) {
    let mut cur = x0;
    for &(a, b) in doors {
        if a > cur {
            out.push(bx(cur, y - t / 2.0, 0.0, a, y + t / 2.0, h));
        }
        cur = b;
    }
    if x1 > cur {
        out.push(bx(cur, y - t / 2.0, 0.0, x1, y + t / 2.0, h));
    }
}

fn wall_y(y0: f64, y1: f64, x: f64, t: f64, h: f64, doors: &[(f64, f64)], out: &mut Vec<Obstacle>) {
    let mut cur = y0;
    for &(a, b) in doors {
        if a > cur {
            out.push(bx(x - t / 2.0, cur, 0.0, x + t / 2.0, a, h));
        }
        cur = b;
    }
    if y1 > cur {
        out.push(bx(x - t / 2.0, cur, 0.0, x + t / 2.0, y1, h));
    }
}

fn empty() -> TrueWorld {
    let mut w = TrueWorld::new("empty", bounds(6.0, 6.0, 2.0), vec![], Vec3::new(3.0, 3.0, 1.0));
    w.start_yaw = 0.0;
    w
}

/// 30 x 16 x 2 m office: a central corridor with five rooms on each side.
fn office() -> TrueWorld {
    let h = 2.0;
    let t = 0.2;
    let mut obs = Vec::new();
    let room_edges = [0.0, 6.0, 12.0, 18.0, 24.0, 30.0];
    // doors into the corridor, offset per room so the layout is not perfectly regular
    let south_doors: Vec<(f64, f64)> = (0..5)
        .map(|k| {
            let x = room_edges[k] + [2.0, 3.5, 1.5, 4.0, 2.5][k];
            (x - 0.6, x + 0.6)
        })
        .collect();
    let north_doors: Vec<(f64, f64)> = (0..5)
        .map(|k| {
            let x = room_edges[k] + [3.5, 2.0, 4.0, 2.5, 3.0][k];
            (x - 0.6, x + 0.6)
        })
        .collect();
    wall_x(0.0, 30.0, 6.5, t, h, &south_doors, &mut obs);
    wall_x(0.0, 30.0, 9.5, t, h, &north_doors, &mut obs);
    for &x in &room_edges[1..5] {
        wall_y(0.0, 6.4, x, t, h, &[], &mut obs);
        wall_y(9.6, 16.0, x, t, h, &[], &mut obs);
    }
    // furniture: a desk and a cabinet per room
    for k in 0..5 {
        let x0 = room_edges[k];
        let dx = [1.2, 2.5, 1.8, 3.0, 1.0][k];
        obs.push(bx(x0 + dx, 2.0, 0.0, x0 + dx + 1.6, 2.8, 0.75));
        obs.push(bx(x0 + 4.6, 0.3, 0.0, x0 + 5.5, 0.9, 1.8));
        let dn = [2.6, 1.0, 1.5, 2.2, 3.0][k];
        obs.push(bx(x0 + dn, 12.5, 0.0, x0 + dn + 1.6, 13.3, 0.75));
        obs.push(bx(x0 + 0.4, 15.0, 0.0, x0 + 1.6, 15.6, 1.8));
    }
    let mut w = TrueWorld::new("office", bounds(30.0, 16.0, h), obs, Vec3::new(1.5, 8.0, 1.0));
    w.start_yaw = 0.0;
    w
}

/// 20 x 30 x 3 m outdoor scene: trees, parked cars, a column row and a low fence.
fn outdoor() -> TrueWorld {
    let mut obs = Vec::new();
    let start = Vec3::new(2.0, 2.0, 1.2);
    // cars
    obs.push(bx(5.0, 8.0, 0.0, 9.0, 9.8, 1.5));
    obs.push(bx(12.0, 20.0, 0.0, 13.8, 24.0, 1.5));
    obs.push(bx(14.0, 4.0, 0.0, 18.0, 5.8, 1.5));
    // corridor columns
    for k in 0..5 {
        let y = 12.0 + 3.0 * k as f64;
        obs.push(bx(3.0, y, 0.0, 3.5, y + 0.5, 3.0));
    }
    // fence the drone can pass over
    obs.push(bx(8.0, 26.0, 0.0, 16.0, 26.1, 1.2));
    // trees
    let mut rng = ChaCha8Rng::seed_from_u64(203_003);
    let mut trees: Vec<(f64, f64, f64)> = Vec::new();
    while trees.len() < 22 {
        let x = rng.random_range(1.0..19.0);
        let y = rng.random_range(1.0..29.0);
        let r = rng.random_range(0.2..0.4);
        let far_from_start = (Vec3::new(x, y, start.z) - start).norm() > 3.0;
        let clear_of_boxes = obs.iter().all(|o| {
            let b = o.aabb();
            x + r + 1.0 < b.min.x || x - r - 1.0 > b.max.x || y + r + 1.0 < b.min.y || y - r - 1.0 > b.max.y
        });
        let clear_of_trees = trees
            .iter()
            .all(|&(tx, ty, tr)| ((tx - x).powi(2) + (ty - y).powi(2)).sqrt() > tr + r + 1.5);
        if far_from_start && clear_of_boxes && clear_of_trees {
            trees.push((x, y, r));
        }
    }
    for (x, y, r) in trees {
        obs.push(Obstacle::Cylinder { cx: x, cy: y, r, z_min: 0.0, z_max: 3.0 });
    }
    let mut w = TrueWorld::new("outdoor", bounds(20.0, 30.0, 3.0), obs, start);
    w.start_yaw = std::f64::consts::FRAC_PI_2;
    w
}

/// Corridor with one shallow dead-end alcove (depth 1.0 m) and one opening into a large hall,
/// both 2.4 m from the start.
fn pocket() -> TrueWorld {
    let h = 2.0;
    let mut obs = Vec::new();
    // north corridor wall occupying y in [2.4, 2.6], openings at the alcove and the hall
    wall_x(0.0, 12.0, 2.5, 0.2, h, &[(3.0, 4.2), (7.8, 9.0)], &mut obs);
    // alcove x in [3.0, 4.2], y in [2.6, 3.6]
    obs.push(bx(2.8, 2.6, 0.0, 3.0, 3.8, h));
    obs.push(bx(4.2, 2.6, 0.0, 4.4, 3.8, h));
    obs.push(bx(2.8, 3.6, 0.0, 4.4, 3.8, h));
    let mut w = TrueWorld::new("pocket", bounds(12.0, 7.0, h), obs, Vec3::new(6.0, 1.2, 1.0));
    w.start_yaw = std::f64::consts::FRAC_PI_2;
    w
}

/// A closed room whose only exit is an off-centre door, with the goal region outside.
fn room_exit() -> TrueWorld {
    let h = 2.0;
    let mut obs = Vec::new();
    wall_y(0.0, 8.0, 5.1, 0.2, h, &[(5.6, 6.8)], &mut obs);
    // inner partition forcing a detour inside the room
    obs.push(bx(2.6, 3.2, 0.0, 5.0, 3.4, h));
    let mut w = TrueWorld::new("room_exit", bounds(10.0, 8.0, h), obs, Vec3::new(2.0, 1.5, 1.0));
    w.start_yaw = 0.0;
    w
}

/// A straight hallway with side openings on both sides close to the start, used to exercise
/// two-stage heading planning.
fn junction() -> TrueWorld {
    let h = 2.0;
    let mut obs = Vec::new();
    // hallway along x, y in [3, 5]
    wall_x(0.0, 14.0, 2.9, 0.2, h, &[(4.0, 5.2)], &mut obs);
    wall_x(0.0, 14.0, 5.1, 0.2, h, &[(6.5, 7.7)], &mut obs);
    let mut w = TrueWorld::new("junction", bounds(14.0, 8.0, h), obs, Vec3::new(1.5, 4.0, 1.0));
    w.start_yaw = 0.0;
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build_and_start_is_free() {
        for name in FIXTURES {
            let w = make_world(name).unwrap();
            assert!(w.bounds.contains(&w.start), "{name}");
            assert!(!w.collides(&w.start), "{name}");
            for o in &w.obstacles {
                let b = o.aabb();
                assert!(w.bounds.contains(&b.min) && w.bounds.contains(&b.max), "{name}: {o:?}");
            }
        }
    }

    #[test]
    fn empty_has_no_obstacles_and_office_has_paper_bounds() {
        assert!(make_world("empty").unwrap().obstacles.is_empty());
        let o = make_world("office").unwrap();
        assert_eq!(o.bounds.extent(), Vec3::new(30.0, 16.0, 2.0));
        let out = make_world("outdoor").unwrap();
        assert_eq!(out.bounds.extent(), Vec3::new(20.0, 30.0, 3.0));
    }

    #[test]
    fn unknown_world_lists_fixtures() {
        match make_world("bogus") {
            Err(Error::UnknownWorld { available, .. }) => assert!(available.contains("office")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pocket_depth_is_one_metre() {
        let w = make_world("pocket").unwrap();
        // from the alcove mouth on the wall plane, straight into the alcove
        let mouth = Vec3::new(3.6, 2.6, 1.0);
        let t = w.ray_hit(&mouth, &Vec3::y(), 10.0).unwrap();
        assert!((t - 1.0).abs() < 1e-9, "depth {t}");
        // the other opening leads far into the hall
        let hall = Vec3::new(8.4, 2.6, 1.0);
        assert!(w.ray_hit(&hall, &Vec3::y(), 10.0).is_none());
        // dead end: sideways rays inside the alcove hit walls within its width
        let inside = Vec3::new(3.6, 3.1, 1.0);
        assert!(w.ray_hit(&inside, &Vec3::x(), 10.0).unwrap() <= 0.6 + 1e-9);
        assert!(w.ray_hit(&inside, &-Vec3::x(), 10.0).unwrap() <= 0.6 + 1e-9);
    }

    #[test]
    fn cylinder_ray_hits_side_and_cap() {
        let c = Obstacle::Cylinder { cx: 2.0, cy: 0.0, r: 0.5, z_min: 0.0, z_max: 1.0 };
        let t = c.ray_hit(&Vec3::new(0.0, 0.0, 0.5), &Vec3::x()).unwrap();
        assert!((t - 1.5).abs() < 1e-12);
        let t = c.ray_hit(&Vec3::new(2.0, 0.0, 3.0), &-Vec3::z()).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!(c.ray_hit(&Vec3::new(0.0, 0.0, 1.5), &Vec3::x()).is_none());
        assert!(c.contains(&Vec3::new(2.1, 0.1, 0.5)));
    }

    #[test]
    fn world_file_parses_and_reports_lines() {
        let text = "bounds 0 0 0 10 10 3\nstart 1 1 1\nbox 5 5 1 1 1 2 # crate\ncyl 8 8 0.3 2.5\n";
        let w = TrueWorld::parse("f", text).unwrap();
        assert_eq!(w.obstacles.len(), 2);
        assert!(w.collides(&Vec3::new(5.0, 5.0, 1.0)));
        assert!(w.collides(&Vec3::new(8.0, 8.0, 2.0)));
        assert!(!w.collides(&Vec3::new(8.0, 8.0, 2.6)));
        match TrueWorld::parse("f", "bounds 0 0 0 1 1 1\nbox 1 2\n") {
            Err(Error::WorldFile { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(TrueWorld::parse("f", "box 1 1 1 1 1 1\n").is_err());
    }

    #[test]
    fn reachable_volume_of_empty_is_bounds_volume() {
        let w = make_world("empty").unwrap();
        assert!((w.reachable_volume(0.15) - 72.0).abs() < 1e-6);
    }
}
