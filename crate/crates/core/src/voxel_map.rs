//! Tri-state occupancy grid with exact voxel traversal and simulated depth-sensor insertion.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::world::TrueWorld;

/// Integer voxel coordinates `[x, y, z]`.
pub type CellIndex = [i32; 3];

/// Knowledge about a single voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CellState {
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

/// Result of a point lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Unknown,
    Free,
    Occupied,
    OutOfBounds,
}

/// The box `(B_x, B_y, B_z)` the exploration is confined to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationBounds {
    pub box_min: Vec3,
    pub box_max: Vec3,
}

impl ExplorationBounds {
    pub fn new(box_min: Vec3, box_max: Vec3) -> Result<Self> {
        if (0..3).any(|i| box_min[i] >= box_max[i]) {
            return Err(Error::InvalidBounds);
        }
        Ok(Self { box_min, box_max })
    }

    pub fn extent(&self) -> Vec3 {
        self.box_max - self.box_min
    }

    pub fn volume(&self) -> f64 {
        self.extent().product()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.box_min[i] && p[i] <= self.box_max[i])
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(self.box_min, self.box_max)
    }
}

/// Pose and intrinsics of the simulated depth camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    pub position: Vec3,
    pub yaw: f64,
    pub fov_h: f64,
    pub fov_v: f64,
    pub max_range: f64,
}

impl SensorPose {
    /// True when `p` lies inside the viewing frustum (ignoring occlusion).
    pub fn in_frustum(&self, p: &Vec3) -> bool {
        let d = p - self.position;
        let range = d.norm();
        if range > self.max_range || range < 1e-9 {
            return false;
        }
        let horiz = (d.x * d.x + d.y * d.y).sqrt();
        let az = crate::geom::wrap_angle(d.y.atan2(d.x) - self.yaw);
        let el = d.z.atan2(horiz);
        az.abs() <= self.fov_h * 0.5 && el.abs() <= self.fov_v * 0.5
    }
}

/// Axis-aligned voxel map covering the exploration bounds.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    origin: Vec3,
    resolution: f64,
    dims: [usize; 3],
    cells: Vec<CellState>,
    bounds: ExplorationBounds,
    /// Per-axis length of each voxel layer that lies inside the bounds.
    clipped_len: [Vec<f64>; 3],
    known_volume: f64,
    unknown_count: usize,
    dirty: Option<(CellIndex, CellIndex)>,
    new_occupied: Vec<CellIndex>,
    /// Fraction of a voxel between adjacent sensor rays at max range.
    ray_spacing: f64,
    /// Memoised traversability: 0 = stale, 1 = no, 2 = yes.
    traversable: Vec<std::cell::Cell<u8>>,
}

impl OccupancyGrid {
    pub fn new(bounds: ExplorationBounds, resolution: f64) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        let extent = bounds.extent();
        let dims = [0, 1, 2].map(|i| ((extent[i] / resolution) - 1e-9).ceil().max(1.0) as usize);
        let clipped_len = [0, 1, 2].map(|i| {
            (0..dims[i])
                .map(|k| {
                    let lo = k as f64 * resolution;
                    let hi = ((k + 1) as f64 * resolution).min(extent[i]);
                    (hi - lo).max(0.0)
                })
                .collect::<Vec<_>>()
        });
        let n = dims[0] * dims[1] * dims[2];
        Self {
            origin: bounds.box_min,
            resolution,
            dims,
            cells: vec![CellState::Unknown; n],
            bounds,
            clipped_len,
            known_volume: 0.0,
            unknown_count: n,
            dirty: None,
            new_occupied: Vec::new(),
            ray_spacing: 0.7,
            traversable: vec![std::cell::Cell::new(0); n],
        }
    }

    pub fn with_ray_spacing(mut self, voxels: f64) -> Self {
        assert!(voxels > 0.0 && voxels <= 1.0);
        self.ray_spacing = voxels;
        self
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bounds(&self) -> &ExplorationBounds {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown_count
    }

    /// Volume of Free and Occupied voxels, clipped to the bounds (m^3).
    pub fn known_volume(&self) -> f64 {
        self.known_volume
    }

    pub fn cell_volume(&self, c: CellIndex) -> f64 {
        self.clipped_len[0][c[0] as usize]
            * self.clipped_len[1][c[1] as usize]
            * self.clipped_len[2][c[2] as usize]
    }

    pub fn in_grid(&self, c: CellIndex) -> bool {
        (0..3).all(|i| c[i] >= 0 && (c[i] as usize) < self.dims[i])
    }

    #[inline]
    pub fn linear(&self, c: CellIndex) -> usize {
        (c[2] as usize * self.dims[1] + c[1] as usize) * self.dims[0] + c[0] as usize
    }

    pub fn unlinear(&self, idx: usize) -> CellIndex {
        let x = idx % self.dims[0];
        let y = (idx / self.dims[0]) % self.dims[1];
        let z = idx / (self.dims[0] * self.dims[1]);
        [x as i32, y as i32, z as i32]
    }

    /// Voxel containing `p`, or `None` outside the bounds.
    pub fn cell_of(&self, p: &Vec3) -> Option<CellIndex> {
        if !self.bounds.contains(p) {
            return None;
        }
        Some(self.cell_of_unchecked(p))
    }

    fn cell_of_unchecked(&self, p: &Vec3) -> CellIndex {
        let mut c = [0i32; 3];
        for i in 0..3 {
            let k = ((p[i] - self.origin[i]) / self.resolution).floor() as i64;
            c[i] = k.clamp(0, self.dims[i] as i64 - 1) as i32;
        }
        c
    }

    pub fn center(&self, c: CellIndex) -> Vec3 {
        Vec3::new(
            self.origin.x + (c[0] as f64 + 0.5) * self.resolution,
            self.origin.y + (c[1] as f64 + 0.5) * self.resolution,
            self.origin.z + (c[2] as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_box(&self, c: CellIndex) -> Aabb {
        let min = self.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * self.resolution;
        Aabb::new(min, min + Vec3::repeat(self.resolution))
    }

    /// State of an in-grid voxel. Out-of-grid indices read as `None`.
    #[inline]
    pub fn state(&self, c: CellIndex) -> Option<CellState> {
        if self.in_grid(c) {
            Some(self.cells[self.linear(c)])
        } else {
            None
        }
    }

    pub fn classify(&self, p: &Vec3) -> Classification {
        match self.cell_of(p) {
            None => Classification::OutOfBounds,
            Some(c) => match self.cells[self.linear(c)] {
                CellState::Unknown => Classification::Unknown,
                CellState::Free => Classification::Free,
                CellState::Occupied => Classification::Occupied,
            },
        }
    }

    /// Writes a state and keeps the bookkeeping (known volume, dirty box) in sync.
    /// Returns whether the cell changed.
    pub fn set(&mut self, c: CellIndex, s: CellState) -> bool {
        let idx = self.linear(c);
        let old = self.cells[idx];
        if old == s {
            return false;
        }
        if old == CellState::Unknown {
            self.known_volume += self.cell_volume(c);
            self.unknown_count -= 1;
        } else if s == CellState::Unknown {
            self.known_volume -= self.cell_volume(c);
            self.unknown_count += 1;
        }
        if s == CellState::Occupied {
            self.new_occupied.push(c);
        }
        self.cells[idx] = s;
        for d in neighbors_26().chain(std::iter::once([0, 0, 0])) {
            let n = [c[0] + d[0], c[1] + d[1], c[2] + d[2]];
            if self.in_grid(n) {
                self.traversable[self.linear(n)].set(0);
            }
        }
        self.dirty = Some(match self.dirty {
            None => (c, c),
            Some((lo, hi)) => (
                [lo[0].min(c[0]), lo[1].min(c[1]), lo[2].min(c[2])],
                [hi[0].max(c[0]), hi[1].max(c[1]), hi[2].max(c[2])],
            ),
        });
        true
    }

    /// Inclusive index box of every cell changed since the previous call.
    pub fn take_changed_region(&mut self) -> Option<(CellIndex, CellIndex)> {
        self.dirty.take()
    }

    /// Cells that turned Occupied since the previous call.
    pub fn take_new_occupied(&mut self) -> Vec<CellIndex> {
        std::mem::take(&mut self.new_occupied)
    }

    /// Exact voxel traversal (Amanatides-Woo) of the segment `from -> to`.
    ///
    /// Endpoints outside the bounds are clipped to the bounds first; a segment that misses the
    /// bounds entirely yields an empty list.
    pub fn raycast(&self, from: &Vec3, to: &Vec3) -> Vec<CellIndex> {
        let mut out = Vec::new();
        self.traverse(from, to, |c| {
            out.push(c);
            true
        });
        out
    }

    /// Visits traversed cells in order until `visit` returns false.
    pub fn traverse<F: FnMut(CellIndex) -> bool>(&self, from: &Vec3, to: &Vec3, mut visit: F) {
        let (a, b) = match self.clip_segment(from, to) {
            Some(s) => s,
            None => return,
        };
        let start = self.cell_of_unchecked(&a);
        let end = self.cell_of_unchecked(&b);
        if !visit(start) {
            return;
        }
        if start == end {
            return;
        }
        let d = b - a;
        let mut cur = start;
        let mut step = [0i32; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for i in 0..3 {
            if end[i] > start[i] {
                step[i] = 1;
            } else if end[i] < start[i] {
                step[i] = -1;
            }
            if step[i] != 0 && d[i].abs() > 1e-300 {
                let boundary = self.origin[i]
                    + (cur[i] as f64 + if step[i] > 0 { 1.0 } else { 0.0 }) * self.resolution;
                t_max[i] = ((boundary - a[i]) / d[i]).max(0.0);
                t_delta[i] = self.resolution / d[i].abs();
            }
        }
        let n_steps: i32 = (0..3).map(|i| (end[i] - start[i]).abs()).sum();
        for _ in 0..n_steps {
            // pick the axis whose boundary comes first among those still needing steps
            let mut axis = usize::MAX;
            let mut best = f64::INFINITY;
            for i in 0..3 {
                if cur[i] != end[i] && t_max[i] < best {
                    best = t_max[i];
                    axis = i;
                }
            }
            if axis == usize::MAX {
                // numerically stuck; step along any remaining axis
                axis = (0..3).find(|&i| cur[i] != end[i]).unwrap();
            }
            cur[axis] += step[axis];
            t_max[axis] += t_delta[axis];
            if !visit(cur) {
                return;
            }
        }
    }

    /// Clips a segment to the bounds box.
    fn clip_segment(&self, from: &Vec3, to: &Vec3) -> Option<(Vec3, Vec3)> {
        if self.bounds.contains(from) && self.bounds.contains(to) {
            return Some((*from, *to));
        }
        let d = to - from;
        let (t0, t1) = self.bounds.aabb().ray_interval(from, &d)?;
        let (t0, t1) = (t0.max(0.0), t1.min(1.0));
        if t0 > t1 {
            return None;
        }
        Some((from + d * t0, from + d * t1))
    }

    /// True when no Occupied cell lies on the segment, excluding the cell containing `to`.
    pub fn line_of_sight(&self, from: &Vec3, to: &Vec3) -> bool {
        let last = self.cell_of(to);
        let mut clear = true;
        self.traverse(from, to, |c| {
            if Some(c) == last {
                return false;
            }
            if self.cells[self.linear(c)] == CellState::Occupied {
                clear = false;
                return false;
            }
            true
        });
        clear
    }

    /// True when every cell on the segment is traversable.
    pub fn segment_traversable(&self, from: &Vec3, to: &Vec3) -> bool {
        let mut ok = true;
        self.traverse(from, to, |c| {
            if !self.is_traversable(c) {
                ok = false;
                return false;
            }
            true
        });
        ok
    }

    /// Free cell with no Occupied 26-neighbour, no Unknown 6-neighbour and a fully in-grid
    /// neighbourhood. Planned trajectories only pass through such cells.
    pub fn is_traversable(&self, c: CellIndex) -> bool {
        if !self.in_grid(c) {
            return false;
        }
        let memo = &self.traversable[self.linear(c)];
        match memo.get() {
            1 => return false,
            2 => return true,
            _ => {}
        }
        let t = self.compute_traversable(c);
        memo.set(if t { 2 } else { 1 });
        t
    }

    fn compute_traversable(&self, c: CellIndex) -> bool {
        if self.cells[self.linear(c)] != CellState::Free {
            return false;
        }
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let n = [c[0] + dx, c[1] + dy, c[2] + dz];
                    match self.state(n) {
                        None | Some(CellState::Occupied) => return false,
                        Some(CellState::Unknown) if dx.abs() + dy.abs() + dz.abs() == 1 => {
                            return false
                        }
                        _ => {}
                    }
                }
            }
        }
        true
    }

    pub fn is_traversable_point(&self, p: &Vec3) -> bool {
        self.cell_of(p).is_some_and(|c| self.is_traversable(c))
    }

    /// Free cell with at least one Unknown 6-neighbour.
    pub fn is_frontier(&self, c: CellIndex) -> bool {
        if self.state(c) != Some(CellState::Free) {
            return false;
        }
        NEIGHBORS_6
            .iter()
            .any(|d| self.state([c[0] + d[0], c[1] + d[1], c[2] + d[2]]) == Some(CellState::Unknown))
    }

    /// Distance from `p` to the nearest Occupied cell centre within `radius`, with the direction
    /// pointing from that cell towards `p`.
    pub fn nearest_occupied(&self, p: &Vec3, radius: f64) -> Option<(f64, Vec3)> {
        let r = (radius / self.resolution).ceil() as i32 + 1;
        let c = self.cell_of_unchecked(p);
        let mut best: Option<(f64, Vec3)> = None;
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    let n = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if self.state(n) != Some(CellState::Occupied) {
                        continue;
                    }
                    let diff = p - self.center(n);
                    let dist = diff.norm();
                    if dist <= radius && best.is_none_or(|(bd, _)| dist < bd) {
                        best = Some((dist, diff));
                    }
                }
            }
        }
        best
    }

    /// Casts the sensor frustum into the true world and updates the map.
    ///
    /// Cells before a hit become Free, the hit cell becomes Occupied, cells beyond stay as they
    /// were. Occupied cells are never cleared. Returns the number of changed cells.
    pub fn integrate_scan(&mut self, pose: &SensorPose, world: &TrueWorld) -> Result<usize> {
        let o = pose.position;
        if self.cell_of(&o).is_none() {
            return Err(Error::OutOfBounds(o.x, o.y, o.z));
        }
        let step = self.ray_spacing * self.resolution / pose.max_range;
        let n_h = (pose.fov_h / step).ceil() as usize + 1;
        let n_v = (pose.fov_v / step).ceil() as usize + 1;
        let bounds = self.bounds.aabb();
        let mut changed = 0;
        let mut cells = Vec::with_capacity(64);
        for iv in 0..n_v {
            let el = -pose.fov_v * 0.5 + pose.fov_v * iv as f64 / (n_v - 1) as f64;
            let (se, ce) = el.sin_cos();
            for ih in 0..n_h {
                let az = pose.yaw - pose.fov_h * 0.5 + pose.fov_h * ih as f64 / (n_h - 1) as f64;
                let (sa, ca) = az.sin_cos();
                let dir = Vec3::new(ce * ca, ce * sa, se);
                let t_exit = bounds.ray_interval(&o, &dir).map_or(0.0, |(_, t1)| t1);
                let limit = pose.max_range.min(t_exit);
                let hit = world.ray_hit(&o, &dir, limit);
                cells.clear();
                let end_t = match hit {
                    Some(t) => t + 1e-7,
                    None => (limit - 1e-9).max(0.0),
                };
                let end = o + dir * end_t;
                self.traverse(&o, &end, |c| {
                    cells.push(c);
                    true
                });
                let n = cells.len();
                for (k, &c) in cells.iter().enumerate() {
                    let last = k + 1 == n;
                    let target = if last && hit.is_some() {
                        CellState::Occupied
                    } else {
                        CellState::Free
                    };
                    let cur = self.cells[self.linear(c)];
                    let write = match (cur, target) {
                        (CellState::Occupied, _) => false,
                        (a, b) => a != b,
                    };
                    if write && self.set(c, target) {
                        changed += 1;
                    }
                }
            }
        }
        Ok(changed)
    }

    /// Text snapshot: header `res ox oy oz nx ny nz`, then `x y z state` per known cell
    /// (state 1 = free, 2 = occupied).
    pub fn export_snapshot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            self.resolution,
            self.origin.x,
            self.origin.y,
            self.origin.z,
            self.dims[0],
            self.dims[1],
            self.dims[2]
        );
        for (idx, st) in self.cells.iter().enumerate() {
            if *st != CellState::Unknown {
                let c = self.unlinear(idx);
                let _ = writeln!(s, "{} {} {} {}", c[0], c[1], c[2], *st as u8);
            }
        }
        s
    }

    /// Reads back the states written by [`export_snapshot`](Self::export_snapshot) into a grid
    /// with matching geometry.
    pub fn import_snapshot(&mut self, text: &str) -> Result<()> {
        let mut lines = text.lines();
        let header: Vec<f64> = lines
            .next()
            .ok_or_else(|| Error::Io("empty snapshot".into()))?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Io(e.to_string())))
            .collect::<Result<_>>()?;
        if header.len() != 7
            || (header[0] - self.resolution).abs() > 1e-12
            || (0..3).any(|i| header[4 + i] as usize != self.dims[i])
        {
            return Err(Error::Io("snapshot geometry does not match grid".into()));
        }
        for line in lines {
            let v: Vec<i32> = line
                .split_whitespace()
                .map(|t| t.parse::<i32>().map_err(|e| Error::Io(e.to_string())))
                .collect::<Result<_>>()?;
            if v.len() != 4 || !self.in_grid([v[0], v[1], v[2]]) {
                return Err(Error::Io(format!("bad snapshot line '{line}'")));
            }
            let st = match v[3] {
                1 => CellState::Free,
                2 => CellState::Occupied,
                _ => return Err(Error::Io(format!("bad state in '{line}'"))),
            };
            self.set([v[0], v[1], v[2]], st);
        }
        Ok(())
    }
}

pub const NEIGHBORS_6: [[i32; 3]; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

/// All 26 non-zero offsets in a 3x3x3 block, in lexicographic order.
pub fn neighbors_26() -> impl Iterator<Item = [i32; 3]> {
    (-1..=1).flat_map(|dz| {
        (-1..=1).flat_map(move |dy| {
            (-1..=1).filter_map(move |dx| {
                if dx == 0 && dy == 0 && dz == 0 {
                    None
                } else {
                    Some([dx, dy, dz])
                }
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Obstacle, TrueWorld};

    fn unit_grid(n: f64, res: f64) -> OccupancyGrid {
        let b = ExplorationBounds::new(Vec3::zeros(), Vec3::repeat(n)).unwrap();
        OccupancyGrid::new(b, res)
    }

    #[test]
    fn zero_length_ray_is_single_cell() {
        let g = unit_grid(1.0, 0.1);
        let p = Vec3::repeat(0.05);
        assert_eq!(g.raycast(&p, &p), vec![[0, 0, 0]]);
    }

    #[test]
    fn axis_aligned_ray() {
        let g = unit_grid(1.0, 0.1);
        let cells = g.raycast(&Vec3::repeat(0.05), &Vec3::new(0.35, 0.05, 0.05));
        assert_eq!(cells, vec![[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]);
    }

    #[test]
    fn dims_follow_ceil_rule() {
        let b = ExplorationBounds::new(Vec3::zeros(), Vec3::new(30.0, 16.0, 2.0)).unwrap();
        let g = OccupancyGrid::new(b, 0.15);
        assert_eq!(g.dims(), [200, 107, 14]);
    }

    #[test]
    fn classify_fresh_and_outside() {
        let g = unit_grid(2.0, 0.1);
        assert_eq!(g.classify(&Vec3::new(0.3, 1.2, 1.9)), Classification::Unknown);
        assert_eq!(g.classify(&Vec3::new(-0.1, 1.0, 1.0)), Classification::OutOfBounds);
        assert_eq!(g.classify(&Vec3::new(1.0, 1.0, 2.5)), Classification::OutOfBounds);
    }

    #[test]
    fn bounds_validation() {
        assert_eq!(
            ExplorationBounds::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0)).unwrap_err(),
            Error::InvalidBounds
        );
    }

    fn sensor(pos: Vec3, yaw: f64) -> SensorPose {
        SensorPose {
            position: pos,
            yaw,
            fov_h: 80f64.to_radians(),
            fov_v: 60f64.to_radians(),
            max_range: 4.5,
        }
    }

    #[test]
    fn empty_world_scan_carves_free_wedge() {
        let b = ExplorationBounds::new(Vec3::new(-1.0, -5.0, -2.0), Vec3::new(6.0, 5.0, 2.0)).unwrap();
        let world = TrueWorld::new("empty", b, vec![], Vec3::zeros());
        let mut g = OccupancyGrid::new(b, 0.15);
        let changed = g.integrate_scan(&sensor(Vec3::new(0.01, 0.01, 0.01), 0.0), &world).unwrap();
        assert!(changed > 0);
        assert!(g.cells.iter().all(|c| *c != CellState::Occupied));
        assert_eq!(g.classify(&Vec3::new(3.0, 0.0, 0.0)), Classification::Free);
        // behind the sensor stays unknown
        assert_eq!(g.classify(&Vec3::new(-0.5, 0.0, 0.0)), Classification::Unknown);
        // second identical scan changes nothing
        assert_eq!(g.integrate_scan(&sensor(Vec3::new(0.01, 0.01, 0.01), 0.0), &world).unwrap(), 0);
    }

    #[test]
    fn wall_hits_mark_first_layer_only() {
        let b = ExplorationBounds::new(Vec3::new(-1.05, -3.0, -1.5), Vec3::new(4.95, 3.0, 1.5)).unwrap();
        // wall occupying x in [2, 2.6]
        let wall = Obstacle::Box(Aabb::new(Vec3::new(2.0, -3.0, -1.5), Vec3::new(2.6, 3.0, 1.5)));
        let world = TrueWorld::new("wall", b, vec![wall], Vec3::zeros());
        let mut g = OccupancyGrid::new(b, 0.15);
        g.integrate_scan(&sensor(Vec3::new(0.0, 0.0, 0.0), 0.0), &world).unwrap();
        // the analytic first layer: voxels whose x-range contains x = 2.0
        let layer = ((2.0 - g.origin.x) / 0.15).floor() as i32;
        let mut n_occ = 0;
        for (idx, st) in g.cells.iter().enumerate() {
            if *st == CellState::Occupied {
                let c = g.unlinear(idx);
                assert_eq!(c[0], layer, "occupied cell off the wall face: {c:?}");
                n_occ += 1;
            }
        }
        assert!(n_occ > 50);
        // nothing beyond the wall is known
        assert_eq!(g.classify(&Vec3::new(2.9, 0.0, 0.0)), Classification::Unknown);
        assert_eq!(g.classify(&Vec3::new(2.05, 0.0, 0.0)), Classification::Occupied);
    }

    #[test]
    fn scan_outside_bounds_is_rejected_without_mutation() {
        let b = ExplorationBounds::new(Vec3::zeros(), Vec3::repeat(3.0)).unwrap();
        let world = TrueWorld::new("empty", b, vec![], Vec3::repeat(1.0));
        let mut g = OccupancyGrid::new(b, 0.15);
        assert!(g.integrate_scan(&sensor(Vec3::new(-1.0, 1.0, 1.0), 0.0), &world).is_err());
        assert_eq!(g.unknown_count(), g.len());
    }

    #[test]
    fn snapshot_round_trip() {
        let b = ExplorationBounds::new(Vec3::zeros(), Vec3::repeat(3.0)).unwrap();
        let world = TrueWorld::new(
            "box",
            b,
            vec![Obstacle::Box(Aabb::new(Vec3::new(2.0, 0.0, 0.0), Vec3::new(2.5, 3.0, 3.0)))],
            Vec3::repeat(1.0),
        );
        let mut g = OccupancyGrid::new(b, 0.15);
        g.integrate_scan(&sensor(Vec3::new(0.5, 1.5, 1.5), 0.0), &world).unwrap();
        let text = g.export_snapshot();
        assert!(text.starts_with("0.15 0 0 0 20 20 20"));
        let mut h = OccupancyGrid::new(b, 0.15);
        h.import_snapshot(&text).unwrap();
        assert_eq!(g.cells, h.cells);
        assert!((g.known_volume() - h.known_volume()).abs() < 1e-9);
    }

    #[test]
    fn known_volume_is_clipped_to_bounds() {
        let b = ExplorationBounds::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 0.25)).unwrap();
        let mut g = OccupancyGrid::new(b, 0.15);
        for idx in 0..g.len() {
            let c = g.unlinear(idx);
            g.set(c, CellState::Free);
        }
        assert!((g.known_volume() - 0.25).abs() < 1e-9);
    }
}
