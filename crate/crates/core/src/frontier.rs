//! Frontier detection, incremental clustering and viewpoint sampling.
//!
//! A frontier cell is a Free voxel with at least one Unknown 6-neighbour. Frontier cells are
//! grouped into 26-connected components; components whose bounding-box diagonal exceeds the
//! split threshold are halved along their principal axis until they fit. Each cluster caches its
//! average point and a short, best-first list of viewpoints.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Matrix3, SymmetricEigen};

use crate::geom::{wrap_angle, yaw_distance, Vec3};
use crate::voxel_map::{neighbors_26, CellIndex, OccupancyGrid, SensorPose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewpoint {
    pub position: Vec3,
    pub yaw: f64,
    pub coverage_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    pub id: u64,
    /// Sorted lexicographically.
    pub cells: Vec<CellIndex>,
    pub average: Vec3,
    /// Best first; empty when the cluster is dormant.
    pub viewpoints: Vec<Viewpoint>,
    /// Inclusive cell-index box.
    pub bbox: (CellIndex, CellIndex),
}

impl FrontierCluster {
    pub fn is_dormant(&self) -> bool {
        self.viewpoints.is_empty()
    }

    pub fn best_viewpoint(&self) -> Option<&Viewpoint> {
        self.viewpoints.first()
    }
}

#[derive(Debug, Clone)]
pub struct FrontierConfig {
    /// Clusters whose bounding-box diagonal exceeds this (m) are split.
    pub split_diagonal: f64,
    /// Smaller clusters are kept but never given viewpoints.
    pub min_cluster_cells: usize,
    pub vp_radius_min: f64,
    pub vp_radius_max: f64,
    pub vp_radius_step: f64,
    pub vp_angle_step: f64,
    pub max_viewpoints: usize,
    pub min_coverage: usize,
    /// Upper bound on cluster cells tested for visibility per candidate.
    pub visibility_samples: usize,
    pub fov_h: f64,
    pub fov_v: f64,
    pub max_range: f64,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        Self {
            split_diagonal: 3.0,
            min_cluster_cells: 30,
            vp_radius_min: 1.0,
            vp_radius_max: 4.5 * 0.8,
            vp_radius_step: 0.5,
            vp_angle_step: PI / 6.0,
            max_viewpoints: 3,
            min_coverage: 1,
            visibility_samples: 48,
            fov_h: 80f64.to_radians(),
            fov_v: 60f64.to_radians(),
            max_range: 4.5,
        }
    }
}

/// Maintains the frontier clusters of one map between planner ticks.
#[derive(Debug, Clone)]
pub struct FrontierManager {
    cfg: FrontierConfig,
    clusters: Vec<FrontierCluster>,
    /// Owning cluster id per cell, 0 = none.
    labels: Vec<u64>,
    next_id: u64,
    banned: Vec<(Vec3, f64)>,
    /// Abstract work units spent since the last [`FrontierManager::take_work`].
    work: u64,
}

impl FrontierManager {
    pub fn new(cfg: FrontierConfig, grid: &OccupancyGrid) -> Self {
        Self {
            cfg,
            clusters: Vec::new(),
            labels: vec![0; grid.len()],
            next_id: 1,
            banned: Vec::new(),
            work: 0,
        }
    }

    /// Cells scanned plus visibility tests performed since the previous call.
    pub fn take_work(&mut self) -> u64 {
        std::mem::take(&mut self.work)
    }

    fn viewpoint_work(&self, cluster: &FrontierCluster) -> u64 {
        let radii = ((self.cfg.vp_radius_max - self.cfg.vp_radius_min) / self.cfg.vp_radius_step).floor() as u64 + 1;
        let angles = ((2.0 * PI) / self.cfg.vp_angle_step).round() as u64;
        let samples = cluster.cells.len().min(self.cfg.visibility_samples) as u64 + 1;
        radii * angles * samples
    }

    pub fn config(&self) -> &FrontierConfig {
        &self.cfg
    }

    pub fn clusters(&self) -> &[FrontierCluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: u64) -> Option<&FrontierCluster> {
        self.clusters.iter().find(|c| c.id == id)
    }

    /// Clusters that currently have at least one viewpoint.
    pub fn active_clusters(&self) -> Vec<&FrontierCluster> {
        self.clusters.iter().filter(|c| !c.is_dormant()).collect()
    }

    /// Excludes viewpoints near `vp` (0.5 m, 0.5 rad) from future sampling and drops them from
    /// existing clusters.
    pub fn ban_viewpoint(&mut self, vp: &Viewpoint) {
        self.banned.push((vp.position, vp.yaw));
        let banned = self.banned.clone();
        for c in &mut self.clusters {
            c.viewpoints.retain(|v| !is_banned(&banned, v));
        }
    }

    /// Full re-detection over the whole grid.
    pub fn detect_all(&mut self, grid: &OccupancyGrid) -> &[FrontierCluster] {
        let d = grid.dims();
        let hi = [d[0] as i32 - 1, d[1] as i32 - 1, d[2] as i32 - 1];
        self.update(grid, Some(([0, 0, 0], hi)))
    }

    /// Re-detects clusters touched by `changed` (inclusive cell box of modified voxels).
    ///
    /// Untouched clusters keep their ids. Clusters connected to re-detected frontier cells are
    /// merged into the re-detection so the resulting partition matches a from-scratch pass.
    pub fn update(&mut self, grid: &OccupancyGrid, changed: Option<(CellIndex, CellIndex)>) -> &[FrontierCluster] {
        if let Some((lo, hi)) = changed {
            let d = grid.dims();
            let lo = [0, 1, 2].map(|i| (lo[i] - 1).max(0));
            let hi = [0, 1, 2].map(|i| (hi[i] + 1).min(d[i] as i32 - 1));
            self.redetect(grid, lo, hi);
        }
        // dormant clusters are re-checked every update
        let banned = self.banned.clone();
        for k in 0..self.clusters.len() {
            if self.clusters[k].is_dormant() && self.clusters[k].cells.len() >= self.cfg.min_cluster_cells {
                self.work += self.viewpoint_work(&self.clusters[k]);
                let vps = generate_viewpoints(&self.clusters[k], grid, &self.cfg);
                self.clusters[k].viewpoints = vps.into_iter().filter(|v| !is_banned(&banned, v)).collect();
            }
        }
        &self.clusters
    }

    fn redetect(&mut self, grid: &OccupancyGrid, lo: CellIndex, hi: CellIndex) {
        let in_region = |c: &CellIndex| (0..3).all(|i| c[i] >= lo[i] && c[i] <= hi[i]);
        let box_hit = |b: &(CellIndex, CellIndex)| (0..3).all(|i| b.0[i] <= hi[i] && lo[i] <= b.1[i]);

        let mut removed: BTreeSet<u64> = BTreeSet::new();
        let mut seeds: Vec<CellIndex> = Vec::new();
        for c in &self.clusters {
            if box_hit(&c.bbox) {
                removed.insert(c.id);
                seeds.extend(c.cells.iter().copied());
            }
        }
        self.work += ((hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1) * (hi[2] - lo[2] + 1)) as u64;
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    seeds.push([x, y, z]);
                }
            }
        }
        for id in &removed {
            if let Some(c) = self.clusters.iter().find(|c| c.id == *id) {
                for cell in &c.cells {
                    let li = grid.linear(*cell);
                    self.labels[li] = 0;
                }
            }
        }

        // flood fill over frontier cells; reaching a surviving cluster pulls it in
        let index: HashMap<u64, usize> = self.clusters.iter().enumerate().map(|(k, c)| (c.id, k)).collect();
        let mut visited: HashSet<usize> = HashSet::new();
        let mut components: Vec<Vec<CellIndex>> = Vec::new();
        for s in seeds {
            if !grid.is_frontier(s) {
                continue;
            }
            let ls = grid.linear(s);
            if visited.contains(&ls) {
                continue;
            }
            if self.labels[ls] != 0 {
                // belongs to a surviving cluster that only touches the region by bbox margin
                if !in_region(&s) {
                    continue;
                }
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::new();
            visited.insert(ls);
            queue.push_back(s);
            while let Some(c) = queue.pop_front() {
                self.work += 1;
                let lc = grid.linear(c);
                let owner = self.labels[lc];
                if owner != 0 {
                    removed.insert(owner);
                    for cell in &self.clusters[index[&owner]].cells {
                        let li = grid.linear(*cell);
                        self.labels[li] = 0;
                    }
                }
                comp.push(c);
                for d in neighbors_26() {
                    let n = [c[0] + d[0], c[1] + d[1], c[2] + d[2]];
                    if !grid.in_grid(n) {
                        continue;
                    }
                    let ln = grid.linear(n);
                    if visited.contains(&ln) || !grid.is_frontier(n) {
                        continue;
                    }
                    visited.insert(ln);
                    queue.push_back(n);
                }
            }
            components.push(comp);
        }
        self.clusters.retain(|c| !removed.contains(&c.id));

        let mut parts: Vec<Vec<CellIndex>> = Vec::new();
        for mut comp in components {
            comp.sort_unstable();
            split_recursive(grid, comp, self.cfg.split_diagonal, &mut parts);
        }
        parts.sort_by(|a, b| a[0].cmp(&b[0]));
        for cells in parts {
            let id = self.next_id;
            self.next_id += 1;
            for c in &cells {
                let li = grid.linear(*c);
                self.labels[li] = id;
            }
            let mut cluster = make_cluster(id, cells, grid);
            if cluster.cells.len() >= self.cfg.min_cluster_cells {
                self.work += self.viewpoint_work(&cluster);
                let banned = &self.banned;
                cluster.viewpoints = generate_viewpoints(&cluster, grid, &self.cfg)
                    .into_iter()
                    .filter(|v| !is_banned(banned, v))
                    .collect();
            }
            self.clusters.push(cluster);
        }
        self.clusters.sort_by_key(|c| c.id);
    }

    /// CSV `cluster_id,cx,cy,cz,n_cells,n_viewpoints`.
    pub fn debug_csv(&self) -> String {
        let mut s = String::from("cluster_id,cx,cy,cz,n_cells,n_viewpoints\n");
        for c in &self.clusters {
            let _ = writeln!(
                s,
                "{},{:.4},{:.4},{:.4},{},{}",
                c.id,
                c.average.x,
                c.average.y,
                c.average.z,
                c.cells.len(),
                c.viewpoints.len()
            );
        }
        s
    }
}

fn is_banned(banned: &[(Vec3, f64)], v: &Viewpoint) -> bool {
    banned
        .iter()
        .any(|(p, y)| (p - v.position).norm() < 0.5 && yaw_distance(*y, v.yaw) < 0.5)
}

fn make_cluster(id: u64, cells: Vec<CellIndex>, grid: &OccupancyGrid) -> FrontierCluster {
    let mut sum = Vec3::zeros();
    let mut lo = cells[0];
    let mut hi = cells[0];
    for c in &cells {
        sum += grid.center(*c);
        for i in 0..3 {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    FrontierCluster {
        id,
        average: sum / cells.len() as f64,
        cells,
        viewpoints: Vec::new(),
        bbox: (lo, hi),
    }
}

/// Splits `cells` (sorted) along the principal axis until every part's bbox diagonal fits.
/// Each output part is 26-connected and sorted.
fn split_recursive(grid: &OccupancyGrid, cells: Vec<CellIndex>, max_diag: f64, out: &mut Vec<Vec<CellIndex>>) {
    let mut lo = cells[0];
    let mut hi = cells[0];
    for c in &cells {
        for i in 0..3 {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    let diag = Vec3::new(
        (hi[0] - lo[0] + 1) as f64,
        (hi[1] - lo[1] + 1) as f64,
        (hi[2] - lo[2] + 1) as f64,
    )
    .norm()
        * grid.resolution();
    if diag <= max_diag || cells.len() < 2 {
        out.push(cells);
        return;
    }
    let pts: Vec<Vec3> = cells.iter().map(|c| grid.center(*c)).collect();
    let mean = pts.iter().fold(Vec3::zeros(), |a, p| a + p) / pts.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in &pts {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (imax, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    let axis: Vec3 = eig.eigenvectors.column(imax).into_owned();
    let (mut a, mut b): (Vec<CellIndex>, Vec<CellIndex>) = (Vec::new(), Vec::new());
    for (c, p) in cells.iter().zip(&pts) {
        if (p - mean).dot(&axis) >= 0.0 {
            a.push(*c);
        } else {
            b.push(*c);
        }
    }
    if a.is_empty() || b.is_empty() {
        out.push(cells);
        return;
    }
    for half in [a, b] {
        for comp in connected_components(half) {
            split_recursive(grid, comp, max_diag, out);
        }
    }
}

/// 26-connected components of a sorted cell list; each output is sorted.
fn connected_components(cells: Vec<CellIndex>) -> Vec<Vec<CellIndex>> {
    let set: BTreeSet<CellIndex> = cells.iter().copied().collect();
    let mut seen: BTreeSet<CellIndex> = BTreeSet::new();
    let mut out = Vec::new();
    for c in &cells {
        if seen.contains(c) {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([*c]);
        seen.insert(*c);
        while let Some(x) = queue.pop_front() {
            comp.push(x);
            for d in neighbors_26() {
                let n = [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
                if set.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Samples viewpoints on concentric horizontal circles around the cluster average.
///
/// Candidates must be traversable and see the average point; each is scored by the number of
/// (sub-sampled) cluster cells inside its frustum with an unoccluded line of sight.
pub fn generate_viewpoints(cluster: &FrontierCluster, grid: &OccupancyGrid, cfg: &FrontierConfig) -> Vec<Viewpoint> {
    if cluster.cells.is_empty() {
        return Vec::new();
    }
    let avg = cluster.average;
    let b = grid.bounds();
    let margin = 2.0 * grid.resolution();
    let z = avg.z.clamp(b.box_min.z + margin, b.box_max.z - margin);
    let stride = cluster.cells.len().div_ceil(cfg.visibility_samples.max(1));
    let samples: Vec<Vec3> = cluster.cells.iter().step_by(stride.max(1)).map(|c| grid.center(*c)).collect();

    let n_angles = ((2.0 * PI) / cfg.vp_angle_step).round().max(1.0) as usize;
    let mut candidates: Vec<(Viewpoint, f64)> = Vec::new();
    let mut r = cfg.vp_radius_min;
    while r <= cfg.vp_radius_max + 1e-9 {
        for k in 0..n_angles {
            let phi = k as f64 * cfg.vp_angle_step;
            let pos = Vec3::new(avg.x + r * phi.cos(), avg.y + r * phi.sin(), z);
            if !grid.is_traversable_point(&pos) || !grid.line_of_sight(&pos, &avg) {
                continue;
            }
            let yaw = wrap_angle((avg.y - pos.y).atan2(avg.x - pos.x));
            let pose = SensorPose {
                position: pos,
                yaw,
                fov_h: cfg.fov_h,
                fov_v: cfg.fov_v,
                max_range: cfg.max_range,
            };
            let seen = samples
                .iter()
                .filter(|p| pose.in_frustum(p) && grid.line_of_sight(&pos, p))
                .count();
            if seen >= cfg.min_coverage.max(1) {
                candidates.push((Viewpoint { position: pos, yaw, coverage_count: seen }, r));
            }
        }
        r += cfg.vp_radius_step;
    }
    // best coverage first, then closer to the cluster, then sampling order
    candidates.sort_by(|a, b| {
        b.0.coverage_count
            .cmp(&a.0.coverage_count)
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    candidates.into_iter().take(cfg.max_viewpoints).map(|(v, _)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::voxel_map::{CellState, ExplorationBounds};

    fn grid(x: f64, y: f64, z: f64) -> OccupancyGrid {
        OccupancyGrid::new(ExplorationBounds::new(Vec3::zeros(), Vec3::new(x, y, z)).unwrap(), 0.15)
    }

    fn fill(g: &mut OccupancyGrid, b: Aabb, s: CellState) {
        for idx in 0..g.len() {
            let c = g.unlinear(idx);
            if b.contains(&g.center(c)) {
                g.set(c, s);
            }
        }
    }

    #[test]
    fn unknown_grid_has_no_frontiers() {
        let g = grid(3.0, 3.0, 2.0);
        let mut fm = FrontierManager::new(FrontierConfig::default(), &g);
        assert!(fm.detect_all(&g).is_empty());
    }

    #[test]
    fn fully_known_grid_has_no_frontiers() {
        let mut g = grid(3.0, 3.0, 2.0);
        fill(&mut g, Aabb::new(Vec3::zeros(), Vec3::new(3.0, 3.0, 2.2)), CellState::Free);
        let mut fm = FrontierManager::new(FrontierConfig::default(), &g);
        assert!(fm.detect_all(&g).is_empty());
    }

    #[test]
    fn large_frontier_is_split_and_partitioned() {
        let mut g = grid(10.0, 6.0, 2.0);
        fill(&mut g, Aabb::new(Vec3::zeros(), Vec3::new(10.0, 3.0, 2.2)), CellState::Free);
        let mut fm = FrontierManager::new(FrontierConfig::default(), &g);
        let clusters = fm.detect_all(&g).to_vec();
        assert!(clusters.len() >= 4, "a 10 m frontier wall must split, got {}", clusters.len());
        let mut all = BTreeSet::new();
        for c in &clusters {
            let (lo, hi) = c.bbox;
            let diag = Vec3::new(
                (hi[0] - lo[0] + 1) as f64,
                (hi[1] - lo[1] + 1) as f64,
                (hi[2] - lo[2] + 1) as f64,
            )
            .norm()
                * 0.15;
            assert!(diag <= 3.0 + 1e-9);
            for cell in &c.cells {
                assert!(all.insert(*cell), "cell in two clusters");
                assert!(g.is_frontier(*cell));
            }
            let mean = c.cells.iter().fold(Vec3::zeros(), |a, x| a + g.center(*x)) / c.cells.len() as f64;
            assert!((mean - c.average).norm() < 1e-12);
        }
    }

    #[test]
    fn viewpoint_yaw_points_at_average() {
        let mut g = grid(10.0, 10.0, 2.0);
        fill(&mut g, Aabb::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 2.2)), CellState::Free);
        // a small unknown block in the middle produces a frontier shell around it
        fill(&mut g, Aabb::new(Vec3::new(4.8, 4.8, 0.8), Vec3::new(5.2, 5.2, 1.2)), CellState::Unknown);
        let mut fm = FrontierManager::new(FrontierConfig::default(), &g);
        let clusters = fm.detect_all(&g).to_vec();
        assert_eq!(clusters.len(), 1);
        let c = &clusters[0];
        assert!(!c.viewpoints.is_empty() && c.viewpoints.len() <= 3);
        for v in &c.viewpoints {
            let expect = (c.average.y - v.position.y).atan2(c.average.x - v.position.x);
            assert!(crate::geom::yaw_distance(v.yaw, expect) < 1e-9);
            assert!(v.coverage_count >= 1);
        }
        for w in c.viewpoints.windows(2) {
            assert!(w[0].coverage_count >= w[1].coverage_count);
        }
    }

    #[test]
    fn cluster_behind_closed_walls_is_dormant() {
        let mut g = grid(10.0, 10.0, 2.0);
        fill(&mut g, Aabb::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 2.2)), CellState::Occupied);
        // a tiny free cavity touching unknown, sealed by occupied cells
        fill(&mut g, Aabb::new(Vec3::new(4.9, 4.9, 0.9), Vec3::new(5.3, 5.3, 1.3)), CellState::Free);
        fill(&mut g, Aabb::new(Vec3::new(5.3, 4.9, 0.9), Vec3::new(5.6, 5.3, 1.3)), CellState::Unknown);
        let mut fm = FrontierManager::new(FrontierConfig::default(), &g);
        let clusters = fm.detect_all(&g).to_vec();
        assert!(!clusters.is_empty());
        assert!(clusters.iter().all(|c| c.is_dormant()));
        assert!(fm.active_clusters().is_empty());
    }

    #[test]
    fn banned_viewpoints_are_not_resampled() {
        let mut g = grid(10.0, 10.0, 2.0);
        fill(&mut g, Aabb::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 2.2)), CellState::Free);
        fill(&mut g, Aabb::new(Vec3::new(4.8, 4.8, 0.8), Vec3::new(5.2, 5.2, 1.2)), CellState::Unknown);
        let mut fm = FrontierManager::new(FrontierConfig::default(), &g);
        fm.detect_all(&g);
        let first = fm.clusters()[0].viewpoints[0];
        fm.ban_viewpoint(&first);
        assert!(fm.clusters()[0].viewpoints.iter().all(|v| (v.position - first.position).norm() >= 0.5));
        fm.detect_all(&g);
        assert!(fm.clusters()[0].viewpoints.iter().all(|v| (v.position - first.position).norm() >= 0.5));
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let mut g = grid(10.0, 10.0, 2.0);
        fill(&mut g, Aabb::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 2.2)), CellState::Free);
        fill(&mut g, Aabb::new(Vec3::new(4.8, 4.8, 0.8), Vec3::new(5.2, 5.2, 1.2)), CellState::Unknown);
        let mut fm = FrontierManager::new(FrontierConfig::default(), &g);
        fm.detect_all(&g);
        let csv = fm.debug_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("cluster_id,cx,cy,cz,n_cells,n_viewpoints"));
        assert_eq!(lines.count(), 1);
    }
}

