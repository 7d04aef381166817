//! Geometric A* over traversable voxels.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::voxel_map::{neighbors_26, CellIndex, OccupancyGrid};

/// Default expansion cap; large enough for every bundled world.
pub const DEFAULT_MAX_EXPANSIONS: usize = 400_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<CellIndex>,
    /// `start`, the centres of the interior cells, then `goal`.
    pub points: Vec<Vec3>,
    pub length: f64,
    pub expanded: usize,
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    cell: CellIndex,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on f, then smaller h (deeper node), then lexicographically smallest cell
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest 26-connected path with Euclidean edge costs between the cells of `start` and `goal`.
///
/// Every visited cell must be passable from `start` (see [`super::passable`]).
pub fn astar_geometric(start: &Vec3, goal: &Vec3, grid: &OccupancyGrid) -> Result<GridPath> {
    astar_with_budget(start, goal, grid, DEFAULT_MAX_EXPANSIONS)
}

pub fn astar_with_budget(start: &Vec3, goal: &Vec3, grid: &OccupancyGrid, max_expansions: usize) -> Result<GridPath> {
    let s = grid.cell_of(start).ok_or(Error::OutOfBounds(start.x, start.y, start.z))?;
    let g = grid.cell_of(goal).ok_or(Error::OutOfBounds(goal.x, goal.y, goal.z))?;
    if s == g {
        return Ok(GridPath {
            cells: vec![s],
            points: vec![*start, *goal],
            length: (goal - start).norm(),
            expanded: 0,
        });
    }
    if !super::passable(grid, g, start) {
        return Err(Error::NoPath);
    }
    WORKSPACE.with(|ws| {
        let mut ws = ws.borrow_mut();
        ws.reset(grid.len());
        search(&mut ws, grid, start, goal, s, g, max_expansions)
    })
}

/// Per-thread search arrays, invalidated by bumping a generation stamp instead of clearing.
#[derive(Default)]
struct Workspace {
    g: Vec<f64>,
    parent: Vec<usize>,
    closed: Vec<bool>,
    stamp: Vec<u32>,
    generation: u32,
}

impl Workspace {
    fn reset(&mut self, n: usize) {
        if self.stamp.len() != n || self.generation == u32::MAX {
            self.g = vec![f64::INFINITY; n];
            self.parent = vec![usize::MAX; n];
            self.closed = vec![false; n];
            self.stamp = vec![0; n];
            self.generation = 0;
        }
        self.generation += 1;
    }

    #[inline]
    fn touch(&mut self, i: usize) {
        if self.stamp[i] != self.generation {
            self.stamp[i] = self.generation;
            self.g[i] = f64::INFINITY;
            self.parent[i] = usize::MAX;
            self.closed[i] = false;
        }
    }
}

thread_local! {
    static WORKSPACE: RefCell<Workspace> = RefCell::new(Workspace::default());
    static EXPANSIONS: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

/// Expansions performed by searches on this thread since the previous call.
pub fn take_expansions() -> u64 {
    EXPANSIONS.with(|e| e.replace(0))
}

pub fn add_expansions(n: u64) {
    EXPANSIONS.with(|e| e.set(e.get() + n));
}

fn count(expanded: usize) {
    EXPANSIONS.with(|e| e.set(e.get() + expanded as u64 + 1));
}

/// Shortest 26-connected distance between two cells with no obstacles in the way.
fn lattice_distance(a: CellIndex, b: CellIndex, res: f64) -> f64 {
    let mut d = [(a[0] - b[0]).abs(), (a[1] - b[1]).abs(), (a[2] - b[2]).abs()];
    d.sort_unstable();
    let [lo, mid, hi] = d.map(f64::from);
    res * (SQRT_3 * lo + SQRT_2 * (mid - lo) + (hi - mid))
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_3: f64 = 1.732_050_807_568_877_2;

fn search(
    ws: &mut Workspace,
    grid: &OccupancyGrid,
    start: &Vec3,
    goal: &Vec3,
    s: CellIndex,
    g: CellIndex,
    max_expansions: usize,
) -> Result<GridPath> {
    let res = grid.resolution();
    let h = |c: CellIndex| lattice_distance(c, g, res);
    let si = grid.linear(s);
    let gi = grid.linear(g);
    ws.touch(si);
    ws.g[si] = 0.0;
    let mut open = BinaryHeap::new();
    open.push(Entry { f: h(s), h: h(s), cell: s, idx: si });
    let steps: Vec<([i32; 3], f64)> = neighbors_26()
        .map(|d| (d, res * ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64).sqrt()))
        .collect();
    let mut expanded = 0usize;

    while let Some(Entry { cell, idx, .. }) = open.pop() {
        if ws.closed[idx] {
            continue;
        }
        ws.closed[idx] = true;
        if idx == gi {
            count(expanded);
            return Ok(reconstruct(grid, &ws.parent, si, gi, start, goal, expanded));
        }
        expanded += 1;
        if expanded > max_expansions {
            count(expanded);
            return Err(Error::SearchFailed { expanded });
        }
        let gc = ws.g[idx];
        for (d, cost) in &steps {
            let nb = [cell[0] + d[0], cell[1] + d[1], cell[2] + d[2]];
            if !grid.in_grid(nb) {
                continue;
            }
            let ni = grid.linear(nb);
            ws.touch(ni);
            if ws.closed[ni] || !super::passable(grid, nb, start) {
                continue;
            }
            let cand = gc + cost;
            if cand < ws.g[ni] {
                ws.g[ni] = cand;
                ws.parent[ni] = idx;
                let hn = h(nb);
                open.push(Entry { f: cand + hn, h: hn, cell: nb, idx: ni });
            }
        }
    }
    count(expanded);
    Err(Error::NoPath)
}

/// Result of [`lengths_from`] for one goal.
#[derive(Debug, Clone, PartialEq)]
pub enum Reach {
    /// Path length and the cells it crosses.
    Reached(f64, Vec<CellIndex>),
    /// The search ran out of expansions first.
    Capped,
    /// Not connected to the start.
    Unreachable,
}

/// Shortest path lengths from `start` to every goal with one Dijkstra search, stopped once all
/// goals are settled or after `max_expansions`. Same graph and endpoint handling as
/// [`astar_geometric`].
pub fn lengths_from(start: &Vec3, goals: &[Vec3], grid: &OccupancyGrid, max_expansions: usize) -> Vec<Reach> {
    let Some(s) = grid.cell_of(start) else {
        return vec![Reach::Unreachable; goals.len()];
    };
    let mut out: Vec<Option<Reach>> = goals
        .iter()
        .map(|g| match grid.cell_of(g) {
            Some(c) if c == s => Some(Reach::Reached((g - start).norm(), vec![s])),
            Some(c) if super::passable(grid, c, start) => None,
            _ => Some(Reach::Unreachable),
        })
        .collect();
    let mut waiting: Vec<(usize, usize)> = out
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(k, _)| (k, grid.linear(grid.cell_of(&goals[k]).expect("checked above"))))
        .collect();
    if waiting.is_empty() {
        return out.into_iter().map(|r| r.expect("all resolved")).collect();
    }
    let res = grid.resolution();
    let steps: Vec<([i32; 3], f64)> = neighbors_26()
        .map(|d| (d, res * ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64).sqrt()))
        .collect();
    let mut expanded = 0usize;
    let capped = WORKSPACE.with(|ws| {
        let mut ws = ws.borrow_mut();
        ws.reset(grid.len());
        let si = grid.linear(s);
        ws.touch(si);
        ws.g[si] = 0.0;
        let mut open = BinaryHeap::new();
        open.push(Entry { f: 0.0, h: 0.0, cell: s, idx: si });
        while let Some(Entry { cell, idx, .. }) = open.pop() {
            if ws.closed[idx] {
                continue;
            }
            ws.closed[idx] = true;
            waiting.retain(|&(k, gi)| {
                if gi != idx {
                    return true;
                }
                let p = reconstruct(grid, &ws.parent, si, gi, start, &goals[k], 0);
                out[k] = Some(Reach::Reached(p.length, p.cells));
                false
            });
            if waiting.is_empty() {
                return false;
            }
            expanded += 1;
            if expanded > max_expansions {
                return true;
            }
            let gc = ws.g[idx];
            for (d, cost) in &steps {
                let nb = [cell[0] + d[0], cell[1] + d[1], cell[2] + d[2]];
                if !grid.in_grid(nb) {
                    continue;
                }
                let ni = grid.linear(nb);
                ws.touch(ni);
                if ws.closed[ni] || !super::passable(grid, nb, start) {
                    continue;
                }
                let cand = gc + cost;
                if cand < ws.g[ni] {
                    ws.g[ni] = cand;
                    ws.parent[ni] = idx;
                    open.push(Entry { f: cand, h: 0.0, cell: nb, idx: ni });
                }
            }
        }
        false
    });
    count(expanded);
    let rest = if capped { Reach::Capped } else { Reach::Unreachable };
    out.into_iter().map(|r| r.unwrap_or_else(|| rest.clone())).collect()
}

fn reconstruct(
    grid: &OccupancyGrid,
    parent: &[usize],
    si: usize,
    gi: usize,
    start: &Vec3,
    goal: &Vec3,
    expanded: usize,
) -> GridPath {
    let mut rev = vec![gi];
    let mut cur = gi;
    while cur != si {
        cur = parent[cur];
        rev.push(cur);
    }
    rev.reverse();
    let cells: Vec<CellIndex> = rev.iter().map(|&i| grid.unlinear(i)).collect();
    let mut points = Vec::with_capacity(cells.len());
    points.push(*start);
    for c in &cells[1..cells.len() - 1] {
        points.push(grid.center(*c));
    }
    points.push(*goal);
    let length = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    GridPath { cells, points, length, expanded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel_map::{CellState, ExplorationBounds};

    fn open_grid(x: f64, y: f64, z: f64) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(ExplorationBounds::new(Vec3::zeros(), Vec3::new(x, y, z)).unwrap(), 0.15);
        for i in 0..g.len() {
            let c = g.unlinear(i);
            g.set(c, CellState::Free);
        }
        g
    }

    #[test]
    fn adjacent_cells_give_two_point_path() {
        let g = open_grid(2.0, 2.0, 1.0);
        let a = g.center([5, 5, 3]);
        let b = g.center([6, 5, 3]);
        let p = astar_geometric(&a, &b, &g).unwrap();
        assert_eq!(p.cells.len(), 2);
        assert!((p.length - 0.15).abs() < 1e-12);
    }

    #[test]
    fn sealed_goal_has_no_path() {
        let mut g = open_grid(3.0, 3.0, 1.5);
        for i in 0..g.len() {
            let c = g.unlinear(i);
            let ring = (8..=12).contains(&c[0]) && (8..=12).contains(&c[1]) && (1..=7).contains(&c[2]);
            let inside = (9..=11).contains(&c[0]) && (9..=11).contains(&c[1]) && (2..=6).contains(&c[2]);
            if ring && !inside {
                g.set(c, CellState::Occupied);
            }
        }
        let a = g.center([2, 2, 3]);
        let b = g.center([10, 10, 4]);
        assert_eq!(astar_geometric(&a, &b, &g), Err(Error::NoPath));
    }

    #[test]
    fn one_search_matches_pairwise_lengths() {
        let mut g = open_grid(4.5, 4.5, 1.5);
        for i in 0..g.len() {
            let c = g.unlinear(i);
            let p = g.center(c);
            if (1.5..1.8).contains(&p.x) && p.y < 3.3 {
                g.set(c, CellState::Occupied);
            }
        }
        let start = Vec3::new(0.6, 0.6, 0.75);
        let goals = [Vec3::new(3.9, 0.6, 0.75), Vec3::new(0.9, 3.9, 0.75), Vec3::new(3.6, 3.9, 0.6), Vec3::new(1.65, 1.0, 0.75)];
        let r = lengths_from(&start, &goals, &g, 1_000_000);
        for (goal, reach) in goals.iter().zip(&r) {
            match (astar_geometric(&start, goal, &g), reach) {
                // both are optimal over cell centres; the reported polylines swap the end cell
                // centres for the true endpoints, which can differ by up to a voxel diagonal each
                (Ok(p), Reach::Reached(len, _)) => assert!((p.length - len).abs() <= 2.0 * 0.15 * SQRT_3, "{} vs {len}", p.length),
                (Err(_), Reach::Unreachable) => {}
                (a, b) => panic!("mismatch: {a:?} vs {b:?}"),
            }
        }
        assert!(matches!(lengths_from(&start, &goals[..1], &g, 10)[0], Reach::Capped));
    }
}
