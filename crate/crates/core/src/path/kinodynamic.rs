//! Kinodynamic A* over constant-acceleration motion primitives, biased towards a guide path.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::geom::{angle_between, Vec3};
use crate::state::DynamicLimits;
use crate::voxel_map::OccupancyGrid;

use super::closed_form::{closed_form_optimal, ClosedFormTrajectory};
use super::{passable, trajectory_clear, GuidePath, TimedPath};

#[derive(Debug, Clone)]
pub struct KinoConfig {
    /// Weights of remaining guide length, distance to the guide and heading misalignment.
    pub lambda: [f64; 3],
    pub primitive_duration: f64,
    pub goal_tolerance: f64,
    pub max_expansions: usize,
    /// Weight of the squared-input integral in the path cost.
    pub effort_weight: f64,
    /// Time weight used when picking the final closed-form shot duration.
    pub shot_time_weight: f64,
}

impl Default for KinoConfig {
    fn default() -> Self {
        Self {
            lambda: [30.0, 80.0, 80.0],
            primitive_duration: 0.5,
            goal_tolerance: 0.5,
            max_expansions: 50_000,
            effort_weight: 0.01,
            shot_time_weight: 10.0,
        }
    }
}

/// One constant-input segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub p: Vec3,
    pub v: Vec3,
    pub u: Vec3,
    pub duration: f64,
}

impl Primitive {
    fn at(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        (self.p + self.v * t + self.u * (0.5 * t * t), self.v + self.u * t, self.u)
    }
}

/// Primitive chain followed by a closed-form shot that stops at the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct KinoPath {
    pub primitives: Vec<Primitive>,
    pub shot: Option<ClosedFormTrajectory>,
    pub expanded: usize,
}

impl TimedPath for KinoPath {
    fn duration(&self) -> f64 {
        self.primitives.iter().map(|p| p.duration).sum::<f64>() + self.shot.as_ref().map_or(0.0, |s| s.duration)
    }

    fn state(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let mut t = t.max(0.0);
        for p in &self.primitives {
            if t <= p.duration {
                return p.at(t);
            }
            t -= p.duration;
        }
        match (&self.shot, self.primitives.last()) {
            (Some(s), _) => s.state(t),
            (None, Some(p)) => p.at(p.duration),
            (None, None) => (Vec3::zeros(), Vec3::zeros(), Vec3::zeros()),
        }
    }
}

struct Node {
    p: Vec3,
    v: Vec3,
    u: Vec3,
    g: f64,
    parent: usize,
}

struct Open {
    f: f64,
    node: usize,
}

impl PartialEq for Open {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Open {}
impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then_with(|| o.node.cmp(&self.node))
    }
}
impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn input_set(a_max: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(27);
    for dx in -1..=1 {
        for dy in -1..=1 {
            for dz in -1..=1 {
                let d = Vec3::new(dx as f64, dy as f64, dz as f64);
                let n = d.norm();
                out.push(if n == 0.0 { d } else { d * (a_max / n) });
            }
        }
    }
    out
}

/// Guided heuristic: remaining guide length, offset from the guide and velocity misalignment.
pub fn heuristic(p: &Vec3, v: &Vec3, gp: &GuidePath, total_len: f64, lambda: &[f64; 3]) -> f64 {
    let (d_g, s, seg) = gp.project(p);
    let d_e = (total_len - s).max(0.0);
    let d_theta = if v.norm() < 0.01 {
        0.0
    } else {
        let dir = gp.segment_direction(seg);
        if dir.norm() < 0.5 {
            0.0
        } else {
            angle_between(v, &dir)
        }
    };
    lambda[0] * d_e + lambda[1] * d_g + lambda[2] * d_theta
}

/// Searches from `(start_p, start_v)` to rest at `goal`.
pub fn guided_search(
    start_p: Vec3,
    start_v: Vec3,
    goal: Vec3,
    gp: &GuidePath,
    grid: &OccupancyGrid,
    lim: &DynamicLimits,
    cfg: &KinoConfig,
) -> Result<KinoPath> {
    if (goal - start_p).norm() < 1e-9 && start_v.norm() < 1e-9 {
        return Ok(KinoPath {
            primitives: Vec::new(),
            shot: None,
            expanded: 0,
        });
    }
    let inputs = input_set(lim.a_max);
    let total_len = gp.length();
    let dt = cfg.primitive_duration;
    let n_samples = ((lim.v_max * dt) / (grid.resolution() / 4.0)).ceil().max(2.0) as usize;

    let mut nodes = vec![Node {
        p: start_p,
        v: start_v,
        u: Vec3::zeros(),
        g: 0.0,
        parent: usize::MAX,
    }];
    let mut open = BinaryHeap::new();
    open.push(Open {
        f: heuristic(&start_p, &start_v, gp, total_len, &cfg.lambda),
        node: 0,
    });
    let mut closed: HashSet<usize> = HashSet::new();
    let mut best_in_cell: HashMap<usize, f64> = HashMap::new();
    let mut expanded = 0usize;

    while let Some(Open { node, .. }) = open.pop() {
        let (p, v, g) = (nodes[node].p, nodes[node].v, nodes[node].g);
        let cell = match grid.cell_of(&p) {
            Some(c) => grid.linear(c),
            None => continue,
        };
        if node != 0 && !closed.insert(cell) {
            continue;
        }
        // analytic expansion once the goal is within tolerance plus stopping distance
        if (p - goal).norm() <= cfg.goal_tolerance + v.norm_squared() / (2.0 * lim.a_max) {
            let shot = closed_form_optimal(p, v, goal, Vec3::zeros(), lim, 0.0, cfg.shot_time_weight);
            if trajectory_clear(&shot, grid, lim.v_max, &start_p) {
                return Ok(KinoPath {
                    primitives: chain(&nodes, node, dt),
                    shot: Some(shot),
                    expanded,
                });
            }
        }
        expanded += 1;
        if expanded > cfg.max_expansions {
            return Err(Error::SearchFailed { expanded });
        }
        for u in &inputs {
            let prim = Primitive { p, v, u: *u, duration: dt };
            let (p1, v1, _) = prim.at(dt);
            if v1.norm() > lim.v_max + 1e-9 {
                continue;
            }
            let c1 = match grid.cell_of(&p1) {
                Some(c) => c,
                None => continue,
            };
            let l1 = grid.linear(c1);
            if l1 == cell || closed.contains(&l1) {
                continue;
            }
            let g1 = g + dt + cfg.effort_weight * u.norm_squared() * dt;
            if best_in_cell.get(&l1).is_some_and(|&b| b <= g1) {
                continue;
            }
            let clear = (1..=n_samples).all(|k| {
                let q = prim.at(dt * k as f64 / n_samples as f64).0;
                grid.cell_of(&q).is_some_and(|c| passable(grid, c, &start_p))
            });
            if !clear {
                continue;
            }
            best_in_cell.insert(l1, g1);
            nodes.push(Node {
                p: p1,
                v: v1,
                u: *u,
                g: g1,
                parent: node,
            });
            open.push(Open {
                f: g1 + heuristic(&p1, &v1, gp, total_len, &cfg.lambda),
                node: nodes.len() - 1,
            });
        }
    }
    Err(Error::SearchFailed { expanded })
}

fn chain(nodes: &[Node], mut k: usize, dt: f64) -> Vec<Primitive> {
    let mut out = Vec::new();
    while nodes[k].parent != usize::MAX {
        let par = &nodes[nodes[k].parent];
        out.push(Primitive {
            p: par.p,
            v: par.v,
            u: nodes[k].u,
            duration: dt,
        });
        k = nodes[k].parent;
    }
    out.reverse();
    out
}
