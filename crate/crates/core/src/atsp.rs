//! Open asymmetric TSP from a fixed start node 0.
//!
//! Tours are returned without the start node. Returning to node 0 is free by construction of
//! the cost matrices used here, and is not part of the tour cost.

/// Row-major square matrix view.
pub trait CostMatrix {
    fn size(&self) -> usize;
    fn cost(&self, i: usize, j: usize) -> f64;
}

impl CostMatrix for Vec<Vec<f64>> {
    fn size(&self) -> usize {
        self.len()
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        self[i][j]
    }
}

/// Cost of visiting `tour` in order starting from node 0.
pub fn tour_cost<M: CostMatrix + ?Sized>(m: &M, tour: &[usize]) -> f64 {
    let mut prev = 0;
    let mut c = 0.0;
    for &k in tour {
        c += m.cost(prev, k);
        prev = k;
    }
    c
}

/// Nearest neighbour from node 0; ties go to the lower index.
pub fn nearest_neighbor<M: CostMatrix + ?Sized>(m: &M) -> Vec<usize> {
    let n = m.size();
    let mut left: Vec<usize> = (1..n).collect();
    let mut tour = Vec::with_capacity(n.saturating_sub(1));
    let mut cur = 0;
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            if m.cost(cur, left[k]) < m.cost(cur, left[best]) {
                best = k;
            }
        }
        cur = left.remove(best);
        tour.push(cur);
    }
    tour
}

/// Nearest neighbour followed by Or-opt and 2-opt moves until neither improves the tour.
pub fn solve_atsp<M: CostMatrix + ?Sized>(m: &M) -> Vec<usize> {
    let mut tour = nearest_neighbor(m);
    if tour.len() < 2 {
        return tour;
    }
    let mut cost = tour_cost(m, &tour);
    loop {
        let mut improved = false;
        if let Some(t) = best_or_opt(m, &tour) {
            let c = tour_cost(m, &t);
            if c < cost - GAIN_EPS {
                tour = t;
                cost = c;
                improved = true;
            }
        }
        if let Some(t) = best_two_opt(m, &tour) {
            let c = tour_cost(m, &t);
            if c < cost - GAIN_EPS {
                tour = t;
                cost = c;
                improved = true;
            }
        }
        if !improved {
            return tour;
        }
    }
}

const GAIN_EPS: f64 = 1e-12;

/// Path `0, tour...` with prefix sums of forward and backward edge costs.
struct Walk {
    p: Vec<usize>,
    fwd: Vec<f64>,
    bwd: Vec<f64>,
}

impl Walk {
    fn new<M: CostMatrix + ?Sized>(m: &M, tour: &[usize]) -> Self {
        let mut p = Vec::with_capacity(tour.len() + 1);
        p.push(0);
        p.extend_from_slice(tour);
        let mut fwd = vec![0.0; p.len()];
        let mut bwd = vec![0.0; p.len()];
        for k in 1..p.len() {
            fwd[k] = fwd[k - 1] + m.cost(p[k - 1], p[k]);
            bwd[k] = bwd[k - 1] + m.cost(p[k], p[k - 1]);
        }
        Self { p, fwd, bwd }
    }

    /// Cost of walking p[a..=b] forwards and backwards.
    fn inner(&self, a: usize, b: usize) -> (f64, f64) {
        (self.fwd[b] - self.fwd[a], self.bwd[b] - self.bwd[a])
    }
}

/// Best segment reversal, as the new tour.
fn best_two_opt<M: CostMatrix + ?Sized>(m: &M, tour: &[usize]) -> Option<Vec<usize>> {
    let w = Walk::new(m, tour);
    let n = tour.len();
    let mut best: Option<(usize, usize, f64)> = None;
    for a in 1..n {
        for b in a + 1..=n {
            let (f, r) = w.inner(a, b);
            let mut delta = m.cost(w.p[a - 1], w.p[b]) - m.cost(w.p[a - 1], w.p[a]) + r - f;
            if b < n {
                delta += m.cost(w.p[a], w.p[b + 1]) - m.cost(w.p[b], w.p[b + 1]);
            }
            if delta < -GAIN_EPS && best.is_none_or(|(_, _, d)| delta < d) {
                best = Some((a, b, delta));
            }
        }
    }
    best.map(|(a, b, _)| {
        let mut t = tour.to_vec();
        t[a - 1..b].reverse();
        t
    })
}

/// Best move of a segment of up to three nodes (optionally reversed) elsewhere in the tour.
fn best_or_opt<M: CostMatrix + ?Sized>(m: &M, tour: &[usize]) -> Option<Vec<usize>> {
    let w = Walk::new(m, tour);
    let p = &w.p;
    let n = tour.len();
    let mut best: Option<(usize, usize, usize, bool, f64)> = None;
    for len in 1..=3.min(n - 1) {
        for a in 1..=n + 1 - len {
            let b = a + len - 1;
            let (f, r) = w.inner(a, b);
            // removing p[a..=b]
            let mut removal = -m.cost(p[a - 1], p[a]);
            if b < n {
                removal += m.cost(p[a - 1], p[b + 1]) - m.cost(p[b], p[b + 1]);
            }
            // insert between p[k] and p[k + 1] (or after p[k] when k is last), k outside the segment
            for k in (0..a - 1).chain(b + 1..=n) {
                let next = if k + 1 == a { b + 1 } else { k + 1 };
                for reversed in [false, true] {
                    if reversed && len == 1 {
                        continue;
                    }
                    let (first, last, inner) = if reversed { (p[b], p[a], r - f) } else { (p[a], p[b], 0.0) };
                    let mut delta = removal + inner + m.cost(p[k], first);
                    if next <= n {
                        delta += m.cost(last, p[next]) - m.cost(p[k], p[next]);
                    }
                    if delta < -GAIN_EPS && best.is_none_or(|(_, _, _, _, d)| delta < d) {
                        best = Some((a, len, k, reversed, delta));
                    }
                }
            }
        }
    }
    best.map(|(a, len, k, reversed, _)| {
        let seg: Vec<usize> = if reversed {
            p[a..a + len].iter().rev().copied().collect()
        } else {
            p[a..a + len].to_vec()
        };
        let mut out: Vec<usize> = Vec::with_capacity(n);
        for (i, &node) in p.iter().enumerate().skip(1) {
            if i >= a && i < a + len {
                continue;
            }
            out.push(node);
            if i == k {
                out.extend_from_slice(&seg);
            }
        }
        if k == 0 {
            out.splice(0..0, seg);
        }
        out
    })
}

/// Exact open tour by dynamic programming over subsets. Practical up to about 15 clusters.
pub fn held_karp<M: CostMatrix + ?Sized>(m: &M) -> (Vec<usize>, f64) {
    let n = m.size();
    if n <= 1 {
        return (Vec::new(), 0.0);
    }
    let k = n - 1;
    assert!(k <= 20, "held_karp is exponential; {k} clusters is too many");
    let full = 1usize << k;
    let mut dp = vec![f64::INFINITY; full * k];
    let mut parent = vec![usize::MAX; full * k];
    for j in 0..k {
        dp[(1 << j) * k + j] = m.cost(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..k {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = dp[mask * k + j];
            if !cur.is_finite() {
                continue;
            }
            for nx in 0..k {
                if mask & (1 << nx) != 0 {
                    continue;
                }
                let nm = mask | (1 << nx);
                let c = cur + m.cost(j + 1, nx + 1);
                if c < dp[nm * k + nx] {
                    dp[nm * k + nx] = c;
                    parent[nm * k + nx] = j;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut end = 0;
    for j in 1..k {
        if dp[last_mask * k + j] < dp[last_mask * k + end] {
            end = j;
        }
    }
    let best = dp[last_mask * k + end];
    let mut tour = Vec::with_capacity(k);
    let mut mask = last_mask;
    let mut j = end;
    loop {
        tour.push(j + 1);
        let p = parent[mask * k + j];
        mask &= !(1 << j);
        if p == usize::MAX {
            break;
        }
        j = p;
    }
    tour.reverse();
    (tour, best)
}
