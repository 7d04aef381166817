//! Minimum-effort double-integrator primitive between two position/velocity states.

use crate::geom::Vec3;
use crate::state::DynamicLimits;

use super::TimedPath;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormTrajectory {
    pub p0: Vec3,
    pub v0: Vec3,
    pub pn: Vec3,
    pub vn: Vec3,
    pub alpha: Vec3,
    pub beta: Vec3,
    pub duration: f64,
}

/// Coefficients for a fixed duration `t`:
/// `p(t) = alpha t^3 / 6 + beta t^2 / 2 + v0 t + p0`.
pub fn closed_form(p0: Vec3, v0: Vec3, pn: Vec3, vn: Vec3, t: f64) -> ClosedFormTrajectory {
    assert!(t > 0.0, "duration must be positive");
    let dp = pn - p0 - v0 * t;
    let dv = vn - v0;
    let t3 = t * t * t;
    let alpha = (dp * -12.0 + dv * (6.0 * t)) / t3;
    let beta = (dp * (6.0 * t) - dv * (2.0 * t * t)) / t3;
    ClosedFormTrajectory {
        p0,
        v0,
        pn,
        vn,
        alpha,
        beta,
        duration: t,
    }
}

impl ClosedFormTrajectory {
    /// Control effort `sum over axes of alpha^2 T^3 / 3 + alpha beta T^2 + beta^2 T`.
    pub fn cost(&self) -> f64 {
        let t = self.duration;
        (0..3)
            .map(|i| {
                let (a, b) = (self.alpha[i], self.beta[i]);
                a * a * t * t * t / 3.0 + a * b * t * t + b * b * t
            })
            .sum()
    }

    pub fn max_speed(&self) -> f64 {
        // speed^2 is a quartic in t; dense sampling plus endpoints is ample for a cubic path
        let n = 64;
        (0..=n)
            .map(|k| self.state(self.duration * k as f64 / n as f64).1.norm())
            .fold(0.0, f64::max)
    }

    /// Acceleration is affine in t, so its norm peaks at an endpoint.
    pub fn max_accel(&self) -> f64 {
        self.beta.norm().max((self.alpha * self.duration + self.beta).norm())
    }

    pub fn within_limits(&self, lim: &DynamicLimits) -> bool {
        self.max_speed() <= lim.v_max + 1e-9 && self.max_accel() <= lim.a_max + 1e-9
    }
}

impl TimedPath for ClosedFormTrajectory {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn state(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let t = t.clamp(0.0, self.duration);
        let p = self.alpha * (t * t * t / 6.0) + self.beta * (t * t / 2.0) + self.v0 * t + self.p0;
        let v = self.alpha * (t * t / 2.0) + self.beta * t + self.v0;
        let a = self.alpha * t + self.beta;
        (p, v, a)
    }
}

/// Picks the duration by golden-section search of `effort + time_weight * T` over
/// `[dist / v_max, 4 dist / v_max]` (raised to `t_floor`), then stretches it in 10% steps until
/// the speed and acceleration limits hold.
pub fn closed_form_optimal(
    p0: Vec3,
    v0: Vec3,
    pn: Vec3,
    vn: Vec3,
    lim: &DynamicLimits,
    t_floor: f64,
    time_weight: f64,
) -> ClosedFormTrajectory {
    let dist = (pn - p0).norm();
    let lo = (dist / lim.v_max)
        .max((vn - v0).norm() / lim.a_max)
        .max(t_floor)
        .max(0.1);
    let hi = (4.0 * dist / lim.v_max).max(lo);
    let objective = |t: f64| closed_form(p0, v0, pn, vn, t).cost() + time_weight * t;
    let t_best = golden_section(objective, lo, hi, 1e-4);
    let mut traj = closed_form(p0, v0, pn, vn, t_best);
    for _ in 0..80 {
        if traj.within_limits(lim) {
            break;
        }
        traj = closed_form(p0, v0, pn, vn, traj.duration * 1.1);
    }
    traj
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    if b - a <= tol {
        return a;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
