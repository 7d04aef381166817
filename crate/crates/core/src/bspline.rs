//! Uniform cubic B-spline evaluation shared by the yaw and position trajectories.
//!
//! With control points `c_0..c_N` and knot span `dt`, the curve is defined on
//! `[0, (N - 2) * dt]`; segment `j` blends `c_j..c_{j+3}`.

use std::ops::{Add, Mul, Sub};

pub trait SplineValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> SplineValue for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Value, first and second derivative at time `t` (clamped to the curve domain).
pub fn eval<T: SplineValue>(cps: &[T], dt: f64, t: f64) -> (T, T, T) {
    assert!(cps.len() >= 4, "a cubic B-spline needs at least four control points");
    let n_seg = cps.len() - 3;
    let duration = n_seg as f64 * dt;
    let t = t.clamp(0.0, duration);
    let mut j = (t / dt).floor() as usize;
    if j >= n_seg {
        j = n_seg - 1;
    }
    let u = t / dt - j as f64;
    let (c0, c1, c2, c3) = (cps[j], cps[j + 1], cps[j + 2], cps[j + 3]);
    let u2 = u * u;
    let u3 = u2 * u;
    let p = (c0 * ((1.0 - u).powi(3)) + c1 * (3.0 * u3 - 6.0 * u2 + 4.0) + c2 * (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) + c3 * u3)
        * (1.0 / 6.0);
    let v = (c0 * (-(1.0 - u).powi(2)) + c1 * (3.0 * u2 - 4.0 * u) + c2 * (-3.0 * u2 + 2.0 * u + 1.0) + c3 * u2)
        * (0.5 / dt);
    let a = (c0 * (1.0 - u) + c1 * (3.0 * u - 2.0) + c2 * (1.0 - 3.0 * u) + c3 * u) * (1.0 / (dt * dt));
    (p, v, a)
}

/// Basis weights of the four active control points at `t`, plus the first active index.
pub fn basis(n_cps: usize, dt: f64, t: f64) -> (usize, [f64; 4]) {
    let n_seg = n_cps - 3;
    let t = t.clamp(0.0, n_seg as f64 * dt);
    let mut j = (t / dt).floor() as usize;
    if j >= n_seg {
        j = n_seg - 1;
    }
    let u = t / dt - j as f64;
    let u2 = u * u;
    let u3 = u2 * u;
    (
        j,
        [
            (1.0 - u).powi(3) / 6.0,
            (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
            (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
            u3 / 6.0,
        ],
    )
}

/// First three control points reproducing position, velocity and acceleration at `t = 0`.
pub fn start_control_points<T: SplineValue>(p: T, v: T, a: T, dt: f64) -> [T; 3] {
    let c1 = p - a * (dt * dt / 6.0);
    let base = a * (dt * dt) + c1 * 2.0;
    let c0 = (base - v * (2.0 * dt)) * 0.5;
    let c2 = (base + v * (2.0 * dt)) * 0.5;
    [c0, c1, c2]
}

/// Velocity control points `(c_{i+1} - c_i) / dt`.
pub fn velocity_points<T: SplineValue>(cps: &[T], dt: f64) -> Vec<T> {
    cps.windows(2).map(|w| (w[1] - w[0]) * (1.0 / dt)).collect()
}

/// Acceleration control points `(c_{i+2} - 2 c_{i+1} + c_i) / dt^2`.
pub fn acceleration_points<T: SplineValue>(cps: &[T], dt: f64) -> Vec<T> {
    cps.windows(3)
        .map(|w| (w[2] - w[1] * 2.0 + w[0]) * (1.0 / (dt * dt)))
        .collect()
}
