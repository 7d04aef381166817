//! Flat `key = value` configuration with validated defaults.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frontier::FrontierConfig;
use crate::geom::Vec3;
use crate::heading::HeadingConfig;
use crate::path::{KinoConfig, RefineConfig};
use crate::state::DynamicLimits;
use crate::tour::TourConfig;

/// How planning time is charged to the simulation clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanningClock {
    /// Deterministic cost model over counted planner work.
    Modeled,
    /// Measured wall-clock time; not reproducible across machines.
    Wall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub w_c: f64,
    pub w_b: f64,
    pub w_f: f64,
    pub h_max: f64,
    pub bottom_ray_radius: f64,
    pub b_min: Vec3,
    pub tau: f64,
    pub local_radius: f64,
    pub gamma: [f64; 4],
    pub lambda: [f64; 3],
    pub t_min: f64,
    pub rho: f64,
    pub remaining_horizon: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub yaw_rate_max: f64,
    pub yaw_accel_max: f64,
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
    pub max_range: f64,
    pub resolution: f64,
    pub sensor_rate: f64,
    pub sim_dt: f64,
    pub split_diagonal: f64,
    pub min_cluster_cells: usize,
    pub closed_form_time_weight: f64,
    pub planning_clock: PlanningClock,
    pub start_jitter: f64,
    pub edge_priority: bool,
    pub bottom_ray: bool,
    pub two_stage: bool,
    pub guided: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            w_c: 1.5,
            w_b: 0.3,
            w_f: 0.3,
            h_max: 4.5,
            bottom_ray_radius: 10.0,
            b_min: Vec3::new(15.0, 15.0, 10.0),
            tau: 1.3,
            local_radius: 6.0,
            gamma: [1.0, 100.0, 100.0, 10.0],
            lambda: [30.0, 80.0, 80.0],
            t_min: 0.1,
            rho: 1.3,
            remaining_horizon: 1.0,
            v_max: 2.0,
            a_max: 1.0,
            yaw_rate_max: 1.0,
            yaw_accel_max: 2.0,
            fov_h_deg: 80.0,
            fov_v_deg: 60.0,
            max_range: 4.5,
            resolution: 0.15,
            sensor_rate: 10.0,
            sim_dt: 0.02,
            split_diagonal: 3.0,
            min_cluster_cells: 30,
            closed_form_time_weight: 10.0,
            planning_clock: PlanningClock::Modeled,
            start_jitter: 0.2,
            edge_priority: true,
            bottom_ray: true,
            two_stage: true,
            guided: true,
        }
    }
}

fn err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config { key: key.to_string(), msg: msg.into() }
}

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| err(key, format!("expected a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(err(key, "must be finite"));
    }
    Ok(x)
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(err(key, format!("expected a boolean, got '{v}'"))),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| err("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(line, format!("line {}: expected 'key = value'", n + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "w_c" => self.w_c = num(key, v)?,
            "w_b" => self.w_b = num(key, v)?,
            "w_f" => self.w_f = num(key, v)?,
            "h_max" => self.h_max = num(key, v)?,
            "bottom_ray_radius" => self.bottom_ray_radius = num(key, v)?,
            "b_min_x" => self.b_min.x = num(key, v)?,
            "b_min_y" => self.b_min.y = num(key, v)?,
            "b_min_z" => self.b_min.z = num(key, v)?,
            "tau" => self.tau = num(key, v)?,
            "local_radius" => self.local_radius = num(key, v)?,
            "gamma_1" => self.gamma[0] = num(key, v)?,
            "gamma_2" => self.gamma[1] = num(key, v)?,
            "gamma_3" => self.gamma[2] = num(key, v)?,
            "gamma_4" => self.gamma[3] = num(key, v)?,
            "lambda_1" => self.lambda[0] = num(key, v)?,
            "lambda_2" => self.lambda[1] = num(key, v)?,
            "lambda_3" => self.lambda[2] = num(key, v)?,
            "t_min" => self.t_min = num(key, v)?,
            "rho" => self.rho = num(key, v)?,
            "remaining_horizon" => self.remaining_horizon = num(key, v)?,
            "v_max" => self.v_max = num(key, v)?,
            "a_max" => self.a_max = num(key, v)?,
            "yaw_rate_max" => self.yaw_rate_max = num(key, v)?,
            "yaw_accel_max" => self.yaw_accel_max = num(key, v)?,
            "fov_h_deg" => self.fov_h_deg = num(key, v)?,
            "fov_v_deg" => self.fov_v_deg = num(key, v)?,
            "max_range" => self.max_range = num(key, v)?,
            "resolution" => self.resolution = num(key, v)?,
            "sensor_rate" => self.sensor_rate = num(key, v)?,
            "sim_dt" => self.sim_dt = num(key, v)?,
            "split_diagonal" => self.split_diagonal = num(key, v)?,
            "min_cluster_cells" => {
                self.min_cluster_cells = v.parse().map_err(|_| err(key, format!("expected an integer, got '{v}'")))?
            }
            "closed_form_time_weight" => self.closed_form_time_weight = num(key, v)?,
            "planning_clock" => {
                self.planning_clock = match v {
                    "modeled" => PlanningClock::Modeled,
                    "wall" => PlanningClock::Wall,
                    _ => return Err(err(key, format!("expected 'modeled' or 'wall', got '{v}'"))),
                }
            }
            "start_jitter" => self.start_jitter = num(key, v)?,
            "edge_priority" => self.edge_priority = flag(key, v)?,
            "bottom_ray" => self.bottom_ray = flag(key, v)?,
            "two_stage" => self.two_stage = flag(key, v)?,
            "guided" => self.guided = flag(key, v)?,
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("w_c", self.w_c),
            ("w_b", self.w_b),
            ("w_f", self.w_f),
            ("gamma_1", self.gamma[0]),
            ("gamma_2", self.gamma[1]),
            ("gamma_3", self.gamma[2]),
            ("gamma_4", self.gamma[3]),
            ("lambda_1", self.lambda[0]),
            ("lambda_2", self.lambda[1]),
            ("lambda_3", self.lambda[2]),
            ("closed_form_time_weight", self.closed_form_time_weight),
            ("start_jitter", self.start_jitter),
        ];
        for (k, v) in non_negative {
            if v < 0.0 {
                return Err(err(k, "must be >= 0"));
            }
        }
        let positive = [
            ("h_max", self.h_max),
            ("bottom_ray_radius", self.bottom_ray_radius),
            ("b_min_x", self.b_min.x),
            ("b_min_y", self.b_min.y),
            ("b_min_z", self.b_min.z),
            ("local_radius", self.local_radius),
            ("t_min", self.t_min),
            ("remaining_horizon", self.remaining_horizon),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("yaw_rate_max", self.yaw_rate_max),
            ("yaw_accel_max", self.yaw_accel_max),
            ("max_range", self.max_range),
            ("resolution", self.resolution),
            ("sensor_rate", self.sensor_rate),
            ("sim_dt", self.sim_dt),
            ("split_diagonal", self.split_diagonal),
        ];
        for (k, v) in positive {
            if v <= 0.0 {
                return Err(err(k, "must be > 0"));
            }
        }
        if self.tau < 1.0 {
            return Err(err("tau", "must be >= 1"));
        }
        if self.rho < 1.0 {
            return Err(err("rho", "must be >= 1"));
        }
        for (k, v) in [("fov_h_deg", self.fov_h_deg), ("fov_v_deg", self.fov_v_deg)] {
            if v <= 0.0 || v >= 180.0 {
                return Err(err(k, "must be in (0, 180)"));
            }
        }
        Ok(())
    }

    pub fn limits(&self) -> DynamicLimits {
        DynamicLimits {
            v_max: self.v_max,
            a_max: self.a_max,
            yaw_rate_max: self.yaw_rate_max,
            yaw_accel_max: self.yaw_accel_max,
        }
    }

    pub fn frontier(&self) -> FrontierConfig {
        FrontierConfig {
            split_diagonal: self.split_diagonal,
            min_cluster_cells: self.min_cluster_cells,
            vp_radius_max: self.max_range * 0.8,
            fov_h: self.fov_h_deg.to_radians(),
            fov_v: self.fov_v_deg.to_radians(),
            max_range: self.max_range,
            ..FrontierConfig::default()
        }
    }

    /// Disabled terms get zero weight.
    pub fn tour(&self) -> TourConfig {
        TourConfig {
            w_c: self.w_c,
            w_b: if self.edge_priority { self.w_b } else { 0.0 },
            w_f: if self.bottom_ray { self.w_f } else { 0.0 },
            h_max: self.h_max,
            d_thr: self.bottom_ray_radius,
            b_min: self.b_min,
        }
    }

    pub fn heading(&self) -> HeadingConfig {
        HeadingConfig {
            tau: self.tau,
            local_radius: self.local_radius,
            gamma: self.gamma,
            two_stage: self.two_stage,
            ..HeadingConfig::default()
        }
    }

    /// Without guidance only the remaining-length term of the heuristic is kept.
    pub fn kino(&self) -> KinoConfig {
        let lambda = if self.guided { self.lambda } else { [self.lambda[0], 0.0, 0.0] };
        KinoConfig {
            lambda,
            shot_time_weight: self.closed_form_time_weight,
            ..KinoConfig::default()
        }
    }

    pub fn refine(&self) -> RefineConfig {
        RefineConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!((c.w_c, c.w_b, c.w_f, c.tau), (1.5, 0.3, 0.3, 1.3));
        assert_eq!(c.lambda, [30.0, 80.0, 80.0]);
        assert_eq!((c.t_min, c.rho, c.v_max, c.yaw_rate_max, c.a_max), (0.1, 1.3, 2.0, 1.0, 1.0));
        assert_eq!((c.fov_h_deg, c.fov_v_deg, c.max_range), (80.0, 60.0, 4.5));
        assert_eq!(c.b_min, Vec3::new(15.0, 15.0, 10.0));
    }

    #[test]
    fn overrides_and_comments() {
        let c = Config::parse("# tuned\nv_max = 1.0  # slower\n\nguided = false\n").unwrap();
        assert_eq!(c.v_max, 1.0);
        assert!(!c.guided);
        assert_eq!(c.kino().lambda, [30.0, 0.0, 0.0]);
    }

    #[test]
    fn errors_name_the_key() {
        let e = Config::parse("w_b = -1").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "w_b"));
        let e = Config::parse("warp_speed = 9").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "warp_speed"));
        let e = Config::parse("v_max = fast").unwrap_err();
        assert!(matches!(e, Error::Config { ref key, .. } if key == "v_max"));
    }

    #[test]
    fn ablations_zero_terms() {
        let c = Config {
            edge_priority: false,
            bottom_ray: false,
            ..Config::default()
        };
        let t = c.tour();
        assert_eq!((t.w_b, t.w_f), (0.0, 0.0));
    }
}
