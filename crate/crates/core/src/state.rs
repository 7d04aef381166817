//! Vehicle state and dynamic limits shared by the planners.

use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState {
    pub position: Vec3,
    pub yaw: f64,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

impl DroneState {
    /// At rest.
    pub fn hover(position: Vec3, yaw: f64) -> Self {
        Self {
            position,
            yaw,
            velocity: Vec3::zeros(),
            acceleration: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub yaw_rate_max: f64,
    /// Yaw acceleration limit used by the heading optimizer.
    pub yaw_accel_max: f64,
}

impl Default for DynamicLimits {
    fn default() -> Self {
        Self {
            v_max: 2.0,
            a_max: 1.0,
            yaw_rate_max: 1.0,
            yaw_accel_max: 2.0,
        }
    }
}
