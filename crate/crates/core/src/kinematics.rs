//! Differential-drive velocity maps.
//!
//! Wheel limits are carried as wheel *linear* speeds (`v = ω_wheel · r`), so the
//! wheel radius only matters when converting to or from wheel angular rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelGeometry {
    /// Distance between the wheel contact points, meters.
    pub track_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheel_radius: Option<f64>,
}

impl WheelGeometry {
    pub fn new(track_width: f64) -> Result<Self> {
        let g = WheelGeometry {
            track_width,
            wheel_radius: None,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_radius(track_width: f64, wheel_radius: f64) -> Result<Self> {
        let g = WheelGeometry {
            track_width,
            wheel_radius: Some(wheel_radius),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.track_width.is_finite() && self.track_width > 0.0) {
            return Err(Error::InvalidInput(format!(
                "track width must be positive, got {}",
                self.track_width
            )));
        }
        if let Some(r) = self.wheel_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "wheel radius must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }

    /// Wheel angular rate (rad/s) for a wheel linear speed, if the radius is known.
    pub fn wheel_rate(&self, linear: f64) -> Option<f64> {
        self.wheel_radius.map(|r| linear / r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub v: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub v_r: f64,
    pub v_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub v_r_min: f64,
    pub v_r_max: f64,
    pub v_l_min: f64,
    pub v_l_max: f64,
}

impl JointLimits {
    pub fn symmetric(limit: f64) -> Self {
        JointLimits {
            v_r_min: -limit,
            v_r_max: limit,
            v_l_min: -limit,
            v_l_max: limit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi && lo <= 0.0 && hi >= 0.0;
        if !ok(self.v_r_min, self.v_r_max) || !ok(self.v_l_min, self.v_l_max) {
            return Err(Error::InvalidInput(format!(
                "joint limits must be ordered and contain zero: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn contains(&self, w: WheelSpeeds, tol: f64) -> bool {
        w.v_r >= self.v_r_min - tol
            && w.v_r <= self.v_r_max + tol
            && w.v_l >= self.v_l_min - tol
            && w.v_l <= self.v_l_max + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

pub fn wheel_to_body(w: WheelSpeeds, g: &WheelGeometry) -> BodyVelocity {
    BodyVelocity {
        v: 0.5 * (w.v_r + w.v_l),
        omega: (w.v_r - w.v_l) / g.track_width,
    }
}

pub fn body_to_wheel(b: BodyVelocity, g: &WheelGeometry) -> WheelSpeeds {
    let half = 0.5 * b.omega * g.track_width;
    WheelSpeeds {
        v_r: b.v + half,
        v_l: b.v - half,
    }
}

/// Interval of angular rates that keeps both wheels inside `jl` at linear speed `v_set`.
pub fn omega_bounds_for_v(v_set: f64, jl: &JointLimits, g: &WheelGeometry) -> Result<(f64, f64)> {
    let k = 2.0 / g.track_width;
    let hi = (k * (jl.v_r_max - v_set)).min(k * (v_set - jl.v_l_min));
    let lo = (k * (jl.v_r_min - v_set)).max(k * (v_set - jl.v_l_max));
    if lo > hi + 1e-12 * (1.0 + hi.abs()) {
        return Err(Error::InfeasibleSpeed { v: v_set });
    }
    Ok((lo, hi.max(lo)))
}

/// Interval of linear speeds that keeps both wheels inside `jl` at angular rate `omega_set`.
pub fn v_bounds_for_omega(omega_set: f64, jl: &JointLimits, g: &WheelGeometry) -> Result<(f64, f64)> {
    let half = 0.5 * omega_set * g.track_width;
    let hi = (jl.v_r_max - half).min(jl.v_l_max + half);
    let lo = (jl.v_r_min - half).max(jl.v_l_min + half);
    if lo > hi + 1e-12 * (1.0 + hi.abs()) {
        return Err(Error::InfeasibleAngular { omega: omega_set });
    }
    Ok((lo, hi.max(lo)))
}

/// One constant-velocity piece of a unicycle control sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPiece {
    pub v: f64,
    pub omega: f64,
    pub duration: f64,
}

/// Exact unicycle integration; returns the pose at the end of every piece.
pub fn integrate_pose(p0: Pose, controls: &[ControlPiece]) -> Result<Vec<Pose>> {
    let mut out = Vec::with_capacity(controls.len());
    let mut p = p0;
    for (i, c) in controls.iter().enumerate() {
        if !(c.duration > 0.0) {
            return Err(Error::InvalidInput(format!(
                "control piece {i} has non-positive duration {}",
                c.duration
            )));
        }
        let dtheta = c.omega * c.duration;
        let theta1 = p.theta + dtheta;
        if dtheta.abs() < 1e-12 {
            let dist = c.v * c.duration;
            p.x += dist * p.theta.cos();
            p.y += dist * p.theta.sin();
        } else {
            let r = c.v / c.omega;
            p.x += r * (theta1.sin() - p.theta.sin());
            p.y -= r * (theta1.cos() - p.theta.cos());
        }
        p.theta = wrap_angle(theta1);
        out.push(p);
    }
    Ok(out)
}
