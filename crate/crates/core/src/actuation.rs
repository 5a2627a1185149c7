//! Position-controlled gear motors driving tendon spools.
//!
//! The plant is kinematic: the controller output is the spool velocity,
//! saturated at `max_output_speed`, integrated with explicit Euler. The
//! derivative term acts on the error rate. With a velocity plant that rate is
//! `target_rate - velocity`, so the loop is closed algebraically:
//!
//! ```text
//! v = kp*e + ki*I + kd*(target_rate - v)
//!   => v = (kp*e + ki*I + kd*target_rate) / (1 + kd)
//! ```
//!
//! which keeps the behaviour independent of the step size.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted simulation step, s.
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActuationError {
    #[error("invalid dt {0}: must be in (0, {MAX_DT}]")]
    InvalidDt(f64),
    #[error("invalid motor config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 40.0,
            ki: 0.0,
            kd: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorConfig {
    /// mm
    pub spool_radius: f64,
    pub gear_ratio: f64,
    pub encoder_counts_per_motor_rev: f64,
    /// rad/s at the spool
    pub max_output_speed: f64,
    pub pid: PidGains,
}

impl Default for MotorConfig {
    fn default() -> Self {
        Self {
            spool_radius: 5.0,
            gear_ratio: 100.0,
            encoder_counts_per_motor_rev: 12.0,
            max_output_speed: TAU,
            pid: PidGains::default(),
        }
    }
}

impl MotorConfig {
    pub fn counts_per_output_rev(&self) -> f64 {
        self.gear_ratio * self.encoder_counts_per_motor_rev
    }

    /// Spool angle of one encoder count, rad.
    pub fn angle_resolution(&self) -> f64 {
        TAU / self.counts_per_output_rev()
    }

    pub fn validate(&self) -> Result<(), ActuationError> {
        for (name, value) in [
            ("spool_radius", self.spool_radius),
            ("gear_ratio", self.gear_ratio),
            (
                "encoder_counts_per_motor_rev",
                self.encoder_counts_per_motor_rev,
            ),
            ("max_output_speed", self.max_output_speed),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ActuationError::InvalidConfig(format!(
                    "{name} {value} must be > 0"
                )));
            }
        }
        let PidGains { kp, ki, kd } = self.pid;
        if !(kp.is_finite() && kp > 0.0) {
            return Err(ActuationError::InvalidConfig(format!(
                "pid kp {kp} must be > 0"
            )));
        }
        for (name, value) in [("ki", ki), ("kd", kd)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ActuationError::InvalidConfig(format!(
                    "pid {name} {value} must be >= 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorState {
    /// rad at the spool
    pub target_angle: f64,
    pub actual_angle: f64,
    /// rad/s
    pub velocity: f64,
    pub encoder_count: i64,
    /// Integral of the angle error, rad*s.
    pub integrator: f64,
    /// Target seen on the previous step, for the target-rate term.
    pub last_target: f64,
}

impl MotorState {
    /// Motor at rest at zero with zeroed counts.
    pub fn homed() -> Self {
        Self::default()
    }

    /// Spool angle as reported by the encoder, rad.
    pub fn measured_angle(&self, cfg: &MotorConfig) -> f64 {
        encoder_to_angle(self.encoder_count, cfg)
    }
}

/// Zeroes angles, velocities and counts of every motor.
pub fn home_all(motors: &mut [MotorState]) {
    motors.fill(MotorState::homed());
}

/// Spool angle that winds in `dl` of tendon.
pub fn displacement_to_angle(dl: f64, cfg: &MotorConfig) -> f64 {
    dl / cfg.spool_radius
}

pub fn angle_to_displacement(angle: f64, cfg: &MotorConfig) -> f64 {
    angle * cfg.spool_radius
}

/// Encoder counts for a spool angle, rounded to the nearest count.
pub fn encoder_quantize(angle: f64, cfg: &MotorConfig) -> i64 {
    (angle / TAU * cfg.counts_per_output_rev()).round() as i64
}

pub fn encoder_to_angle(counts: i64, cfg: &MotorConfig) -> f64 {
    counts as f64 * TAU / cfg.counts_per_output_rev()
}

/// Advances one motor by `dt` seconds.
pub fn motor_step(
    state: &MotorState,
    cfg: &MotorConfig,
    dt: f64,
) -> Result<MotorState, ActuationError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(ActuationError::InvalidDt(dt));
    }
    let PidGains { kp, ki, kd } = cfg.pid;
    let error = state.target_angle - state.actual_angle;
    let target_rate = (state.target_angle - state.last_target) / dt;
    let vmax = cfg.max_output_speed;

    let integrator = state.integrator + error * dt;
    let raw = (kp * error + ki * integrator + kd * target_rate) / (1.0 + kd);
    let velocity = raw.clamp(-vmax, vmax);
    // conditional integration: freeze the integral while saturated
    let integrator = if velocity == raw {
        integrator
    } else {
        state.integrator
    };

    let actual_angle = state.actual_angle + velocity * dt;
    Ok(MotorState {
        target_angle: state.target_angle,
        actual_angle,
        velocity,
        encoder_count: encoder_quantize(actual_angle, cfg),
        integrator,
        last_target: state.target_angle,
    })
}
