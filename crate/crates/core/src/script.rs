//! Waypoint scripts: a JSON array of `{"t_ms": int, "theta_deg": num, "phi_deg": num}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    /// Milliseconds from script start.
    pub t_ms: u64,
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl Waypoint {
    pub fn new(t_ms: u64, theta_deg: f64, phi_deg: f64) -> Self {
        Self {
            t_ms,
            theta_deg,
            phi_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("line {line}, column {column}: {reason}")]
    Syntax {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("waypoint {index}, field `{field}`: {reason}")]
    Field {
        index: usize,
        field: &'static str,
        reason: String,
    },
}

pub fn parse_script(text: &str) -> Result<Vec<Waypoint>, ScriptError> {
    let waypoints: Vec<Waypoint> = serde_json::from_str(text).map_err(|e| ScriptError::Syntax {
        line: e.line(),
        column: e.column(),
        reason: e.to_string(),
    })?;
    validate(&waypoints)?;
    Ok(waypoints)
}

/// Times must not go backwards and bends must stay within `[0, 90]` degrees.
pub fn validate(waypoints: &[Waypoint]) -> Result<(), ScriptError> {
    let mut prev = 0;
    for (index, w) in waypoints.iter().enumerate() {
        if w.t_ms < prev {
            return Err(ScriptError::Field {
                index,
                field: "t_ms",
                reason: format!("{} is earlier than the previous waypoint ({prev})", w.t_ms),
            });
        }
        prev = w.t_ms;
        if !w.theta_deg.is_finite() || !(0.0..=90.0).contains(&w.theta_deg) {
            return Err(ScriptError::Field {
                index,
                field: "theta_deg",
                reason: format!("{} outside [0, 90]", w.theta_deg),
            });
        }
        if !w.phi_deg.is_finite() {
            return Err(ScriptError::Field {
                index,
                field: "phi_deg",
                reason: "not finite".into(),
            });
        }
    }
    Ok(())
}

/// Piecewise-linear `(theta_deg, phi_deg)` at `t_ms`. Before the first
/// waypoint and after the last one the nearest endpoint holds.
///
/// Panics on an empty script.
pub fn sample(waypoints: &[Waypoint], t_ms: f64) -> (f64, f64) {
    let first = waypoints.first().expect("non-empty script");
    if t_ms <= first.t_ms as f64 {
        return (first.theta_deg, first.phi_deg);
    }
    // index of the first waypoint strictly after t
    let next = waypoints.partition_point(|w| (w.t_ms as f64) <= t_ms);
    let Some(b) = waypoints.get(next) else {
        let last = waypoints[waypoints.len() - 1];
        return (last.theta_deg, last.phi_deg);
    };
    let a = waypoints[next - 1];
    let span = (b.t_ms - a.t_ms) as f64;
    let s = (t_ms - a.t_ms as f64) / span;
    (
        a.theta_deg + (b.theta_deg - a.theta_deg) * s,
        a.phi_deg + (b.phi_deg - a.phi_deg) * s,
    )
}
