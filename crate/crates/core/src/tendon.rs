//! Paired tendon allocation.
//!
//! Four tendons run at a fixed pitch radius around the joint axis, in two
//! opposing pairs `(0, 2)` and `(1, 3)`. A bend is produced by pulling one
//! tendon of each pair and releasing its partner by exactly the same length.
//! Displacements are signed: negative means the tendon path got shorter.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{wrap_angle, DEFAULT_THETA_MAX};

/// Tolerance on the opposing-pair angle relation.
pub const PAIR_ANGLE_TOL: f64 = 1e-12;

/// Below this bend angle the bend plane is reported as `0`.
pub const PLANE_UNDEFINED_BELOW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TendonError {
    #[error("invalid tendon layout: {0}")]
    InvalidLayout(String),
    #[error("invalid bend command: {0}")]
    InvalidCommand(String),
    #[error("stroke limit exceeded: {0}")]
    LimitExceeded(LimitReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "LayoutFile")]
pub struct TendonLayout {
    /// Radial distance from the joint axis to each tendon channel, mm.
    pub pitch_radius: f64,
    /// Angular position of each tendon around the axis, radians.
    pub angles: [f64; 4],
    /// Largest allowed `|dl|` per tendon, mm.
    pub stroke_limit: f64,
}

impl Default for TendonLayout {
    fn default() -> Self {
        let pitch_radius = 2.5;
        Self {
            pitch_radius,
            angles: [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
            stroke_limit: pitch_radius * DEFAULT_THETA_MAX,
        }
    }
}

/// On-disk layout; a missing stroke limit follows the pitch radius.
#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LayoutFile {
    pitch_radius: f64,
    angles: [f64; 4],
    stroke_limit: Option<f64>,
}

impl Default for LayoutFile {
    fn default() -> Self {
        let d = TendonLayout::default();
        Self {
            pitch_radius: d.pitch_radius,
            angles: d.angles,
            stroke_limit: None,
        }
    }
}

impl From<LayoutFile> for TendonLayout {
    fn from(f: LayoutFile) -> Self {
        Self {
            pitch_radius: f.pitch_radius,
            angles: f.angles,
            stroke_limit: f.stroke_limit.unwrap_or(f.pitch_radius * DEFAULT_THETA_MAX),
        }
    }
}

impl TendonLayout {
    pub fn validate(&self) -> Result<(), TendonError> {
        if !(self.pitch_radius.is_finite() && self.pitch_radius > 0.0) {
            return Err(TendonError::InvalidLayout(format!(
                "pitch_radius {} must be > 0",
                self.pitch_radius
            )));
        }
        if !(self.stroke_limit.is_finite() && self.stroke_limit > 0.0) {
            return Err(TendonError::InvalidLayout(format!(
                "stroke_limit {} must be > 0",
                self.stroke_limit
            )));
        }
        if self
            .angles
            .iter()
            .any(|a| !a.is_finite() || !(0.0..TAU).contains(a))
        {
            return Err(TendonError::InvalidLayout(
                "tendon angles must lie in [0, 2pi)".into(),
            ));
        }
        if self.angles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TendonError::InvalidLayout(
                "tendon angles must be sorted ascending".into(),
            ));
        }
        for i in 0..2 {
            if (self.angles[i + 2] - self.angles[i] - PI).abs() > PAIR_ANGLE_TOL {
                return Err(TendonError::InvalidLayout(format!(
                    "tendons {i} and {} are not opposed",
                    i + 2
                )));
            }
        }
        // the two pairs must span the plane for the bend to be decodable
        if (self.angles[1] - self.angles[0]).sin().abs() < 1e-6 {
            return Err(TendonError::InvalidLayout(
                "tendon pairs are collinear".into(),
            ));
        }
        Ok(())
    }
}

/// Commanded bend: magnitude `theta` in a plane at angle `phi`, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BendCommand {
    pub theta: f64,
    pub phi: f64,
}

impl BendCommand {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta,
            phi: wrap_angle(phi),
        }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn validate(&self, theta_max: f64) -> Result<(), TendonError> {
        if !self.theta.is_finite() || !(0.0..=theta_max).contains(&self.theta) {
            return Err(TendonError::InvalidCommand(format!(
                "theta {} outside [0, {theta_max}]",
                self.theta
            )));
        }
        if !self.phi.is_finite() || !(0.0..TAU).contains(&self.phi) {
            return Err(TendonError::InvalidCommand(format!(
                "phi {} outside [0, 2pi)",
                self.phi
            )));
        }
        Ok(())
    }

    /// Bend as a planar vector `(theta cos phi, theta sin phi)`.
    pub fn as_vector(&self) -> [f64; 2] {
        [self.theta * self.phi.cos(), self.theta * self.phi.sin()]
    }
}

/// Signed tendon length changes, mm. Negative = pulled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TendonDisplacements {
    pub dl: [f64; 4],
}

impl TendonDisplacements {
    pub fn new(dl: [f64; 4]) -> Self {
        Self { dl }
    }

    /// Sums of each opposing pair, `(dl0 + dl2, dl1 + dl3)`.
    pub fn pair_sums(&self) -> [f64; 2] {
        [self.dl[0] + self.dl[2], self.dl[1] + self.dl[3]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitViolation {
    pub tendon: usize,
    /// `|dl| - stroke_limit`, mm.
    pub overshoot: f64,
}

/// Every tendon beyond the stroke limit. Empty means within limits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LimitReport {
    pub violations: Vec<LimitViolation>,
}

impl LimitReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for LimitReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "all tendons within limit");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "tendon {} over by {:.6} mm", v.tendon, v.overshoot)?;
        }
        Ok(())
    }
}

/// Tendon displacements for a bend command.
///
/// The first tendon of each pair follows `-r * theta * cos(beta - phi)` and
/// its partner gets the exact negation, so each pair sums to zero.
pub fn allocate(
    cmd: &BendCommand,
    layout: &TendonLayout,
) -> Result<TendonDisplacements, TendonError> {
    layout.validate()?;
    cmd.validate(PI)?;
    let r = layout.pitch_radius;
    let d0 = -r * cmd.theta * (layout.angles[0] - cmd.phi).cos();
    let d1 = -r * cmd.theta * (layout.angles[1] - cmd.phi).cos();
    let out = TendonDisplacements::new([d0, d1, -d0, -d1]);
    let report = check_limits(&out, layout);
    if !report.is_ok() {
        return Err(TendonError::LimitExceeded(report));
    }
    Ok(out)
}

/// Achieved bend decoded from four displacements, plus the pair-coupling
/// residual.
///
/// This is the least-squares fit of the allocation model: the antisymmetric
/// part of each pair is matched exactly and the symmetric part, which the
/// model cannot produce, is reported as `max(|dl0 + dl2|, |dl1 + dl3|) / 2`.
pub fn deallocate(dl: &TendonDisplacements, layout: &TendonLayout) -> (BendCommand, f64) {
    let r = layout.pitch_radius;
    // projections of the bend vector on each pair's axis
    let p0 = (dl.dl[2] - dl.dl[0]) / (2.0 * r);
    let p1 = (dl.dl[3] - dl.dl[1]) / (2.0 * r);
    // work in the frame of tendon 0; pair 1 sits at `spacing` from it
    let spacing = layout.angles[1] - layout.angles[0];
    let (s, c) = if (spacing - FRAC_PI_2).abs() <= PAIR_ANGLE_TOL {
        (1.0, 0.0)
    } else {
        spacing.sin_cos()
    };
    let along = p0;
    let across = (p1 - along * c) / s;
    let theta = along.hypot(across).max(0.0);
    let phi = if theta < PLANE_UNDEFINED_BELOW {
        0.0
    } else {
        wrap_angle(layout.angles[0] + across.atan2(along))
    };
    let [s02, s13] = dl.pair_sums();
    let residual = s02.abs().max(s13.abs()) / 2.0;
    (BendCommand { theta, phi }, residual)
}

/// Reports every tendon whose displacement exceeds the stroke limit.
pub fn check_limits(dl: &TendonDisplacements, layout: &TendonLayout) -> LimitReport {
    let violations = dl
        .dl
        .iter()
        .enumerate()
        .filter(|(_, d)| d.abs() > layout.stroke_limit)
        .map(|(tendon, d)| LimitViolation {
            tendon,
            overshoot: d.abs() - layout.stroke_limit,
        })
        .collect();
    LimitReport { violations }
}
