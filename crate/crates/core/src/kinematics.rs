//! Constant-curvature geometry of the bending section.
//!
//! The base frame has `z` along the straight joint axis and `x` pointing
//! toward the bend plane `phi = 0`. An arc is described by its bend angle
//! `theta`, its bend-plane angle `phi` and its arc length. The orientation of
//! any point along the arc is `Rz(phi) * Ry(theta) * Rz(-phi)`, so a straight
//! section has identity orientation regardless of `phi`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this bend angle the closed-form arc map switches to its series form.
pub const SMALL_ANGLE: f64 = 1e-7;

/// Default soft limit on the bend angle (90 degrees).
pub const DEFAULT_THETA_MAX: f64 = PI / 2.0;

/// Slack applied when comparing a solved bend angle against `theta_max`.
const LIMIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("invalid ring stack config: {0}")]
    InvalidConfig(String),
    #[error("target unreachable: {0}")]
    Unreachable(String),
    #[error("degenerate target: within {SMALL_ANGLE} mm of the base origin")]
    Degenerate,
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Parameters of a single constant-curvature arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcParams {
    /// Bend angle in radians.
    pub theta: f64,
    /// Bend-plane angle in radians, `[0, 2pi)`.
    pub phi: f64,
    /// Arc length in mm.
    pub arc_length: f64,
}

impl ArcParams {
    /// Builds an arc, wrapping `phi` into `[0, 2pi)`.
    pub fn new(theta: f64, phi: f64, arc_length: f64) -> Result<Self, KinematicsError> {
        let arc = Self {
            theta,
            phi: wrap_angle(phi),
            arc_length,
        };
        arc.validate()?;
        Ok(arc)
    }

    /// Checks the geometric invariants accepted by the forward map.
    ///
    /// `theta` may range over `[0, pi]` here; the tighter `theta_max` limit
    /// is applied where commands are accepted.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !self.theta.is_finite() || !(0.0..=PI).contains(&self.theta) {
            return Err(KinematicsError::InvalidArc(format!(
                "theta {} outside [0, pi]",
                self.theta
            )));
        }
        if !self.phi.is_finite() || !(0.0..TAU).contains(&self.phi) {
            return Err(KinematicsError::InvalidArc(format!(
                "phi {} outside [0, 2pi)",
                self.phi
            )));
        }
        if !self.arc_length.is_finite() || self.arc_length <= 0.0 {
            return Err(KinematicsError::InvalidArc(format!(
                "arc_length {} must be > 0",
                self.arc_length
            )));
        }
        Ok(())
    }
}

/// Rigid pose in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    /// Position in mm.
    pub position: Vector3<f64>,
    pub orientation: Matrix3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: Matrix3::identity(),
        }
    }

    /// Local z-axis (the arc tangent for poses produced by [`fk_tip`]).
    pub fn z_axis(&self) -> Vector3<f64> {
        self.orientation.column(2).into_owned()
    }

    /// True when the orientation is orthonormal with determinant +1.
    pub fn is_proper_rotation(&self, tol: f64) -> bool {
        let r = &self.orientation;
        let gram = r.transpose() * r - Matrix3::identity();
        gram.abs().max() <= tol && (r.determinant() - 1.0).abs() <= tol
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

/// Discrete stack of rigid rings approximating the arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingStackConfig {
    pub ring_count: usize,
    /// mm
    pub ring_outer_diameter: f64,
    /// Arc length of the whole bending section, mm.
    pub segment_arc_length: f64,
}

impl Default for RingStackConfig {
    fn default() -> Self {
        Self {
            ring_count: 8,
            ring_outer_diameter: 7.0,
            segment_arc_length: 40.0,
        }
    }
}

impl RingStackConfig {
    pub fn gap_count(&self) -> usize {
        self.ring_count.saturating_sub(1)
    }

    /// Checks the stack on its own. The clearance against the tendon pitch
    /// radius needs the tendon layout and is checked by the simulation config.
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.ring_count < 2 {
            return Err(KinematicsError::InvalidConfig(format!(
                "ring_count {} must be >= 2",
                self.ring_count
            )));
        }
        if !(self.ring_outer_diameter.is_finite() && self.ring_outer_diameter > 0.0) {
            return Err(KinematicsError::InvalidConfig(format!(
                "ring_outer_diameter {} must be > 0",
                self.ring_outer_diameter
            )));
        }
        if !(self.segment_arc_length.is_finite() && self.segment_arc_length > 0.0) {
            return Err(KinematicsError::InvalidConfig(format!(
                "segment_arc_length {} must be > 0",
                self.segment_arc_length
            )));
        }
        Ok(())
    }
}

/// Delivery catheter and tendon wire dimensions (metadata for the twin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatheterSpec {
    /// mm
    pub catheter_diameter: f64,
    /// mm
    pub catheter_length: f64,
    /// mm
    pub tendon_wire_diameter: f64,
}

impl Default for CatheterSpec {
    fn default() -> Self {
        Self {
            catheter_diameter: 3.2,
            catheter_length: 1300.0,
            tendon_wire_diameter: 0.16,
        }
    }
}

impl CatheterSpec {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (name, value) in [
            ("catheter_diameter", self.catheter_diameter),
            ("catheter_length", self.catheter_length),
            ("tendon_wire_diameter", self.tendon_wire_diameter),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(KinematicsError::InvalidConfig(format!(
                    "{name} {value} must be > 0"
                )));
            }
        }
        Ok(())
    }
}

/// `(1 - cos t) / t`
fn versine_ratio(theta: f64) -> f64 {
    if theta <= SMALL_ANGLE {
        theta / 2.0 - theta.powi(3) / 24.0
    } else {
        let half = (theta / 2.0).sin();
        2.0 * half * half / theta
    }
}

/// `sin t / t`
fn sinc(theta: f64) -> f64 {
    if theta <= SMALL_ANGLE {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

// The derivative closed forms cancel badly for small angles, so they switch
// to their series well above SMALL_ANGLE.
const DERIV_SERIES_BELOW: f64 = 1e-3;

/// d/dt of `(1 - cos t) / t`
fn versine_ratio_deriv(theta: f64) -> f64 {
    if theta <= DERIV_SERIES_BELOW {
        let t2 = theta * theta;
        0.5 - t2 / 8.0 + t2 * t2 / 144.0
    } else {
        let half = (theta / 2.0).sin();
        (theta * theta.sin() - 2.0 * half * half) / (theta * theta)
    }
}

/// d/dt of `sin t / t`
fn sinc_deriv(theta: f64) -> f64 {
    if theta <= DERIV_SERIES_BELOW {
        let t2 = theta * theta;
        theta * (-1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0)
    } else {
        (theta * theta.cos() - theta.sin()) / (theta * theta)
    }
}

fn arc_position(theta: f64, phi: f64, arc_length: f64) -> Vector3<f64> {
    let radial = arc_length * versine_ratio(theta);
    Vector3::new(
        radial * phi.cos(),
        radial * phi.sin(),
        arc_length * sinc(theta),
    )
}

fn arc_orientation(theta: f64, phi: f64) -> Matrix3<f64> {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    // Rz(phi) * Ry(theta) * Rz(-phi), expanded
    Matrix3::new(
        cp * cp * ct + sp * sp,
        sp * cp * (ct - 1.0),
        cp * st,
        sp * cp * (ct - 1.0),
        sp * sp * ct + cp * cp,
        sp * st,
        -cp * st,
        -sp * st,
        ct,
    )
}

/// Tip pose of a constant-curvature arc.
pub fn fk_tip(arc: &ArcParams) -> Result<Pose, KinematicsError> {
    arc.validate()?;
    Ok(Pose {
        position: arc_position(arc.theta, arc.phi, arc.arc_length),
        orientation: arc_orientation(arc.theta, arc.phi),
    })
}

/// Poses of every ring in the stack, base ring first.
///
/// Ring `k` sits at the fraction `k / (ring_count - 1)` of the arc, so each
/// inter-ring gap carries an equal share of the bend. The last ring is the
/// tip.
pub fn fk_ring_poses(
    arc: &ArcParams,
    stack: &RingStackConfig,
) -> Result<Vec<Pose>, KinematicsError> {
    arc.validate()?;
    stack.validate()?;
    let gaps = stack.gap_count() as f64;
    let mut poses = Vec::with_capacity(stack.ring_count);
    poses.push(Pose::identity());
    for k in 1..stack.ring_count {
        let frac = k as f64 / gaps;
        let theta = arc.theta * frac;
        poses.push(Pose {
            position: arc_position(theta, arc.phi, arc.arc_length * frac),
            orientation: arc_orientation(theta, arc.phi),
        });
    }
    Ok(poses)
}

/// Result of inverting a tip target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    pub arc: ArcParams,
    /// `|implied arc length - requested arc length|`, mm. A target that is
    /// not on the arc surface of the requested length shows up here.
    pub residual: f64,
}

/// Inverts a tip position with the default 90 degree bend limit.
pub fn ik_tip(target: &Vector3<f64>, arc_length: f64) -> Result<IkSolution, KinematicsError> {
    ik_tip_limited(target, arc_length, DEFAULT_THETA_MAX)
}

/// Closed-form inverse of the constant-curvature tip map.
///
/// The bend plane comes from the target's azimuth; the bend angle from
/// `tan(theta / 2) = rho / z`. Only the direction of the target determines
/// the arc, and its distance is reported through the residual.
pub fn ik_tip_limited(
    target: &Vector3<f64>,
    arc_length: f64,
    theta_max: f64,
) -> Result<IkSolution, KinematicsError> {
    if !(arc_length.is_finite() && arc_length > 0.0) {
        return Err(KinematicsError::InvalidArc(format!(
            "arc_length {arc_length} must be > 0"
        )));
    }
    if !target.iter().all(|c| c.is_finite()) {
        return Err(KinematicsError::Unreachable("target is not finite".into()));
    }
    if target.norm() < SMALL_ANGLE {
        return Err(KinematicsError::Degenerate);
    }
    if target.z < 0.0 {
        return Err(KinematicsError::Unreachable(format!(
            "target z {} is behind the base",
            target.z
        )));
    }
    let rho = target.x.hypot(target.y);
    let phi = if rho < SMALL_ANGLE {
        0.0
    } else {
        wrap_angle(target.y.atan2(target.x))
    };
    let theta = 2.0 * rho.atan2(target.z);
    if theta > theta_max + LIMIT_SLACK {
        return Err(KinematicsError::Unreachable(format!(
            "bend {theta} rad exceeds theta_max {theta_max} rad"
        )));
    }
    let theta = theta.min(theta_max.max(0.0)).min(PI);
    let implied = target.z / sinc(theta);
    Ok(IkSolution {
        arc: ArcParams {
            theta,
            phi,
            arc_length,
        },
        residual: (implied - arc_length).abs(),
    })
}

/// Analytic Jacobian of the tip position with respect to `(theta, phi)`, mm/rad.
pub fn arc_jacobian(arc: &ArcParams) -> Result<Matrix3x2<f64>, KinematicsError> {
    arc.validate()?;
    let (sp, cp) = arc.phi.sin_cos();
    let len = arc.arc_length;
    let d_radial = len * versine_ratio_deriv(arc.theta);
    let radial = len * versine_ratio(arc.theta);
    Ok(Matrix3x2::new(
        d_radial * cp,
        -radial * sp,
        d_radial * sp,
        radial * cp,
        len * sinc_deriv(arc.theta),
        0.0,
    ))
}
