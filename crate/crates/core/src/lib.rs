//! Digital twin of a four-tendon omnidirectional bending joint.
//!
//! The joint is a stack of rings bent as a single constant-curvature section
//! by two antagonistic tendon pairs, each tendon wound on a geared DC motor
//! spool. The crate covers:
//!
//! - [`kinematics`]: arc forward/inverse maps, ring poses and the Jacobian.
//! - [`tendon`]: paired tendon allocation and its least-squares inverse.
//! - [`actuation`]: velocity-limited PID spool servos with encoder quantization.
//! - [`sim`]: the stepped loop tying those together, plus waypoint scripts
//!   ([`script`]) and CSV traces ([`trace`]).

pub mod actuation;
pub mod device;
pub mod kinematics;
pub mod script;
pub mod sim;
pub mod tendon;
pub mod trace;

pub use actuation::{MotorConfig, MotorState, PidGains};
pub use kinematics::{
    arc_jacobian, fk_ring_poses, fk_tip, ik_tip, ArcParams, CatheterSpec, IkSolution, Pose,
    RingStackConfig, DEFAULT_THETA_MAX,
};
pub use script::{parse_script, Waypoint};
pub use sim::{JointSim, JointSnapshot, MotorSummary, SimConfig, SimError, TargetAck};
pub use tendon::{
    allocate, check_limits, deallocate, BendCommand, TendonDisplacements, TendonLayout,
};

pub use nalgebra::{Matrix3, Vector3};
