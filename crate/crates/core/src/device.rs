//! Descriptive data about the physical unit. Nothing in the simulation
//! reads these.

/// Actuation unit enclosure, mm (length, width, height).
pub const ACTUATION_UNIT_MM: [f64; 3] = [183.0, 80.0, 38.0];

pub const RING_MATERIAL: &str = "Nylon 6/6";
pub const TENDON_MATERIAL: &str = "superelastic Nitinol";
pub const MOTOR_FAMILY: &str = "Pololu DC gear motor";
