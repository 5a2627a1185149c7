//! Shared workloads for the criterion benches.

use tjs_core::Waypoint;

/// Full plane sweep at a 30 degree bend, `ms` long.
pub fn plane_sweep(ms: u64) -> Vec<Waypoint> {
    vec![
        Waypoint::new(0, 0.0, 0.0),
        Waypoint::new(500, 30.0, 0.0),
        Waypoint::new(500 + ms, 30.0, 360.0),
    ]
}

/// Ramp to a full bend in the `phi = 0` plane and hold.
pub fn full_bend() -> Vec<Waypoint> {
    vec![
        Waypoint::new(0, 0.0, 0.0),
        Waypoint::new(1000, 90.0, 0.0),
        Waypoint::new(3000, 90.0, 0.0),
    ]
}
