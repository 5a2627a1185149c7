mod common;

use std::f64::consts::TAU;

use common::{fit_circle, radial_stats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tjs_core::actuation::angle_to_displacement;
use tjs_core::tendon::deallocate;
use tjs_core::trace::to_csv_string;
use tjs_core::{BendCommand, JointSim, SimConfig, TendonDisplacements, Waypoint};

fn hold(theta_deg: f64, phi_deg: f64, seconds: f64) -> JointSim {
    let mut sim = JointSim::new(SimConfig::default()).unwrap();
    sim.set_target(BendCommand::from_degrees(theta_deg, phi_deg), 0.0)
        .unwrap();
    for _ in 0..(seconds * 1e3) as usize {
        sim.step_default();
    }
    sim
}

/// Worst decoded-bend error from rounding both pairs by half a count.
fn two_pair_bound_deg(cfg: &SimConfig) -> f64 {
    let half_mm = angle_to_displacement(cfg.motor.angle_resolution(), &cfg.motor) / 2.0;
    (2f64.sqrt() * half_mm / cfg.layout.pitch_radius).to_degrees()
}

fn plane_error_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d).to_degrees()
}

#[test]
fn single_pair_planes_within_one_tendon_bound() {
    // 0.0131 mm / 2.5 mm
    let bound = (0.0131f64 / 2.5).to_degrees();
    for phi in [0.0, 90.0, 180.0, 270.0] {
        for theta in [5.0, 33.3, 61.7, 90.0] {
            let s = hold(theta, phi, 2.0).snapshot();
            let err = (s.achieved.theta.to_degrees() - theta).abs();
            assert!(err <= bound, "theta {theta} phi {phi}: {err}");
        }
    }
}

#[test]
fn steady_state_within_quantization_bound() {
    let cfg = SimConfig::default();
    let bound = two_pair_bound_deg(&cfg);
    assert!((bound - 0.4244).abs() < 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let theta = rng.random_range(0.0..=90.0);
        let phi = rng.random_range(0.0..360.0);
        let s = hold(theta, phi, 2.0).snapshot();
        let err = (s.achieved.theta.to_degrees() - theta).abs();
        assert!(err <= bound, "theta {theta} phi {phi}: {err}");
        if theta > 1.0 {
            let lateral = plane_error_deg(s.achieved.phi, phi.to_radians()) * theta.to_radians();
            assert!(lateral <= bound, "plane error {lateral} at {theta}/{phi}");
        }
    }
}

#[test]
fn tracking_is_isotropic() {
    // Before quantization the decoded bend lag along a ramp is the same in
    // every plane; read it from the continuous spool angles mid-ramp.
    let cfg = SimConfig::default();
    let mut lags = Vec::new();
    let mut steady = Vec::new();
    for k in 0..8 {
        let phi = 45.0 * k as f64;
        let mut sim = JointSim::new(cfg).unwrap();
        sim.set_target(BendCommand::from_degrees(60.0, phi), 500.0)
            .unwrap();
        let mut snap = sim.snapshot();
        for _ in 0..250 {
            snap = sim.step_default();
        }
        let continuous = TendonDisplacements::new(
            snap.motors
                .map(|m| angle_to_displacement(m.actual_angle, &cfg.motor)),
        );
        let (bend, _) = deallocate(&continuous, &cfg.layout);
        lags.push(snap.cmd.theta - bend.theta);
        for _ in 0..2000 {
            snap = sim.step_default();
        }
        steady.push((snap.achieved.theta.to_degrees() - 60.0).abs());
    }
    let mean = lags.iter().sum::<f64>() / lags.len() as f64;
    assert!(mean > 0.0);
    for lag in &lags {
        assert!((lag - mean).abs() <= 0.1 * mean, "lags {lags:?}");
    }
    let bound = two_pair_bound_deg(&cfg);
    assert!(steady.iter().all(|e| *e <= bound), "{steady:?}");
}

#[test]
fn repeated_runs_are_identical() {
    let script = [
        Waypoint::new(0, 0.0, 0.0),
        Waypoint::new(700, 70.0, 30.0),
        Waypoint::new(1500, 20.0, 300.0),
        Waypoint::new(2000, 20.0, 300.0),
    ];
    let a = JointSim::new(SimConfig::default())
        .unwrap()
        .run_script(&script)
        .unwrap();
    let b = JointSim::new(SimConfig::default())
        .unwrap()
        .run_script(&script)
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(to_csv_string(&a), to_csv_string(&b));
}

#[test]
fn plane_sweep_traces_circle() {
    let mut sim = JointSim::new(SimConfig::default()).unwrap();
    let trace = sim
        .run_script(&[
            Waypoint::new(0, 30.0, 0.0),
            Waypoint::new(1000, 30.0, 0.0),
            Waypoint::new(11_000, 30.0, 360.0),
        ])
        .unwrap();
    let sweep: Vec<(f64, f64)> = trace
        .iter()
        .filter(|s| s.t > 1.0)
        .map(|s| (s.tip.position.x, s.tip.position.y))
        .collect();
    let (cx, cy, r) = fit_circle(&sweep);
    let (mean, std) = radial_stats(&sweep, cx, cy);
    assert!(cx.hypot(cy) < 0.05 * r);
    assert!(std < 0.01 * mean, "std {std} mean {mean}");
    // closed: the sweep ends where it began
    let first = sweep.first().unwrap();
    let last = sweep.last().unwrap();
    assert!((first.0 - last.0).hypot(first.1 - last.1) < 0.05 * r);
}

#[test]
fn commanded_pairs_always_cancel() {
    let mut sim = JointSim::new(SimConfig::default()).unwrap();
    let trace = sim
        .run_script(&[Waypoint::new(0, 0.0, 0.0), Waypoint::new(2000, 90.0, 720.0)])
        .unwrap();
    for s in trace {
        assert_eq!(s.dl_cmd.pair_sums(), [0.0, 0.0]);
    }
}

#[test]
fn held_command_is_stable() {
    let mut sim = hold(42.0, 17.0, 2.0);
    let settled = sim.snapshot();
    for _ in 0..500 {
        let s = sim.step_default();
        assert_eq!(s.achieved, settled.achieved);
        assert_eq!(s.dl_act, settled.dl_act);
    }
}
