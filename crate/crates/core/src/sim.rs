//! Stepped joint simulation: command trajectory, tendon allocation, motor
//! servo loops, encoder read-back, achieved bend and poses.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuation::{
    angle_to_displacement, displacement_to_angle, home_all, motor_step, MotorConfig, MotorState,
    MAX_DT,
};
use crate::kinematics::{fk_ring_poses, fk_tip, ArcParams, CatheterSpec, Pose, RingStackConfig};
use crate::script::Waypoint;
use crate::tendon::{allocate, deallocate, BendCommand, TendonDisplacements, TendonLayout};

/// Bend angles below this are treated as straight when interpolating planes.
const STRAIGHT_BELOW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("invalid dt {0}: must be in (0, {MAX_DT}]")]
    InvalidDt(f64),
    #[error("invalid command: {0}")]
    InvalidCommand(String),
    #[error("bad script: {0}")]
    BadScript(#[from] crate::script::ScriptError),
    #[error("e-stop latched; home or resume first")]
    Latched,
}

fn invalid(field: &str, reason: impl ToString) -> SimError {
    SimError::InvalidConfig {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub stack: RingStackConfig,
    pub layout: TendonLayout,
    pub motor: MotorConfig,
    pub catheter: CatheterSpec,
    /// Step size, s.
    pub dt: f64,
    /// Command limit on the bend angle, rad.
    pub theta_max: f64,
    /// Whether snapshots carry the full ring chain.
    pub record_rings: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            stack: RingStackConfig::default(),
            layout: TendonLayout::default(),
            motor: MotorConfig::default(),
            catheter: CatheterSpec::default(),
            dt: 1e-3,
            theta_max: crate::kinematics::DEFAULT_THETA_MAX,
            record_rings: false,
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| invalid("config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.stack.validate().map_err(|e| invalid("stack", e))?;
        self.layout.validate().map_err(|e| invalid("layout", e))?;
        self.motor.validate().map_err(|e| invalid("motor", e))?;
        self.catheter
            .validate()
            .map_err(|e| invalid("catheter", e))?;
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(invalid("dt", format!("{} not in (0, {MAX_DT}]", self.dt)));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= PI) {
            return Err(invalid(
                "theta_max",
                format!("{} not in (0, pi]", self.theta_max),
            ));
        }
        if self.stack.ring_outer_diameter <= 2.0 * self.layout.pitch_radius {
            return Err(invalid(
                "stack.ring_outer_diameter",
                format!(
                    "{} mm does not enclose tendons at pitch radius {} mm",
                    self.stack.ring_outer_diameter, self.layout.pitch_radius
                ),
            ));
        }
        if self.catheter.catheter_diameter >= self.stack.ring_outer_diameter {
            return Err(invalid(
                "catheter.catheter_diameter",
                format!(
                    "{} mm does not fit inside rings of {} mm",
                    self.catheter.catheter_diameter, self.stack.ring_outer_diameter
                ),
            ));
        }
        Ok(())
    }
}

/// Motor fields carried in a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorSummary {
    pub target_angle: f64,
    pub actual_angle: f64,
    pub velocity: f64,
    pub encoder_count: i64,
}

impl From<&MotorState> for MotorSummary {
    fn from(m: &MotorState) -> Self {
        Self {
            target_angle: m.target_angle,
            actual_angle: m.actual_angle,
            velocity: m.velocity,
            encoder_count: m.encoder_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSnapshot {
    /// Simulated time, s.
    pub t: f64,
    pub cmd: BendCommand,
    /// Bend decoded from the encoder readings.
    pub achieved: BendCommand,
    /// Pair-coupling residual of the achieved displacements, mm.
    pub residual: f64,
    pub dl_cmd: TendonDisplacements,
    pub dl_act: TendonDisplacements,
    pub motors: [MotorSummary; 4],
    pub tip: Pose,
    pub rings: Option<Vec<Pose>>,
    pub latched: bool,
}

/// Outcome of accepting a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetAck {
    /// Target after clamping.
    pub target: BendCommand,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Trajectory {
    Hold(BendCommand),
    Ramp {
        start: f64,
        duration: f64,
        theta_from: f64,
        theta_to: f64,
        phi_from: f64,
        /// signed sweep, shorter way round
        phi_delta: f64,
    },
    Script {
        start: f64,
        waypoints: Vec<Waypoint>,
        theta_max: f64,
    },
}

impl Trajectory {
    fn at(&self, t: f64) -> BendCommand {
        match self {
            Trajectory::Hold(cmd) => *cmd,
            Trajectory::Ramp {
                start,
                duration,
                theta_from,
                theta_to,
                phi_from,
                phi_delta,
            } => {
                let s = ((t - start) / duration).clamp(0.0, 1.0);
                BendCommand::new(
                    theta_from + (theta_to - theta_from) * s,
                    phi_from + phi_delta * s,
                )
            }
            Trajectory::Script {
                start,
                waypoints,
                theta_max,
            } => {
                let (theta_deg, phi_deg) = crate::script::sample(waypoints, (t - start) * 1e3);
                let cmd = BendCommand::from_degrees(theta_deg, phi_deg);
                BendCommand {
                    theta: cmd.theta.clamp(0.0, *theta_max),
                    ..cmd
                }
            }
        }
    }

    /// Where the trajectory comes to rest once it has run out.
    fn end(&self) -> Option<(f64, BendCommand)> {
        match self {
            Trajectory::Hold(_) => None,
            Trajectory::Ramp {
                start, duration, ..
            } => Some((start + duration, self.at(start + duration))),
            Trajectory::Script {
                start, waypoints, ..
            } => {
                let last = waypoints.last()?.t_ms as f64 * 1e-3;
                Some((start + last, self.at(start + last)))
            }
        }
    }
}

/// Single-owner simulation state.
#[derive(Debug, Clone)]
pub struct JointSim {
    cfg: SimConfig,
    t: f64,
    trajectory: Trajectory,
    cmd: BendCommand,
    dl_cmd: TendonDisplacements,
    motors: [MotorState; 4],
    latched: bool,
}

impl JointSim {
    /// New simulation with homed motors and a straight joint.
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            t: 0.0,
            trajectory: Trajectory::Hold(BendCommand::default()),
            cmd: BendCommand::default(),
            dl_cmd: TendonDisplacements::default(),
            motors: [MotorState::homed(); 4],
            latched: false,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn is_latched(&self) -> bool {
        self.latched
    }

    pub fn motors(&self) -> &[MotorState; 4] {
        &self.motors
    }

    /// Clamps a requested bend into `[0, theta_max]`.
    pub fn clamp_command(&self, cmd: BendCommand) -> Result<TargetAck, SimError> {
        if !(cmd.theta.is_finite() && cmd.phi.is_finite()) {
            return Err(SimError::InvalidCommand("non-finite bend".into()));
        }
        let theta = cmd.theta.clamp(0.0, self.cfg.theta_max);
        Ok(TargetAck {
            target: BendCommand::new(theta, cmd.phi),
            clamped: theta != cmd.theta,
        })
    }

    /// Ramps the command linearly from its current value to `cmd` over
    /// `ramp_ms`. The bend plane turns the shorter way round.
    pub fn set_target(&mut self, cmd: BendCommand, ramp_ms: f64) -> Result<TargetAck, SimError> {
        if self.latched {
            return Err(SimError::Latched);
        }
        if !(ramp_ms.is_finite() && ramp_ms >= 0.0) {
            return Err(SimError::InvalidCommand(format!(
                "ramp_ms {ramp_ms} must be >= 0"
            )));
        }
        let ack = self.clamp_command(cmd)?;
        let to = ack.target;
        if ramp_ms == 0.0 {
            self.trajectory = Trajectory::Hold(to);
            return Ok(ack);
        }
        let from = self.cmd;
        let phi_from = if from.theta < STRAIGHT_BELOW {
            to.phi
        } else {
            from.phi
        };
        let phi_delta = if to.theta < STRAIGHT_BELOW {
            0.0
        } else {
            let d = (to.phi - phi_from).rem_euclid(TAU);
            if d > PI {
                d - TAU
            } else {
                d
            }
        };
        self.trajectory = Trajectory::Ramp {
            start: self.t,
            duration: ramp_ms * 1e-3,
            theta_from: from.theta,
            theta_to: to.theta,
            phi_from,
            phi_delta,
        };
        Ok(ack)
    }

    /// E-stop: motors hold where they are and the commanded displacements
    /// stay frozen until [`home`](Self::home) or [`resume`](Self::resume).
    pub fn latch(&mut self) {
        for m in &mut self.motors {
            m.target_angle = m.actual_angle;
            m.last_target = m.actual_angle;
            m.integrator = 0.0;
        }
        self.trajectory = Trajectory::Hold(self.cmd);
        self.latched = true;
    }

    /// Clears the e-stop latch, holding the bend the joint reached.
    pub fn resume(&mut self) {
        if !self.latched {
            return;
        }
        self.latched = false;
        let achieved = self.decode().0;
        let hold = BendCommand {
            theta: achieved.theta.min(self.cfg.theta_max),
            ..achieved
        };
        self.cmd = hold;
        self.trajectory = Trajectory::Hold(hold);
        for m in &mut self.motors {
            // no rate kick from the retarget
            m.last_target = m.target_angle;
        }
    }

    /// Zeroes the motors, straightens the command and clears the latch.
    pub fn home(&mut self) {
        home_all(&mut self.motors);
        self.cmd = BendCommand::default();
        self.dl_cmd = TendonDisplacements::default();
        self.trajectory = Trajectory::Hold(BendCommand::default());
        self.latched = false;
    }

    /// Advances by `dt` seconds.
    pub fn step(&mut self, dt: f64) -> Result<JointSnapshot, SimError> {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(SimError::InvalidDt(dt));
        }
        self.t += dt;
        if !self.latched {
            self.cmd = self.trajectory.at(self.t);
            if let Some((end, last)) = self.trajectory.end() {
                if self.t >= end {
                    self.trajectory = Trajectory::Hold(last);
                }
            }
            self.dl_cmd = allocate(&self.cmd, &self.cfg.layout)
                .map_err(|e| SimError::InvalidCommand(e.to_string()))?;
            for (m, dl) in self.motors.iter_mut().zip(self.dl_cmd.dl) {
                m.target_angle = displacement_to_angle(dl, &self.cfg.motor);
            }
        }
        for m in &mut self.motors {
            *m = motor_step(m, &self.cfg.motor, dt).map_err(|_| SimError::InvalidDt(dt))?;
        }
        Ok(self.snapshot())
    }

    /// Advances by the configured step.
    pub fn step_default(&mut self) -> JointSnapshot {
        self.step(self.cfg.dt)
            .expect("configured dt and commands are validated")
    }

    fn measured_displacements(&self) -> TendonDisplacements {
        let motor = &self.cfg.motor;
        TendonDisplacements::new(
            self.motors
                .map(|m| angle_to_displacement(m.measured_angle(motor), motor)),
        )
    }

    fn decode(&self) -> (BendCommand, f64, TendonDisplacements) {
        let dl_act = self.measured_displacements();
        let (achieved, residual) = deallocate(&dl_act, &self.cfg.layout);
        (achieved, residual, dl_act)
    }

    /// Current state without stepping.
    pub fn snapshot(&self) -> JointSnapshot {
        let (achieved, residual, dl_act) = self.decode();
        let arc = ArcParams {
            theta: achieved.theta.min(PI),
            phi: achieved.phi,
            arc_length: self.cfg.stack.segment_arc_length,
        };
        let tip = fk_tip(&arc).expect("decoded arc is valid");
        let rings = self
            .cfg
            .record_rings
            .then(|| fk_ring_poses(&arc, &self.cfg.stack).expect("validated stack"));
        JointSnapshot {
            t: self.t,
            cmd: self.cmd,
            achieved,
            residual,
            dl_cmd: self.dl_cmd,
            dl_act,
            motors: self.motors.each_ref().map(MotorSummary::from),
            tip,
            rings,
            latched: self.latched,
        }
    }

    /// Runs a waypoint script from the current time, one snapshot per step.
    ///
    /// The command is piecewise linear between waypoints in `(theta, phi)`
    /// degrees exactly as written, so a script can sweep the plane through a
    /// full turn. The run ends at the last waypoint's time.
    pub fn run_script(&mut self, waypoints: &[Waypoint]) -> Result<Vec<JointSnapshot>, SimError> {
        self.run_script_paced(waypoints, |_| {})
    }

    /// [`run_script`](Self::run_script) with `pace` called before each step
    /// with the elapsed script time in seconds. Used to throttle a run to the
    /// wall clock; the trace does not depend on it.
    pub fn run_script_paced(
        &mut self,
        waypoints: &[Waypoint],
        mut pace: impl FnMut(f64),
    ) -> Result<Vec<JointSnapshot>, SimError> {
        if self.latched {
            return Err(SimError::Latched);
        }
        crate::script::validate(waypoints)?;
        let Some(last) = waypoints.last() else {
            return Ok(Vec::new());
        };
        let dt = self.cfg.dt;
        let steps = (last.t_ms as f64 * 1e-3 / dt - 1e-9).ceil().max(0.0) as usize;
        self.trajectory = Trajectory::Script {
            start: self.t,
            waypoints: waypoints.to_vec(),
            theta_max: self.cfg.theta_max,
        };
        let mut trace = Vec::with_capacity(steps);
        for k in 0..steps {
            pace(k as f64 * dt);
            trace.push(self.step(dt)?);
        }
        if let Some((_, rest)) = self.trajectory.end() {
            self.trajectory = Trajectory::Hold(rest);
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hold_for(sim: &mut JointSim, seconds: f64) -> JointSnapshot {
        let n = (seconds / sim.config().dt).round() as usize;
        let mut last = sim.snapshot();
        for _ in 0..n {
            last = sim.step_default();
        }
        last
    }

    #[test]
    fn starts_straight() {
        let sim = JointSim::new(SimConfig::default()).unwrap();
        let snap = sim.snapshot();
        assert_eq!(snap.achieved.theta, 0.0);
        assert_relative_eq!(snap.tip.position.z, 40.0);
        assert_eq!(snap.tip.position.x, 0.0);
    }

    #[test]
    fn rejects_zero_dt() {
        let cfg = SimConfig {
            dt: 0.0,
            ..Default::default()
        };
        match JointSim::new(cfg) {
            Err(SimError::InvalidConfig { field, .. }) => assert_eq!(field, "dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn names_cross_config_violations() {
        let cfg = SimConfig {
            stack: RingStackConfig {
                ring_outer_diameter: 4.0,
                ..Default::default()
            },
            ..Default::default()
        };
        match cfg.validate() {
            Err(SimError::InvalidConfig { field, .. }) => {
                assert_eq!(field, "stack.ring_outer_diameter")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_ring_stack_carries_the_bend_in_one_gap() {
        let cfg = SimConfig {
            stack: RingStackConfig {
                ring_count: 2,
                ..Default::default()
            },
            record_rings: true,
            ..Default::default()
        };
        let mut sim = JointSim::new(cfg).unwrap();
        sim.set_target(BendCommand::from_degrees(60.0, 0.0), 0.0)
            .unwrap();
        let snap = hold_for(&mut sim, 1.0);
        let rings = snap.rings.unwrap();
        assert_eq!(rings.len(), 2);
        let gap = rings[0].z_axis().angle(&rings[1].z_axis());
        assert_relative_eq!(gap, snap.achieved.theta, epsilon = 1e-12);
    }

    #[test]
    fn clamps_excess_bend() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        let ack = sim
            .set_target(BendCommand::from_degrees(120.0, 0.0), 100.0)
            .unwrap();
        assert!(ack.clamped);
        assert_relative_eq!(ack.target.theta, PI / 2.0);
        let ack = sim
            .set_target(BendCommand::from_degrees(45.0, 10.0), 100.0)
            .unwrap();
        assert!(!ack.clamped);
    }

    #[test]
    fn converges_to_full_bend() {
        for phi_deg in [0.0, 180.0] {
            let mut sim = JointSim::new(SimConfig::default()).unwrap();
            sim.set_target(BendCommand::from_degrees(90.0, phi_deg), 500.0)
                .unwrap();
            let snap = hold_for(&mut sim, 1.5);
            assert!((snap.achieved.theta.to_degrees() - 90.0).abs() < 0.5);
            let dphi = (snap.achieved.phi - phi_deg.to_radians()).abs();
            assert!(dphi < 1e-6 || (dphi - TAU).abs() < 1e-6);
        }
    }

    #[test]
    fn plane_turns_the_short_way() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        sim.set_target(BendCommand::from_degrees(30.0, 350.0), 0.0)
            .unwrap();
        sim.step_default();
        sim.set_target(BendCommand::from_degrees(30.0, 10.0), 200.0)
            .unwrap();
        let mut max_excursion: f64 = 0.0;
        for _ in 0..200 {
            let s = sim.step_default();
            let deg = s.cmd.phi.to_degrees();
            let dist = deg.min(360.0 - deg);
            max_excursion = max_excursion.max(dist);
        }
        assert!(max_excursion <= 10.0 + 1e-9);
    }

    #[test]
    fn ramp_from_straight_does_not_sweep_plane() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        sim.set_target(BendCommand::from_degrees(40.0, 200.0), 100.0)
            .unwrap();
        for _ in 0..100 {
            let s = sim.step_default();
            if s.cmd.theta > 0.0 {
                assert_relative_eq!(s.cmd.phi, 200f64.to_radians(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn latch_freezes_command() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        sim.set_target(BendCommand::from_degrees(90.0, 0.0), 500.0)
            .unwrap();
        hold_for(&mut sim, 0.2);
        sim.latch();
        let frozen = sim.snapshot().dl_cmd;
        let targets: Vec<f64> = sim.motors().iter().map(|m| m.target_angle).collect();
        assert_eq!(
            sim.set_target(BendCommand::default(), 0.0),
            Err(SimError::Latched)
        );
        for _ in 0..300 {
            let s = sim.step_default();
            assert_eq!(s.dl_cmd, frozen);
            assert!(s.latched);
        }
        let after: Vec<f64> = sim.motors().iter().map(|m| m.target_angle).collect();
        assert_eq!(targets, after);

        sim.resume();
        assert!(!sim.is_latched());
        assert!(sim.set_target(BendCommand::default(), 0.0).is_ok());
        sim.latch();
        sim.home();
        assert!(!sim.is_latched());
        assert_eq!(sim.snapshot().achieved.theta, 0.0);
    }

    #[test]
    fn step_rejects_bad_dt() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        assert_eq!(sim.step(0.0), Err(SimError::InvalidDt(0.0)));
        assert_eq!(sim.step(0.5), Err(SimError::InvalidDt(0.5)));
    }

    #[test]
    fn empty_script_empty_trace() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        assert!(sim.run_script(&[]).unwrap().is_empty());
    }

    #[test]
    fn script_reaches_full_bend() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        let trace = sim
            .run_script(&[
                Waypoint::new(0, 0.0, 0.0),
                Waypoint::new(1000, 90.0, 0.0),
                Waypoint::new(2000, 90.0, 0.0),
            ])
            .unwrap();
        assert_eq!(trace.len(), 2000);
        let last = trace.last().unwrap();
        assert!((last.achieved.theta.to_degrees() - 90.0).abs() < 0.5);
        assert_relative_eq!(last.t, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn snapshot_wiring() {
        let mut sim = JointSim::new(SimConfig {
            record_rings: true,
            ..Default::default()
        })
        .unwrap();
        sim.set_target(BendCommand::from_degrees(50.0, 123.0), 300.0)
            .unwrap();
        for _ in 0..600 {
            let s = sim.step_default();
            let (achieved, residual) = deallocate(&s.dl_act, &sim.config().layout);
            assert_eq!(achieved, s.achieved);
            assert_eq!(residual, s.residual);
            let tip = fk_tip(&ArcParams {
                theta: achieved.theta,
                phi: achieved.phi,
                arc_length: 40.0,
            })
            .unwrap();
            assert_eq!(tip, s.tip);
            assert_eq!(s.rings.as_ref().unwrap().last(), Some(&tip));
            let [a, b] = s.dl_cmd.pair_sums();
            assert_eq!((a, b), (0.0, 0.0));
        }
    }
}
