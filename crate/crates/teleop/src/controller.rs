//! Synchronous core of the service loop: owns the simulation, applies client
//! commands and decides when a state frame is due.
//!
//! Frames are emitted on simulation time, one every `round(1 / (rate * dt))`
//! steps, so the stream rate is exact however the wall-clock pacing jitters.

use thiserror::Error;
use tjs_core::{BendCommand, JointSim, SimConfig, SimError};

use crate::protocol::{ErrorCode, StateFrame, TeleopMessage};

pub const DEFAULT_RATE_HZ: f64 = 50.0;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("stream rate {0} Hz must be in (0, {1}] for this step size")]
    BadRate(f64, f64),
}

pub struct Controller {
    sim: JointSim,
    steps_per_frame: u64,
    steps: u64,
}

fn steps_per_frame(rate_hz: f64, dt: f64) -> Result<u64, ControllerError> {
    let max = 1.0 / dt;
    if !(rate_hz.is_finite() && rate_hz > 0.0 && rate_hz <= max * (1.0 + 1e-9)) {
        return Err(ControllerError::BadRate(rate_hz, max));
    }
    Ok(((1.0 / (rate_hz * dt)).round() as u64).max(1))
}

impl Controller {
    pub fn new(cfg: SimConfig, rate_hz: f64) -> Result<Self, ControllerError> {
        let sim = JointSim::new(cfg)?;
        let steps_per_frame = steps_per_frame(rate_hz, cfg.dt)?;
        Ok(Self {
            sim,
            steps_per_frame,
            steps: 0,
        })
    }

    pub fn sim(&self) -> &JointSim {
        &self.sim
    }

    pub fn dt(&self) -> f64 {
        self.sim.config().dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Stream rate actually produced, Hz.
    pub fn frame_rate(&self) -> f64 {
        1.0 / (self.steps_per_frame as f64 * self.dt())
    }

    pub fn state_frame(&self) -> StateFrame {
        StateFrame::from(&self.sim.snapshot())
    }

    /// Applies one client message and returns its ack or error.
    pub fn handle(&mut self, msg: &TeleopMessage) -> TeleopMessage {
        let tag = msg.type_tag();
        match *msg {
            TeleopMessage::SetTarget {
                theta_deg,
                phi_deg,
                ramp_ms,
            } => {
                if !(theta_deg.is_finite() && phi_deg.is_finite()) {
                    return TeleopMessage::error(ErrorCode::BadValue, "angles must be finite");
                }
                let cmd = BendCommand::from_degrees(theta_deg, phi_deg);
                match self.sim.set_target(cmd, ramp_ms) {
                    Ok(ack) => TeleopMessage::ack(tag, ack.clamped),
                    Err(SimError::Latched) => TeleopMessage::error(
                        ErrorCode::EstopLatched,
                        "e-stop latched; send home or resume first",
                    ),
                    Err(e) => TeleopMessage::error(ErrorCode::BadValue, e.to_string()),
                }
            }
            TeleopMessage::Home => {
                self.sim.home();
                TeleopMessage::ack(tag, false)
            }
            TeleopMessage::Estop => {
                self.sim.latch();
                TeleopMessage::ack(tag, false)
            }
            TeleopMessage::Resume => {
                self.sim.resume();
                TeleopMessage::ack(tag, false)
            }
            TeleopMessage::StreamConfig { rate_hz } => match steps_per_frame(rate_hz, self.dt()) {
                Ok(n) => {
                    self.steps_per_frame = n;
                    TeleopMessage::ack(tag, false)
                }
                Err(e) => TeleopMessage::error(ErrorCode::BadValue, e.to_string()),
            },
            TeleopMessage::State(_) | TeleopMessage::Ack { .. } | TeleopMessage::Error { .. } => {
                TeleopMessage::error(
                    ErrorCode::UnexpectedMessage,
                    format!("{tag} is a server-to-client message"),
                )
            }
        }
    }

    /// One simulation step; returns a frame when one is due.
    pub fn step(&mut self) -> Option<StateFrame> {
        let snap = self.sim.step_default();
        self.steps += 1;
        self.steps
            .is_multiple_of(self.steps_per_frame)
            .then(|| StateFrame::from(&snap))
    }

    /// Steps until the next frame is emitted.
    pub fn next_frame(&mut self) -> StateFrame {
        loop {
            if let Some(frame) = self.step() {
                return frame;
            }
        }
    }
}
