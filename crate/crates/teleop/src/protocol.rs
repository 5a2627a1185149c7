//! JSON text frames exchanged over the teleoperation socket.
//!
//! Every frame is one JSON object with a `"type"` tag. Angles are in
//! degrees, durations in milliseconds, lengths in mm.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use tjs_core::JointSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    BadFrame,
    UnknownType,
    BadValue,
    EstopLatched,
    UnexpectedMessage,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCode::BadFrame => "bad-frame",
            ErrorCode::UnknownType => "unknown-type",
            ErrorCode::BadValue => "bad-value",
            ErrorCode::EstopLatched => "estop-latched",
            ErrorCode::UnexpectedMessage => "unexpected-message",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorFrame {
    pub target_deg: f64,
    pub actual_deg: f64,
    pub velocity_dps: f64,
    pub encoder_count: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TipFrame {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Row-major tip orientation.
    pub rot: [[f64; 3]; 3],
}

/// Joint state as streamed to clients (the ring chain is left out).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFrame {
    /// Simulated time, s.
    pub t: f64,
    pub theta_cmd: f64,
    pub phi_cmd: f64,
    pub theta_act: f64,
    pub phi_act: f64,
    pub residual_mm: f64,
    pub dl_cmd: [f64; 4],
    pub dl_act: [f64; 4],
    pub motors: [MotorFrame; 4],
    pub tip: TipFrame,
    pub estop: bool,
}

impl From<&JointSnapshot> for StateFrame {
    fn from(s: &JointSnapshot) -> Self {
        let r = &s.tip.orientation;
        Self {
            t: s.t,
            theta_cmd: s.cmd.theta.to_degrees(),
            phi_cmd: s.cmd.phi.to_degrees(),
            theta_act: s.achieved.theta.to_degrees(),
            phi_act: s.achieved.phi.to_degrees(),
            residual_mm: s.residual,
            dl_cmd: s.dl_cmd.dl,
            dl_act: s.dl_act.dl,
            motors: s.motors.map(|m| MotorFrame {
                target_deg: m.target_angle.to_degrees(),
                actual_deg: m.actual_angle.to_degrees(),
                velocity_dps: m.velocity.to_degrees(),
                encoder_count: m.encoder_count,
            }),
            tip: TipFrame {
                x: s.tip.position.x,
                y: s.tip.position.y,
                z: s.tip.position.z,
                rot: [0, 1, 2].map(|i| [r[(i, 0)], r[(i, 1)], r[(i, 2)]]),
            },
            estop: s.latched,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum TeleopMessage {
    // client -> server
    SetTarget {
        theta_deg: f64,
        phi_deg: f64,
        ramp_ms: f64,
    },
    Home,
    Estop,
    /// Clears an e-stop latch and holds the reached bend.
    Resume,
    StreamConfig {
        rate_hz: f64,
    },
    // server -> client
    State(StateFrame),
    Ack {
        #[serde(rename = "for")]
        for_type: String,
        clamped: bool,
    },
    Error {
        code: ErrorCode,
        detail: String,
    },
}

/// Every `"type"` tag understood by [`decode`].
pub const MESSAGE_TYPES: [&str; 8] = [
    "set_target",
    "home",
    "estop",
    "resume",
    "stream_config",
    "state",
    "ack",
    "error",
];

impl TeleopMessage {
    pub fn type_tag(&self) -> &'static str {
        match self {
            TeleopMessage::SetTarget { .. } => "set_target",
            TeleopMessage::Home => "home",
            TeleopMessage::Estop => "estop",
            TeleopMessage::Resume => "resume",
            TeleopMessage::StreamConfig { .. } => "stream_config",
            TeleopMessage::State(_) => "state",
            TeleopMessage::Ack { .. } => "ack",
            TeleopMessage::Error { .. } => "error",
        }
    }

    pub fn is_client_message(&self) -> bool {
        matches!(
            self,
            TeleopMessage::SetTarget { .. }
                | TeleopMessage::Home
                | TeleopMessage::Estop
                | TeleopMessage::Resume
                | TeleopMessage::StreamConfig { .. }
        )
    }

    pub fn ack(for_type: &str, clamped: bool) -> Self {
        TeleopMessage::Ack {
            for_type: for_type.to_string(),
            clamped,
        }
    }

    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        TeleopMessage::Error {
            code,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}: {detail}", code.as_str())]
pub struct DecodeError {
    pub code: ErrorCode,
    pub detail: String,
}

impl From<DecodeError> for TeleopMessage {
    fn from(e: DecodeError) -> Self {
        TeleopMessage::error(e.code, e.detail)
    }
}

/// Single-line JSON text for a message.
pub fn encode(msg: &TeleopMessage) -> String {
    serde_json::to_string(msg).expect("messages always serialize")
}

pub fn decode(text: &str) -> Result<TeleopMessage, DecodeError> {
    let bad_frame = |detail: String| DecodeError {
        code: ErrorCode::BadFrame,
        detail,
    };
    let value: Value = serde_json::from_str(text)
        .map_err(|e| bad_frame(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let tag = match value.get("type") {
        Some(Value::String(tag)) => tag.as_str(),
        Some(_) => return Err(bad_frame("\"type\" must be a string".into())),
        None if value.is_object() => return Err(bad_frame("missing \"type\"".into())),
        None => return Err(bad_frame("frame must be a JSON object".into())),
    };
    if !MESSAGE_TYPES.contains(&tag) {
        return Err(DecodeError {
            code: ErrorCode::UnknownType,
            detail: format!("unknown message type {tag:?}"),
        });
    }
    let tag = tag.to_string();
    serde_json::from_value(value).map_err(|e| bad_frame(format!("{tag}: {e}")))
}
