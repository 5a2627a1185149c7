//! Teleoperation front end for the joint simulation: a WebSocket service that
//! runs the simulation in real time, applies bend commands from any client
//! and broadcasts the joint state to all of them.

pub mod controller;
pub mod protocol;
pub mod server;

pub use controller::{Controller, ControllerError};
pub use protocol::{decode, encode, DecodeError, ErrorCode, StateFrame, TeleopMessage};
pub use server::{serve, ServeError, Server, ServerConfig};
