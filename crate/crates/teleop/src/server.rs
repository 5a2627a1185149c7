//! WebSocket transport and the real-time loop.
//!
//! One task owns the [`Controller`]. Client sessions forward decoded
//! commands to it through an ordered queue and receive their ack or error on
//! a private channel; state frames are encoded once and broadcast to every
//! session, so all clients see identical payloads.

use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use thiserror::Error;
use tjs_core::SimConfig;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, watch};
use tokio::time::{Instant, MissedTickBehavior};

use crate::controller::{Controller, ControllerError, DEFAULT_RATE_HZ};
use crate::protocol::{decode, encode, ErrorCode, TeleopMessage};

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: IpAddr,
    pub port: u16,
    pub rate_hz: f64,
    pub sim: SimConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            rate_hz: DEFAULT_RATE_HZ,
            sim: SimConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ControllerError),
    #[error("server i/o: {0}")]
    Io(#[from] std::io::Error),
}

struct Command {
    msg: TeleopMessage,
    reply: mpsc::UnboundedSender<String>,
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::UnboundedSender<Command>,
    frames: broadcast::Sender<Arc<str>>,
    shutdown: watch::Receiver<bool>,
}

/// A bound, not yet running server.
pub struct Server {
    listener: TcpListener,
    controller: Controller,
}

impl Server {
    pub async fn bind(cfg: &ServerConfig) -> Result<Self, ServeError> {
        let controller = Controller::new(cfg.sim, cfg.rate_hz)?;
        let addr = SocketAddr::new(cfg.bind, cfg.port);
        let listener = TcpListener::bind(addr)
            .await
            .map_err(|source| ServeError::Bind { addr, source })?;
        Ok(Self {
            listener,
            controller,
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until `shutdown` resolves.
    pub async fn run(
        self,
        shutdown: impl Future<Output = ()> + Send + 'static,
    ) -> Result<(), ServeError> {
        let (cmd_tx, cmd_rx) = mpsc::unbounded_channel();
        let (frame_tx, _) = broadcast::channel(256);
        let (stop_tx, stop_rx) = watch::channel(false);

        let sim_loop = tokio::spawn(run_loop(
            self.controller,
            cmd_rx,
            frame_tx.clone(),
            stop_rx.clone(),
        ));

        let state = AppState {
            commands: cmd_tx,
            frames: frame_tx,
            shutdown: stop_rx,
        };
        let app = Router::new()
            .route("/ws", get(upgrade))
            .route("/", get(upgrade))
            .with_state(state);

        tracing::info!(addr = %self.listener.local_addr()?, "teleop service listening");
        let result = axum::serve(self.listener, app)
            .with_graceful_shutdown(async move {
                shutdown.await;
                let _ = stop_tx.send(true);
            })
            .await;
        let _ = sim_loop.await;
        result.map_err(ServeError::Io)
    }
}

/// Binds and serves until Ctrl-C.
pub async fn serve(cfg: ServerConfig) -> Result<(), ServeError> {
    let server = Server::bind(&cfg).await?;
    server
        .run(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn run_loop(
    mut controller: Controller,
    mut commands: mpsc::UnboundedReceiver<Command>,
    frames: broadcast::Sender<Arc<str>>,
    mut shutdown: watch::Receiver<bool>,
) {
    let dt = controller.dt();
    let start = Instant::now();
    let mut ticker = tokio::time::interval(Duration::from_millis(1));
    ticker.set_missed_tick_behavior(MissedTickBehavior::Skip);
    loop {
        tokio::select! {
            _ = ticker.tick() => {}
            _ = shutdown.changed() => break,
        }
        while let Ok(cmd) = commands.try_recv() {
            let reply = controller.handle(&cmd.msg);
            let _ = cmd.reply.send(encode(&reply));
        }
        // catch up to wall clock; every due step is simulated
        let due = (start.elapsed().as_secs_f64() / dt).floor() as u64;
        while controller.steps() < due {
            if let Some(frame) = controller.step() {
                let text: Arc<str> = encode(&TeleopMessage::State(frame)).into();
                // no receivers is fine
                let _ = frames.send(text);
            }
        }
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| session(socket, state))
}

async fn session(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = state.frames.subscribe();
    let mut shutdown = state.shutdown.clone();
    let (reply_tx, mut replies) = mpsc::unbounded_channel::<String>();

    loop {
        let outgoing: String = tokio::select! {
            incoming = stream.next() => match incoming {
                Some(Ok(Message::Text(text))) => match decode(text.as_str()) {
                    Ok(msg) => {
                        let cmd = Command { msg, reply: reply_tx.clone() };
                        if state.commands.send(cmd).is_err() {
                            break;
                        }
                        continue;
                    }
                    Err(e) => encode(&e.into()),
                },
                Some(Ok(Message::Binary(_))) => encode(&TeleopMessage::error(
                    ErrorCode::BadFrame,
                    "binary frames are not supported; send JSON text",
                )),
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => continue,
            },
            Some(reply) = replies.recv() => reply,
            frame = frames.recv() => match frame {
                Ok(text) => text.to_string(),
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::debug!(skipped = n, "slow client skipped state frames");
                    continue;
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            _ = shutdown.changed() => break,
        };
        if sink.send(Message::Text(outgoing.into())).await.is_err() {
            break;
        }
    }
    let _ = sink.close().await;
}
