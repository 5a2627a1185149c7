//! Command implementations behind the `tjs` binary.
//!
//! Each command writes to the given streams and returns the process exit
//! code: 0 success, 1 I/O or service failure, 2 bad script or out-of-range
//! argument, 3 bad config.

use std::fs;
use std::io::{self, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tjs_core::kinematics::{ik_tip_limited, KinematicsError};
use tjs_core::trace::TraceWriter;
use tjs_core::{
    allocate, fk_tip, parse_script, ArcParams, BendCommand, JointSim, SimConfig, Vector3,
};
use tjs_teleop::ServerConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BAD_INPUT: i32 = 2;
pub const EXIT_BAD_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tjs", version, about = "Four-tendon bending joint twin")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a waypoint script offline and write a CSV trace.
    Run(RunArgs),
    /// Tip position of an arc.
    Fk(FkArgs),
    /// Arc parameters for a tip position.
    Ik(IkArgs),
    /// Tendon displacements for a bend.
    Alloc(AllocArgs),
    /// Start the WebSocket teleoperation service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON waypoint script.
    pub script: PathBuf,
    /// Output CSV path.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Simulation config JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pace the run at wall-clock speed.
    #[arg(long)]
    pub realtime: bool,
}

#[derive(Debug, Args)]
pub struct FkArgs {
    /// Bend angle, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    /// Bend-plane angle, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
    /// Arc length, mm.
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    pub len: f64,
}

#[derive(Debug, Args)]
pub struct IkArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub y: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
    /// Arc length, mm.
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    pub len: f64,
    /// Bend limit, degrees.
    #[arg(long, default_value_t = 90.0)]
    pub theta_max: f64,
}

#[derive(Debug, Args)]
pub struct AllocArgs {
    /// Bend angle, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    /// Bend-plane angle, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
    /// Simulation config JSON (for the tendon layout).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "TJS_PORT", default_value_t = tjs_teleop::server::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: IpAddr,
    #[arg(long, default_value_t = 50.0)]
    pub rate_hz: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn load_config(path: Option<&Path>, err: &mut dyn Write) -> Result<SimConfig, i32> {
    let Some(path) = path else {
        return Ok(SimConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read config {}: {e}", path.display());
        EXIT_BAD_CONFIG
    })?;
    SimConfig::from_json(&text).map_err(|e| {
        let _ = writeln!(err, "error: config {}: {e}", path.display());
        EXIT_BAD_CONFIG
    })
}

fn print_json(out: &mut dyn Write, value: serde_json::Value) -> i32 {
    match writeln!(out, "{value}") {
        Ok(()) => EXIT_OK,
        Err(_) => EXIT_FAILURE,
    }
}

fn out_of_range(err: &mut dyn Write, what: String) -> i32 {
    let _ = writeln!(err, "error: {what}");
    EXIT_BAD_INPUT
}

pub fn run(args: &RunArgs, err: &mut dyn Write) -> i32 {
    let cfg = match load_config(args.config.as_deref(), err) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let text = match fs::read_to_string(&args.script) {
        Ok(text) => text,
        Err(e) => {
            let _ = writeln!(
                err,
                "error: cannot read script {}: {e}",
                args.script.display()
            );
            return EXIT_BAD_INPUT;
        }
    };
    let waypoints = match parse_script(&text) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(err, "error: script {}: {e}", args.script.display());
            return EXIT_BAD_INPUT;
        }
    };
    let mut sim = JointSim::new(cfg).expect("validated config");
    let trace = if args.realtime {
        sim.run_script_paced(&waypoints, wall_clock_pacer())
    } else {
        sim.run_script(&waypoints)
    };
    let trace = match trace {
        Ok(trace) => trace,
        Err(e) => {
            let _ = writeln!(err, "error: script {}: {e}", args.script.display());
            return EXIT_BAD_INPUT;
        }
    };
    match write_trace(&args.out, &trace) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: cannot write {}: {e}", args.out.display());
            EXIT_FAILURE
        }
    }
}

/// Sleeps until the wall clock catches up with the simulated time.
fn wall_clock_pacer() -> impl FnMut(f64) {
    let start = Instant::now();
    move |t| {
        let due = Duration::from_secs_f64(t);
        let elapsed = start.elapsed();
        if due > elapsed {
            std::thread::sleep(due - elapsed);
        }
    }
}

fn write_trace(path: &Path, trace: &[tjs_core::JointSnapshot]) -> io::Result<()> {
    let file = io::BufWriter::new(fs::File::create(path)?);
    let mut w = TraceWriter::new(file)?;
    for snap in trace {
        w.write(snap)?;
    }
    w.into_inner()?;
    Ok(())
}

pub fn fk(args: &FkArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if !(0.0..=180.0).contains(&args.theta) {
        return out_of_range(
            err,
            format!("--theta {} outside [0, 180] degrees", args.theta),
        );
    }
    if !(args.len.is_finite() && args.len > 0.0) {
        return out_of_range(err, format!("--len {} must be > 0 mm", args.len));
    }
    if !args.phi.is_finite() {
        return out_of_range(err, "--phi must be finite".into());
    }
    let arc = ArcParams::new(args.theta.to_radians(), args.phi.to_radians(), args.len)
        .expect("range checked");
    let p = fk_tip(&arc).expect("range checked").position;
    print_json(out, json!({"x": p.x, "y": p.y, "z": p.z}))
}

pub fn ik(args: &IkArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if !(0.0..=180.0).contains(&args.theta_max) {
        return out_of_range(
            err,
            format!("--theta-max {} outside [0, 180] degrees", args.theta_max),
        );
    }
    let target = Vector3::new(args.x, args.y, args.z);
    match ik_tip_limited(&target, args.len, args.theta_max.to_radians()) {
        Ok(sol) => print_json(
            out,
            json!({
                "theta_deg": sol.arc.theta.to_degrees(),
                "phi_deg": sol.arc.phi.to_degrees(),
                "arc_length": sol.arc.arc_length,
                "residual_mm": sol.residual,
            }),
        ),
        Err(KinematicsError::Unreachable(why)) => out_of_range(
            err,
            format!(
                "unreachable (theta_max {} deg, z >= 0): {why}",
                args.theta_max
            ),
        ),
        Err(e) => out_of_range(err, e.to_string()),
    }
}

pub fn alloc(args: &AllocArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match load_config(args.config.as_deref(), err) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let max_deg = cfg.theta_max.to_degrees();
    if !(args.theta >= 0.0 && args.theta <= max_deg) {
        return out_of_range(
            err,
            format!("--theta {} outside [0, {max_deg}] degrees", args.theta),
        );
    }
    if !args.phi.is_finite() {
        return out_of_range(err, "--phi must be finite".into());
    }
    match allocate(
        &BendCommand::from_degrees(args.theta, args.phi),
        &cfg.layout,
    ) {
        Ok(dl) => print_json(out, json!({ "dl": dl.dl })),
        Err(e) => out_of_range(err, e.to_string()),
    }
}

pub fn serve(args: &ServeArgs, err: &mut dyn Write) -> i32 {
    let sim = match load_config(args.config.as_deref(), err) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let cfg = ServerConfig {
        bind: args.bind,
        port: args.port,
        rate_hz: args.rate_hz,
        sim,
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    match runtime.block_on(tjs_teleop::serve(cfg)) {
        Ok(()) => EXIT_OK,
        Err(tjs_teleop::ServeError::Config(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_BAD_CONFIG
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Dispatches a parsed command line.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Run(args) => run(args, err),
        Command::Fk(args) => fk(args, out, err),
        Command::Ik(args) => ik(args, out, err),
        Command::Alloc(args) => alloc(args, out, err),
        Command::Serve(args) => serve(args, err),
    }
}
