//! CSV trace output, one row per snapshot.
//!
//! Bend angles are in degrees, displacements in mm, motor angles in radians
//! at the spool, tip position in mm. Numbers use the shortest representation
//! that round-trips, so traces are byte-stable across runs.

use std::io::{self, Write};

use crate::sim::JointSnapshot;

pub const CSV_COLUMNS: [&str; 21] = [
    "t",
    "theta_cmd",
    "phi_cmd",
    "theta_act",
    "phi_act",
    "residual_mm",
    "dl_cmd_0",
    "dl_cmd_1",
    "dl_cmd_2",
    "dl_cmd_3",
    "dl_act_0",
    "dl_act_1",
    "dl_act_2",
    "dl_act_3",
    "motor_angle_0",
    "motor_angle_1",
    "motor_angle_2",
    "motor_angle_3",
    "tip_x",
    "tip_y",
    "tip_z",
];

// same order as CSV_COLUMNS
fn row_values(s: &JointSnapshot) -> Vec<f64> {
    let mut v = Vec::with_capacity(CSV_COLUMNS.len());
    v.extend([
        s.t,
        s.cmd.theta.to_degrees(),
        s.cmd.phi.to_degrees(),
        s.achieved.theta.to_degrees(),
        s.achieved.phi.to_degrees(),
        s.residual,
    ]);
    v.extend(s.dl_cmd.dl);
    v.extend(s.dl_act.dl);
    v.extend(s.motors.iter().map(|m| m.actual_angle));
    v.extend(s.tip.position.iter().copied());
    v
}

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    /// Writes the header row.
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        Ok(Self { out })
    }

    pub fn write(&mut self, snap: &JointSnapshot) -> io::Result<()> {
        let mut first = true;
        for value in row_values(snap) {
            if !first {
                self.out.write_all(b",")?;
            }
            first = false;
            // normalise -0 so mirrored runs print identically
            let value = if value == 0.0 { 0.0 } else { value };
            write!(self.out, "{value}")?;
        }
        self.out.write_all(b"\n")
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Renders a full trace to a string.
pub fn to_csv_string(trace: &[JointSnapshot]) -> String {
    let mut w = TraceWriter::new(Vec::new()).expect("writing to memory");
    for s in trace {
        w.write(s).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{JointSim, SimConfig};

    #[test]
    fn header_is_documented_list() {
        let csv = to_csv_string(&[]);
        assert_eq!(
            csv,
            "t,theta_cmd,phi_cmd,theta_act,phi_act,residual_mm,\
             dl_cmd_0,dl_cmd_1,dl_cmd_2,dl_cmd_3,dl_act_0,dl_act_1,dl_act_2,dl_act_3,\
             motor_angle_0,motor_angle_1,motor_angle_2,motor_angle_3,tip_x,tip_y,tip_z\n"
        );
    }

    #[test]
    fn rows_match_header_width() {
        let mut sim = JointSim::new(SimConfig::default()).unwrap();
        let trace: Vec<_> = (0..5).map(|_| sim.step_default()).collect();
        let csv = to_csv_string(&trace);
        for line in csv.lines() {
            assert_eq!(line.split(',').count(), 21);
        }
        assert!(csv.lines().nth(1).unwrap().starts_with("0.001,0,0,0,0,0,"));
    }
}
