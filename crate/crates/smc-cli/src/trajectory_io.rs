//! Trajectory CSV format.
//!
//! Header `t,agent_id,x,y,u_norm,metric`, then one row per recorded
//! sample per agent, ordered by `(t, agent_id)`. Floats are written
//! with 17 significant digits so a read-back reproduces every bit;
//! the shared per-sample metric is repeated on each agent row.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use smc_core::sim::Trajectory;
use smc_core::Vec2;

pub const HEADER: &str = "t,agent_id,x,y,u_norm,metric";

#[derive(Debug)]
pub enum TrajectoryReadError {
    Io(io::Error),
    Format { line: usize, msg: String },
    Core(smc_core::Error),
}

impl std::fmt::Display for TrajectoryReadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrajectoryReadError::Io(e) => write!(f, "trajectory io: {e}"),
            TrajectoryReadError::Format { line, msg } => {
                write!(f, "trajectory format, line {line}: {msg}")
            }
            TrajectoryReadError::Core(e) => write!(f, "trajectory rejected: {e}"),
        }
    }
}

impl std::error::Error for TrajectoryReadError {}

impl From<io::Error> for TrajectoryReadError {
    fn from(e: io::Error) -> Self {
        TrajectoryReadError::Io(e)
    }
}

impl From<smc_core::Error> for TrajectoryReadError {
    fn from(e: smc_core::Error) -> Self {
        TrajectoryReadError::Core(e)
    }
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 + traj.len() * traj.agent_count() * 96);
    out.push_str(HEADER);
    out.push('\n');
    for (i, (&t, &metric)) in traj.times().iter().zip(traj.metrics()).enumerate() {
        for agent in 0..traj.agent_count() {
            let p = traj.position(i, agent);
            let u = traj.control_norms(i)[agent];
            writeln!(
                out,
                "{t:.16e},{agent},{x:.16e},{y:.16e},{u:.16e},{metric:.16e}",
                x = p.x,
                y = p.y,
            )
            .expect("string write cannot fail");
        }
    }
    out
}

pub fn write_trajectory(traj: &Trajectory, path: &Path) -> io::Result<()> {
    fs::write(path, trajectory_to_csv(traj))
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory, TrajectoryReadError> {
    parse_trajectory(&fs::read_to_string(path)?)
}

/// Inverse of [`trajectory_to_csv`]. The step length is not stored in
/// the file; it is recovered as the smallest positive gap between
/// consecutive samples, which is exact for unstrided recordings and
/// otherwise yields the effective sample spacing.
pub fn parse_trajectory(text: &str) -> Result<Trajectory, TrajectoryReadError> {
    let bad = |line: usize, msg: String| TrajectoryReadError::Format { line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == HEADER => {}
        Some((_, h)) => return Err(bad(1, format!("expected header {HEADER:?}, got {h:?}"))),
        None => return Err(bad(1, "empty file".to_string())),
    }

    struct Row {
        t: f64,
        agent: usize,
        p: Vec2,
        u: f64,
        metric: f64,
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad(line_no, format!("expected 6 fields, got {}", fields.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64, TrajectoryReadError> {
            s.parse::<f64>().map_err(|e| bad(line_no, format!("bad {what} {s:?}: {e}")))
        };
        let agent = fields[1]
            .parse::<usize>()
            .map_err(|e| bad(line_no, format!("bad agent_id {:?}: {e}", fields[1])))?;
        rows.push(Row {
            t: num(fields[0], "t")?,
            agent,
            p: Vec2::new(num(fields[2], "x")?, num(fields[3], "y")?),
            u: num(fields[4], "u_norm")?,
            metric: num(fields[5], "metric")?,
        });
    }
    if rows.is_empty() {
        return Err(bad(2, "no data rows".to_string()));
    }

    let agent_count = rows.iter().take_while(|r| r.t.to_bits() == rows[0].t.to_bits()).count();
    if rows.len() % agent_count != 0 {
        return Err(bad(
            rows.len() + 1,
            format!("row count {} is not a multiple of agent count {agent_count}", rows.len()),
        ));
    }

    let samples = rows.len() / agent_count;
    let mut times = Vec::with_capacity(samples);
    let mut positions = Vec::with_capacity(samples);
    let mut control_norms = Vec::with_capacity(samples);
    let mut metrics = Vec::with_capacity(samples);
    for (s, block) in rows.chunks(agent_count).enumerate() {
        let first = &block[0];
        let mut ps = Vec::with_capacity(agent_count);
        let mut us = Vec::with_capacity(agent_count);
        for (a, row) in block.iter().enumerate() {
            let line_no = 2 + s * agent_count + a;
            if row.agent != a {
                return Err(bad(line_no, format!("expected agent_id {a}, got {}", row.agent)));
            }
            if row.t.to_bits() != first.t.to_bits() {
                return Err(bad(line_no, "sample block mixes times".to_string()));
            }
            if row.metric.to_bits() != first.metric.to_bits() {
                return Err(bad(line_no, "sample block mixes metrics".to_string()));
            }
            ps.push(row.p);
            us.push(row.u);
        }
        times.push(first.t);
        positions.push(ps);
        control_norms.push(us);
        metrics.push(first.metric);
    }

    let mut dt = f64::INFINITY;
    for w in times.windows(2) {
        let gap = w[1] - w[0];
        if gap > 0.0 && gap < dt {
            dt = gap;
        }
    }
    if !dt.is_finite() {
        dt = if times[0] > 0.0 { times[0] } else { 1.0 };
    }

    Ok(Trajectory::from_parts(dt, times, positions, control_norms, metrics)?)
}
