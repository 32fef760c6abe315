//! Versioned text snapshot of the driver state between iterations.
//!
//! ```text
//! attractor-checkpoint 1
//! t <next iteration>
//! iterations <mapreduce> <fallback>
//! edges <m>
//! <u> <v> <distance> <window>
//! ```
//!
//! Vertex ids are internal. Distances use the shortest round-trip decimal
//! form, so a resumed run continues bit-for-bit.

use std::io::{BufRead, Write};

use crate::error::CheckpointError;
use crate::graph::Graph;
use crate::window::SlidingWindow;

use super::EngineState;

const HEADER: &str = "attractor-checkpoint 1";

pub fn write_checkpoint<W: Write>(mut out: W, g: &Graph, state: &EngineState) -> Result<(), CheckpointError> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "t {}", state.t)?;
    writeln!(out, "iterations {} {}", state.mr_iterations, state.fallback_iterations)?;
    writeln!(out, "edges {}", g.edge_count())?;
    for (i, e) in g.edges().iter().enumerate() {
        writeln!(out, "{} {} {} {}", e.u, e.v, state.distances[i], state.windows[i])?;
    }
    out.flush()?;
    Ok(())
}

fn field(line: Option<(usize, String)>, name: &str) -> Result<(usize, Vec<String>), CheckpointError> {
    let (no, text) = line.ok_or_else(|| CheckpointError::Parse {
        line: 0,
        message: format!("missing {name} line"),
    })?;
    let mut parts = text.split_whitespace().map(String::from);
    if parts.next().as_deref() != Some(name) {
        return Err(CheckpointError::Parse {
            line: no,
            message: format!("expected {name}"),
        });
    }
    Ok((no, parts.collect()))
}

fn number<T: std::str::FromStr>(s: Option<&String>, line: usize) -> Result<T, CheckpointError> {
    s.and_then(|s| s.parse().ok()).ok_or_else(|| CheckpointError::Parse {
        line,
        message: "bad number".into(),
    })
}

pub fn read_checkpoint<R: BufRead>(reader: R, g: &Graph) -> Result<EngineState, CheckpointError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
    let mut next = || lines.next().transpose();

    let header = next()?.map(|(_, l)| l).unwrap_or_default();
    if header.trim() != HEADER {
        return Err(CheckpointError::Header(header));
    }
    let (no, t) = field(next()?, "t")?;
    let t = number(t.first(), no)?;
    let (no, it) = field(next()?, "iterations")?;
    let mr_iterations = number(it.first(), no)?;
    let fallback_iterations = number(it.get(1), no)?;
    let (no, m) = field(next()?, "edges")?;
    let m: usize = number(m.first(), no)?;
    if m != g.edge_count() {
        return Err(CheckpointError::Mismatch(format!(
            "checkpoint has {m} edges, graph has {}",
            g.edge_count()
        )));
    }

    let mut distances = Vec::with_capacity(m);
    let mut windows = Vec::with_capacity(m);
    for e in g.edges() {
        let (no, line) = next()?.ok_or_else(|| CheckpointError::Parse {
            line: 0,
            message: "truncated edge records".into(),
        })?;
        let mut parts = line.splitn(4, ' ');
        let u: u32 = number(parts.next().map(String::from).as_ref(), no)?;
        let v: u32 = number(parts.next().map(String::from).as_ref(), no)?;
        if (u, v) != (e.u, e.v) {
            return Err(CheckpointError::Mismatch(format!(
                "line {no}: edge ({u},{v}) where ({},{}) was expected",
                e.u, e.v
            )));
        }
        let d: f64 = number(parts.next().map(String::from).as_ref(), no)?;
        let window: SlidingWindow = parts
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|message| CheckpointError::Parse { line: no, message })?;
        distances.push(d);
        windows.push(window);
    }
    Ok(EngineState {
        t,
        distances,
        windows,
        mr_iterations,
        fallback_iterations,
    })
}
