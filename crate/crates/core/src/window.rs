//! Sliding-window convergence forcing.
//!
//! Every live edge keeps the direction of its last `s` distance changes. Once
//! `s` iterations have elapsed, an edge whose latest change agrees with at
//! least `tau * s` of the recorded changes is snapped to 0 or 1.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPolicy {
    /// Window length; 0 disables forcing.
    pub size: usize,
    pub tau: f64,
}

impl WindowPolicy {
    pub fn new(size: usize, tau: f64) -> Result<Self, ConfigError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(ConfigError::Tau(tau));
        }
        Ok(WindowPolicy { size, tau })
    }

    pub fn disabled() -> Self {
        WindowPolicy { size: 0, tau: 0.5 }
    }

    pub fn is_enabled(&self) -> bool {
        self.size > 0
    }
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy { size: 15, tau: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    ForceZero,
    ForceOne,
    NoDecision,
}

/// Circular buffer of +1 (increase) / -1 (decrease) statuses; 0 marks an
/// empty slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlidingWindow {
    statuses: Vec<i8>,
    observed: u64,
    last: Option<usize>,
}

impl SlidingWindow {
    pub fn new(size: usize) -> Self {
        SlidingWindow {
            statuses: vec![0; size],
            observed: 0,
            last: None,
        }
    }

    pub fn size(&self) -> usize {
        self.statuses.len()
    }

    pub fn statuses(&self) -> &[i8] {
        &self.statuses
    }

    pub fn observed(&self) -> u64 {
        self.observed
    }

    /// Records the status of iteration `t` at slot `(t + 1) mod s`.
    pub fn record(&mut self, increased: bool, t: u64) {
        if self.statuses.is_empty() {
            return;
        }
        let index = ((t + 1) % self.statuses.len() as u64) as usize;
        self.statuses[index] = if increased { 1 } else { -1 };
        self.observed += 1;
        self.last = Some(index);
    }

    pub fn count(&self, status: i8) -> usize {
        self.statuses.iter().filter(|&&s| s == status).count()
    }

    /// Window decision for iteration `t`, taken after `record`.
    pub fn decide(&self, policy: &WindowPolicy, t: u64) -> Decision {
        let s = policy.size;
        if s == 0 || self.statuses.len() != s || t + 1 < s as u64 {
            return Decision::NoDecision;
        }
        let Some(last) = self.last else {
            return Decision::NoDecision;
        };
        let threshold = policy.tau * s as f64;
        match self.statuses[last] {
            1 if self.count(1) as f64 >= threshold => Decision::ForceOne,
            -1 if self.count(-1) as f64 >= threshold => Decision::ForceZero,
            _ => Decision::NoDecision,
        }
    }
}

/// One distance update for a live edge: subtract `delta`, record the trend,
/// apply the window decision, then clamp to `[0, 1]`. A zero `delta` leaves
/// the edge and its window untouched.
pub fn advance_distance(
    current: f64,
    delta: f64,
    window: &mut SlidingWindow,
    policy: &WindowPolicy,
    t: u64,
) -> f64 {
    if delta == 0.0 {
        return current;
    }
    let mut next = current - delta;
    if policy.is_enabled() {
        window.record(next > current, t);
        match window.decide(policy, t) {
            Decision::ForceOne => next = 1.0,
            Decision::ForceZero => next = 0.0,
            Decision::NoDecision => {}
        }
    }
    next.clamp(0.0, 1.0)
}

/// Text form: one character per slot (`+`, `-`, `.` for empty), a space, the
/// observed count, a space, and the last written slot (`-` if none).
impl fmt::Display for SlidingWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.statuses.is_empty() {
            f.write_str("~")?;
        }
        for &s in &self.statuses {
            f.write_str(match s {
                1 => "+",
                -1 => "-",
                _ => ".",
            })?;
        }
        match self.last {
            Some(i) => write!(f, " {} {}", self.observed, i),
            None => write!(f, " {} -", self.observed),
        }
    }
}

impl FromStr for SlidingWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let slots = parts.next().ok_or("missing window slots")?;
        let observed = parts
            .next()
            .ok_or("missing observed count")?
            .parse::<u64>()
            .map_err(|e| e.to_string())?;
        let last = parts.next().ok_or("missing last slot")?;
        if parts.next().is_some() {
            return Err("trailing tokens in window record".into());
        }
        let statuses = if slots == "~" {
            Vec::new()
        } else {
            slots
                .chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    '.' => Ok(0),
                    other => Err(format!("bad window status {other:?}")),
                })
                .collect::<Result<Vec<i8>, _>>()?
        };
        let last = match last {
            "-" => None,
            x => {
                let i = x.parse::<usize>().map_err(|e| e.to_string())?;
                if i >= statuses.len() {
                    return Err(format!("last slot {i} out of range"));
                }
                Some(i)
            }
        };
        Ok(SlidingWindow {
            statuses,
            observed,
            last,
        })
    }
}
