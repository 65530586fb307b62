use serde::{Deserialize, Serialize};

use crate::stats::CompensatedSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "B")]
    Birth,
    #[serde(rename = "D")]
    Death,
    #[serde(rename = "C")]
    Coalescence,
    #[serde(rename = "M")]
    Mutation,
}

impl EventKind {
    pub fn is_up(self) -> bool {
        self == EventKind::Birth
    }

    pub fn delta(self) -> i64 {
        if self.is_up() {
            1
        } else {
            -1
        }
    }
}

/// One jump, serialized as `[time, kind]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, EventKind)", into = "(f64, EventKind)")]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl From<(f64, EventKind)> for Event {
    fn from((time, kind): (f64, EventKind)) -> Self {
        Event { time, kind }
    }
}

impl From<Event> for (f64, EventKind) {
    fn from(e: Event) -> Self {
        (e.time, e.kind)
    }
}

/// A càdlàg ±1 path with marked jumps.
///
/// An absorbed path has `end_time = None` and ends with a jump to 0. A path
/// segment observed up to a fixed time without absorption carries
/// `end_time = Some(t)`. The empty path at 0 has `initial_state = 0` and no
/// events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedTrajectory {
    pub initial_state: u64,
    pub start_time: f64,
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
}

impl MarkedTrajectory {
    /// The path that is already at 0.
    pub fn empty() -> Self {
        Self {
            initial_state: 0,
            start_time: 0.0,
            events: Vec::new(),
            end_time: None,
        }
    }

    /// Number of mutation marks, `M`.
    pub fn mutation_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Mutation).count()
    }

    pub fn mutation_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Mutation)
            .map(|e| e.time)
    }

    /// Time at which the path ends (absorption or observation end).
    pub fn end(&self) -> f64 {
        self.end_time
            .or_else(|| self.events.last().map(|e| e.time))
            .unwrap_or(self.start_time)
    }

    /// Duration `T`.
    pub fn duration(&self) -> f64 {
        self.end() - self.start_time
    }

    /// Holding intervals `(from, to, state)` in time order.
    pub fn holdings(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        let mut state = self.initial_state as i64;
        let mut t = self.start_time;
        let tail = self.end_time.map(|e| Event {
            time: e,
            kind: EventKind::Birth,
        });
        self.events.iter().copied().chain(tail).enumerate().map(move |(i, e)| {
            let out = (t, e.time, state as u64);
            if i < self.events.len() {
                state += e.kind.delta();
            }
            t = e.time;
            out
        })
    }

    /// `L = ∫ X_t dt`, with compensated summation.
    pub fn integral(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for (a, b, k) in self.holdings() {
            s.add(k as f64 * (b - a));
        }
        s.value()
    }

    /// Right-continuous state at time `t` (0 outside the domain).
    pub fn state_at(&self, t: f64) -> u64 {
        if t < self.start_time || t >= self.end() && self.end_time.is_none() {
            return 0;
        }
        let idx = self.events.partition_point(|e| e.time <= t);
        let mut s = self.initial_state as i64;
        for e in &self.events[..idx] {
            s += e.kind.delta();
        }
        s as u64
    }

    /// State just before time `t`.
    pub fn state_before(&self, t: f64) -> u64 {
        if t <= self.start_time {
            return 0;
        }
        let idx = self.events.partition_point(|e| e.time < t);
        let mut s = self.initial_state as i64;
        for e in &self.events[..idx] {
            s += e.kind.delta();
        }
        s as u64
    }

    /// States visited after each event.
    pub fn states_after(&self) -> Vec<u64> {
        let mut s = self.initial_state as i64;
        self.events
            .iter()
            .map(|e| {
                s += e.kind.delta();
                s as u64
            })
            .collect()
    }

    pub fn final_state(&self) -> u64 {
        self.states_after().last().copied().unwrap_or(self.initial_state)
    }

    /// Checks ordering, nonnegativity, absorption and finiteness.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Structure(m));
        if !self.start_time.is_finite() {
            return bad("non-finite start time".into());
        }
        let mut t = self.start_time;
        let mut s = self.initial_state as i64;
        for (i, e) in self.events.iter().enumerate() {
            if !e.time.is_finite() || e.time < t || (i > 0 && e.time <= t) {
                return bad(format!("event {i} at {} is out of order", e.time));
            }
            if s == 0 {
                return bad(format!("event {i} occurs after absorption"));
            }
            if e.kind == EventKind::Coalescence && s < 2 {
                return bad(format!("coalescence from state {s} at event {i}"));
            }
            s += e.kind.delta();
            t = e.time;
        }
        match self.end_time {
            None if s != 0 => bad(format!("absorbed path ends in state {s}")),
            Some(e) if !(e.is_finite() && e >= t) => bad(format!("end time {e} precedes last event")),
            _ => Ok(()),
        }
    }
}
