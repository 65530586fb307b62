use rand::Rng;
use rand_distr::Exp1;

use super::{Event, EventKind, MarkedTrajectory, ModelParams};
use crate::analytics::NuCirc;
use crate::stats::CompensatedSum;
use crate::{Error, Result};

pub const DEFAULT_EVENT_CAP: u64 = 10_000_000;

/// One Gillespie step: the chain held `state` on `[time − hold, time)` and
/// then jumped with `kind`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub time: f64,
    pub hold: f64,
    pub state: u64,
    pub kind: EventKind,
}

/// Runs the chain from `x0` until absorption, reporting every step to
/// `observe`. Returns the absorption time.
pub fn simulate_observed<R, F>(
    params: &ModelParams,
    x0: u64,
    rng: &mut R,
    event_cap: Option<u64>,
    mut observe: F,
) -> Result<f64>
where
    R: Rng + ?Sized,
    F: FnMut(&Step),
{
    if x0 == 0 {
        return Err(Error::InvalidArgument("initial state must be >= 1".into()));
    }
    let cap = event_cap.unwrap_or(DEFAULT_EVENT_CAP);
    let mut k = x0;
    let mut t = 0.0;
    let mut n = 0u64;
    while k > 0 {
        if n >= cap {
            return Err(Error::CapExceeded { cap });
        }
        let rho = params.rho_of(k);
        let e: f64 = rng.sample(Exp1);
        let hold = e / (k as f64 * (1.0 + rho));
        t += hold;
        let u = rng.random::<f64>() * (1.0 + rho);
        let kind = if u < 1.0 {
            EventKind::Birth
        } else {
            params.down_kind_at(k, u - 1.0)
        };
        observe(&Step {
            time: t,
            hold,
            state: k,
            kind,
        });
        if kind.is_up() {
            k += 1;
        } else {
            k -= 1;
        }
        n += 1;
    }
    Ok(t)
}

/// Exact simulation from `x0` until absorption in 0.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    params: &ModelParams,
    x0: u64,
    rng: &mut R,
    event_cap: Option<u64>,
) -> Result<MarkedTrajectory> {
    let mut events = Vec::new();
    simulate_observed(params, x0, rng, event_cap, |s| {
        events.push(Event {
            time: s.time,
            kind: s.kind,
        })
    })?;
    Ok(MarkedTrajectory {
        initial_state: x0,
        start_time: 0.0,
        events,
        end_time: None,
    })
}

/// Path statistics gathered without storing the path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathSummary {
    /// Number of mutations `M`.
    pub m: u64,
    /// `L = ∫ X_t dt`.
    pub l: f64,
    /// Absorption time `T`.
    pub t: f64,
    /// `Σ_{u ∈ 𝓜} u`.
    pub mutation_time_sum: f64,
    pub events: u64,
}

pub fn summarize<R: Rng + ?Sized>(params: &ModelParams, x0: u64, rng: &mut R) -> Result<PathSummary> {
    let mut s = PathSummary::default();
    let mut l = CompensatedSum::new();
    let t = simulate_observed(params, x0, rng, None, |st| {
        l.add(st.state as f64 * st.hold);
        s.events += 1;
        if st.kind == EventKind::Mutation {
            s.m += 1;
            s.mutation_time_sum += st.time;
        }
    })?;
    s.t = t;
    s.l = l.value();
    Ok(s)
}

/// Rejection sampler for the law of the path from 1 given `M = m`.
pub fn condition_on_mutations<R: Rng + ?Sized>(
    params: &ModelParams,
    m: usize,
    rng: &mut R,
    max_retries: u64,
) -> Result<MarkedTrajectory> {
    for _ in 0..max_retries {
        let p = simulate_trajectory(params, 1, rng, None)?;
        if p.mutation_count() == m {
            return Ok(p);
        }
    }
    Err(Error::RetriesExhausted {
        what: format!("conditioning on M = {m}"),
        attempts: max_retries,
        accepted: 0,
        rate: 0.0,
    })
}

/// Draws `K ~ ν∘`. Builds the table on each call; use [`NuCirc`] directly to
/// draw repeatedly.
pub fn sample_nu_circ<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<u64> {
    Ok(NuCirc::new(params, 1e-16)?.sample(rng))
}
