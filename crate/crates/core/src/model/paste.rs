use rand::Rng;

use super::{simulate_trajectory, Event, EventKind, MarkedTrajectory, ModelParams};
use crate::analytics::NuCirc;
use crate::{Error, Result};

/// Back-to-back pasting `f ≀ g`: the left-limit time reversal of `f` on
/// `[−T_f, 0)` followed by `g` on `[0, T_g)`.
///
/// Reversal turns the down-jumps of `f` into births and its births into
/// down-jumps, so marks cannot be carried over verbatim. `marker` is called
/// with the pre-jump state of every reversed down-jump and returns its kind.
/// A jump at time 0 is emitted when `g(0) ≠ f(0)`: a birth if `g(0) = f(0)+1`,
/// otherwise a down-jump of kind `junction`.
pub fn paste_back_to_back<F>(
    f: &MarkedTrajectory,
    g: &MarkedTrajectory,
    junction: EventKind,
    mut marker: F,
) -> Result<MarkedTrajectory>
where
    F: FnMut(u64) -> EventKind,
{
    if f.initial_state == 0 {
        return Err(Error::InvalidArgument("cannot reverse the empty path".into()));
    }
    let t0 = f.start_time;
    let (body, start_state, t_f) = match f.end_time {
        None => {
            let n = f.events.len();
            if n == 0 {
                return Err(Error::Structure("absorbed path without events".into()));
            }
            (&f.events[..n - 1], 1u64, f.events[n - 1].time - t0)
        }
        Some(e) => (&f.events[..], f.final_state(), e - t0),
    };
    let mut events = Vec::with_capacity(f.events.len() + g.events.len() + 1);
    // Walk f backwards; `state` is f just after each event.
    let mut state = start_state;
    for e in body.iter().rev() {
        let time = -(e.time - t0);
        let kind = if e.kind.is_up() {
            let k = marker(state);
            if k.is_up() {
                return Err(Error::InvalidArgument("marker returned a birth".into()));
            }
            k
        } else {
            EventKind::Birth
        };
        events.push(Event { time, kind });
        state = if e.kind.is_up() { state - 1 } else { state + 1 };
    }
    debug_assert_eq!(state, f.initial_state);
    let f0 = f.initial_state;
    let g0 = g.initial_state;
    if g0 == f0 + 1 {
        events.push(Event {
            time: 0.0,
            kind: EventKind::Birth,
        });
    } else if g0 + 1 == f0 {
        if junction.is_up() {
            return Err(Error::InvalidArgument("junction down-jump cannot be a birth".into()));
        }
        events.push(Event {
            time: 0.0,
            kind: junction,
        });
    } else if g0 != f0 {
        return Err(Error::InvalidArgument(format!(
            "cannot paste: f(0) = {f0}, g(0) = {g0} differ by more than one"
        )));
    }
    let s0 = g.start_time;
    events.extend(g.events.iter().map(|e| Event {
        time: e.time - s0,
        kind: e.kind,
    }));
    let end_time = g.end_time.map(|e| e - s0);
    let end_time = if g0 == 0 && g.events.is_empty() { None } else { end_time };
    let out = MarkedTrajectory {
        initial_state: 1,
        start_time: -t_f,
        events,
        end_time,
    };
    out.validate()?;
    Ok(out)
}

/// Pasting with reversed down-jumps marked by the model's kind probabilities.
pub fn paste_with_params<R: Rng + ?Sized>(
    params: &ModelParams,
    f: &MarkedTrajectory,
    g: &MarkedTrajectory,
    junction: EventKind,
    rng: &mut R,
) -> Result<MarkedTrajectory> {
    paste_back_to_back(f, g, junction, |k| params.draw_down_kind(k, rng))
}

/// Sampler for the path seen from a uniformly chosen mutation: `K ~ ν∘`,
/// `X′` from `K`, `X″` from `K−1`, pasted with a mutation at time 0.
#[derive(Debug, Clone)]
pub struct XmSampler {
    pub params: ModelParams,
    pub nu: NuCirc,
}

impl XmSampler {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            nu: NuCirc::new(params, 1e-16)?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MarkedTrajectory> {
        let k = self.nu.sample(rng);
        let x1 = simulate_trajectory(&self.params, k, rng, None)?;
        let x2 = if k == 1 {
            MarkedTrajectory::empty()
        } else {
            simulate_trajectory(&self.params, k - 1, rng, None)?
        };
        paste_with_params(&self.params, &x1, &x2, EventKind::Mutation, rng)
    }
}

pub fn sample_x_mut<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<MarkedTrajectory> {
    XmSampler::new(params)?.sample(rng)
}
