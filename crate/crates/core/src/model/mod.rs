//! The lineage-count chain of one color, with marked events.
//!
//! From state `k` the chain jumps up at rate `k` and down at rate `k ρ_k`,
//! `ρ_k = α + μ + (k−1)β`. A down-jump is a mutation, death or coalescence
//! with probabilities `μ/ρ_k`, `α/ρ_k`, `(k−1)β/ρ_k`. Coalescence is tracked
//! through its aggregate rate `k(k−1)β`; individual pairs only matter when a
//! decoration is realized in [`crate::network`].

mod params;
mod paste;
mod simulate;
mod trajectory;

pub use params::{rho, ModelParams};
pub use paste::{paste_back_to_back, paste_with_params, sample_x_mut, XmSampler};
pub use simulate::{
    condition_on_mutations, sample_nu_circ, simulate_observed, simulate_trajectory, summarize,
    PathSummary, Step, DEFAULT_EVENT_CAP,
};
pub use trajectory::{Event, EventKind, MarkedTrajectory};
