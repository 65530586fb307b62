//! Simulation and certified numerics for a random phylogenetic network model.
//!
//! Lineages branch at rate 1, die at rate `alpha`, mutate at rate `mu` and
//! coalesce pairwise at rate `beta`. Each mutation founds a new color, so the
//! colors form a Galton–Watson tree whose vertices are decorated by the
//! time-embedded lineage network of their color.
//!
//! * [`model`] simulates the lineage-count chain with marked events.
//! * [`analytics`] evaluates the offspring law, extinction probability, tilt
//!   and growth rate with certified enclosures where possible.
//! * [`network`] builds decorations, conditioned color trees and the glued
//!   metric network.
//! * [`limits`] estimates scaling constants and samples local limits.

pub mod analytics;
pub mod error;
pub mod limits;
pub mod model;
pub mod network;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use model::{EventKind, MarkedTrajectory, ModelParams};
pub use rng::RngStream;
