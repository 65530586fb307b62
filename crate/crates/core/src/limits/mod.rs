//! Scaling-limit constants, their Monte Carlo verification, and samplers for
//! the local limit seen from a uniform point.

mod crt;
mod dwass;
mod excursion;
mod local;

pub use crt::{crt_constants, default_sup_excursion, verify_crt_scaling, CrtConstants, CrtScalingReport, ReversedMarkWeights};
pub use dwass::{gw_size_probabilities, gw_size_probability, SizeProbability};
pub use excursion::expected_sup_excursion;
pub use local::{
    prob_n, prob_n_table, sample_focal_network, sample_local_ball, sample_spinal_network, BallVertex, FocalSampler,
    LocalBall, LocalBallSampler, ProbN, Weighted,
};
