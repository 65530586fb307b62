//! Certified evaluation of the closed-form and continued-fraction quantities
//! of the model.
//!
//! The mutation count `M` of one color has mean `μ Σ_j Π_{k≤j} 1/ρ_k` and
//! generating function `g(z) = g_1(z)` given by the backward recursion
//! `g_k = (α + (k−1)β + μz) / (1 + ρ_k − g_{k+1})`.

mod certified;
mod cf;
mod extinction;
mod growth;
mod pmf;
mod series;
mod tilt;

pub use certified::CertifiedValue;
pub use cf::{convergent_table, g_derivatives, g_eval, pgf_from_state, ConvergentRow, GDerivs};
pub use extinction::{extinction_probability, simple_pext_bounds};
pub use growth::{laplace_f, malthusian, psi};
pub use pmf::{offspring_pmf, tilted_offspring, OffspringPmf, TiltedPmf};
pub use series::{critical_mu, expected_m, nu_circ_pmf, NuCirc};
pub use tilt::{phi, zeta_tilt, TiltSolution};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const ROOT_TOL: f64 = 1e-10;
pub(crate) const MIN_DEPTH: usize = 16;
pub(crate) const MAX_DEPTH: usize = 1 << 16;
