use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EventKind;
use crate::{Error, Result};

/// Rate triple of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Per-lineage death rate.
    pub alpha: f64,
    /// Coalescence rate parameter.
    pub beta: f64,
    /// Per-lineage mutation rate.
    pub mu: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, mu: f64) -> Result<Self> {
        let p = Self { alpha, beta, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("mu", self.mu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn rho(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("rho is undefined at k = 0".into()));
        }
        Ok(self.rho_of(k))
    }

    #[inline]
    pub(crate) fn rho_of(&self, k: u64) -> f64 {
        self.alpha + self.mu + (k - 1) as f64 * self.beta
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, mu)
    }

    /// Kind of a down-jump from state `k`, drawn with probabilities
    /// `μ/ρ_k, α/ρ_k, (k−1)β/ρ_k`.
    pub fn draw_down_kind<R: Rng + ?Sized>(&self, k: u64, rng: &mut R) -> EventKind {
        let v = rng.random::<f64>() * self.rho_of(k);
        self.down_kind_at(k, v)
    }

    #[inline]
    pub(crate) fn down_kind_at(&self, k: u64, v: f64) -> EventKind {
        if v < self.mu {
            EventKind::Mutation
        } else if v < self.mu + self.alpha || k == 1 {
            EventKind::Death
        } else {
            EventKind::Coalescence
        }
    }
}

/// `ρ_k = α + μ + (k−1)β`.
pub fn rho(params: &ModelParams, k: u64) -> Result<f64> {
    params.rho(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_values() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(rho(&p, 3).unwrap(), 4.0);
        let q = ModelParams::new(0.2, 0.2, 0.2).unwrap();
        assert!((rho(&q, 1).unwrap() - 0.4).abs() < 1e-15);
        let r = ModelParams::new(0.3, 7.0, 0.5).unwrap();
        assert_eq!(r.rho(1).unwrap(), 0.8);
        assert!(p.rho(0).is_err());
    }

    #[test]
    fn rejects_nonpositive_rates() {
        assert!(ModelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN).is_err());
    }
}
