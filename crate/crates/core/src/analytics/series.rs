use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CertifiedValue;
use crate::model::ModelParams;
use crate::stats::CompensatedSum;
use crate::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Partial sums of `Σ_j Π_{k≤j} 1/ρ_k` with a geometric tail majorant.
/// Returns the weights, their compensated sum and the tail bound.
fn weight_series(params: &ModelParams, rel_tol: f64, abs_tol: f64) -> (Vec<f64>, f64, f64) {
    let mut w = 1.0;
    let mut weights = Vec::new();
    let mut sum = CompensatedSum::new();
    let mut j: u64 = 1;
    loop {
        w /= params.rho_of(j);
        weights.push(w);
        sum.add(w);
        let rho_next = params.rho_of(j + 1);
        if rho_next > 1.0 {
            let r = 1.0 / rho_next;
            let tail = w * r / (1.0 - r);
            if tail <= abs_tol.max(rel_tol * sum.value()) || w == 0.0 {
                return (weights, sum.value(), tail);
            }
        }
        j += 1;
    }
}

/// `E[M] = μ Σ_{j≥1} Π_{k≤j} 1/ρ_k`, enclosed to width about `tol`.
pub fn expected_m(params: &ModelParams, tol: f64) -> Result<CertifiedValue> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be > 0".into()));
    }
    let (weights, s, tail) = weight_series(params, 0.0, 0.5 * tol / params.mu);
    let n = weights.len();
    let value = params.mu * s;
    // Each weight carries at most n+1 rounding errors; the sum is compensated.
    let round = value * (n as f64 + 4.0) * EPS;
    Ok(CertifiedValue::new(
        value - round,
        value + params.mu * tail + round,
        n,
        true,
    ))
}

/// The law `ν∘(n) ∝ Π_{k≤n} 1/ρ_k` on the positive integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuCirc {
    /// `pmf[i] = ν∘(i+1)`.
    pub pmf: Vec<f64>,
    /// Upper bound on the omitted relative mass.
    pub tail_bound: f64,
    /// `Σ_n Π_{k≤n} 1/ρ_k` over the retained terms.
    pub normalizer: f64,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl NuCirc {
    pub fn new(params: &ModelParams, tol: f64) -> Result<Self> {
        params.validate()?;
        let (w, s, tail) = weight_series(params, tol, 0.0);
        let pmf: Vec<f64> = w.iter().map(|x| x / s).collect();
        let mut acc = CompensatedSum::new();
        let cdf = pmf
            .iter()
            .map(|p| {
                acc.add(*p);
                acc.value()
            })
            .collect();
        Ok(Self {
            pmf,
            tail_bound: tail / s,
            normalizer: s,
            cdf,
        })
    }

    /// `ν∘(n)` for `n ≥ 1` (0 beyond the table).
    pub fn prob(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.pmf.get(n as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Inverse-CDF draw. Mass beyond the table (below `tail_bound`) is
    /// assigned to the last entry.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        (i.min(self.pmf.len() - 1) + 1) as u64
    }
}

pub fn nu_circ_pmf(params: &ModelParams, tol: f64) -> Result<NuCirc> {
    NuCirc::new(params, tol)
}

/// The mutation rate making `E[M] = 1` for the given `α, β`.
pub fn critical_mu(alpha: f64, beta: f64, tol: f64) -> Result<f64> {
    let em = |mu: f64| -> Result<f64> { Ok(expected_m(&ModelParams::new(alpha, beta, mu)?, 1e-14)?.mid()) };
    let mut lo = 1e-6;
    if em(lo)? >= 1.0 {
        return Err(Error::Bracket("E[M] >= 1 already at mu = 1e-6".into()));
    }
    let mut hi = 1.0;
    while em(hi)? < 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Bracket(format!(
                "E[M] stays below 1 for alpha = {alpha}, beta = {beta}"
            )));
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if em(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    /// Independent oracle: Σ_{j≥1} 1/(j+1)! summed in exact factorial form.
    fn e_minus_two() -> f64 {
        let mut s = 0.0;
        let mut f = 1.0;
        for j in 1..30 {
            f *= (j + 1) as f64;
            s += 1.0 / f;
        }
        s
    }

    #[test]
    fn expected_m_reference_values() {
        let a = expected_m(&ModelParams::new(1.0, 1.0, 1.0).unwrap(), 1e-12).unwrap();
        assert!(a.contains(E - 2.0) || (a.mid() - (E - 2.0)).abs() < 1e-15);
        assert!((a.mid() - e_minus_two()).abs() < 1e-12);
        assert!(a.width() <= 1e-12);
        let b = expected_m(&ModelParams::new(0.2, 0.2, 0.2).unwrap(), 1e-12).unwrap();
        let exact = 0.04 * (E.powi(5) - 6.0);
        assert!((b.mid() - exact).abs() < 1e-12, "{} vs {exact}", b.mid());
        assert!((b.mid() - 5.696_526_0).abs() < 1e-6);
    }

    #[test]
    fn nu_circ_reference_values() {
        let nu = NuCirc::new(&ModelParams::new(1.0, 1.0, 1.0).unwrap(), 1e-16).unwrap();
        assert!((nu.prob(1) - 0.5 / (E - 2.0)).abs() < 1e-14);
        assert!((nu.prob(2) - (1.0 / 6.0) / (E - 2.0)).abs() < 1e-14);
        // Published six-decimal values are rounded loosely; agree to 1e-5.
        assert!((nu.prob(1) - 0.696_110).abs() < 1e-5);
        assert!((nu.prob(2) - 0.232_037).abs() < 1e-5);
        let p = ModelParams::new(0.3, 0.7, 1.1).unwrap();
        let nu = NuCirc::new(&p, 1e-16).unwrap();
        for n in 1..10 {
            let r = nu.prob(n + 1) / nu.prob(n);
            assert!((r - 1.0 / p.rho_of(n + 1)).abs() < 1e-14);
        }
        assert!((nu.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn critical_mu_hits_one() {
        let mu = critical_mu(0.5, 0.5, 1e-14).unwrap();
        let em = expected_m(&ModelParams::new(0.5, 0.5, mu).unwrap(), 1e-14).unwrap();
        assert!((em.mid() - 1.0).abs() < 1e-12);
    }
}
