use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TiltSolution;
use crate::model::ModelParams;
use crate::stats::CompensatedSum;
use crate::{Error, Result};

/// The law of `M` on `{0, …, m_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffspringPmf {
    pub probs: Vec<f64>,
    /// Mass above `m_max` in the truncated chain.
    pub tail_bound: f64,
    pub m_max: usize,
    /// States above this level are never entered by the truncated chain.
    pub state_trunc: usize,
    /// Probability that the chain from 1 reaches `state_trunc + 1`, which
    /// bounds the total-variation error of the state truncation.
    pub state_defect: f64,
}

impl OffspringPmf {
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }

    pub fn pgf(&self, z: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| acc * z + p)
    }
}

/// Compound-geometric law `Σ_{i≤N} Y_i` with `P(N = j) = θ(1−θ)^j`, via the
/// Panjer recursion.
fn compound_geometric(theta: f64, y: &[f64]) -> Vec<f64> {
    let q = 1.0 - theta;
    let d = 1.0 - q * y[0];
    let mut h = vec![0.0; y.len()];
    h[0] = theta / d;
    for m in 1..y.len() {
        let mut s = 0.0;
        for i in 1..=m {
            s += y[i] * h[m - i];
        }
        h[m] = q * s / d;
    }
    h
}

/// Offspring law by the excursion recursion: `M_k` is a geometric number
/// of copies of `M_{k+1}` plus a Bernoulli(`μ/ρ_k`) for the final
/// down-jump. The state truncation makes the chain's escape probability
/// above the top level at most `tol`.
pub fn offspring_pmf(params: &ModelParams, m_max: usize, tol: f64) -> Result<OffspringPmf> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be > 0".into()));
    }
    // Gambler's ruin: P_1(hit n+1 before 0) = 1 / Σ_{j=0}^{n} Π_{i≤j} ρ_i.
    let mut n = 0usize;
    let mut prod = 1.0;
    let mut denom = 1.0;
    while 1.0 / denom > tol {
        n += 1;
        prod *= params.rho_of(n as u64);
        denom += prod;
        if n > 100_000 {
            return Err(Error::DepthExhausted { depth: n, gap: 1.0 / denom });
        }
    }
    let n = n.max(1);
    let mut cur = vec![0.0; m_max + 1];
    cur[0] = 1.0;
    for k in (1..=n as u64).rev() {
        let rho = params.rho_of(k);
        let h = compound_geometric(rho / (1.0 + rho), &cur);
        let p = params.mu / rho;
        for m in 0..=m_max {
            cur[m] = (1.0 - p) * h[m] + if m > 0 { p * h[m - 1] } else { 0.0 };
        }
    }
    let mut s = CompensatedSum::new();
    cur.iter().for_each(|&p| s.add(p));
    Ok(OffspringPmf {
        tail_bound: (1.0 - s.value()).max(0.0),
        probs: cur,
        m_max,
        state_trunc: n,
        state_defect: 1.0 / denom,
    })
}

/// The tilted law `P(M̂ = m) = ζ^m p_m / E[ζ^M]`, truncated where the
/// remaining mass is below tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedPmf {
    pub zeta: f64,
    /// Tilted probabilities, renormalized over the retained support.
    pub probs: Vec<f64>,
    /// `1 − Σ ζ^m p_m / E[ζ^M]` estimated mass beyond the support.
    pub dropped_mass: f64,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl TiltedPmf {
    /// Builds from an untilted pmf; `normalizer` is `E[ζ^M]`.
    pub fn from_pmf(pmf: &OffspringPmf, zeta: f64, normalizer: f64) -> Self {
        let raw: Vec<f64> = pmf
            .probs
            .iter()
            .enumerate()
            .map(|(m, p)| p * zeta.powi(m as i32) / normalizer)
            .collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self {
            zeta,
            probs,
            dropped_mass: (1.0 - total).abs(),
            cdf,
        }
    }

    pub fn prob(&self, m: usize) -> f64 {
        self.probs.get(m).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(m, p)| (m as f64 - mu).powi(2) * p)
            .sum()
    }

    /// Size-biased law `m P(M̂ = m) / E[M̂]` (the spine outdegree law).
    pub fn size_biased(&self) -> Vec<f64> {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(m, p)| m as f64 * p / mean)
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        self.cdf.partition_point(|&c| c <= u).min(self.probs.len() - 1)
    }
}

/// Tilted offspring law at `tilt.zeta`, with the support grown until the
/// geometric tail estimate of the remaining tilted mass is below `tol`.
pub fn tilted_offspring(params: &ModelParams, tilt: &TiltSolution, tol: f64) -> Result<TiltedPmf> {
    let mut m_max = 64;
    loop {
        let pmf = offspring_pmf(params, m_max, 1e-17)?;
        let t = TiltedPmf::from_pmf(&pmf, tilt.zeta, tilt.e_zeta_m);
        let q = &t.probs;
        let (a, b) = (q[m_max - 1], q[m_max]);
        let r = if a > 0.0 { b / a } else { 0.0 };
        let tail = if r < 1.0 { b * r / (1.0 - r) } else { f64::INFINITY };
        if tail <= tol {
            return Ok(t);
        }
        if m_max >= 8192 {
            return Err(Error::DepthExhausted { depth: m_max, gap: tail });
        }
        m_max *= 2;
    }
}
