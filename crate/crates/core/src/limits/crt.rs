use serde::{Deserialize, Serialize};

use super::expected_sup_excursion;
use crate::analytics::{expected_m, pgf_from_state, zeta_tilt, NuCirc, TiltSolution};
use crate::model::{simulate_observed, summarize, EventKind, ModelParams};
use crate::network::{contour, NetworkMethod, NetworkSampler};
use crate::stats::{effective_sample_size, ratio_estimate, Estimate, Moments};
use crate::{Error, Result, RngStream};

const CHUNK: usize = 2048;

/// Collects `n` i.i.d. draws in a worker-count independent order.
pub(crate) fn collect<T, F>(stream: RngStream, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut crate::rng::StreamRng) -> Result<T> + Sync + Send,
{
    let chunks = stream.chunked(n, CHUNK, |r, count| (0..count).map(|_| f(r)).collect::<Result<Vec<T>>>());
    let mut out = Vec::with_capacity(n);
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Scaling constants of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrtConstants {
    pub zeta: f64,
    #[serde(rename = "E_zetaM")]
    pub e_zeta_m: f64,
    pub sigma_hat_sq: f64,
    /// `E[Σ_{t∈𝓜} t ζ^M] / E[ζ^M]` by self-normalized weighting.
    pub eustar_weighted: Estimate,
    /// The same constant through the path decomposition at a mutation.
    pub eustar_decomposed: Estimate,
    /// `E[L ζ^M] / E[ζ^M]` by self-normalized weighting.
    pub ell_weighted: Estimate,
    /// The same constant through the measure change `μ → ζμ`.
    pub ell_measure_change: Estimate,
    /// `σ̂ / (2 E[U*])`, from the more precise `E[U*]` estimate.
    pub c: Estimate,
    pub flags: Vec<String>,
}

impl CrtConstants {
    /// The `E[U*]` estimate with the smaller standard error.
    pub fn eustar(&self) -> &Estimate {
        if self.eustar_decomposed.std_error <= self.eustar_weighted.std_error {
            &self.eustar_decomposed
        } else {
            &self.eustar_weighted
        }
    }

    /// The `ℓ` estimate with the smaller standard error.
    pub fn ell(&self) -> &Estimate {
        if self.ell_measure_change.std_error <= self.ell_weighted.std_error {
            &self.ell_measure_change
        } else {
            &self.ell_weighted
        }
    }
}

/// Weight `Π (1 − p_{j+1} + p_{j+1} ζ)` over the up-jumps `j → j+1` of a
/// path. After time reversal these up-jumps are the down-jumps of the
/// pasted path, each a mutation with probability `p = μ/ρ`, so the weight
/// is `E[ζ^{M_rev} | path]`.
#[derive(Debug, Clone)]
pub struct ReversedMarkWeights {
    params: ModelParams,
    zeta: f64,
}

impl ReversedMarkWeights {
    pub fn new(params: &ModelParams, zeta: f64) -> Self {
        Self { params: *params, zeta }
    }

    #[inline]
    pub fn factor(&self, to_state: u64) -> f64 {
        let p = self.params.mu / self.params.rho_of(to_state);
        1.0 - p + p * self.zeta
    }
}

/// `E[U*]` and `ℓ` by two estimators each, plus `C = σ̂/(2E[U*])`.
pub fn crt_constants(params: &ModelParams, stream: RngStream, n_samples: usize) -> Result<CrtConstants> {
    if n_samples < 1000 {
        return Err(Error::InvalidArgument("n_samples must be >= 1000".into()));
    }
    let tilt = zeta_tilt(params, 1e-13)?;
    crt_constants_with(params, &tilt, stream, n_samples)
}

pub(crate) fn crt_constants_with(
    params: &ModelParams,
    tilt: &TiltSolution,
    stream: RngStream,
    n_samples: usize,
) -> Result<CrtConstants> {
    let zeta = tilt.zeta;
    let mut flags = Vec::new();

    // (1) Raw paths from one lineage, weighted by ζ^M.
    let raw = collect(stream.substream(1), n_samples, |r| summarize(params, 1, r))?;
    let w: Vec<f64> = raw.iter().map(|s| zeta.powi(s.m as i32)).collect();
    let a: Vec<f64> = raw.iter().zip(&w).map(|(s, w)| s.mutation_time_sum * w).collect();
    let b: Vec<f64> = raw.iter().zip(&w).map(|(s, w)| s.l * w).collect();
    let mut eustar_weighted = ratio_estimate(&a, &w);
    let mut ell_weighted = ratio_estimate(&b, &w);
    let ess = effective_sample_size(&w);
    if zeta > 1.0 && ess < 0.05 * n_samples as f64 {
        let f = format!("low effective sample size {ess:.0}");
        eustar_weighted = eustar_weighted.with_flag(f.clone());
        ell_weighted = ell_weighted.with_flag(f.clone());
        flags.push(f);
    }

    // (2) K ~ ν∘, path from K with reversed-mark weights, times E_{K−1}[ζ^M].
    let nu = NuCirc::new(params, 1e-16)?;
    let kmax = nu.pmf.len();
    let pgf: Vec<f64> = (0..=kmax)
        .map(|k| pgf_from_state(params, k, zeta, 1e-13).map(|v| v.mid()))
        .collect::<Result<_>>()?;
    let marks = ReversedMarkWeights::new(params, zeta);
    let em = expected_m(params, 1e-14)?.mid();
    let scale = zeta * em / tilt.e_zeta_m;
    let ys = collect(stream.substream(2), n_samples, |r| {
        let k = nu.sample(r);
        let mut weight = 1.0;
        let t = simulate_observed(params, k, r, None, |s| {
            if s.kind == EventKind::Birth {
                weight *= marks.factor(s.state + 1);
            }
        })?;
        Ok(scale * t * weight * pgf[k as usize - 1])
    })?;
    let eustar_decomposed = Moments::from_slice(&ys).estimate();

    // ℓ through the measure change E_μ[L ζ^M] = E_{ζμ}[L e^{(ζ−1)μL}].
    let tilted_params = params.with_mu(zeta * params.mu)?;
    let ls = collect(stream.substream(3), n_samples, |r| {
        let s = summarize(&tilted_params, 1, r)?;
        Ok(s.l * ((zeta - 1.0) * params.mu * s.l).exp() / tilt.e_zeta_m)
    })?;
    let ell_measure_change = Moments::from_slice(&ls).estimate();

    let mut out = CrtConstants {
        zeta,
        e_zeta_m: tilt.e_zeta_m,
        sigma_hat_sq: tilt.sigma_hat_sq,
        eustar_weighted,
        eustar_decomposed,
        ell_weighted,
        ell_measure_change,
        c: Estimate::exact(0.0),
        flags,
    };
    let eu = out.eustar().clone();
    let c = tilt.sigma_hat_sq.sqrt() / (2.0 * eu.value);
    out.c = Estimate::new(c, c * eu.std_error / eu.value, eu.n_samples);
    Ok(out)
}

/// Desk-scale checks of the scaling limit at one network size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrtScalingReport {
    pub n: usize,
    pub replicates: usize,
    /// Mean of `|G_n| / n`.
    pub length_per_color: Estimate,
    pub ell: Estimate,
    /// Mean of `max height / sqrt(n)`.
    pub max_height_scaled: Estimate,
    /// `(2 E[U*] / σ̂) · E[sup e]`.
    pub predicted_max_height: Estimate,
    pub sup_excursion: Estimate,
    /// Mean of `sup_t |h_G(t) − E[U*] h_T(c_t)| / sqrt(n)` on the contour grid.
    pub sup_deviation: Estimate,
    pub grid_size: usize,
}

/// Samples `replicates` networks with `n` colors and compares them with
/// the scaling constants.
pub fn verify_crt_scaling(
    params: &ModelParams,
    constants: &CrtConstants,
    sup_excursion: &Estimate,
    n: usize,
    replicates: usize,
    grid_size: usize,
    stream: RngStream,
) -> Result<CrtScalingReport> {
    let sampler = NetworkSampler::new(params)?;
    let eu = constants.eustar().value;
    let rows = stream.replicates(replicates, |r, _| -> Result<(f64, f64, f64)> {
        let g = sampler.sample(n, r, NetworkMethod::Tilted)?;
        let c = contour(&g, r, grid_size)?;
        let dev = c
            .h
            .iter()
            .zip(&c.tree_h)
            .map(|(h, d)| (h - eu * d).abs())
            .fold(0.0, f64::max);
        let sn = (n as f64).sqrt();
        Ok((g.total_length() / n as f64, g.max_height() / sn, dev / sn))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |i: usize| -> Estimate {
        Moments::from_slice(&rows.iter().map(|r| [r.0, r.1, r.2][i]).collect::<Vec<_>>()).estimate()
    };
    let eus = constants.eustar();
    let k = 2.0 / constants.sigma_hat_sq.sqrt();
    let pred = k * eus.value * sup_excursion.value;
    let pred_se = k * ((eus.std_error * sup_excursion.value).powi(2) + (eus.value * sup_excursion.std_error).powi(2)).sqrt();
    Ok(CrtScalingReport {
        n,
        replicates,
        length_per_color: col(0),
        ell: constants.ell().clone(),
        max_height_scaled: col(1),
        predicted_max_height: Estimate::new(pred, pred_se, eus.n_samples),
        sup_excursion: sup_excursion.clone(),
        sup_deviation: col(2),
        grid_size,
    })
}

/// Convenience: the excursion oracle with the default size.
pub fn default_sup_excursion(stream: RngStream) -> Estimate {
    expected_sup_excursion(stream, 1_000_000, 400)
}
