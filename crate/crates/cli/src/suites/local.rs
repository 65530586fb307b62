use phylonet::analytics::{nu_circ_pmf, zeta_tilt};
use phylonet::limits::{prob_n_table, LocalBallSampler, ProbN};
use phylonet::network::NetworkMethod;
use phylonet::stats::{chi2_gof, chi2_two_sample, counts_of};
use phylonet::{ModelParams, Result, RngStream};
use serde_json::json;

use super::{check, pass_if, skip, Outcome, ALPHA};
use crate::config::RunConfig;
use crate::report::{test_result, Check};

const STREAM: u64 = 5;
/// Colors in the finite networks compared with the limit.
const FINITE_N: usize = 2000;
const NETWORKS: usize = 400;
/// Uniform points per network. They share a network, so the χ² cells are
/// mildly dependent; a calibration, not a theorem.
const POINTS: usize = 5;
const WEIGHTED: &str = "zeta > 1: the focal law is only available as a weighted sample";

pub(super) fn run(cfg: &RunConfig) -> Vec<Check> {
    let p = cfg.params;
    let base = RngStream::new(cfg.seed, STREAM);
    let setup = zeta_tilt(&p, 1e-13)
        .and_then(|t| Ok((prob_n_table(&p, t.zeta, 1e-14)?, LocalBallSampler::new(&p, t.zeta)?)));
    let (pn, sampler) = match setup {
        Ok(x) => x,
        Err(e) => return vec![check("prob_n", Some(10), || Err(e))],
    };
    let (pn, s) = (&pn, &sampler);
    let finite = finite_n_points(s, base.substream(2));
    let f = &finite;
    vec![
        check("prob_n_normalized", Some(10), || normalized(pn)),
        check("prob_n_identity_tilt", Some(10), || identity_tilt(&p)),
        check("prob_n_vs_local_ball", Some(10), || vs_local_ball(pn, s, cfg.samples / 5, base.substream(1))),
        check("prob_n_vs_finite_n", Some(10), || vs_finite(pn, f)),
        check("focal_mutations_vs_finite_n", None, || focal_mutations(s, f, base.substream(3))),
    ]
}

fn normalized(pn: &ProbN) -> Result<Outcome> {
    let total: f64 = pn.pmf.iter().sum();
    Ok(pass_if(
        (total - 1.0).abs() < 1e-8 && pn.tail < 1e-8,
        json!({"zeta": pn.zeta, "total": total, "tail": pn.tail, "head": &pn.pmf[..pn.pmf.len().min(10)]}),
    ))
}

fn identity_tilt(p: &ModelParams) -> Result<Outcome> {
    let nu = nu_circ_pmf(p, 1e-14)?;
    let t = prob_n_table(p, 1.0, 1e-14)?;
    let k_max = nu.pmf.len().min(200) as u64;
    let mismatches = (1..=k_max).filter(|&k| t.prob(k) != nu.prob(k)).count();
    Ok(pass_if(mismatches == 0, json!({"compared": k_max, "mismatches": mismatches})))
}

fn with_zero_cell(pn: &ProbN) -> Vec<f64> {
    let mut probs = vec![0.0];
    probs.extend(&pn.pmf);
    probs
}

fn vs_local_ball(pn: &ProbN, s: &LocalBallSampler, n: usize, st: RngStream) -> Result<Outcome> {
    if s.focal.weighted() {
        return Ok(skip(WEIGHTED));
    }
    let ks = st
        .chunked(n, 500, |r, m| {
            (0..m)
                .map(|_| s.sample(1, r).map(|b| b.n_focal_lineages()))
                .collect::<Result<Vec<usize>>>()
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .concat();
    let t = chi2_gof(&counts_of(ks), &with_zero_cell(pn));
    Ok(pass_if(t.passes(ALPHA), json!({"balls": n, "radius": 1, "test": test_result(&t)})))
}

/// `(lineages alive, mutations of the color)` at uniform points of large
/// conditioned networks.
type FinitePoints = Result<Vec<(usize, usize)>>;

fn finite_n_points(s: &LocalBallSampler, st: RngStream) -> FinitePoints {
    Ok(st
        .replicates(NETWORKS, |r, _| {
            let g = s.network.sample(FINITE_N, r, NetworkMethod::Tilted)?;
            Ok((0..POINTS)
                .map(|_| {
                    let x = g.uniform_point(r);
                    (g.lineages_alive_at(&x) as usize, g.decorations[x.vertex].mutation_count())
                })
                .collect::<Vec<_>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .concat())
}

fn vs_finite(pn: &ProbN, f: &FinitePoints) -> Result<Outcome> {
    let pts = f.as_ref().map_err(Clone::clone)?;
    let t = chi2_gof(&counts_of(pts.iter().map(|x| x.0)), &with_zero_cell(pn));
    Ok(pass_if(
        t.passes(ALPHA),
        json!({"n": FINITE_N, "networks": NETWORKS, "points_per_network": POINTS, "test": test_result(&t)}),
    ))
}

/// Mutation count of the color holding the root of the local limit against
/// the color holding a uniform point.
fn focal_mutations(s: &LocalBallSampler, f: &FinitePoints, st: RngStream) -> Result<Outcome> {
    if s.focal.weighted() {
        return Ok(skip(WEIGHTED));
    }
    let pts = f.as_ref().map_err(Clone::clone)?;
    let focal = st
        .replicates(pts.len(), |r, _| s.focal.focal(r).map(|d| d.value.mutation_count()))
        .into_iter()
        .collect::<Result<Vec<usize>>>()?;
    let t = chi2_two_sample(&counts_of(focal), &counts_of(pts.iter().map(|x| x.1)));
    Ok(pass_if(t.passes(ALPHA), json!({"samples_per_side": pts.len(), "test": test_result(&t)})))
}
