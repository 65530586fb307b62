use phylonet::analytics::{expected_m, nu_circ_pmf, offspring_pmf, OffspringPmf};
use phylonet::model::{sample_nu_circ, simulate_observed, simulate_trajectory, summarize, XmSampler};
use phylonet::stats::{chi2_gof, chi2_two_sample, counts_of, ks_two_sample, Moments};
use phylonet::{EventKind, ModelParams, Result, RngStream};
use rand::Rng;
use serde_json::json;

use super::{check, pass_if, Outcome, ALPHA, Z_MAX};
use crate::config::RunConfig;
use crate::report::{estimate, test_result, Check};

const STREAM: u64 = 1;

pub(super) fn run(cfg: &RunConfig) -> Vec<Check> {
    let p = cfg.params;
    let n = cfg.samples;
    let base = RngStream::new(cfg.seed, STREAM);
    let s = |i| base.substream(i);
    vec![
        check("well_formed_paths", None, || well_formed(&p, n / 10, s(0))),
        check("first_event_birth", None, || first_event(&p, n, s(1))),
        check("mean_mutation_count", None, || mean_m(&p, n, s(2))),
        check("kind_frequencies", None, || kind_frequencies(&p, n / 10, s(3))),
        check("nu_circ_sampling", None, || nu_circ(&p, n / 2, s(4))),
        check("mutation_intensity", None, || intensity(&p, n / 2, s(5))),
        check("measure_change_s0.5", Some(5), || measure_change(&p, 0.5, n, s(6))),
        check("measure_change_s0.9", Some(5), || measure_change(&p, 0.9, n, s(7))),
        check("view_from_mutation", Some(6), || view_from_mutation(&p, n, s(8))),
    ]
}

fn well_formed(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let bad = s
        .replicates(n, |r, i| {
            let t = simulate_trajectory(p, 1 + (i % 4) as u64, r, None)?;
            t.validate()?;
            Ok(t.final_state() == 0)
        })
        .into_iter()
        .collect::<Result<Vec<bool>>>()?
        .iter()
        .filter(|ok| !**ok)
        .count();
    Ok(pass_if(bad == 0, json!({"paths": n, "malformed": bad})))
}

fn first_event(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let xs = s
        .replicates(n, |r, _| {
            let mut first = None;
            simulate_observed(p, 1, r, None, |st| {
                first.get_or_insert(st.kind);
            })?;
            Ok(if first == Some(EventKind::Birth) { 1.0 } else { 0.0 })
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let e = Moments::from_slice(&xs).estimate();
    let target = 1.0 / (1.0 + p.alpha + p.mu);
    let z = e.z_to(target);
    Ok(pass_if(
        z < Z_MAX,
        json!({"estimate": estimate("gillespie", &e), "target": target, "z": z}),
    ))
}

fn mean_m(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let xs = s
        .replicates(n, |r, _| summarize(p, 1, r).map(|x| x.m as f64))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let e = Moments::from_slice(&xs).estimate();
    let target = expected_m(p, 1e-12)?.mid();
    let z = e.z_to(target);
    Ok(pass_if(
        z < Z_MAX,
        json!({"estimate": estimate("gillespie", &e), "target": target, "z": z}),
    ))
}

fn kind_index(k: EventKind) -> usize {
    match k {
        EventKind::Birth => 0,
        EventKind::Mutation => 1,
        EventKind::Death => 2,
        EventKind::Coalescence => 3,
    }
}

/// Jump kinds out of states 1..=4 against the rate ratios.
fn kind_frequencies(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let chunks = s
        .chunked(n, 1000, |r, m| {
            let mut counts = [[0u64; 4]; 4];
            for _ in 0..m {
                simulate_observed(p, 1, r, None, |st| {
                    if (1..=4).contains(&st.state) {
                        counts[st.state as usize - 1][kind_index(st.kind)] += 1;
                    }
                })?;
            }
            Ok(counts)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    let mut rows = Vec::new();
    for k in 1..=4u64 {
        let counts: Vec<u64> = (0..4).map(|j| chunks.iter().map(|c| c[k as usize - 1][j]).sum()).collect();
        if counts.iter().sum::<u64>() < 100 {
            continue;
        }
        let rho = p.rho(k)?;
        let probs = [1.0, p.mu, p.alpha, (k - 1) as f64 * p.beta].map(|x| x / (1.0 + rho));
        let (c, q): (Vec<u64>, Vec<f64>) = counts.iter().zip(probs).filter(|(_, q)| *q > 0.0).unzip();
        let t = chi2_gof(&c, &q);
        ok &= t.passes(ALPHA);
        rows.push(json!({"state": k, "counts": counts, "test": test_result(&t)}));
    }
    Ok(pass_if(ok, json!({"paths": n, "states": rows})))
}

fn nu_circ(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let nu = nu_circ_pmf(p, 1e-14)?;
    let xs = s
        .replicates(n, |r, _| sample_nu_circ(p, r).map(|k| k as usize))
        .into_iter()
        .collect::<Result<Vec<usize>>>()?;
    let mut probs = vec![0.0];
    probs.extend(&nu.pmf);
    let t = chi2_gof(&counts_of(xs), &probs);
    Ok(pass_if(t.passes(ALPHA), json!({"samples": n, "test": test_result(&t)})))
}

/// `#(mutations in [0, a]) − μ ∫_0^a X_t dt` has mean zero.
fn intensity(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let cuts = [0.5, 2.0, 8.0];
    let rows = s
        .replicates(n, |r, _| {
            let t = simulate_trajectory(p, 1, r, None)?;
            Ok(cuts.map(|a| {
                let count = t.mutation_times().filter(|&u| u <= a).count() as f64;
                let integral: f64 = t.holdings().map(|(x, y, k)| k as f64 * (y.min(a) - x.min(a))).sum();
                count - p.mu * integral
            }))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut ok = true;
    let mut out = Vec::new();
    for (i, a) in cuts.iter().enumerate() {
        let e = Moments::from_slice(&rows.iter().map(|x| x[i]).collect::<Vec<_>>()).estimate();
        let z = e.z_to(0.0);
        ok &= z < Z_MAX;
        out.push(json!({"a": a, "estimate": estimate("compensator", &e), "z": z}));
    }
    Ok(pass_if(ok, json!({"cuts": out})))
}

/// `E[s^M] = E'[exp((s − 1) μ L)]` with `E'` at mutation rate `sμ`.
fn measure_change(p: &ModelParams, s_val: f64, n: usize, s: RngStream) -> Result<Outcome> {
    let q = p.with_mu(s_val * p.mu)?;
    let a = s
        .substream(0)
        .replicates(n, |r, _| summarize(p, 1, r).map(|x| s_val.powi(x.m as i32)))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let b = s
        .substream(1)
        .replicates(n, |r, _| summarize(&q, 1, r).map(|x| ((s_val - 1.0) * p.mu * x.l).exp()))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let (a, b) = (Moments::from_slice(&a).estimate(), Moments::from_slice(&b).estimate());
    let z = a.z_score(&b);
    Ok(pass_if(
        a.overlaps(&b, Z_MAX),
        json!({
            "s": s_val,
            "direct": estimate("mean of s^M", &a),
            "changed": estimate("exp((s-1) mu L) at rate s mu", &b),
            "z": z,
        }),
    ))
}

/// Smallest `m` with `P(M > m)` below `eps`.
pub(crate) fn m_cap(pmf: &OffspringPmf, eps: f64) -> Option<usize> {
    let mut tail = pmf.tail_bound;
    let mut m = pmf.probs.len();
    while m > 0 && tail + pmf.probs[m - 1] < eps {
        tail += pmf.probs[m - 1];
        m -= 1;
    }
    (pmf.tail_bound < eps).then_some(m.max(1))
}

/// `(K, U, duration, M)`: lineages just before the mutation, its time since
/// the path's start, the path's duration and its mutation count.
type View = (usize, f64, f64, usize);

/// The pasted sampler against an exact M-weighted oracle: keep a raw path
/// with probability `M / cap`, then pick one of its mutations uniformly.
fn view_from_mutation(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let pmf = offspring_pmf(p, 4000, 1e-15)?;
    let Some(cap) = m_cap(&pmf, 1e-12) else {
        return Err(phylonet::Error::InvalidArgument(
            "mutation counts too heavy-tailed for the rejection oracle".into(),
        ));
    };
    let xm = XmSampler::new(p)?;
    let pasted = s
        .substream(0)
        .replicates(n, |r, _| {
            let t = xm.sample(r)?;
            Ok((t.state_before(0.0) as usize, -t.start_time, t.duration(), t.mutation_count()))
        })
        .into_iter()
        .collect::<Result<Vec<View>>>()?;
    let oracle = s
        .substream(1)
        .replicates(n, |r, _| loop {
            let t = simulate_trajectory(p, 1, r, None)?;
            let m = t.mutation_count();
            if m > cap {
                return Err(phylonet::Error::Structure(format!("mutation count {m} above oracle cap {cap}")));
            }
            if m > 0 && r.random::<f64>() < m as f64 / cap as f64 {
                let u = t.mutation_times().nth(r.random_range(0..m)).unwrap_or(0.0);
                return Ok((t.state_before(u) as usize, u, t.duration(), m));
            }
        })
        .into_iter()
        .collect::<Result<Vec<View>>>()?;
    let k = chi2_two_sample(&counts_of(pasted.iter().map(|x| x.0)), &counts_of(oracle.iter().map(|x| x.0)));
    let col = |v: &[View], f: fn(&View) -> f64| v.iter().map(f).collect::<Vec<f64>>();
    let u = ks_two_sample(&col(&pasted, |x| x.1), &col(&oracle, |x| x.1));
    let d = ks_two_sample(&col(&pasted, |x| x.2), &col(&oracle, |x| x.2));
    let m = chi2_two_sample(&counts_of(pasted.iter().map(|x| x.3)), &counts_of(oracle.iter().map(|x| x.3)));
    let ok = [k, u, d, m].iter().all(|t| t.passes(ALPHA));
    Ok(pass_if(
        ok,
        json!({
            "samples_per_side": n,
            "oracle_cap": cap,
            "lineages_chi2": test_result(&k),
            "mutation_time_ks": test_result(&u),
            "duration_ks": test_result(&d),
            "mutation_count_chi2": test_result(&m),
        }),
    ))
}
