use std::f64::consts::E;

use phylonet::analytics::{
    convergent_table, expected_m, extinction_probability, g_eval, laplace_f, malthusian, offspring_pmf, phi,
    simple_pext_bounds, zeta_tilt,
};
use phylonet::model::{simulate_observed, summarize};
use phylonet::stats::Moments;
use phylonet::{ModelParams, Result, RngStream};
use serde_json::{json, Value};

use super::{check, pass_if, skip, Outcome, Z_MAX};
use crate::config::RunConfig;
use crate::report::{enclosure, estimate, Check};

const STREAM: u64 = 2;

fn params(a: f64, b: f64, m: f64) -> ModelParams {
    ModelParams { alpha: a, beta: b, mu: m }
}

pub(crate) fn reference_sets() -> [ModelParams; 2] {
    [params(1.0, 1.0, 1.0), params(0.2, 0.2, 0.2)]
}

pub(super) fn run(cfg: &RunConfig) -> Vec<Check> {
    let p = cfg.params;
    let base = RngStream::new(cfg.seed, STREAM);
    vec![
        check("expected_m_reference", Some(1), expected_m_reference),
        check("expected_m_series", None, || expected_m_series(&p)),
        check("convergents", Some(2), || convergents(&p)),
        check("extinction_reference", Some(3), extinction_reference),
        check("extinction_fixed_point", None, || extinction_fixed_point(&p, cfg.tol)),
        check("tilt_residual", Some(4), || tilt_residual(&p)),
        check("malthusian_sign_grid", Some(4), malthusian_sign_grid),
        check("malthusian_identity", Some(4), || malthusian_identity(&p, cfg.samples, base.substream(0))),
        check("pmf_pgf_duality", None, || pmf_pgf_duality(&p)),
        check("zero_mutation_frequency", None, || zero_mutations(&p, cfg.samples, base.substream(1))),
    ]
}

/// `μ Σ_j Π_{k≤j} 1/ρ_k` by plain summation until the terms vanish.
pub(crate) fn naive_expected_m(p: &ModelParams) -> Result<f64> {
    let (mut w, mut s) = (1.0, 0.0);
    for j in 1..1_000_000u64 {
        w /= p.rho(j)?;
        s += w;
        if w < 1e-18 * s && p.rho(j + 1)? > 2.0 {
            break;
        }
    }
    Ok(p.mu * s)
}

fn expected_m_reference() -> Result<Outcome> {
    let closed = [E - 2.0, 0.04 * (E.powi(5) - 6.0)];
    let mut ok = true;
    let mut rows = Vec::new();
    for (p, c) in reference_sets().iter().zip(closed) {
        let v = expected_m(p, 1e-12)?;
        let naive = naive_expected_m(p)?;
        let err = (v.mid() - c).abs().max((naive - c).abs());
        ok &= err <= 1e-10 && v.width() <= 1e-10;
        rows.push(json!({"params": p, "closed_form": c, "partial_sum": naive, "enclosure": enclosure("series", &v), "max_error": err}));
    }
    Ok(pass_if(ok, json!({"sets": rows})))
}

fn expected_m_series(p: &ModelParams) -> Result<Outcome> {
    let v = expected_m(p, 1e-12)?;
    let naive = naive_expected_m(p)?;
    let err = (v.mid() - naive).abs() / naive.max(1.0);
    Ok(pass_if(
        err <= 1e-10,
        json!({"enclosure": enclosure("series", &v), "partial_sum": naive, "relative_error": err}),
    ))
}

pub(crate) fn unit_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Bracketing, the product majorant and monotone decay of the sup-gap.
/// Strict decay is required only where the gap stays above rounding.
fn convergent_report(p: &ModelParams, strict: bool) -> Result<(bool, Value)> {
    let z = unit_grid();
    let depths: Vec<usize> = (1..=20).collect();
    let rows = convergent_table(p, &z, &depths)?;
    let mut ok = true;
    for r in &rows {
        ok &= r.lower.iter().zip(&r.upper).all(|(l, u)| l <= u && *l >= 0.0 && *u <= 1.0);
        ok &= r.sup_gap <= r.majorant * (1.0 + 1e-12);
    }
    // The deepest bounds meet at z = 1, where g = 1.
    let meet = rows.last().map_or(f64::NAN, |r| r.upper[10] - r.lower[10]);
    ok &= meet <= 1e-12;
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].sup_gap < w[0].sup_gap || (w[0].sup_gap == 0.0 && w[1].sup_gap == 0.0));
    let nonincreasing = rows.windows(2).all(|w| w[1].sup_gap <= w[0].sup_gap * (1.0 + 1e-12));
    ok &= nonincreasing && (decreasing || !strict);
    let gaps: Vec<Value> = rows
        .iter()
        .map(|r| json!({"depth": r.depth, "sup_gap": r.sup_gap, "majorant": r.majorant}))
        .collect();
    let last = rows.last().map_or(f64::NAN, |r| r.sup_gap);
    Ok((ok, json!({"params": p, "decay": gaps, "sup_gap_at_20": last, "gap_at_one": meet, "strictly_decreasing": decreasing})))
}

fn convergents(p: &ModelParams) -> Result<Outcome> {
    let [p1, p2] = reference_sets();
    let (ok1, d1) = convergent_report(&p1, true)?;
    let (ok2, d2) = convergent_report(&p2, false)?;
    let (ok3, d3) = convergent_report(p, false)?;
    let gap20 = d1["sup_gap_at_20"].as_f64().unwrap_or(f64::NAN);
    Ok(pass_if(
        ok1 && ok2 && ok3 && gap20 < 1e-15,
        json!({"reference": [d1, d2], "configured": d3}),
    ))
}

fn extinction_reference() -> Result<Outcome> {
    let [p1, p2] = reference_sets();
    let q1 = extinction_probability(&p1, 1e-12)?;
    let q2 = extinction_probability(&p2, 1e-12)?;
    let (lo, hi) = simple_pext_bounds(&p2);
    let g = g_eval(&p2, q2.mid(), 1, 1e-14)?.mid();
    let ok = q1.lower == 1.0 && q1.upper == 1.0 && q2.lower >= lo && q2.upper <= hi && (g - q2.mid()).abs() <= 1e-8;
    Ok(pass_if(
        ok,
        json!({
            "p_ext_111": enclosure("bisection on g", &q1),
            "p_ext_02": enclosure("bisection on g", &q2),
            "simple_bounds_02": [lo, hi],
            "fixed_point_residual_02": (g - q2.mid()).abs(),
        }),
    ))
}

fn extinction_fixed_point(p: &ModelParams, tol: f64) -> Result<Outcome> {
    let q = extinction_probability(p, tol.max(1e-13))?;
    let (lo, hi) = simple_pext_bounds(p);
    let g = g_eval(p, q.mid(), 1, 1e-14)?.mid();
    let resid = (g - q.mid()).abs();
    let ok = resid <= 1e-8 && q.upper >= lo - 1e-12 && q.lower <= hi + 1e-12;
    Ok(pass_if(
        ok,
        json!({"p_ext": enclosure("bisection on g", &q), "simple_bounds": [lo, hi], "fixed_point_residual": resid}),
    ))
}

fn tilt_residual(p: &ModelParams) -> Result<Outcome> {
    let [p1, p2] = reference_sets();
    let mut ok = true;
    let mut rows = Vec::new();
    for q in [p1, p2, *p] {
        let t = zeta_tilt(&q, 1e-12)?;
        let r = (phi(&q, t.zeta)? - 1.0).abs();
        ok &= r <= 1e-8;
        rows.push(json!({"params": q, "zeta": t.zeta, "residual": r}));
    }
    Ok(pass_if(ok, json!({"sets": rows})))
}

/// Five parameter sets on both sides of criticality.
fn malthusian_sign_grid() -> Result<Outcome> {
    let grid = [
        params(1.0, 1.0, 1.0),
        params(0.2, 0.2, 0.2),
        params(0.5, 2.0, 0.3),
        params(0.1, 0.5, 1.5),
        params(2.0, 0.5, 1.0),
    ];
    let mut ok = true;
    let mut signs = [0usize; 2];
    let mut rows = Vec::new();
    for p in grid {
        let m = expected_m(&p, 1e-13)?.mid();
        let l = malthusian(&p, 1e-10)?;
        ok &= (l > 0.0) == (m > 1.0) && l != 0.0;
        signs[(l > 0.0) as usize] += 1;
        rows.push(json!({"params": p, "expected_m": m, "lambda": l}));
    }
    Ok(pass_if(ok, json!({"grid": rows, "negative": signs[0], "positive": signs[1]})))
}

/// `μ E[∫ X_t e^{−λt} dt] = 1` from one founding lineage.
/// Skipped when λ < 0 and `E[e^{−2λT}]` diverges for the passage time `T`
/// from 1 to 0: the estimator then has no finite variance and a 3-SE band
/// means nothing.
fn malthusian_identity(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let l = malthusian(p, 1e-12)?;
    if l < 0.0 && laplace_f(p, 1, 2.0 * l, 1e-10).is_err() {
        return Ok(skip("lambda < 0 and the discounted occupation has infinite variance"));
    }
    let xs = s
        .replicates(n, |r, _| {
            let mut acc = 0.0;
            simulate_observed(p, 1, r, None, |st| {
                let a = st.time - st.hold;
                acc += st.state as f64
                    * if l == 0.0 {
                        st.hold
                    } else {
                        ((-l * a).exp() - (-l * st.time).exp()) / l
                    };
            })?;
            Ok(p.mu * acc)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let e = Moments::from_slice(&xs).estimate();
    let z = e.z_to(1.0);
    Ok(pass_if(
        z < Z_MAX,
        json!({"lambda": l, "estimate": estimate("discounted occupation", &e), "z": z}),
    ))
}

fn pmf_pgf_duality(p: &ModelParams) -> Result<Outcome> {
    let pmf = offspring_pmf(p, 400, 1e-14)?;
    let mut worst: f64 = 0.0;
    for z in unit_grid() {
        let g = g_eval(p, z, 1, 1e-13)?;
        worst = worst.max((pmf.pgf(z) - g.mid()).abs() - g.width());
    }
    let total = pmf.probs.iter().sum::<f64>() + pmf.tail_bound;
    let ok = worst <= 1e-10 + pmf.tail_bound && (total - 1.0).abs() <= 1e-10;
    Ok(pass_if(
        ok,
        json!({"max_pgf_discrepancy": worst, "tail_bound": pmf.tail_bound, "total_mass": total}),
    ))
}

fn zero_mutations(p: &ModelParams, n: usize, s: RngStream) -> Result<Outcome> {
    let xs = s
        .replicates(n, |r, _| summarize(p, 1, r).map(|x| (x.m == 0) as u8 as f64))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let e = Moments::from_slice(&xs).estimate();
    let g0 = g_eval(p, 0.0, 1, 1e-13)?;
    let z = e.z_to(g0.mid());
    Ok(pass_if(
        z < Z_MAX,
        json!({"frequency": estimate("gillespie", &e), "g0": enclosure("continued fraction", &g0), "z": z}),
    ))
}
