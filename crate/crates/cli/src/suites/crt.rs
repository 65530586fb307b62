use phylonet::limits::{crt_constants, default_sup_excursion, verify_crt_scaling, CrtConstants};
use phylonet::stats::Estimate;
use phylonet::{ModelParams, Result, RngStream};
use serde_json::json;

use super::{check, pass_if, Outcome, Z_MAX};
use crate::config::RunConfig;
use crate::report::{estimate, Check};

const STREAM: u64 = 4;
/// Relative band for the rescaled maximal height; a finite-n calibration.
const HEIGHT_BAND: f64 = 0.15;

pub(super) fn run(cfg: &RunConfig) -> Vec<Check> {
    let p = cfg.params;
    let base = RngStream::new(cfg.seed, STREAM);
    let constants = match crt_constants(&p, base.substream(0), cfg.samples) {
        Ok(c) => c,
        Err(e) => return vec![check("crt_constants", Some(9), || Err(e))],
    };
    let c = &constants;
    let sup_e = default_sup_excursion(base.substream(1));
    let e = &sup_e;
    vec![
        check("eustar_dual", Some(9), || dual(&c.eustar_weighted, &c.eustar_decomposed, "eustar")),
        check("ell_dual", Some(9), || dual(&c.ell_weighted, &c.ell_measure_change, "ell")),
        check("length_per_color", Some(9), || length_per_color(&p, c, e, cfg, base.substream(2))),
        check("max_height", Some(9), || max_height(&p, c, e, cfg, base.substream(3))),
        check("sup_deviation_trend", Some(9), || sup_deviation(&p, c, e, cfg, base.substream(4))),
        check("scaling_constant", None, || scaling_constant(c)),
    ]
}

fn dual(a: &Estimate, b: &Estimate, what: &str) -> Result<Outcome> {
    let z = a.z_score(b);
    Ok(pass_if(
        z < Z_MAX,
        json!({
            "quantity": what,
            "weighted": estimate("reversed-mark weighting", a),
            "alternative": estimate(if what == "ell" { "measure change" } else { "nu-circ decomposition" }, b),
            "z": z,
        }),
    ))
}

/// Mean length per color against `E[L ζ^M] / E[ζ^M]`.
fn length_per_color(p: &ModelParams, c: &CrtConstants, e: &Estimate, cfg: &RunConfig, s: RngStream) -> Result<Outcome> {
    let r = verify_crt_scaling(p, c, e, cfg.n, cfg.replicates, cfg.grid, s)?;
    let z = r.length_per_color.z_score(&r.ell);
    Ok(pass_if(
        z < Z_MAX,
        json!({
            "n": r.n,
            "replicates": r.replicates,
            "length_per_color": estimate("glued networks", &r.length_per_color),
            "ell": estimate("constants", &r.ell),
            "z": z,
        }),
    ))
}

/// Rescaled maximal height at n = 2000 against `(2 EU*/σ̂) E[sup e]`.
fn max_height(p: &ModelParams, c: &CrtConstants, e: &Estimate, cfg: &RunConfig, s: RngStream) -> Result<Outcome> {
    let r = verify_crt_scaling(p, c, e, 2000, 200, cfg.grid, s)?;
    let pred = r.predicted_max_height.value;
    let rel = (r.max_height_scaled.value - pred).abs() / pred;
    Ok(pass_if(
        rel <= HEIGHT_BAND,
        json!({
            "n": 2000,
            "replicates": 200,
            "max_height_scaled": estimate("glued networks", &r.max_height_scaled),
            "predicted": estimate("constants and excursion oracle", &r.predicted_max_height),
            "sup_excursion": estimate("random walk excursions", e),
            "relative_difference": rel,
            "band": HEIGHT_BAND,
        }),
    ))
}

/// `sup_t |H(t) − (2EU*/σ̂) e_n(t)| / sqrt(n)` decreases in n.
fn sup_deviation(p: &ModelParams, c: &CrtConstants, e: &Estimate, cfg: &RunConfig, s: RngStream) -> Result<Outcome> {
    let ns = [200usize, 800, 3200];
    let mut values = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        let r = verify_crt_scaling(p, c, e, n, 200, cfg.grid, s.substream(i as u64))?;
        values.push(r.sup_deviation);
    }
    let decreasing = values.windows(2).all(|w| w[1].value < w[0].value);
    Ok(pass_if(
        decreasing,
        json!({
            "n": ns,
            "replicates": 200,
            "sup_deviation": values.iter().map(|v| estimate("contour coupling", v)).collect::<Vec<_>>(),
        }),
    ))
}

fn scaling_constant(c: &CrtConstants) -> Result<Outcome> {
    let lhs = 2.0 * c.c.value * c.eustar().value;
    let err = (lhs - c.sigma_hat_sq.sqrt()).abs();
    Ok(pass_if(
        err <= 1e-12 * lhs.max(1.0) && c.c.value > 0.0,
        json!({
            "c": estimate("sigma_hat / (2 EU*)", &c.c),
            "sigma_hat_sq": c.sigma_hat_sq,
            "zeta": c.zeta,
            "E_zetaM": c.e_zeta_m,
            "identity_error": err,
            "flags": c.flags,
        }),
    ))
}
