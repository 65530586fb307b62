use std::fmt::Write as _;

use phylonet::analytics::{
    convergent_table, expected_m, extinction_probability, malthusian, nu_circ_pmf, simple_pext_bounds, zeta_tilt,
};
use phylonet::limits::{crt_constants, LocalBallSampler};
use phylonet::network::{contour as contour_of, edge_list_csv, to_newick, NetworkSampler};
use phylonet::RngStream;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{enclosure, estimate, solved, SuiteReport};
use crate::suites::{run_suite, Suite};

/// A command's result: always JSON, plus a text rendering for the formats
/// the command supports.
pub struct Rendered {
    pub json: Value,
    pub csv: Option<String>,
    pub newick: Option<String>,
}

impl Rendered {
    /// The text body for a non-JSON format.
    pub fn text(&self, format: Format, command: &str) -> Result<&str> {
        let t = match format {
            Format::Json => None,
            Format::Csv => self.csv.as_deref(),
            Format::Newick => self.newick.as_deref(),
        };
        t.ok_or_else(|| CliError::Usage(format!("{command} does not support --format {format:?}").to_lowercase()))
    }
}

/// Shortest round-trip rendering, with an exponent for small values.
fn num(x: f64) -> String {
    Value::from(x).to_string()
}

// Stream ids keep commands independent for a given seed.
const ANALYZE: u64 = 101;
const SIMULATE: u64 = 102;
const CONTOUR: u64 = 103;
const LOCAL_BALL: u64 = 104;

pub fn analyze(cfg: &RunConfig) -> Result<Rendered> {
    let p = &cfg.params;
    let tol = cfg.tol;
    let em = expected_m(p, tol)?;
    let pext = extinction_probability(p, tol.max(1e-13))?;
    let (lo, hi) = simple_pext_bounds(p);
    let tilt = zeta_tilt(p, tol)?;
    let lambda = malthusian(p, tol)?;
    let nu = nu_circ_pmf(p, 1e-14)?;
    let crt = crt_constants(p, RngStream::new(cfg.seed, ANALYZE), cfg.samples)?;
    let mut csv = String::from("quantity,value,error,method\n");
    let mut row = |name: &str, v: &Value| {
        let _ = writeln!(csv, "{name},{},{},{}", v["value"], v["error"], v["method"].as_str().unwrap_or(""));
    };
    let fields = [
        ("expected_m", enclosure("series", &em)),
        ("p_ext", enclosure("bisection on certified g", &pext)),
        ("zeta", solved("root of phi", tilt.zeta, tilt.phi_residual.abs())),
        ("E_zetaM", solved("pgf at zeta", tilt.e_zeta_m, tol)),
        ("sigma_hat_sq", solved("tilted offspring variance", tilt.sigma_hat_sq, tol)),
        ("lambda", solved("root of psi", lambda, tol)),
        ("eustar", estimate("smaller-error of two estimators", crt.eustar())),
        ("ell", estimate("smaller-error of two estimators", crt.ell())),
        ("C", estimate("sigma_hat / (2 EU*)", &crt.c)),
    ];
    for (name, v) in &fields {
        row(name, v);
    }
    let mut json = serde_json::Map::new();
    for (name, v) in fields {
        json.insert(name.into(), v);
    }
    json.insert("p_ext_simple_bounds".into(), json!([lo, hi]));
    json.insert(
        "nu_circ_head".into(),
        json!({
            "method": "product of 1/rho",
            "pmf": &nu.pmf[..nu.pmf.len().min(10)],
            "error": nu.tail_bound,
            "depth": nu.pmf.len(),
        }),
    );
    json.insert(
        "crt_constants".into(),
        json!({
            "eustar_weighted": estimate("reversed-mark weighting", &crt.eustar_weighted),
            "eustar_decomposed": estimate("nu-circ decomposition", &crt.eustar_decomposed),
            "ell_weighted": estimate("reversed-mark weighting", &crt.ell_weighted),
            "ell_measure_change": estimate("measure change", &crt.ell_measure_change),
            "flags": crt.flags,
        }),
    );
    Ok(Rendered {
        json: Value::Object(json),
        csv: Some(csv),
        newick: None,
    })
}

pub fn gfun_table(cfg: &RunConfig, z_step: f64, max_depth: usize) -> Result<Rendered> {
    if !(z_step > 0.0 && z_step <= 1.0) {
        return Err(CliError::Usage(format!("--z-step must lie in (0, 1], got {z_step}")));
    }
    if max_depth == 0 {
        return Err(CliError::Usage("--max-depth must be positive".into()));
    }
    let steps = (1.0 / z_step).round() as usize;
    if ((steps as f64) * z_step - 1.0).abs() > 1e-9 {
        return Err(CliError::Usage("--z-step must divide 1".into()));
    }
    let z: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let depths: Vec<usize> = (1..=max_depth).collect();
    let rows = convergent_table(&cfg.params, &z, &depths)?;
    let mut csv = String::from("depth,z,lower,upper,sup_gap,majorant\n");
    for r in &rows {
        for (i, zi) in z.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                r.depth,
                num(*zi),
                num(r.lower[i]),
                num(r.upper[i]),
                num(r.sup_gap),
                num(r.majorant)
            );
        }
    }
    Ok(Rendered {
        json: json!({"method": "modified convergents", "z_grid": z, "rows": rows}),
        csv: Some(csv),
        newick: None,
    })
}

fn network_sampler(cfg: &RunConfig) -> Result<NetworkSampler> {
    let mut s = NetworkSampler::new(&cfg.params)?;
    s.max_retries = cfg.max_retries;
    Ok(s)
}

pub fn simulate(cfg: &RunConfig) -> Result<Rendered> {
    let s = network_sampler(cfg)?;
    let g = s.sample(cfg.n, &mut RngStream::new(cfg.seed, SIMULATE).rng(), cfg.method.into())?;
    Ok(Rendered {
        csv: Some(edge_list_csv(&g)),
        newick: Some(to_newick(&g) + "\n"),
        json: serde_json::to_value(&g)?,
    })
}

pub fn contour(cfg: &RunConfig) -> Result<Rendered> {
    let s = network_sampler(cfg)?;
    let mut r = RngStream::new(cfg.seed, CONTOUR).rng();
    let g = s.sample(cfg.n, &mut r, cfg.method.into())?;
    let c = contour_of(&g, &mut r, cfg.grid)?;
    let mut csv = String::from("t,h\n");
    for (t, h) in c.t.iter().zip(&c.h) {
        let _ = writeln!(csv, "{},{}", num(*t), num(*h));
    }
    Ok(Rendered {
        json: json!({
            "n": cfg.n,
            "total_length": g.total_length(),
            "max_height": g.max_height(),
            "contour": c,
        }),
        csv: Some(csv),
        newick: None,
    })
}

pub fn local_ball(cfg: &RunConfig) -> Result<Rendered> {
    let tilt = zeta_tilt(&cfg.params, 1e-13)?;
    let mut s = LocalBallSampler::new(&cfg.params, tilt.zeta)?;
    s.focal.max_retries = cfg.max_retries;
    s.network.max_retries = cfg.max_retries;
    let b = s.sample(cfg.radius, &mut RngStream::new(cfg.seed, LOCAL_BALL).rng())?;
    let mut csv = String::from("vertex,parent,slot,spine_level,depth,mutations,length\n");
    let opt = |x: Option<usize>| x.map_or(String::new(), |v| v.to_string());
    for (i, v) in b.vertices.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{}",
            opt(v.parent.map(|x| x.0)),
            opt(v.parent.map(|x| x.1)),
            opt(v.spine_level),
            v.depth,
            v.outdegree(),
            num(v.decoration.length())
        );
    }
    Ok(Rendered {
        json: json!({
            "zeta": tilt.zeta,
            "weighted": s.focal.weighted(),
            "focal_lineages": b.n_focal_lineages(),
            "ball": b,
        }),
        csv: Some(csv),
        newick: None,
    })
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> Result<(Rendered, SuiteReport)> {
    let report = run_suite(suite, cfg);
    let mut csv = String::from("check,criterion,status\n");
    for c in &report.checks {
        let _ = writeln!(csv, "{},{},{}", c.name, c.criterion.map_or(String::new(), |x| x.to_string()), c.status.as_str());
    }
    let json = serde_json::to_value(&report)?;
    Ok((
        Rendered {
            json,
            csv: Some(csv),
            newick: None,
        },
        report,
    ))
}
