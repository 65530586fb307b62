use phylonet::limits::gw_size_probabilities;
use phylonet::network::{sample_genealogy_tree, GluedNetwork, NetworkMethod, NetworkSampler, TreeMethod};
use phylonet::stats::{chi2_gof, chi2_two_sample, counts_of, ks_two_sample};
use phylonet::{Result, RngStream};
use serde_json::json;

use super::{check, pass_if, Outcome, ALPHA};
use crate::config::RunConfig;
use crate::report::{test_result, Check};

const STREAM: u64 = 3;

pub(super) fn run(cfg: &RunConfig) -> Vec<Check> {
    let base = RngStream::new(cfg.seed, STREAM);
    let sampler = match NetworkSampler::new(&cfg.params) {
        Ok(s) => s,
        Err(e) => return vec![check("network_sampler", None, || Err(e))],
    };
    let s = &sampler;
    let n_nets = cfg.n.min(300);
    vec![
        check("dwass_small_sizes", Some(7), || dwass_small(s, 2 * cfg.samples, base.substream(0))),
        check("dwass_local_limit", Some(7), || dwass_limit(s)),
        check("tilted_vs_direct", Some(8), || tilted_vs_direct(s, cfg.samples / 20, base.substream(1))),
        check("distance_is_height", Some(8), || distances(s, n_nets, base.substream(2))),
        check("length_is_sum_of_decorations", Some(8), || lengths(s, n_nets, base.substream(3))),
        check("tree_methods_agree", None, || tree_methods(s, cfg.samples / 2, base.substream(4))),
        check("uniform_point_colors", None, || uniform_colors(s, n_nets, base.substream(5))),
    ]
}

/// Exact size law of the tilted tree against freely grown trees.
fn dwass_small(s: &NetworkSampler, n: usize, st: RngStream) -> Result<Outcome> {
    let t = &s.tilted;
    let n_max = 8;
    let sizes = st.replicates(n, |r, _| {
        let (mut pending, mut size) = (1usize, 0usize);
        while pending > 0 && size <= n_max {
            pending = pending - 1 + t.sample(r);
            size += 1;
        }
        if pending == 0 {
            size
        } else {
            n_max + 1
        }
    });
    let table = gw_size_probabilities(t, n_max);
    let total = n as f64;
    let mut ok = true;
    let mut rows = Vec::new();
    for p in &table {
        let freq = sizes.iter().filter(|&&x| x == p.n).count() as f64 / total;
        let se = (p.value * (1.0 - p.value) / total).sqrt();
        let z = (freq - p.value).abs() / se;
        ok &= z < super::Z_MAX;
        rows.push(json!({"n": p.n, "exact": p.value, "frequency": freq, "z": z}));
    }
    Ok(pass_if(ok, json!({"trees": n, "sizes": rows})))
}

/// `P(|T| = n) · n^{3/2} sqrt(2π σ̂²) → 1`.
fn dwass_limit(s: &NetworkSampler) -> Result<Outcome> {
    let ns = [250usize, 500, 1000, 2000];
    let table = gw_size_probabilities(&s.tilted, 2000);
    let sigma2 = s.tilted.variance();
    let ratios: Vec<f64> = ns
        .iter()
        .map(|&n| table[n - 1].value * (n as f64).powf(1.5) * (2.0 * std::f64::consts::PI * sigma2).sqrt())
        .collect();
    let monotone = ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    let flagged = ns.iter().any(|&n| table[n - 1].flagged);
    let ok = (ratios[3] - 1.0).abs() < 0.1 && monotone && !flagged;
    Ok(pass_if(
        ok,
        json!({"n": ns, "ratio": ratios, "sigma_hat_sq": sigma2, "monotone": monotone, "flagged": flagged}),
    ))
}

fn tilted_vs_direct(s: &NetworkSampler, n: usize, st: RngStream) -> Result<Outcome> {
    let draw = |method: NetworkMethod, i: u64| {
        st.substream(i)
            .replicates(n, |r, _| {
                let g = s.sample(4, r, method)?;
                Ok((g.total_length(), g.max_height(), g.tree.height() * 4 + g.tree.max_outdegree()))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()
    };
    let a = draw(NetworkMethod::Tilted, 0)?;
    let b = draw(NetworkMethod::Direct, 1)?;
    let col = |v: &[(f64, f64, usize)], f: fn(&(f64, f64, usize)) -> f64| v.iter().map(f).collect::<Vec<f64>>();
    let length = ks_two_sample(&col(&a, |x| x.0), &col(&b, |x| x.0));
    let height = ks_two_sample(&col(&a, |x| x.1), &col(&b, |x| x.1));
    let shape = chi2_two_sample(&counts_of(a.iter().map(|x| x.2)), &counts_of(b.iter().map(|x| x.2)));
    let ok = [length, height, shape].iter().all(|t| t.passes(ALPHA));
    Ok(pass_if(
        ok,
        json!({
            "n": 4,
            "samples_per_side": n,
            "length_ks": test_result(&length),
            "max_height_ks": test_result(&height),
            "tree_shape_chi2": test_result(&shape),
        }),
    ))
}

fn networks(s: &NetworkSampler, n: usize, count: usize, st: RngStream) -> Result<Vec<GluedNetwork>> {
    st.replicates(count, |r, _| s.sample(n, r, NetworkMethod::Tilted))
        .into_iter()
        .collect()
}

/// Shortest-path distance from the root against the time-height, on
/// uniform points and on every mutation point.
fn distances(s: &NetworkSampler, n: usize, st: RngStream) -> Result<Outcome> {
    let nets = networks(s, n, 20, st.substream(0))?;
    let per_net = st
        .substream(1)
        .replicates(nets.len(), |r, i| {
            let g = &nets[i];
            let root = g.root_point();
            let dist = g.distances_from(&root)?;
            let mut worst: f64 = 0.0;
            let mut points = 0;
            for _ in 0..50 {
                let x = g.uniform_point(r);
                let h = g.height(&x);
                worst = worst.max((g.distance_via(&dist, &root, &x) - h).abs() / h.max(1.0));
                points += 1;
            }
            for (v, d) in g.decorations.iter().enumerate() {
                for i in 0..d.mutation_count() {
                    let x = g.mutation_point(v, i);
                    let h = g.height(&x);
                    worst = worst.max((g.distance_via(&dist, &root, &x) - h).abs() / h.max(1.0));
                    points += 1;
                }
            }
            Ok((worst, points))
        })
        .into_iter()
        .collect::<Result<Vec<(f64, usize)>>>()?;
    let worst = per_net.iter().map(|x| x.0).fold(0.0, f64::max);
    let points: usize = per_net.iter().map(|x| x.1).sum();
    Ok(pass_if(
        worst <= 1e-12,
        json!({"networks": nets.len(), "colors": n, "points": points, "max_relative_error": worst}),
    ))
}

fn lengths(s: &NetworkSampler, n: usize, st: RngStream) -> Result<Outcome> {
    let nets = networks(s, n, 20, st)?;
    let mut worst: f64 = 0.0;
    let mut worst_graph: f64 = 0.0;
    for g in &nets {
        let sum: f64 = g.decorations.iter().map(|d| d.trajectory.integral()).sum();
        worst = worst.max((g.total_length() - sum).abs() / sum);
        worst_graph = worst_graph.max((g.graph_length() - sum).abs() / sum);
    }
    Ok(pass_if(
        worst <= 1e-12 && worst_graph <= 1e-12,
        json!({
            "networks": nets.len(),
            "max_relative_error": worst,
            "max_relative_error_edge_sum": worst_graph,
        }),
    ))
}

fn tree_methods(s: &NetworkSampler, n: usize, st: RngStream) -> Result<Outcome> {
    let draw = |method, i: u64| {
        st.substream(i)
            .chunked(n, 5000, |r, m| {
                (0..m)
                    .map(|_| sample_genealogy_tree(&s.tilted, 6, r, method, 1_000_000).map(|t| t.height() * 6 + t.max_outdegree()))
                    .collect::<Result<Vec<usize>>>()
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .map(|v| v.concat())
    };
    let a = draw(TreeMethod::Cycle, 0)?;
    let b = draw(TreeMethod::Rejection, 1)?;
    let t = chi2_two_sample(&counts_of(a), &counts_of(b));
    Ok(pass_if(t.passes(ALPHA), json!({"n": 6, "samples_per_side": n, "test": test_result(&t)})))
}

fn uniform_colors(s: &NetworkSampler, n: usize, st: RngStream) -> Result<Outcome> {
    let g = s.sample(n.min(50), &mut st.rng(), NetworkMethod::Tilted)?;
    let points = 50_000;
    let colors = st
        .substream(0)
        .chunked(points, 5000, |r, m| (0..m).map(|_| g.uniform_point(r).vertex).collect::<Vec<_>>())
        .concat();
    let probs: Vec<f64> = g.decorations.iter().map(|d| d.length() / g.total_length()).collect();
    let t = chi2_gof(&counts_of(colors), &probs);
    Ok(pass_if(t.passes(ALPHA), json!({"colors": g.n_colors(), "points": points, "test": test_result(&t)})))
}
