use phylonet::analytics::{critical_mu, offspring_pmf, zeta_tilt, TiltedPmf};
use phylonet::model::{summarize, EventKind, ModelParams};
use phylonet::network::{
    contour, decorate, distance, edge_list_csv, sample_genealogy_tree, to_newick, GluedNetwork, NetworkMethod,
    NetworkSampler, TreeMethod,
};
use phylonet::stats::{chi2_gof, chi2_two_sample, counts_of, ks_one_sample, ks_two_sample, Moments};
use phylonet::{Error, RngStream};

fn p02() -> ModelParams {
    ModelParams::new(0.2, 0.2, 0.2).unwrap()
}

fn near_critical() -> ModelParams {
    ModelParams::new(0.5, 0.5, critical_mu(0.5, 0.5, 1e-12).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn sample(n: usize, seed: u64) -> GluedNetwork {
    let s = NetworkSampler::new(&p02()).unwrap();
    s.sample(n, &mut RngStream::new(seed, 0).rng(), NetworkMethod::Tilted).unwrap()
}

#[test]
fn glued_network_invariants() {
    for (seed, n) in [(1, 1), (2, 5), (3, 60), (4, 300)] {
        let g = sample(n, seed);
        assert_eq!(g.n_colors(), n);
        let sum_l: f64 = g.decorations.iter().map(|d| d.trajectory.integral()).sum();
        assert!(rel(g.total_length(), sum_l) < 1e-12);
        assert!(rel(g.graph_length(), sum_l) < 1e-10);
        assert!(g.edges.iter().all(|e| e.weight >= 0.0));
        for d in &g.decorations {
            d.check_consistency().unwrap();
        }
        // Independent recount of nodes and edges from the trajectories.
        let (mut nodes, mut edges) = (0, n - 1);
        for d in &g.decorations {
            let count = |k: EventKind| d.trajectory.events.iter().filter(|e| e.kind == k).count();
            let (b, c) = (count(EventKind::Birth), count(EventKind::Coalescence));
            nodes += 2 + 3 * b + c;
            edges += (1 + b) + (b + c) + b + c;
        }
        assert_eq!(g.node_count(), nodes);
        assert_eq!(g.edges.len(), edges);
        assert!(g.edges.len() <= 2 * g.decorations.iter().map(|d| d.trajectory.events.len()).sum::<usize>() + 2 * n);
    }
}

#[test]
fn distances_are_ancestral_heights() {
    let g = sample(80, 5);
    let root = g.root_point();
    let from_root = g.distances_from(&root).unwrap();
    let mut r = RngStream::new(5, 1).rng();
    for _ in 0..100 {
        let x = g.uniform_point(&mut r);
        let d = g.distance_via(&from_root, &root, &x);
        assert!((d - g.height(&x)).abs() < 1e-9, "{d} vs {}", g.height(&x));
    }
    for i in 0..g.decorations[0].mutation_count() {
        let m = g.mutation_point(0, i);
        let t = g.decorations[0].mutation_points[i].1 - g.decorations[0].trajectory.start_time;
        assert!((distance(&g, &root, &m).unwrap() - t).abs() < 1e-12);
    }
    for _ in 0..30 {
        let [a, b, c] = [0; 3].map(|_| g.uniform_point(&mut r));
        let ab = distance(&g, &a, &b).unwrap();
        let ba = distance(&g, &b, &a).unwrap();
        let bc = distance(&g, &b, &c).unwrap();
        let ac = distance(&g, &a, &c).unwrap();
        assert!((ab - ba).abs() < 1e-9);
        assert!(ac <= ab + bc + 1e-9);
        assert!(ab.is_finite());
    }
    assert_eq!(distance(&g, &root, &root).unwrap(), 0.0);
}

#[test]
fn uniform_points_follow_length() {
    let g = sample(30, 6);
    let mut r = RngStream::new(6, 1).rng();
    let n = 60_000;
    let pts: Vec<_> = (0..n).map(|_| g.uniform_point(&mut r)).collect();
    let probs: Vec<f64> = g.decorations.iter().map(|d| d.length() / g.total_length()).collect();
    let t = chi2_gof(&counts_of(pts.iter().map(|p| p.vertex)), &probs);
    assert!(t.passes(0.01), "{t:?}");
    // Offsets on the longest lineage are uniform.
    let (v, l, len) = g
        .decorations
        .iter()
        .enumerate()
        .flat_map(|(v, d)| d.lineages.iter().enumerate().map(move |(l, x)| (v, l, x.length())))
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap();
    let offs: Vec<f64> = pts.iter().filter(|p| p.vertex == v && p.lineage == l).map(|p| p.offset).collect();
    let t = ks_one_sample(&offs, |x| (x / len).clamp(0.0, 1.0));
    assert!(t.passes(0.01), "{t:?}");
    let frac = pts.iter().filter(|p| p.vertex == 0).count() as f64 / n as f64;
    let q = probs[0];
    assert!((frac - q).abs() < 3.0 * (q * (1.0 - q) / n as f64).sqrt() + 1e-12);
}

fn tilted(params: &ModelParams) -> TiltedPmf {
    let s = NetworkSampler::new(params).unwrap();
    s.tilted
}

#[test]
fn tree_small_cases() {
    let t = tilted(&p02());
    let mut r = RngStream::new(7, 0).rng();
    let one = sample_genealogy_tree(&t, 1, &mut r, TreeMethod::Cycle, 1000).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one.outdegree(0), 0);
    for method in [TreeMethod::Cycle, TreeMethod::Rejection] {
        let two = sample_genealogy_tree(&t, 2, &mut r, method, 1000).unwrap();
        assert_eq!(two.children, vec![vec![1], vec![]]);
    }
    assert!(matches!(
        sample_genealogy_tree(&t, 0, &mut r, TreeMethod::Cycle, 10),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn tree_methods_agree() {
    let t = tilted(&p02());
    let draw = |method, stream: u64| {
        RngStream::new(8, stream).chunked(100_000, 5000, |r, n| {
            (0..n)
                .map(|_| {
                    let tr = sample_genealogy_tree(&t, 6, r, method, 1_000_000).unwrap();
                    tr.height() * 6 + tr.max_outdegree()
                })
                .collect::<Vec<_>>()
        })
    };
    let a: Vec<usize> = draw(TreeMethod::Cycle, 0).into_iter().flatten().collect();
    let b: Vec<usize> = draw(TreeMethod::Rejection, 1).into_iter().flatten().collect();
    let t = chi2_two_sample(&counts_of(a), &counts_of(b));
    assert!(t.passes(0.01), "{t:?}");
}

#[test]
fn tilted_and_direct_networks_agree() {
    let p = near_critical();
    let s = NetworkSampler::new(&p).unwrap();
    let a = RngStream::new(9, 0).replicates(3000, |r, _| s.sample(4, r, NetworkMethod::Tilted).unwrap().total_length());
    let b = RngStream::new(9, 1).replicates(3000, |r, _| s.sample(4, r, NetworkMethod::Direct).unwrap().total_length());
    let t = ks_two_sample(&a, &b);
    assert!(t.passes(0.01), "{t:?}");
}

#[test]
fn direct_sampling_gives_up_loudly() {
    let mut s = NetworkSampler::new(&p02()).unwrap();
    s.max_retries = 10;
    let e = s.sample(200, &mut RngStream::new(10, 0).rng(), NetworkMethod::Direct).unwrap_err();
    assert!(e.to_string().contains("tilted"), "{e}");
}

#[test]
fn decoration_length_given_one_mutation() {
    let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
    let a = RngStream::new(11, 0).replicates(20_000, |r, _| decorate(&p, 1, r, 1_000_000).unwrap().length());
    let raw = RngStream::new(11, 1).replicates(100_000, |r, _| summarize(&p, 1, r).unwrap());
    let b: Vec<f64> = raw.iter().filter(|s| s.m == 1).map(|s| s.l).collect();
    let (a, b) = (Moments::from_slice(&a).estimate(), Moments::from_slice(&b).estimate());
    assert!(a.z_score(&b).abs() < 3.0, "{a:?} vs {b:?}");
    let d = decorate(&p, 0, &mut RngStream::new(11, 2).rng(), 1000).unwrap();
    assert!(d.trajectory.events.iter().all(|e| e.kind != EventKind::Mutation));
}

#[test]
fn decorations_need_reachable_counts() {
    let s = NetworkSampler::new(&p02()).unwrap();
    let e = s.pool().decorations(&[s.pmf.probs.len() + 50], &mut RngStream::new(12, 0).rng()).unwrap_err();
    assert!(matches!(e, Error::LowAcceptance { .. }), "{e}");
}

#[test]
fn contour_examples() {
    let g = sample(40, 13);
    let mut r = RngStream::new(13, 1).rng();
    let c = contour(&g, &mut r, 4096).unwrap();
    assert_eq!(c.h[0], 0.0);
    assert!(c.h.iter().all(|&h| h >= 0.0));
    let t_max = g
        .decorations
        .iter()
        .map(|d| d.trajectory.duration())
        .fold(0.0, f64::max);
    assert!(c.resolution <= 2.0 * t_max);
    let max_h = c.h.iter().copied().fold(0.0, f64::max);
    assert!(max_h <= g.max_height() + 1e-9);
    assert!(g.max_height() - max_h <= c.resolution + 1e-9, "{} vs {max_h}", g.max_height());
    assert!(contour(&g, &mut r, 1).is_err());
    // The tree height process is the color-tree depth in traversal order.
    let depths = g.tree.depths();
    assert!(c.tree_h.iter().all(|&d| depths.contains(&(d as usize))));
}

#[test]
fn exports_round_trip() {
    let g = sample(25, 14);
    let json = serde_json::to_string(&g).unwrap();
    let back: GluedNetwork = serde_json::from_str(&json).unwrap();
    assert_eq!(back.decorations, g.decorations);
    assert_eq!(back.node_times, g.node_times);
    assert_eq!(serde_json::to_string(&back).unwrap(), json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys.len(), 3);
    for k in ["tree", "decorations", "glue"] {
        assert!(keys.contains(&k));
    }

    let csv = edge_list_csv(&g);
    assert_eq!(csv.lines().count(), g.edges.len() + 1);
    assert!(csv.starts_with("source,target,weight,source_time,target_time,kind"));

    let nwk = to_newick(&g);
    assert!(nwk.ends_with(';'));
    assert_eq!(nwk.matches('(').count(), nwk.matches(')').count());
    let n_coal: usize = g
        .decorations
        .iter()
        .map(|d| d.trajectory.events.iter().filter(|e| e.kind == EventKind::Coalescence).count())
        .sum();
    // Every reticulation label appears twice: once in full, once as a leaf.
    for k in 1..=n_coal {
        let label = format!("#H{k}:");
        assert_eq!(nwk.matches(&label).count(), 2, "{label}");
    }
}

#[test]
fn tree_offspring_law_is_tilted() {
    let p = p02();
    let tilt = zeta_tilt(&p, 1e-12).unwrap();
    let pmf = offspring_pmf(&p, 200, 1e-15).unwrap();
    let t = TiltedPmf::from_pmf(&pmf, tilt.zeta, tilt.e_zeta_m);
    assert!((t.mean() - 1.0).abs() < 1e-8);
    assert!((t.variance() - tilt.sigma_hat_sq).abs() < 1e-6);
    let mut r = RngStream::new(15, 0).rng();
    let xs: Vec<usize> = (0..50_000).map(|_| t.sample(&mut r)).collect();
    let g = chi2_gof(&counts_of(xs), &t.probs);
    assert!(g.passes(0.01), "{g:?}");
}
