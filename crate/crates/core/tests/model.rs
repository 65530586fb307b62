use phylonet::analytics::{expected_m, g_eval, NuCirc};
use phylonet::model::{
    condition_on_mutations, paste_back_to_back, rho, sample_x_mut, simulate_observed, simulate_trajectory, summarize,
    EventKind, MarkedTrajectory, ModelParams,
};
use phylonet::stats::{chi2_gof, chi2_two_sample, counts_of, ks_two_sample, Moments};
use phylonet::{Error, RngStream};
use proptest::prelude::*;
use rand::Rng;

fn p111() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.0).unwrap()
}

fn p02() -> ModelParams {
    ModelParams::new(0.2, 0.2, 0.2).unwrap()
}

#[test]
fn rho_examples() {
    assert_eq!(rho(&p111(), 3).unwrap(), 4.0);
    assert!((rho(&p02(), 1).unwrap() - 0.4).abs() < 1e-15);
    let p = ModelParams::new(0.3, 7.0, 0.5).unwrap();
    assert_eq!(p.rho(1).unwrap(), 0.3 + 0.5);
    assert!(matches!(p.rho(0), Err(Error::InvalidParams(_) | Error::InvalidArgument(_))));
}

#[test]
fn first_event_probabilities() {
    let p = p111();
    let n = 60_000;
    let firsts = RngStream::new(11, 0).replicates(n, |r, _| {
        let mut first = None;
        let mut first_down = None;
        simulate_observed(&p, 1, r, None, |s| {
            first.get_or_insert(s.kind);
            if !s.kind.is_up() && s.state == 1 {
                first_down.get_or_insert(s.kind);
            }
        })
        .unwrap();
        (first.unwrap(), first_down.unwrap())
    });
    let births = firsts.iter().filter(|f| f.0 == EventKind::Birth).count() as f64;
    let se = (n as f64 / 3.0 * 2.0 / 3.0).sqrt();
    assert!((births - n as f64 / 3.0).abs() < 3.0 * se, "births {births}");
    // The last jump from state 1 is a mutation with probability μ/ρ_1.
    let muts = firsts.iter().filter(|f| f.1 == EventKind::Mutation).count() as f64;
    let q = 0.5;
    let se = (n as f64 * q * (1.0 - q)).sqrt();
    assert!((muts - n as f64 * q).abs() < 3.0 * se, "mutations {muts}");
}

#[test]
fn mean_mutation_count() {
    let p = p111();
    let ms = RngStream::new(12, 0).replicates(100_000, |r, _| summarize(&p, 1, r).unwrap().m as f64);
    let e = Moments::from_slice(&ms).estimate();
    let exact = std::f64::consts::E - 2.0;
    assert!(e.z_to(exact).abs() < 3.0, "{e:?}");
    assert!(expected_m(&p, 1e-12).unwrap().contains(exact));
}

#[test]
fn paths_are_well_formed_across_parameters() {
    for (i, p) in [p111(), p02(), ModelParams::new(2.0, 0.05, 0.7).unwrap()].into_iter().enumerate() {
        let ok = RngStream::new(13, i as u64).replicates(10_000, |r, j| {
            let x0 = 1 + (j % 4) as u64;
            let t = simulate_trajectory(&p, x0, r, None).unwrap();
            t.validate().is_ok() && t.initial_state == x0 && t.final_state() == 0
        });
        assert!(ok.into_iter().all(|b| b));
    }
}

#[test]
fn per_state_kind_frequencies() {
    let p = ModelParams::new(0.4, 0.3, 0.5).unwrap();
    let steps = RngStream::new(14, 0).chunked(40_000, 1000, |r, n| {
        let mut v: Vec<(u64, EventKind)> = Vec::new();
        for _ in 0..n {
            simulate_observed(&p, 1, r, None, |s| v.push((s.state, s.kind))).unwrap();
        }
        v
    });
    let steps: Vec<(u64, EventKind)> = steps.into_iter().flatten().collect();
    for k in 1..=4u64 {
        let rho = p.rho(k).unwrap();
        let probs = [
            1.0 / (1.0 + rho),
            p.mu / (1.0 + rho),
            p.alpha / (1.0 + rho),
            (k - 1) as f64 * p.beta / (1.0 + rho),
        ];
        let mut counts = [0u64; 4];
        for (s, kind) in &steps {
            if *s == k {
                counts[match kind {
                    EventKind::Birth => 0,
                    EventKind::Mutation => 1,
                    EventKind::Death => 2,
                    EventKind::Coalescence => 3,
                }] += 1;
            }
        }
        let (c, q): (Vec<u64>, Vec<f64>) = counts.iter().zip(probs).filter(|(_, q)| *q > 0.0).unzip();
        let t = chi2_gof(&c, &q);
        assert!(t.passes(0.01), "state {k}: {t:?}");
    }
}

#[test]
fn conditioning_on_one_mutation() {
    let p = p111();
    let cond = RngStream::new(15, 0).replicates(20_000, |r, _| {
        condition_on_mutations(&p, 1, r, 1_000_000).unwrap().duration()
    });
    let raw = RngStream::new(15, 1).replicates(100_000, |r, _| summarize(&p, 1, r).unwrap());
    let stratum: Vec<f64> = raw.iter().filter(|s| s.m == 1).map(|s| s.t).collect();
    let a = Moments::from_slice(&cond).estimate();
    let b = Moments::from_slice(&stratum).estimate();
    assert!(a.z_score(&b).abs() < 3.0, "{a:?} vs {b:?}");

    // Acceptance frequency of M = 0 is g(0).
    let zeros = raw.iter().filter(|s| s.m == 0).count() as f64;
    let g0 = g_eval(&p, 0.0, 1, 1e-12).unwrap().mid();
    let n = raw.len() as f64;
    assert!((zeros / n - g0).abs() < 3.0 * (g0 * (1.0 - g0) / n).sqrt());
    let t = condition_on_mutations(&p, 0, &mut RngStream::new(15, 2).rng(), 1000).unwrap();
    assert_eq!(t.mutation_count(), 0);
}

#[test]
fn conditioning_reports_exhaustion() {
    let p = p111();
    let e = condition_on_mutations(&p, 40, &mut RngStream::new(16, 0).rng(), 100).unwrap_err();
    assert!(matches!(e, Error::RetriesExhausted { attempts: 100, .. }));
}

#[test]
fn nu_circ_sampling() {
    let p = p111();
    let nu = NuCirc::new(&p, 1e-16).unwrap();
    let ks = RngStream::new(17, 0).replicates(50_000, |r, _| nu.sample(r) as f64);
    let ones = ks.iter().filter(|&&k| k == 1.0).count() as f64 / ks.len() as f64;
    let q = 0.5 / (std::f64::consts::E - 2.0);
    assert!((ones - q).abs() < 3.0 * (q * (1.0 - q) / ks.len() as f64).sqrt());
    let m = Moments::from_slice(&ks).estimate();
    assert!(m.z_to(nu.mean()).abs() < 3.0);
    for n in 1..10 {
        let ratio = nu.prob(n + 1) / nu.prob(n);
        assert!((ratio - 1.0 / p.rho(n + 1).unwrap()).abs() < 1e-12);
    }
    assert!((nu.pmf.iter().sum::<f64>() - 1.0).abs() <= 1e-14 + nu.tail_bound);
}

#[test]
fn measure_change_identity() {
    let p = p02();
    for (i, s) in [0.5f64, 0.9].into_iter().enumerate() {
        let a = RngStream::new(18, 2 * i as u64).replicates(100_000, |r, _| s.powi(summarize(&p, 1, r).unwrap().m as i32));
        let q = p.with_mu(s * p.mu).unwrap();
        let b = RngStream::new(18, 2 * i as u64 + 1).replicates(100_000, |r, _| {
            ((s - 1.0) * p.mu * summarize(&q, 1, r).unwrap().l).exp()
        });
        let (a, b) = (Moments::from_slice(&a).estimate(), Moments::from_slice(&b).estimate());
        assert!(a.overlaps(&b, 3.0), "s={s}: {a:?} vs {b:?}");
    }
}

#[test]
fn mutation_intensity() {
    // #(𝓜 ∩ [0,a]) − μ ∫_0^a X_t dt has mean zero for every a.
    let p = p02();
    let cuts = [0.5, 2.0, 8.0];
    let paths = RngStream::new(19, 0).replicates(50_000, |r, _| simulate_trajectory(&p, 1, r, None).unwrap());
    for a in cuts {
        let d: Vec<f64> = paths
            .iter()
            .map(|t| {
                let n = t.mutation_times().filter(|&u| u <= a).count() as f64;
                let integral: f64 = t.holdings().map(|(x, y, k)| k as f64 * (y.min(a) - x.min(a))).sum();
                n - p.mu * integral
            })
            .collect();
        let e = Moments::from_slice(&d).estimate();
        assert!(e.z_to(0.0).abs() < 3.0, "a={a}: {e:?}");
    }
}

#[test]
fn seen_from_a_uniform_mutation() {
    let p = p02();
    let n = 20_000;
    let pasted = RngStream::new(20, 0).replicates(n, |r, _| {
        let t = sample_x_mut(&p, r).unwrap();
        (t.state_before(0.0) as usize, -t.start_time)
    });
    // Exact M-weighted oracle: keep a raw path with probability M/cap, then
    // pick one of its mutations uniformly.
    let cap = 200.0;
    let oracle = RngStream::new(20, 1).replicates(n, |r, _| loop {
        let t = simulate_trajectory(&p, 1, r, None).unwrap();
        let m = t.mutation_count();
        assert!((m as f64) <= cap);
        if m > 0 && r.random::<f64>() < m as f64 / cap {
            let u: Vec<f64> = t.mutation_times().collect();
            let u = u[r.random_range(0..m)];
            break (t.state_before(u) as usize, u);
        }
    });
    let ka = counts_of(pasted.iter().map(|x| x.0));
    let kb = counts_of(oracle.iter().map(|x| x.0));
    let t = chi2_two_sample(&ka, &kb);
    assert!(t.passes(0.01), "K: {t:?}");
    let ta: Vec<f64> = pasted.iter().map(|x| x.1).collect();
    let tb: Vec<f64> = oracle.iter().map(|x| x.1).collect();
    let t = ks_two_sample(&ta, &tb);
    assert!(t.passes(0.01), "U: {t:?}");
}

#[test]
fn paste_examples() {
    let p = p111();
    let mut r = RngStream::new(21, 0).rng();
    let f = simulate_trajectory(&p, 2, &mut r, None).unwrap();
    let g = simulate_trajectory(&p, 2, &mut r, None).unwrap();
    let h = paste_back_to_back(&f, &g, EventKind::Death, |_| EventKind::Death).unwrap();
    assert!((h.start_time + f.duration()).abs() < 1e-12);
    assert!((h.end() - g.duration()).abs() < 1e-12);
    for i in 0..50 {
        let t = g.duration() * i as f64 / 50.0;
        assert_eq!(h.state_at(t), g.state_at(t));
    }
    let rev = paste_back_to_back(&f, &MarkedTrajectory::empty(), EventKind::Death, |_| EventKind::Death);
    // f starts at 2, so it cannot be glued to the empty path.
    assert!(rev.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversal_preserves_holdings(seed in 0u64..10_000, a in 0.05f64..2.0, b in 0.05f64..2.0, m in 0.05f64..2.0) {
        let p = ModelParams::new(a, b, m).unwrap();
        let mut r = RngStream::new(seed, 22).rng();
        let f = simulate_trajectory(&p, 1, &mut r, Some(100_000)).unwrap();
        let h = paste_back_to_back(&f, &MarkedTrajectory::empty(), EventKind::Mutation, |_| EventKind::Death).unwrap();
        prop_assert!(h.validate().is_ok());
        prop_assert!((h.duration() - f.duration()).abs() <= 1e-12 * f.duration().max(1.0));
        prop_assert!((h.integral() - f.integral()).abs() <= 1e-9 * f.integral().max(1.0));
        prop_assert_eq!(h.events.len(), f.events.len());
        // Reversed down-jumps are births and vice versa.
        let ups = f.events.iter().filter(|e| e.kind.is_up()).count();
        let downs = h.events.iter().filter(|e| !e.kind.is_up()).count();
        prop_assert_eq!(ups + 1, downs);
    }
}
