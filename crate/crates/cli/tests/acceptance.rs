//! Acceptance criteria 1–11. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use phylonet::analytics::{convergent_table, expected_m, extinction_probability};
use phylonet::ModelParams;
use phylonet_cli::config::RunConfig;
use phylonet_cli::report::{Status, SuiteReport};
use phylonet_cli::suites::{run_suite, Suite};

struct Line {
    criterion: u8,
    passed: bool,
    summary: String,
}

fn p111() -> ModelParams {
    ModelParams::new(1.0, 1.0, 1.0).unwrap()
}

fn p02() -> ModelParams {
    ModelParams::new(0.2, 0.2, 0.2).unwrap()
}

/// Summary of the suite's checks tagged with `criterion`. At least one must
/// have run and none may have failed.
fn from_suite(report: &SuiteReport, criterion: u8) -> (bool, String) {
    let checks: Vec<_> = report.for_criterion(criterion).collect();
    let ran = checks.iter().filter(|c| c.status != Status::Skip).count();
    let ok = ran > 0 && checks.iter().all(|c| c.status != Status::Fail);
    let parts: Vec<String> = checks.iter().map(|c| format!("{}={}", c.name, c.status.as_str())).collect();
    (ok, parts.join(" "))
}

/// Mean wall time of `f` over `reps` calls.
fn mean_time(reps: u32, mut f: impl FnMut()) -> Duration {
    let t = Instant::now();
    for _ in 0..reps {
        f();
    }
    t.elapsed() / reps
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn line(criterion: u8, (ok, checks): (bool, String), extra: &str, within: bool) -> Line {
    Line {
        criterion,
        passed: ok && within,
        summary: format!("{checks}; {extra}"),
    }
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_phylonet"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

/// Byte-identical JSON across repeated runs and worker counts.
fn reproducibility() -> Line {
    let cases: [&[&str]; 5] = [
        &["analyze", "--samples", "20000"],
        &["simulate", "--n", "300"],
        &["contour", "--n", "200", "--grid", "512"],
        &["local-ball", "--radius", "2"],
        &["verify", "--suite", "model", "--samples", "4000", "--alpha", "1", "--beta", "1", "--mu", "1"],
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for args in cases {
        let runs: Vec<(i32, Vec<u8>)> = ["1", "4", "4", "2"]
            .iter()
            .map(|w| {
                let mut a = args.to_vec();
                a.extend(["--seed", "7", "--workers", w]);
                run_cli(&a)
            })
            .collect();
        let same = runs.windows(2).all(|w| w[0] == w[1]);
        let json_ok = serde_json::from_slice::<serde_json::Value>(&runs[0].1)
            .map(|v| v["schema_version"].is_u64())
            .unwrap_or(false);
        ok &= same && json_ok && runs[0].0 != 2 && runs[0].0 != 3;
        notes.push(format!("{}={}", args[0], if same { "identical" } else { "DIFFERENT" }));
    }
    Line {
        criterion: 11,
        passed: ok,
        summary: format!("{} over workers 1,4,4,2", notes.join(" ")),
    }
}

fn main() {
    let cfg02 = RunConfig::default().with_params(p02());
    let cfg111 = RunConfig::default().with_params(p111());
    let mut lines = Vec::new();

    let (analytics, t_an) = timed(|| run_suite(Suite::Analytics, &cfg02));
    let t_em = [p111(), p02()].map(|p| mean_time(1000, || {
        std::hint::black_box(expected_m(&p, 1e-12).unwrap());
    }));
    let within = t_em.iter().all(|t| *t < Duration::from_millis(1));
    lines.push(line(1, from_suite(&analytics, 1), &format!("E[M] mean time {:?}, {:?}", t_em[0], t_em[1]), within));

    let z: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let depths: Vec<usize> = (1..=20).collect();
    let (_, t_cf) = timed(|| {
        for p in [p111(), p02()] {
            convergent_table(&p, &z, &depths).unwrap();
        }
    });
    let within = t_cf < Duration::from_secs(1);
    lines.push(line(2, from_suite(&analytics, 2), &format!("tables in {t_cf:?}"), within));

    let (_, t_ext) = timed(|| {
        for p in [p111(), p02()] {
            extinction_probability(&p, 1e-12).unwrap();
        }
    });
    let within = t_ext < Duration::from_secs(1);
    lines.push(line(3, from_suite(&analytics, 3), &format!("solved in {t_ext:?}"), within));
    lines.push(line(4, from_suite(&analytics, 4), &format!("analytics suite {t_an:.1?}"), true));

    let (model, t_model) = timed(|| run_suite(Suite::Model, &cfg111));
    let note = format!("params (1,1,1), seed 42, model suite {t_model:.1?}");
    lines.push(line(5, from_suite(&model, 5), &note, true));
    lines.push(line(6, from_suite(&model, 6), &note, true));

    let (network, t_net) = timed(|| run_suite(Suite::Network, &cfg02));
    let within = t_net < Duration::from_secs(60);
    lines.push(line(7, from_suite(&network, 7), &format!("network suite {t_net:.1?}"), within));
    lines.push(line(8, from_suite(&network, 8), &format!("network suite {t_net:.1?}"), true));

    let (crt, t_crt) = timed(|| run_suite(Suite::Crt, &cfg02));
    lines.push(line(9, from_suite(&crt, 9), &format!("crt suite {t_crt:.1?}"), true));

    let (local, t_local) = timed(|| run_suite(Suite::Local, &cfg02));
    lines.push(line(10, from_suite(&local, 10), &format!("local suite {t_local:.1?}"), true));

    lines.push(reproducibility());

    println!();
    for l in &lines {
        println!(
            "criterion {:>2}: {} - {}",
            l.criterion,
            if l.passed { "PASS" } else { "FAIL" },
            l.summary
        );
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("acceptance: {}/{} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
