use std::process::{Command, Output};

fn phylonet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phylonet"))
        .args(args)
        .env_remove("PHYLONET_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON object")
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("phylonet-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let out = phylonet(&["verify", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_parameters_are_usage_errors() {
    assert_eq!(phylonet(&["analyze", "--mu", "-1"]).status.code(), Some(2));
    assert_eq!(phylonet(&["analyze", "--samples", "10"]).status.code(), Some(2));
    assert_eq!(phylonet(&["analyze", "--format", "newick"]).status.code(), Some(2));
    assert_eq!(phylonet(&["gfun-table", "--z-step", "0.3"]).status.code(), Some(2));
}

#[test]
fn retry_exhaustion_is_a_numeric_failure() {
    // Direct sampling of a large network almost never hits the size.
    let out = phylonet(&["simulate", "--method", "direct", "--n", "5000", "--max-retries", "200"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tilted"));
}

#[test]
fn analyze_reference_values() {
    let out = phylonet(&["analyze", "--alpha", "1", "--beta", "1", "--mu", "1", "--samples", "5000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "analyze");
    let r = &v["result"];
    assert!((r["expected_m"]["value"].as_f64().unwrap() - (std::f64::consts::E - 2.0)).abs() < 1e-10);
    assert_eq!(r["p_ext"]["value"], 1.0);
    assert!(r["lambda"]["value"].as_f64().unwrap() < 0.0);
    // Every estimate carries its provenance.
    for k in ["expected_m", "p_ext", "zeta", "sigma_hat_sq", "lambda", "eustar", "ell", "C", "nu_circ_head"] {
        assert!(r[k]["method"].is_string(), "{k}");
        assert!(r[k].get("error").is_some(), "{k}");
        assert!(r[k].get("n_samples").is_some() || r[k].get("depth").is_some(), "{k}");
    }

    let v = json(&phylonet(&["analyze", "--samples", "5000"]));
    let r = &v["result"];
    assert!((r["expected_m"]["value"].as_f64().unwrap() - 5.6965).abs() < 1e-4);
    let q = r["p_ext"]["value"].as_f64().unwrap();
    assert!((0.23852..=0.34).contains(&q));
    assert!(r["lambda"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn analyze_at_criticality() {
    let mu = phylonet::analytics::critical_mu(0.5, 0.5, 1e-13).unwrap().to_string();
    let v = json(&phylonet(&["analyze", "--alpha", "0.5", "--beta", "0.5", "--mu", &mu, "--samples", "5000"]));
    let r = &v["result"];
    assert!(r["lambda"]["value"].as_f64().unwrap().abs() < 1e-6);
    assert!((r["zeta"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn config_file_and_flag_precedence() {
    let path = scratch("run.conf");
    std::fs::write(&path, "# reference set\nalpha = 1\nbeta = 1\nmu = 1\nsamples = 3000\nseed = 9\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&phylonet(&["analyze", "--config", p]));
    assert_eq!(v["config"]["alpha"], 1.0);
    assert_eq!(v["config"]["seed"], 9);
    let v = json(&phylonet(&["analyze", "--config", p, "--alpha", "0.5"]));
    assert_eq!(v["config"]["alpha"], 0.5);
    assert_eq!(v["config"]["mu"], 1.0);
    std::fs::write(&path, "alpha: 1\n").unwrap();
    assert_eq!(phylonet(&["analyze", "--config", p]).status.code(), Some(2));
    assert_eq!(phylonet(&["analyze", "--config", "/nonexistent/x.conf"]).status.code(), Some(2));
}

#[test]
fn gfun_table_csv() {
    let out = phylonet(&["gfun-table", "--alpha", "1", "--beta", "1", "--mu", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("depth,z,lower,upper,sup_gap,majorant"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20 * 11);
    for r in &rows {
        assert!(r[2] <= r[3] && r[4] <= r[5] * (1.0 + 1e-12));
    }
    let gaps: Vec<f64> = rows.iter().step_by(11).map(|r| r[4]).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    assert!(gaps[19] < 1e-15);
}

#[test]
fn simulate_formats_and_out_path() {
    let path = scratch("net.json");
    let out = phylonet(&["simulate", "--n", "40", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["decorations"].as_array().unwrap().len(), 40);

    let csv = String::from_utf8(phylonet(&["simulate", "--n", "40", "--format", "csv"]).stdout).unwrap();
    assert!(csv.starts_with("source,target,weight,"));
    let nwk = String::from_utf8(phylonet(&["simulate", "--n", "40", "--format", "newick"]).stdout).unwrap();
    assert!(nwk.trim_end().ends_with(';'));

    // Relative --out paths resolve against the output directory variable.
    let dir = scratch("outdir");
    std::fs::create_dir_all(&dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_phylonet"))
        .args(["simulate", "--n", "5", "--out", "rel.json"])
        .env("PHYLONET_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("rel.json").exists());
}

#[test]
fn contour_and_local_ball() {
    let csv = String::from_utf8(phylonet(&["contour", "--n", "60", "--grid", "64", "--format", "csv"]).stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,h"));
    assert_eq!(lines.count(), 64);
    let v = json(&phylonet(&["local-ball", "--radius", "2"]));
    assert_eq!(v["result"]["ball"]["r"], 2);
    assert!(v["result"]["focal_lineages"].as_u64().unwrap() >= 1);
}

#[test]
fn verify_reports_partial_results_and_exit_status() {
    let out = phylonet(&["verify", "--suite", "model", "--alpha", "1", "--beta", "1", "--mu", "1", "--samples", "3000"]);
    let v = json(&out);
    let checks = v["result"]["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    let passed = v["result"]["passed"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 1 }));
    for c in checks {
        assert!(["pass", "fail", "skip"].contains(&c["status"].as_str().unwrap()));
    }
}
