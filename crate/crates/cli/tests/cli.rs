use std::path::PathBuf;
use std::process::{Command, Output};

use mupricing::sampling::random_dmr_instance;
use mupricing_cli::InstanceFile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn instance(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "instances", name]
        .iter()
        .collect();
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mupricing"))
        .args(args)
        .env_remove("MUPRICING_INSTANCE")
        .output()
        .unwrap()
}

fn report(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn check_dmr_verdicts() {
    let r = report(&["check-dmr", "--instance", &instance("classification.json")]);
    let rows = r["result"]["marginals"].as_array().unwrap();
    let verdict = |i: usize| (rows[i]["dmr"].as_bool().unwrap(), rows[i]["regular"].as_bool().unwrap());
    assert_eq!(verdict(0), (true, false));
    assert_eq!(verdict(1), (false, true));
    assert_eq!(verdict(2), (true, true));
    assert!(verdict(3).0);
    assert!(!rows[1]["witness"].is_null());
    assert_eq!(r["result"]["all_dmr"], false);
}

#[test]
fn revenue_examples() {
    let r = report(&["revenue", "--instance", &instance("uniform_k1.json"), "--prices", "0.5"]);
    assert!((f(&r["result"]["revenue"]) - 0.25).abs() < 1e-12);
    let r = report(&["revenue", "--instance", &instance("uniform_k2.json"), "--prices", "0,0"]);
    assert_eq!(f(&r["result"]["revenue"]), 0.0);
    let r = report(&[
        "revenue",
        "--instance",
        &instance("uniform_k2.json"),
        "--prices",
        "0.4,0.7",
    ]);
    assert!((f(&r["result"]["revenue"]) - 0.3475).abs() < 1e-12);
    assert!(f(&r["result"]["integration_delta"]).abs() < 1e-8);
    assert_eq!(r["result"]["sigma"], serde_json::json!([0, 0]));
}

#[test]
fn optimize_modes() {
    let r = report(&["optimize", "--instance", &instance("uniform_k1.json")]);
    assert!((f(&r["result"]["p_star"][0]) - 0.5).abs() < 1e-6);
    assert!((f(&r["result"]["rev_star"]) - 0.25).abs() < 1e-12);
    assert_eq!(r["result"]["certified"], true);

    let k2 = report(&["optimize", "--instance", &instance("uniform_k2.json"), "--k2"]);
    let grad = report(&["optimize", "--instance", &instance("uniform_k2.json")]);
    let grid = report(&["optimize", "--instance", &instance("uniform_k2.json"), "--grid"]);
    assert_eq!(k2["result"]["method"], "k2");
    assert_eq!(grid["result"]["method"], "grid");
    let (a, b, c) = (
        f(&k2["result"]["rev_star"]),
        f(&grad["result"]["rev_star"]),
        f(&grid["result"]["rev_star"]),
    );
    assert!((a - b).abs() < 1e-6);
    assert!(b >= c - 1e-12 && b - c <= 2.0 * f(&grid["result"]["lattice_gap"]) + 1e-12);

    // k = 3 ignores --k2
    let r = report(&["optimize", "--instance", &instance("mixed_k3.json"), "--k2"]);
    assert_eq!(r["result"]["method"], "gradient");
}

#[test]
fn optimize_flags_non_dmr_input() {
    let r = report(&[
        "optimize",
        "--instance",
        &instance("classification.json"),
        "--restarts",
        "2",
    ]);
    assert_eq!(r["result"]["certified"], false);
}

#[test]
fn oracle_reports() {
    let r = report(&["oracle", "--instance", &instance("two_menu_types.json")]);
    assert!((f(&r["result"]["lp_revenue"]) - 2.5).abs() < 1e-6);
    assert!((f(&r["result"]["deterministic_revenue"]) - 7.0 / 3.0).abs() < 1e-6);
    assert!((f(&r["result"]["determinism_gap"]) - 1.0 / 6.0).abs() < 1e-6);

    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.json");
    std::fs::write(&single, r#"{"discrete": {"types": [[2.0, 3]], "probs": [1.0]}}"#).unwrap();
    let r = report(&["oracle", "--instance", single.to_str().unwrap()]);
    assert!(f(&r["result"]["determinism_gap"]).abs() < 1e-9);
    assert!((f(&r["result"]["lp_revenue"]) - 6.0).abs() < 1e-9);
}

#[test]
fn simulate_writes_csv_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trace.csv");
    let args = [
        "simulate",
        "--instance",
        &instance("uniform_k2.json"),
        "--strategy",
        "two-point",
        "--rounds",
        "3000",
        "--seed",
        "8",
        "--out",
        csv.to_str().unwrap(),
    ];
    let a = run(&args);
    let text_a = std::fs::read_to_string(&csv).unwrap();
    let b = run(&args);
    let text_b = std::fs::read_to_string(&csv).unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(text_a, text_b);
    assert_eq!(text_a.lines().count(), 3001);
    assert_eq!(
        text_a.lines().next().unwrap(),
        "round,p1,p2,value,demand,bundle,revenue"
    );
    assert!(String::from_utf8_lossy(&a.stderr).contains("wall time"));
}

#[test]
fn simulate_fixed_at_optimum_has_no_regret() {
    let r = report(&[
        "simulate",
        "--instance",
        &instance("uniform_k1.json"),
        "--strategy",
        "fixed",
        "--rounds",
        "5000",
    ]);
    assert!(f(&r["result"]["regret"]["average_pseudo_regret"]).abs() < 1e-9);
    let r = report(&[
        "simulate",
        "--instance",
        &instance("uniform_k1.json"),
        "--strategy",
        "eps-grid",
        "--rounds",
        "5000",
    ]);
    assert_eq!(r["result"]["strategy"], "eps-grid");
}

#[test]
fn env_vars_override_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_mupricing"))
        .args(["revenue"])
        .env("MUPRICING_INSTANCE", instance("uniform_k1.json"))
        .env("MUPRICING_PRICES", "0.25")
        .output()
        .unwrap();
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((f(&r["result"]["revenue"]) - 0.1875).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"demands\": [1],\n  \"colour\": 3\n}").unwrap();
    let out = run(&["check-dmr", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "{msg}");

    let out = run(&[
        "revenue",
        "--instance",
        &instance("uniform_k2.json"),
        "--prices",
        "0.5,0.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["oracle", "--instance", &instance("uniform_k1.json")]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["check-dmr", "--instance", "/nonexistent/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "optimize",
        "--instance",
        &instance("uniform_k1.json"),
        "--restarts",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    // too many types for the LP: a size limit on valid input
    let big = dir.path().join("big.json");
    let types: Vec<String> = (0..250).map(|i| format!("[{}.0, 1]", i + 1)).collect();
    let probs = vec!["0.004"; 250].join(",");
    std::fs::write(
        &big,
        format!(
            "{{\"discrete\": {{\"types\": [{}], \"probs\": [{probs}]}}}}",
            types.join(",")
        ),
    )
    .unwrap();
    let out = run(&["oracle", "--instance", big.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["optimize", "--instance", &instance("mixed_k3.json"), "--seed", "4"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn instance_files_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for k in 1..=4 {
        let inst = random_dmr_instance(&mut rng, k, 6, 3.0);
        let file = InstanceFile::from_problem(&inst);
        let loaded = InstanceFile::parse(&file.to_json()).unwrap();
        assert_eq!(loaded.problem.as_ref().unwrap(), &inst);
        let again = InstanceFile::parse(&loaded.file.to_json()).unwrap();
        assert_eq!(again.file, loaded.file);
        assert_eq!(mupricing_cli::digest(&again.file), mupricing_cli::digest(&file));
    }
}
