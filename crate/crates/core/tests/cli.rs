use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxlinear_ttt::cli::{GraphFile, WeightsFile};
use maxlinear_ttt::fixtures;
use maxlinear_ttt::model::EdgeWeights;
use maxlinear_ttt::random;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn ttt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttt"))
        .args(args)
        .output()
        .expect("run ttt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("error JSON on stderr")
}

fn write_graph(dir: &TempDir, name: &str, g: &maxlinear_ttt::TttGraph) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(&GraphFile::from(g)).unwrap()).unwrap();
    p
}

fn write_weights(dir: &TempDir, name: &str, w: &EdgeWeights) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(&WeightsFile::from(w)).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_sources_and_v_structures() {
    let dir = TempDir::new().unwrap();
    let g = write_graph(&dir, "g.json", &fixtures::multi_source_eight());
    let o = ttt(&["validate", "--graph", s(&g)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("sources: 1,4,8; v-structures: 3\n"),
        "{}",
        stdout(&o)
    );

    let o = ttt(&["validate", "--graph", s(&g), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sources"], serde_json::json!([1, 4, 8]));
    assert_eq!(v["v_structures"].as_array().unwrap().len(), 3);
    assert_eq!(v["single_source"], Value::Bool(false));
}

#[test]
fn invalid_graphs_are_domain_errors() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("cycle.json");
    std::fs::write(
        &p,
        r#"{"nodes":[1,2,3],"edges":[{"from":1,"to":2},{"from":2,"to":3},{"from":3,"to":1}]}"#,
    )
    .unwrap();
    let o = ttt(&["validate", "--graph", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    // every cycle of a block graph lives inside one block
    assert_eq!(e["error"], "BlockNotTransitive");
    assert!(e["message"].as_str().unwrap().len() > 5);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = ttt(&["validate", "--graph", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "Usage");

    let o = ttt(&["coeffs", "--graph", "x.json"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{not json").unwrap();
    assert_eq!(ttt(&["validate", "--graph", s(&p)]).status.code(), Some(2));

    let g = write_graph(&dir, "g.json", fixtures::chain3().graph());
    let w = write_weights(&dir, "w.json", fixtures::chain3().theta());
    let o = ttt(&[
        "limit",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--cond-node",
        "3",
        "--tol",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = ttt(&[
        "angular",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--subset",
        "1,x",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coefficients_csv() {
    let dir = TempDir::new().unwrap();
    let m = fixtures::tournament3();
    let g = write_graph(&dir, "g.json", m.graph());
    let w = write_weights(&dir, "w.json", m.theta());
    let o = ttt(&["coeffs", "--graph", s(&g), "--weights", s(&w)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "node,1,2,3,diag");
    assert!(lines[3].starts_with("3,0.29999999999999999,0.20000000000000001,"));
    for line in &lines[1..] {
        let vals: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|x| x.parse().unwrap())
            .collect();
        assert!((vals[..3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn weights_outside_the_parameter_space_are_reported() {
    let dir = TempDir::new().unwrap();
    let g = write_graph(&dir, "g.json", fixtures::tournament3().graph());
    let w = write_weights(
        &dir,
        "w.json",
        &fixtures::weights(&[(1, 2, 0.5), (2, 3, 0.4), (1, 3, 0.1)]),
    );
    let o = ttt(&["coeffs", "--graph", s(&g), "--weights", s(&w)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "CriticalityViolated");
}

#[test]
fn identify_rejects_a_latent_node_failing_the_criterion() {
    let dir = TempDir::new().unwrap();
    let graph = fixtures::latent_eight();
    let g = write_graph(&dir, "g.json", &graph);
    let w = write_weights(
        &dir,
        "w.json",
        &random::theta(&mut ChaCha8Rng::seed_from_u64(5), &graph),
    );
    let o = ttt(&[
        "identify",
        "--graph",
        s(&g),
        "--latent",
        "2",
        "--weights",
        s(&w),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "CriterionViolated");
    let vs = e["violations"].as_array().unwrap();
    assert!(!vs.is_empty());
    assert!(vs.iter().all(|v| v["node"] == 2));
}

#[test]
fn angular_measure_feeds_identify() {
    let dir = TempDir::new().unwrap();
    let graph = fixtures::latent_eight();
    let theta = random::theta(&mut ChaCha8Rng::seed_from_u64(6), &graph);
    let g = write_graph(&dir, "g.json", &graph);
    let w = write_weights(&dir, "w.json", &theta);
    let measure = dir.path().join("h.csv");
    let o = ttt(&[
        "angular",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--subset",
        "2,4,5,6,8",
        "--out",
        s(&measure),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let header = std::fs::read_to_string(&measure).unwrap();
    assert!(header.starts_with("2,4,5,6,8,mass\n"));

    let o = ttt(&[
        "identify",
        "--graph",
        s(&g),
        "--latent",
        "1,3,7",
        "--measure",
        s(&measure),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    // the report doubles as a weights file
    let recovered: EdgeWeights = serde_json::from_str::<WeightsFile>(&stdout(&o))
        .unwrap()
        .into();
    assert!(recovered.max_abs_diff(&theta).unwrap() <= 1e-9);

    let o = ttt(&[
        "identify",
        "--graph",
        s(&g),
        "--latent",
        "1,3,7",
        "--weights",
        s(&w),
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["max_abs_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["within_tol"], Value::Bool(true));
    assert_eq!(v["exit_paths"]["1"], serde_json::json!([1, 3, 4]));
}

#[test]
fn limit_with_factorization_on_a_v_structure() {
    let dir = TempDir::new().unwrap();
    let m = fixtures::v_structure3();
    let g = write_graph(&dir, "g.json", m.graph());
    let w = write_weights(&dir, "w.json", m.theta());
    let o = ttt(&[
        "limit",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--cond-node",
        "3",
        "--factorized",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["tv"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(v["equal"], Value::Bool(false));

    let o = ttt(&[
        "limit",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--cond-node",
        "3",
        "--factorized",
    ]);
    let text = stdout(&o);
    assert!(text.starts_with("form,1,2,mass\n"));
    assert!(text.lines().any(|l| l.starts_with("tv,0.4")));
}

#[test]
fn witness_found_and_nonconstructive() {
    let dir = TempDir::new().unwrap();
    let m = fixtures::chain3();
    let g = write_graph(&dir, "g.json", m.graph());
    let w = write_weights(&dir, "w.json", m.theta());
    let o = ttt(&[
        "witness",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--node",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["witness"]["max_stdf_diff"].as_f64().unwrap() <= 1e-12);

    let t = fixtures::tournament3();
    let g = write_graph(&dir, "t.json", t.graph());
    let w = write_weights(&dir, "tw.json", t.theta());
    let o = ttt(&[
        "witness",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--node",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["witness"].is_null());
    assert!(v["diagnostic"].as_str().is_some());

    let o = ttt(&[
        "witness",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--node",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "CriterionSatisfied");
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let m = fixtures::chain3();
    let g = write_graph(&dir, "g.json", m.graph());
    let w = write_weights(&dir, "w.json", m.theta());
    let args = [
        "simulate",
        "--graph",
        s(&g),
        "--weights",
        s(&w),
        "--n",
        "20000",
        "--seed",
        "3",
        "--cond-node",
        "3",
        "--q",
        "0.99",
    ];
    let a = ttt(&args);
    let b = ttt(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("form,1,2,mass\n"));
    assert!(text.lines().any(|l| l.starts_with("exact,5,2.5,")));
    assert!(text.lines().any(|l| l.starts_with("tv,")));
}

#[test]
fn help_exits_cleanly() {
    let o = ttt(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulate"));
}
