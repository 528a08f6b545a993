use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qmn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmn")).args(args).output().expect("spawn qmn")
}

fn model(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join(name).display().to_string()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn tmp(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

#[test]
fn bundled_models_match_generators() {
    let dir = TempDir::new().unwrap();
    for (file, args) in [
        ("five_site_cell.json", vec!["cell"]),
        ("xxzz_chain.json", vec!["xxzz", "3"]),
        ("ising_chain5.json", vec!["ising", "5"]),
    ] {
        let out = tmp(&dir, file);
        let mut a = vec!["generate"];
        a.extend(args);
        a.extend(["--out", out.to_str().unwrap()]);
        assert_eq!(code(&qmn(&a)), 0);
        let fresh: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let bundled: Value = serde_json::from_str(&std::fs::read_to_string(model(file)).unwrap()).unwrap();
        assert_eq!(fresh, bundled, "{file}");
    }
}

#[test]
fn verify_markov_cell_passes() {
    let o = qmn(&["verify-markov", &model("five_site_cell.json")]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["partitions"].as_array().unwrap().len(), 2);
    assert!(r["max_cmi"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn verify_markov_xxzz_fails_with_worst_partition() {
    let dir = TempDir::new().unwrap();
    let dot = tmp(&dir, "g.dot");
    let o = qmn(&["verify-markov", &model("xxzz_chain.json"), "--dot", dot.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "fail");
    let worst = &r["partitions"][0];
    assert_eq!(worst["A"], serde_json::json!([1]));
    assert_eq!(worst["C"], serde_json::json!([3]));
    assert!((worst["cmi"].as_f64().unwrap() - 0.052051695401092224).abs() < 1e-10);
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("graph"));
    assert!(dot.contains("1 -- 2") || dot.contains("\"1\" -- \"2\""));
}

#[test]
fn beta_override_changes_the_state() {
    let o = qmn(&["verify-markov", &model("xxzz_chain.json"), "--beta", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout_json(&o)["max_cmi"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn malformed_files_exit_one_with_location() {
    let dir = TempDir::new().unwrap();
    let p = tmp(&dir, "bad.json");
    std::fs::write(&p, "{\"sites\": [{\"id\": 1, \"dim\": 2}],\n \"edges\": [], \"terms\": [{\"support\": [1], \"pauli\": \"Q\"}]}").unwrap();
    let o = qmn(&["classify", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("terms[0].pauli"), "{err}");

    let o = qmn(&["verify-markov", tmp(&dir, "missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn dense_cap_is_enforced() {
    let o = qmn(&["--dense-cap", "16", "verify-markov", &model("five_site_cell.json")]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("32"));
}

#[test]
fn cumulants_of_chains() {
    let o = qmn(&["cumulants", &model("ising_chain5.json")]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["clique_support"]["pass"], true);
    assert!(r["parseval_gap"].as_f64().unwrap() <= 1e-9 * r["source_norm"].as_f64().unwrap().powi(2));
    let norm = r["source_norm"].as_f64().unwrap();
    let significant: Vec<&String> =
        r["supports"].as_object().unwrap().iter().filter(|(_, v)| v["hs_norm"].as_f64().unwrap() > 1e-9 * norm).map(|(k, _)| k).collect();
    assert!(significant.iter().all(|k| k.split(',').count() <= 2), "{significant:?}");
    assert!(significant.contains(&&"[1,2]".to_string()));

    let o = qmn(&["cumulants", &model("xxzz_chain.json")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["clique_support"]["pass"], true);

    let o = qmn(&["cumulants", &model("xxzz_chain.json"), "--of", "hamiltonian", "--max-support", "1"]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert!(r["supports"].as_object().unwrap().is_empty());
    assert!(r["parseval_gap"].as_f64().unwrap() > 1.0);
}

#[test]
fn cumulants_of_cell_sit_on_triangles() {
    let o = qmn(&["cumulants", &model("five_site_cell.json")]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    let norm = r["source_norm"].as_f64().unwrap();
    let triangles = [[1, 2, 5], [2, 3, 5], [3, 4, 5], [1, 4, 5]];
    for (k, v) in r["supports"].as_object().unwrap() {
        let s: Vec<u32> = serde_json::from_str(k).unwrap();
        if v["hs_norm"].as_f64().unwrap() > 1e-9 * norm {
            assert!(triangles.iter().any(|t| s.iter().all(|x| t.contains(x))), "{k}");
        }
    }
    for t in triangles {
        assert!(r["supports"][format!("[{},{},{}]", t[0], t[1], t[2])]["hs_norm"].as_f64().unwrap() > 0.1);
    }
}

#[test]
fn cumulants_of_one_body_model_with_max_support() {
    let dir = TempDir::new().unwrap();
    let p = tmp(&dir, "field.json");
    std::fs::write(
        &p,
        r#"{"sites": [{"id": 1, "dim": 2}, {"id": 2, "dim": 2}], "edges": [[1, 2]],
            "terms": [{"support": [1], "pauli": "X", "coeff": 0.7}, {"support": [2], "pauli": "Z", "coeff": -0.3}]}"#,
    )
    .unwrap();
    let o = qmn(&["cumulants", p.to_str().unwrap(), "--of", "hamiltonian", "--max-support", "1"]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert!(r["parseval_gap"].as_f64().unwrap() <= 1e-12);
    assert!((r["supports"]["[1]"]["hs_norm"].as_f64().unwrap() - 0.7 * 2.0).abs() < 1e-12);
}

#[test]
fn planted_non_clique_term_gives_witness() {
    let dir = TempDir::new().unwrap();
    let p = tmp(&dir, "planted.json");
    std::fs::write(
        &p,
        r#"{"sites": [{"id": 1, "dim": 2}, {"id": 2, "dim": 2}, {"id": 3, "dim": 2}], "edges": [[1, 2], [2, 3], [1, 3]],
            "terms": [{"support": [1, 2], "pauli": "Z Z"}, {"support": [1, 3], "pauli": "X X", "coeff": 0.5}]}"#,
    )
    .unwrap();
    assert_eq!(code(&qmn(&["cumulants", p.to_str().unwrap(), "--of", "hamiltonian"])), 0);
    let o = qmn(&["cumulants", p.to_str().unwrap(), "--of", "hamiltonian", "--edges", "1-2,2-3"]);
    assert_eq!(code(&o), 2);
    let r = stdout_json(&o);
    assert_eq!(r["clique_support"]["pass"], false);
    assert_eq!(r["clique_support"]["witness"][0], serde_json::json!([1, 3]));
}

#[test]
fn classify_three_verdicts() {
    let dir = TempDir::new().unwrap();
    let o = qmn(&["classify", &model("five_site_cell.json")]);
    assert_eq!(code(&o), 0);
    let r = stdout_json(&o);
    assert_eq!(r["verdict"], "ShieldCommutingOnly");
    assert_eq!(r["noncommuting_pair"]["first"], 0);
    assert_eq!(r["noncommuting_pair"]["second"], 1);

    let o = qmn(&["classify", &model("ising_chain5.json")]);
    assert_eq!(stdout_json(&o)["verdict"], "LocalCommuting");

    let dot = tmp(&dir, "x.dot");
    let o = qmn(&["classify", &model("xxzz_chain.json"), "--dot", dot.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["verdict"], "NotShieldCommuting");
    assert!(std::fs::read_to_string(dot).unwrap().contains("graph"));
}

#[test]
fn decompose_round_trips_into_a_commuting_model() {
    let dir = TempDir::new().unwrap();
    let src = tmp(&dir, "t4.json");
    let out = tmp(&dir, "dec.json");
    let cert = tmp(&dir, "cert.json");
    assert_eq!(code(&qmn(&["generate", "triangle-free", "path4", "--seed", "7", "--out", src.to_str().unwrap()])), 0);
    let o = qmn(&["decompose", src.to_str().unwrap(), "--out", out.to_str().unwrap(), "--cert", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(c["verdict"], "pass");
    assert!(c["residual"].as_f64().unwrap() <= 1e-8);
    assert!(c["max_commutator"].as_f64().unwrap() <= 1e-8);

    let o = qmn(&["classify", out.to_str().unwrap()]);
    assert_eq!(stdout_json(&o)["verdict"], "LocalCommuting");
    let o = qmn(&["verify-markov", out.to_str().unwrap(), "--partitions", "all"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn decompose_rejects_triangles_and_non_markov_states() {
    let o = qmn(&["decompose", &model("five_site_cell.json")]);
    assert_eq!(code(&o), 2);
    let c = stdout_json(&o);
    assert_eq!(c["verdict"], "fail");
    assert!(c["error"].as_str().unwrap().contains("triangle"));

    let o = qmn(&["decompose", &model("xxzz_chain.json")]);
    assert_eq!(code(&o), 2);
    assert_eq!(stdout_json(&o)["verdict"], "fail");
}

#[test]
fn demos_pass() {
    for args in [vec!["demo", "counterexample"], vec!["demo", "coarse-grain"], vec!["demo", "tiling", "3x3"]] {
        let o = qmn(&args);
        let text = String::from_utf8_lossy(&o.stdout);
        assert_eq!(code(&o), 0, "{text}");
        assert!(text.contains("PASS") && !text.contains("FAIL"), "{text}");
    }
    let o = qmn(&["demo", "counterexample"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("[down, left] = -2.0i * Z1 Z3 Z5"), "{text}");
    assert_eq!(code(&qmn(&["demo", "tiling", "3by3"])), 1);
}
