use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rsc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsc")).args(args).env_remove("RSC_SEED").output().unwrap()
}

fn rsc_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsc")).args(args).env(key, value).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn schema() -> jsonschema::JSONSchema {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json")).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&value).unwrap()
}

fn assert_valid(report: &Value) {
    let schema = schema();
    let msgs: Vec<String> = match schema.validate(report) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("report does not match schema: {msgs:?}");
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn gen(dir: &TempDir, kind: &str, n: usize) -> (PathBuf, PathBuf) {
    let mtx = dir.path().join(format!("{kind}-{n}.mtx"));
    let out = rsc(&["gen", kind, "-n", &n.to_string(), "-o", path_str(&mtx)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let xyz = mtx.with_extension("xyz");
    assert!(xyz.exists());
    (mtx, xyz)
}

fn write_identity(dir: &TempDir, n: usize) -> PathBuf {
    let p = dir.path().join("identity.mtx");
    let mut text = format!("%%MatrixMarket matrix coordinate real symmetric\n{n} {n} {n}\n");
    for i in 1..=n {
        text.push_str(&format!("{i} {i} 1.0\n"));
    }
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn gen_small_laplacian_by_hand() {
    let dir = TempDir::new().unwrap();
    let (mtx, xyz) = gen(&dir, "laplacian2d", 2);
    let m = rsc_core::sparse::read_matrix_market(&mtx).unwrap();
    assert_eq!(m.n(), 4);
    for i in 0..4 {
        assert_eq!(m.get(i, i), 4.0);
    }
    assert_eq!(m.get(1, 0), -1.0);
    assert_eq!(m.get(2, 0), -1.0);
    assert_eq!(m.get(3, 0), 0.0);
    assert_eq!(fs::read_to_string(xyz).unwrap().lines().count(), 4);
}

#[test]
fn gen_is_bit_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    for kind in ["laplacian2d", "laplacian3d", "aniso-poisson", "elasticity-like"] {
        let a = dir.path().join("a.mtx");
        let b = dir.path().join("b.mtx");
        assert!(rsc(&["gen", kind, "-n", "3", "-o", path_str(&a)]).status.success());
        assert!(rsc(&["gen", kind, "-n", "3", "-o", path_str(&b)]).status.success());
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{kind}");
        assert_eq!(fs::read(a.with_extension("xyz")).unwrap(), fs::read(b.with_extension("xyz")).unwrap());
    }
}

#[test]
fn identity_solves_in_one_iteration() {
    let dir = TempDir::new().unwrap();
    let mtx = write_identity(&dir, 7);
    let report = dir.path().join("r.json");
    let out = rsc(&["solve", path_str(&mtx), "--report", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_valid(&r);
    assert_eq!(r["solve"]["iterations"], 1);
}

#[test]
fn malformed_file_is_an_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.mtx");
    fs::write(&p, "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 x 3.0\n").unwrap();
    let out = rsc(&["solve", path_str(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(err.contains("parse"), "{err}");
}

#[test]
fn missing_file_is_an_error() {
    let out = rsc(&["factor", "/nonexistent/matrix.mtx"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let (mtx, _) = gen(&dir, "laplacian2d", 12);
    let report = dir.path().join("r.json");
    let out = rsc(&["solve", path_str(&mtx), "--tau-o", "inf", "--leaf-size", "4", "--max-iters", "0", "--report", path_str(&report)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_valid(&r);
    assert_eq!(r["solve"]["converged"], false);
}

#[test]
fn laplacian_solve_report_is_consistent() {
    let dir = TempDir::new().unwrap();
    let (mtx, xyz) = gen(&dir, "laplacian3d", 16);
    let report = dir.path().join("r.json");
    let csv = dir.path().join("res.csv");
    let sym = dir.path().join("sym.json");
    let out = rsc(&[
        "solve",
        path_str(&mtx),
        "--coords",
        path_str(&xyz),
        "--report",
        path_str(&report),
        "--residual-csv",
        path_str(&csv),
        "--dump-symbolic",
        path_str(&sym),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_valid(&r);
    assert!(r["factor"]["stored_scalars"].as_u64().unwrap() > 0);
    assert!(r["solve"]["final_relative_residual"].as_f64().unwrap() <= 1e-5);
    assert_eq!(r["factor"]["n"], 4096);
    assert_eq!(r["invocation"]["threads"], 1);
    let iters = r["solve"]["iterations"].as_u64().unwrap() as usize;
    assert_eq!(r["solve"]["relative_residual_history"].as_array().unwrap().len(), iters + 1);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), iters + 2);
    let s = read_json(&sym);
    assert_eq!(s["supernodes"], r["factor"]["supernodes"]);
    assert_eq!(s["sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum::<u64>(), 4096);
}

#[test]
fn compare_ranks_preconditioners() {
    let dir = TempDir::new().unwrap();
    let (mtx, xyz) = gen(&dir, "laplacian3d", 16);
    let report = dir.path().join("c.json");
    let out = rsc(&["compare", path_str(&mtx), "--coords", path_str(&xyz), "--report", path_str(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_valid(&r);
    let it: Vec<u64> = r["methods"].as_array().unwrap().iter().map(|m| m["iterations"].as_u64().unwrap()).collect();
    assert!(it[2] < it[0] && it[2] < it[1], "{it:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("jacobi") && text.contains("rsc"));
}

#[test]
fn compare_on_identity_and_diagonal() {
    let dir = TempDir::new().unwrap();
    let mtx = write_identity(&dir, 5);
    let report = dir.path().join("c.json");
    assert_eq!(rsc(&["compare", path_str(&mtx), "--report", path_str(&report)]).status.code(), Some(0));
    let r = read_json(&report);
    for m in r["methods"].as_array().unwrap() {
        assert_eq!(m["iterations"], 1);
    }
    let diag = dir.path().join("diag.mtx");
    fs::write(&diag, "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2.0\n2 2 5.0\n3 3 9.0\n").unwrap();
    assert_eq!(rsc(&["compare", path_str(&diag), "--report", path_str(&report)]).status.code(), Some(0));
    let r = read_json(&report);
    assert_valid(&r);
    assert_eq!(r["methods"][1]["iterations"], 1);
    assert_eq!(r["methods"][2]["iterations"], 1);
}

#[test]
fn factor_report_and_seed_override() {
    let dir = TempDir::new().unwrap();
    let (mtx, xyz) = gen(&dir, "laplacian3d", 8);
    let report = dir.path().join("f.json");
    let args = ["factor", path_str(&mtx), "--coords", path_str(&xyz), "--tau-o", "30", "--tau-d", "8", "--seed", "3", "--report", path_str(&report)];
    assert!(rsc(&args).status.success());
    let r = read_json(&report);
    assert_valid(&r);
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["config"]["tau_o"], 30);
    assert_eq!(r["factor"]["coordinate_source"], "supplied");
    assert!(rsc_env(&args, "RSC_SEED", "11").status.success());
    assert_eq!(read_json(&report)["config"]["seed"], 11);
    assert_eq!(rsc_env(&args, "RSC_SEED", "eleven").status.code(), Some(1));
}

#[test]
fn json_to_stdout_and_threads() {
    let dir = TempDir::new().unwrap();
    let (mtx, _) = gen(&dir, "elasticity-like", 3);
    let out = rsc(&["solve", path_str(&mtx), "--spectral", "--threads", "2", "--report", "-"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_valid(&r);
    assert_eq!(r["invocation"]["threads"], 2);
    assert_eq!(r["factor"]["coordinate_source"], "spectral");
}

#[test]
fn schema_rejects_incomplete_reports() {
    let bad = serde_json::json!({ "invocation": { "command": "solve", "matrix": "a", "coords": null, "threads": 1 } });
    assert!(!schema().is_valid(&bad));
}
