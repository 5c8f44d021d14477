use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jetflow"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("JETFLOW_EPS_U1")
        .output()
        .expect("spawn jetflow")
}

fn stdout_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Resolves `$ref`s to sibling files in the schema directory.
struct SchemaFiles;

impl jsonschema::Retrieve for SchemaFiles {
    fn retrieve(
        &self,
        uri: &jsonschema::Uri<String>,
    ) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri.as_str().rsplit('/').next().unwrap_or_default();
        let text = std::fs::read_to_string(schema_dir().join(name))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn validate(schema_name: &str, doc: &Value) {
    let validator = jsonschema::options()
        .with_retriever(SchemaFiles)
        .build(&load(schema_name))
        .unwrap_or_else(|e| panic!("{schema_name}: {e}"));
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{e} at {}", e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:#?}");
}

#[test]
fn schemas_reject_malformed_documents() {
    let mut doc = stdout_json(&["analyze", "--builtin", "kzero", "--point", "0,0.5,1"]);
    validate("analyze.schema.json", &doc);
    doc["leaf"]["k_int"] = Value::String("oops".into());
    let validator = jsonschema::options()
        .with_retriever(SchemaFiles)
        .build(&load("analyze.schema.json"))
        .unwrap();
    assert!(!validator.is_valid(&doc));
}

#[test]
fn analyze_kappa_example() {
    let doc = stdout_json(&[
        "analyze",
        "--builtin",
        "kappa",
        "--param",
        "kappa=1",
        "--point",
        "0,0,0.5",
    ]);
    validate("analyze.schema.json", &doc);
    assert!((doc["curvatures"]["r1212"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    assert!((doc["leaf"]["k_int"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(doc["leaf"]["k_ext"].as_f64().unwrap(), -0.25);
    assert_eq!(doc["leaf"]["mean_curvature"].as_f64().unwrap(), 0.0);
    assert!((doc["det_metric"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(doc["converse_hypothesis"]["holds"], Value::Bool(true));
}

#[test]
fn analyze_phi_expression() {
    let doc = stdout_json(&[
        "analyze", "--phi", "-a*u", "--param", "a=1", "--point", "0,0.5,1",
    ]);
    validate("analyze.schema.json", &doc);
    assert_eq!(doc["reference"], Value::Null);
    assert!((doc["leaf"]["k_int"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn list_validates() {
    let doc = stdout_json(&["list"]);
    validate("list.schema.json", &doc);
    let names: Vec<&str> = doc
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["kappa", "kzero", "damped", "gravity", "kfamily"]);
}

#[test]
fn energy_damped_example() {
    let doc = stdout_json(&[
        "energy",
        "--builtin",
        "damped",
        "--param",
        "alpha=0.2",
        "--param",
        "lambda=1",
        "--traj-init",
        "0,0,1",
        "--x-end",
        "1.2",
    ]);
    validate("energy.schema.json", &doc);
    assert!(doc["conservation"]["relative_drift"].as_f64().unwrap() <= 1e-8);
    assert_eq!(doc["check"]["passed"], Value::Bool(true));
}

#[test]
fn energy_leaves_and_failing_candidate() {
    let dir = std::env::temp_dir().join(format!("jetflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let leaves = dir.join("leaves.csv");
    let doc = stdout_json(&[
        "energy",
        "--builtin",
        "kappa",
        "--trace-to",
        "-1",
        "--n",
        "4",
        "--leaves",
        leaves.to_str().unwrap(),
    ]);
    validate("energy.schema.json", &doc);
    for leaf in doc["leaves"].as_array().unwrap() {
        assert!(leaf["invariant_change"].as_f64().unwrap() <= 1e-8, "{leaf}");
    }
    let csv = std::fs::read_to_string(&leaves).unwrap();
    assert!(csv.starts_with("leaf,u,u1,E\n"));

    // u1^2/2 is not conserved by u'' = -u
    let out = run(&["energy", "--phi", "-u", "--energy-expr", "u1^2/2"]);
    assert_eq!(out.status.code(), Some(1));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    validate("energy.schema.json", &doc);
    assert_eq!(doc["check"]["passed"], Value::Bool(false));
}

#[test]
fn lagrangian_outputs() {
    let doc = stdout_json(&["lagrangian", "--builtin", "kappa", "--format", "json"]);
    validate("lagrangian.schema.json", &doc);
    assert!(
        doc["dh_identity"]["partials"]["max_defect"]
            .as_f64()
            .unwrap()
            <= 1e-6
    );
    let doc = stdout_json(&[
        "lagrangian",
        "--builtin",
        "kzero",
        "--quadrature",
        "--n",
        "6",
        "--format",
        "json",
    ]);
    validate("lagrangian.schema.json", &doc);
    assert!(doc["max_energy_mismatch"].as_f64().unwrap() <= 1e-10);

    let out = run(&["lagrangian", "--builtin", "kappa", "--n", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,u1,L,L_u,L_u1,h,el_residual"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn curvature_map_csv() {
    let out = run(&["curvature-map", "--builtin", "kzero", "--n", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,u1,r1212,r1313,r2323,k_int"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 25);
    for r in rows {
        assert!(r[2].abs() <= 1e-10 && (r[5] + 0.25).abs() <= 1e-12, "{r:?}");
    }
}

#[test]
fn grid_skips_the_singular_line() {
    let out = run(&[
        "curvature-map",
        "--phi",
        "-u",
        "--u1-range",
        "-1,1",
        "--n",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn geodesic_csv() {
    let out = run(&[
        "geodesic",
        "--builtin",
        "damped",
        "--init",
        "0,0,1",
        "--x-end",
        "1.2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,x,u,u1,tangent_x,tangent_u,tangent_u1,res_e1,res_e2,res_e3\n"));
    let out = run(&[
        "geodesic",
        "--builtin",
        "kappa",
        "--kind",
        "geodesic",
        "--init",
        "0,0,0.5",
        "--t-end",
        "0.3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[7..].iter().all(|r| r.abs() < 1e-5), "{line}");
    }
}

#[test]
fn exit_codes() {
    let unknown = run(&[
        "analyze",
        "--builtin",
        "kappa",
        "--param",
        "kapa=1",
        "--point",
        "0,0,0.5",
    ]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("kapa"));
    assert_eq!(
        run(&["analyze", "--builtin", "nope", "--point", "0,0,1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["analyze", "--point", "0,0,1"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "analyze",
            "--builtin",
            "kappa",
            "--phi",
            "u",
            "--point",
            "0,0,1"
        ])
        .status
        .code(),
        Some(2)
    );
    let twice = run(&[
        "analyze",
        "--builtin",
        "kappa",
        "--param",
        "kappa=1",
        "--param",
        "kappa=2",
        "--point",
        "0,0,0.5",
    ]);
    assert_eq!(twice.status.code(), Some(2));
    let violation = run(&["verify", "--builtin", "damped", "--param", "alpha=3"]);
    assert_eq!(violation.status.code(), Some(2));
    let extra = run(&[
        "analyze", "--phi", "u1", "--param", "a=1", "--point", "0,0,1",
    ]);
    assert_eq!(extra.status.code(), Some(2));
    let singular = run(&["analyze", "--builtin", "kappa", "--point", "0,0,0"]);
    assert_eq!(singular.status.code(), Some(3));
    assert!(!singular.stderr.is_empty());
    let domain = run(&["analyze", "--builtin", "kappa", "--point", "0,0,2"]);
    assert_eq!(domain.status.code(), Some(3));
}

#[test]
fn eps_override() {
    let out = bin()
        .args(["analyze", "--phi", "-u", "--point", "0,0,0.001"])
        .env("JETFLOW_EPS_U1", "0.01")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let doc = stdout_json(&["analyze", "--phi", "-u", "--point", "0,0,0.001"]);
    assert_eq!(doc["source"]["eps_u1"].as_f64(), Some(1e-9));
    let bad = bin()
        .args(["list"])
        .env("JETFLOW_EPS_U1", "-1")
        .output()
        .unwrap();
    assert!(bad.status.success(), "list does not touch equations");
    let bad = bin()
        .args(["analyze", "--phi", "-u", "--point", "0,0,1"])
        .env("JETFLOW_EPS_U1", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_json_validates() {
    let out = run(&["verify", "--builtin", "kzero", "--format", "json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    validate("verify.schema.json", &doc);
    let r1212 = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "curvature.r1212_zero")
        .unwrap();
    assert!(r1212["value"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn outputs_are_deterministic() {
    let args = ["curvature-map", "--builtin", "damped", "--n", "15"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = [
        "energy",
        "--builtin",
        "gravity",
        "--trace-to",
        "-0.5",
        "--n",
        "5",
        "--traj-init",
        "0,0,1",
        "--x-end",
        "3",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
