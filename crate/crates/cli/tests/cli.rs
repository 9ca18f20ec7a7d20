use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempo_core::fw::fixtures::Fixture;
use tempo_core::opcore::{apply_rewrites, parse_operator, RuleSet, Truncation};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn tempo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempo")).args(args).current_dir(repo()).output().expect("run tempo")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not a report ({e}):\n{}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["results"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn every_check_has_provenance(r: &Value) {
    for c in r["results"].as_array().unwrap() {
        assert!(c["tolerance"].is_number(), "{c}");
        assert!(c["tolerance_source"].is_string(), "{c}");
    }
}

#[test]
fn verify_default_passes() {
    let out = tempo(&["verify"]);
    let r = report(&out);
    assert_eq!(code(&out), 0, "{r}");
    assert_eq!(r["status"], "pass");
    assert_eq!(check(&r, "central-identity")["measured"], 0.0);
    assert!(check(&r, "property:jacobi")["passed"].as_bool().unwrap());
    every_check_has_provenance(&r);
}

#[test]
fn verify_without_rewrites_leaves_laplacian_residue() {
    let out = tempo(&["verify", "--no-rewrites"]);
    let r = report(&out);
    assert_eq!(code(&out), 1);
    let c = check(&r, "central-identity");
    assert!(!c["passed"].as_bool().unwrap());
    let diff = c["detail"].as_str().unwrap();
    assert!(diff.contains("D(1,D(1,phi))") && diff.contains("D(3,D(3,phi))"), "{diff}");
}

#[test]
fn verify_single_fixture() {
    let out = tempo(&["verify", "--fixture", "tempo"]);
    let r = report(&out);
    assert_eq!(code(&out), 0);
    let names: Vec<&str> = r["results"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["fixture:T"]);
}

#[test]
fn verify_rejects_unknown_fixture() {
    assert_eq!(code(&tempo(&["verify", "--fixture", "nonsense"])), 2);
}

#[test]
fn shipped_fields_pass() {
    for f in ["fields/point-mass.toml", "fields/dipole.toml", "fields/zero.toml"] {
        let out = tempo(&["fields", f, "--samples", "100"]);
        let r = report(&out);
        assert_eq!(code(&out), 0, "{f}: {r}");
        assert_eq!(check(&r, "laplacian:phi")["tolerance"], 1e-12);
        every_check_has_provenance(&r);
    }
}

#[test]
fn broken_field_fails_with_residual_two() {
    let out = tempo(&["fields", "fields/broken-laplacian.toml"]);
    let r = report(&out);
    assert_eq!(code(&out), 1);
    assert_eq!(r["status"], "fail");
    let phi = &r["details"]["potentials"][0];
    assert_eq!(phi["name"], "phi");
    assert_eq!(phi["residual"]["max_abs"], 2.0);
    assert!(!check(&r, "construction")["passed"].as_bool().unwrap());
}

#[test]
fn field_schema_violation_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.toml");
    std::fs::write(&f, "domain = { lo = [0,0,0], hi = [1,1,1] }\n[field]\nfamily = \"point-mass\"\nmas = 1\n").unwrap();
    let out = tempo(&["fields", f.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(report(&out)["error"].as_str().unwrap().contains("mas"));
}

#[test]
fn config_file_tolerance_is_attributed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tempo.toml");
    std::fs::write(&cfg, "[fields]\ntol = 1e-10\nsamples = 20\n").unwrap();
    let out = tempo(&["--config", cfg.to_str().unwrap(), "fields", "fields/zero.toml"]);
    let r = report(&out);
    let c = check(&r, "laplacian:phi");
    assert_eq!((c["tolerance"].as_f64().unwrap(), c["tolerance_source"].as_str().unwrap()), (1e-10, "config"));
    assert_eq!(r["details"]["samples"], 20);

    let out = tempo(&["--config", cfg.to_str().unwrap(), "fields", "fields/zero.toml", "--tol", "1e-11"]);
    assert_eq!(check(&report(&out), "laplacian:phi")["tolerance_source"], "flag");

    std::fs::write(&cfg, "thread = 3\n").unwrap();
    assert_eq!(code(&tempo(&["--config", cfg.to_str().unwrap(), "verify"])), 2);
}

fn export(target: &str, flat: bool) -> String {
    let mut args = vec!["export", target];
    if flat {
        args.push("--flat");
    }
    let out = tempo(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().trim_end().to_string()
}

#[test]
fn flat_tempo_export() {
    let text = export("T", true);
    // `p` carries the metric, so compare field-free parts
    let expected = parse_operator("1 - 1/(2*m^2)*p^2").unwrap().filter(|m, _| m.fields.is_empty());
    assert_eq!(parse_operator(&text).unwrap(), expected);
}

#[test]
fn exported_h_fw_matches_its_fixture() {
    let text = export("H_FW", false);
    let fixture = Fixture::HamiltonianFw.parse(Truncation::default()).unwrap();
    let diff = apply_rewrites(&(&parse_operator(&text).unwrap() - &fixture), &RuleSet::all());
    assert!(diff.is_zero(), "{diff}");
}

#[test]
fn export_round_trip_is_byte_identical() {
    for target in ["H", "H_FW", "T", "T2", "xdot1", "xdot2", "xdot3", "quadform"] {
        let text = export(target, false);
        assert_eq!(parse_operator(&text).unwrap().to_string(), text, "{target}");
    }
}

#[test]
fn export_unknown_target() {
    assert_eq!(code(&tempo(&["export", "H_FX"])), 2);
}

#[test]
fn export_json_report() {
    let out = tempo(&["export", "T", "--json"]);
    let r = report(&out);
    assert_eq!(r["status"], "pass");
    assert!(r["details"]["text"].as_str().unwrap().starts_with('1'));
}

const SMALL: &str = r#"
name = "small"
mass = 5.0

[metric]
r_min = 1.0
domain = { lo = [-20, -20, -20], hi = [20, 20, 20] }
[metric.field]
family = "point-mass"
mass = 0.01

[grid]
origin = [0, 6, 0]
axes = [{ axis = 1, n = 64, lo = -12, hi = 12 }]

[packet]
center = [-2, 6, 0]
width = [1.5, 1, 1]
momentum = [0.4, 0, 0]
spin = [0, 0, 1]

[integrator]
dt = 0.05
steps = 40
sample_every = 4

[tolerances]
norm_drift_per_step = 1e-12
tempo_imaginary = 1e-6
"#;

#[test]
fn simulate_writes_deterministic_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("small.toml");
    std::fs::write(&sc, SMALL).unwrap();
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = tempo(&[
            "--deterministic",
            "--out-dir",
            out_dir.to_str().unwrap(),
            "simulate",
            "--compare-classical",
            sc.to_str().unwrap(),
        ]);
        let r = report(&out);
        assert_eq!(code(&out), 0, "{r}");
        assert_eq!(r["artifacts"].as_array().unwrap().len(), 2);
        every_check_has_provenance(&r);
        let meta: Value = serde_json::from_slice(&std::fs::read(out_dir.join("small.metadata.json")).unwrap()).unwrap();
        assert_eq!(meta["metadata"]["scenario"], "small");
        csvs.push(std::fs::read(out_dir.join("small.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs[0].clone()).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,tau,tempo_re,tempo_im,norm,") && header.ends_with(",tau_cl"), "{header}");
    assert_eq!(text.lines().count(), 1 + 11);
}

#[test]
fn simulate_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("bad.toml");
    // a packet this narrow is not resolved by the grid
    std::fs::write(&sc, SMALL.replace("width = [1.5, 1, 1]", "width = [0.3, 1, 1]")).unwrap();
    let out = tempo(&["--out-dir", dir.path().to_str().unwrap(), "simulate", sc.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = report(&out)["error"].as_str().unwrap().to_string();
    let line = SMALL.lines().position(|l| l == "[packet]").unwrap() + 1;
    assert!(err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn flat_dilation_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempo(&["--out-dir", dir.path().to_str().unwrap(), "simulate", "scenarios/flat-dilation.toml"]);
    let r = report(&out);
    assert_eq!(code(&out), 0, "{r}");
    let c = check(&r, "dilation");
    assert_eq!(c["tolerance"], 1e-4);
    assert_eq!(c["tolerance_source"], "scenario");
}
