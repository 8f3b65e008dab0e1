use std::fs;
use std::process::{Command, Output};

use kobalab_core::domain::ConvexDomain;
use serde_json::Value;
use tempfile::TempDir;

fn kobalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kobalab"))
        .args(args)
        .env_remove("KOBALAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn distance_in_the_disc_matches_the_closed_form() {
    let out = kobalab(&["distance", "--domain", "ball:1", "--x", "[[0,0]]", "--y", "[[0.5,0]]"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let exact = 0.5f64.atanh();
    assert!((v["upper"].as_f64().unwrap() - exact).abs() < 1e-6);
    assert!((v["closed_form"]["upper"].as_f64().unwrap() - exact).abs() < 1e-12);
    assert!(v["lower"].as_f64().unwrap() <= exact);
    assert_eq!(v["nodes"], 33);
}

#[test]
fn distance_from_a_spec_file() {
    let dir = TempDir::new().unwrap();
    let spec = ConvexDomain::<f64>::ball(2).spec().to_json();
    let d = write(&dir, "ball.json", &spec);
    let out = kobalab(&["distance", "--domain", &d, "--x", "[[0,0],[0,0]]", "--y", "[[0,0],[0.5,0]]"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["upper"].as_f64().unwrap() - 0.5f64.atanh()).abs() < 1e-6);
}

#[test]
fn coincident_points_are_at_distance_zero() {
    let out = kobalab(&["distance", "--domain", "ball:1", "--x", "[[0.2,0.1]]", "--y", "[[0.2,0.1]]"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["upper"].as_f64(), Some(0.0));
    assert_eq!(v["lower"].as_f64(), Some(0.0));
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let d = write(&dir, "bad.json", "{\"kind\": ");
    let out = kobalab(&["distance", "--domain", &d, "--x", "[[0,0]]", "--y", "[[0,0]]"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
    let out = kobalab(&["distance", "--domain", "ball:1", "--x", "[[0,", "--y", "[[0,0]]"]);
    assert_eq!(code(&out), 2);
    let out = kobalab(&["distance", "--domain", "nowhere.json", "--x", "[[0,0]]", "--y", "[[0,0]]"]);
    assert_eq!(code(&out), 2);
    let out = kobalab(&["distance", "--domain", "ball:2", "--x", "[[0,0]]", "--y", "[[0,0]]"]);
    assert_eq!(code(&out), 2);
    let out = kobalab(&["frobnicate"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cfg.json", r#"{"sede": 3}"#);
    let out = kobalab(&["ends", "--domain", "ball:1", "--config", &c]);
    assert_eq!(code(&out), 2);
}

#[test]
fn points_outside_violate_a_precondition() {
    let out = kobalab(&["distance", "--domain", "ball:1", "--x", "[[2,0]]", "--y", "[[0,0]]"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn thread_cap_must_be_positive() {
    let out = Command::new(env!("CARGO_BIN_EXE_kobalab"))
        .args(["ends", "--domain", "ball:1"])
        .env("KOBALAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_kobalab"))
        .args(["ends", "--domain", "ball:1"])
        .env("KOBALAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn delta_reports_are_seed_deterministic() {
    let run = |seed: &str| {
        let out = kobalab(&[
            "delta", "--domain", "ball:2", "--samples", "20", "--radii", "0.9", "--seed", seed,
            "--format", "csv",
        ]);
        assert_eq!(code(&out), 0);
        out.stdout
    };
    let a = run("5");
    assert_eq!(a, run("5"));
    assert_ne!(a, run("6"));
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("sample_radius,delta_four_point,delta_thin_triangle,error_bar,n_samples")
    );
    assert!(lines.next().unwrap().starts_with("0.9,"));
}

#[test]
fn seed_from_the_config_file_matches_the_flag() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "cfg.json", r#"{"seed": 5, "format": "csv"}"#);
    let base = ["delta", "--domain", "ball:2", "--samples", "20", "--radii", "0.9"];
    let mut with_cfg = base.to_vec();
    with_cfg.extend(["--config", c.as_str()]);
    let mut with_flag = base.to_vec();
    with_flag.extend(["--seed", "5", "--format", "csv"]);
    assert_eq!(kobalab(&with_cfg).stdout, kobalab(&with_flag).stdout);
}

#[test]
fn ends_of_catalog_and_strip_domains() {
    let out = kobalab(&["ends", "--domain", "ball:2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["end_count"], 0);
    let out = kobalab(&["ends", "--domain", "siegel:2"]);
    assert_eq!(json(&out)["end_count"], 1);
    let dir = TempDir::new().unwrap();
    let strip = ConvexDomain::<f64>::standard_strip(1.0).spec().to_json();
    let d = write(&dir, "strip.json", &strip);
    let out = kobalab(&["ends", "--domain", &d]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["end_count"], 2);
}

fn maps(dir: &TempDir) -> (String, String, String) {
    (
        write(dir, "rot.json", r#"{"kind":"DiscMoebius","a":[0,0],"theta":0.7}"#),
        write(dir, "hyp.json", r#"{"kind":"DiscMoebius","a":[0.5,0],"theta":0}"#),
        write(dir, "inv.json", r#"{"kind":"DiscMoebius","a":[-0.5,0],"theta":0}"#),
    )
}

#[test]
fn iterate_classifies_rotation_and_hyperbolic_orbits() {
    let dir = TempDir::new().unwrap();
    let (rot, hyp, _) = maps(&dir);
    let out = kobalab(&["iterate", "--domain", "ball:1", "--map", &rot, "--x0", "[[0,0]]"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["classification"]["verdict"]["type"], "interior_attractor");

    let out = kobalab(&["iterate", "--domain", "ball:1", "--map", &hyp, "--x0", "[[0.3,0.1]]"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["classification"]["verdict"]["type"], "boundary_point");
    let p = &v["classification"]["verdict"]["point"]["point"][0];
    assert!((p[0].as_f64().unwrap() + 1.0).abs() < 1e-4, "{p}");

    let out = kobalab(&[
        "iterate", "--domain", "ball:1", "--map", &hyp, "--steps", "50", "--format", "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,z0_re,z0_im,step_dist,norm"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn commute_audits_the_return_bound() {
    let dir = TempDir::new().unwrap();
    let (_, hyp, inv) = maps(&dir);
    let out = kobalab(&[
        "commute", "--domain", "ball:1", "--map", &hyp, "--map", &inv, "--iterates", "8",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["holds"], true);
    assert!(v["max_dist"].as_f64().unwrap() <= v["bound"].as_f64().unwrap());

    let out = kobalab(&["commute", "--domain", "ball:1", "--map", &hyp, "--map", &hyp]);
    assert_eq!(code(&out), 4);
    let out = kobalab(&["commute", "--domain", "ball:1", "--map", &hyp]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_extension_passes_on_the_disc() {
    let dir = TempDir::new().unwrap();
    let t = write(
        &dir,
        "targets.json",
        r#"[{"type":"finite","point":[[1,0]]},{"type":"finite","point":[[-1,0]]}]"#,
    );
    let out_path = dir.path().join("report.json");
    let out = kobalab(&[
        "verify-extension", "--domain", "ball:1", "--targets", &t, "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["passed_assertions"], v["assertions"]);
}

#[test]
fn verify_extension_refuses_domains_with_complex_lines() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", r#"[{"type":"finite","point":[[1,0],[0,0]]}]"#);
    let out = kobalab(&["verify-extension", "--domain", "product_with_plane:2", "--targets", &t]);
    assert_eq!(code(&out), 4);
}

#[test]
fn gallery_bidisc_is_witnessed() {
    let out = kobalab(&["gallery", "bidisc"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["example"], "bidisc");
    assert!((v["sup"].as_f64().unwrap() - 0.5f64.atanh()).abs() < 1e-12);
    let out = kobalab(&["gallery", "shear", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,a0_re,a0_im,a1_re,a1_im,b0_re"));
    let out = kobalab(&["gallery", "nothing"]);
    assert_eq!(code(&out), 2);
}
