use std::path::Path;
use std::process::{Command, Output};

use fromage_cli::schema;
use fromage_core::{sample_region, Point, Region, SampleSpec};
use serde_json::Value;
use tempfile::TempDir;

fn fromage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fromage"))
        .args(args)
        .env_remove("FROMAGE_MAX_DISCS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn read_json(p: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn circles(svg: &str) -> usize {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    doc.descendants()
        .filter(|n| n.has_tag_name("circle"))
        .count()
}

#[test]
fn symbolic_construct_succeeds() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "k.json");
    let o = fromage(&["construct", "--r", "0.5", "-o", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(&out);
    assert_eq!(doc["version"], "1");
    assert_eq!(doc["levels"].as_array().unwrap().len(), 20);
    assert!(doc["total_radius_bound"].as_f64().unwrap() < 0.5);
}

#[test]
fn invalid_arguments_exit_2() {
    assert_eq!(code(&fromage(&["construct", "--r", "-1"])), 2);
    assert_eq!(code(&fromage(&["construct", "--r", "0"])), 2);
    assert_eq!(code(&fromage(&["certify", "--eps", "0.6"])), 2);
    assert_eq!(
        code(&fromage(&["certify", "--eps", "0.4", "--eta", "-1"])),
        2
    );
    assert_eq!(code(&fromage(&["eval", "--eps", "0.4", "--z", "nope"])), 2);
    assert_eq!(code(&fromage(&["frobnicate"])), 2);
}

#[test]
fn planned_level_materialization_exits_4() {
    let o = fromage(&[
        "construct",
        "--r",
        "0.5",
        "--mode",
        "witness",
        "--points",
        "0.1,0.1",
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn cap_override_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "d.json");
    let args = [
        "construct",
        "--r",
        "0.5",
        "--levels",
        "2",
        "--mode",
        "demo",
        "--eps",
        "0.4",
        "--eta",
        "30",
        "-o",
        &out,
    ];
    // the demonstration budget exceeds r, so the run fails certification but
    // still writes the document
    let o = fromage(&args);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(Path::new(&out).exists());
    let capped = Command::new(env!("CARGO_BIN_EXE_fromage"))
        .args(args)
        .env("FROMAGE_MAX_DISCS", "10")
        .output()
        .unwrap();
    assert_eq!(code(&capped), 4);
    let bad = Command::new(env!("CARGO_BIN_EXE_fromage"))
        .args(args)
        .env("FROMAGE_MAX_DISCS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn certify_is_byte_identical_and_passes() {
    let args = [
        "certify", "--eps", "0.4", "--eta", "1", "--a", "0.3,0.2", "--grid", "500", "--seed", "7",
    ];
    let a = fromage(&args);
    let b = fromage(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["command"], "certify");
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(!text.contains("\"pass\": false"));
}

#[test]
fn different_seed_changes_samples_not_verdict() {
    let a = fromage(&["certify", "--eps", "0.4", "--grid", "300", "--seed", "1"]);
    let b = fromage(&["certify", "--eps", "0.4", "--grid", "300", "--seed", "2"]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn witness_and_eval_reports() {
    let o = fromage(&[
        "witness", "--eps", "0.4", "--eta", "1", "--count", "3", "--grid", "100",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = fromage(&["eval", "--eps", "0.4", "--z", "0,0"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"], "eval");
    let o = fromage(&[
        "eval", "--eps", "0.4", "--z", "-0.2,0.1", "--eta", "1", "--a", "0.3,0.2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn render_empty_and_capped() {
    let dir = TempDir::new().unwrap();
    let k = path(&dir, "k.json");
    assert_eq!(code(&fromage(&["construct", "--r", "0.5", "-o", &k])), 0);
    let svg = path(&dir, "k.svg");
    assert_eq!(code(&fromage(&["render", "-i", &k, "-o", &svg])), 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(circles(&text), 1);

    let w = path(&dir, "w.json");
    let o = fromage(&[
        "construct",
        "--r",
        "0.5",
        "--mode",
        "witness",
        "--points",
        "0.3,0.2",
        "--eps",
        "0.4",
        "--eta",
        "1",
        "-o",
        &w,
    ]);
    assert_eq!(code(&o), 3);
    let capped = path(&dir, "w.svg");
    let o = fromage(&[
        "render",
        "-i",
        &w,
        "--viewport",
        "0.3,0.2,0.003",
        "--min-radius",
        "0",
        "--max-discs",
        "0",
        "-o",
        &capped,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&capped).unwrap();
    assert_eq!(circles(&text), 1);
    assert!(text.contains("truncated at max-discs 0"));
}

#[test]
fn ring_shell_is_visible_around_a_unit() {
    let dir = TempDir::new().unwrap();
    let w = path(&dir, "w.json");
    fromage(&[
        "construct",
        "--r",
        "0.5",
        "--mode",
        "witness",
        "--points",
        "0.3,0.2",
        "--eps",
        "0.4",
        "--eta",
        "1",
        "-o",
        &w,
    ]);
    let doc = read_json(&w);
    let unit = &doc["units"][0];
    let (ax, ay) = (
        unit["a"]["re"].as_f64().unwrap(),
        unit["a"]["im"].as_f64().unwrap(),
    );
    let sigma = unit["sigma"].as_f64().unwrap();
    let vp = format!("{ax},{ay},{}", 4.0 * sigma);
    let svg = path(&dir, "u.svg");
    let o = fromage(&[
        "render",
        "-i",
        &w,
        "--viewport",
        &vp,
        "--min-radius",
        "0",
        "-o",
        &svg,
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let drawn: Vec<(f64, f64)> = doc
        .descendants()
        .filter(|n| n.has_tag_name("circle"))
        .skip(1)
        .map(|n| {
            (
                n.attribute("cx").unwrap().parse().unwrap(),
                n.attribute("cy").unwrap().parse().unwrap(),
            )
        })
        .collect();
    assert!(drawn.len() > 100);
    // every drawn pole disc sits just outside radius sigma, i.e. 200 px from the center
    for (x, y) in drawn {
        let d = ((x - 400.0).powi(2) + (y - 400.0).powi(2)).sqrt();
        assert!((d - 200.0).abs() < 1.0, "disc at {d} px");
    }
}

#[test]
fn round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let first = path(&dir, "a.json");
    fromage(&[
        "construct",
        "--r",
        "0.5",
        "--mode",
        "witness",
        "--points",
        "0.3,0.2;-0.5,0.5",
        "--eps",
        "0.4",
        "--eta",
        "1",
        "-o",
        &first,
    ]);
    let second = path(&dir, "b.json");
    assert_eq!(code(&fromage(&["export", "-i", &first, "-o", &second])), 0);
    let a = std::fs::read_to_string(&first).unwrap();
    let b = std::fs::read_to_string(&second).unwrap();
    assert_eq!(a, b);

    let ka = schema::import_str(&a).unwrap();
    let kb = schema::import_str(&b).unwrap();
    assert_eq!(ka.total_radius_bound(), kb.total_radius_bound());
    let spec = SampleSpec::new(1000, 3, Region::disc(Point::new(0.0, 0.0), 1.0));
    for p in sample_region(&spec, |_| true).unwrap() {
        assert_eq!(ka.contains(p), kb.contains(p));
    }
}

#[test]
fn version_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let k = path(&dir, "k.json");
    fromage(&["construct", "--r", "0.5", "-o", &k]);
    let text = std::fs::read_to_string(&k).unwrap().replacen(
        "\"version\": \"1\"",
        "\"version\": \"9\"",
        1,
    );
    std::fs::write(&k, text).unwrap();
    let o = fromage(&["import", "-i", &k]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("version"));
}

#[test]
fn tampered_document_is_rejected() {
    let dir = TempDir::new().unwrap();
    let k = path(&dir, "k.json");
    fromage(&["construct", "--r", "0.5", "-o", &k]);
    let mut doc = read_json(&k);
    doc["levels"][3]["budget"] = Value::from(0.001);
    std::fs::write(&k, doc.to_string()).unwrap();
    assert_eq!(code(&fromage(&["import", "-i", &k])), 2);
}

#[test]
fn import_answers_membership() {
    let dir = TempDir::new().unwrap();
    let k = path(&dir, "k.json");
    fromage(&["construct", "--r", "0.5", "-o", &k]);
    let o = fromage(&["import", "-i", &k, "--points", "0.1,0.1;2,0"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["membership"][0][1], true);
    assert_eq!(v["membership"][1][1], false);
}
