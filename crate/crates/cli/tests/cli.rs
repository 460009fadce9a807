use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use caloronkit::io::{from_json, to_json, GroupMapFile, PairFile};
use caloronkit::lie::GroupMap;
use caloronkit::geometry::ConnectionPair;
use caloronkit::grid::{Grid, GridSpec};
use caloronkit::forms::MatrixForm;
use caloronkit::Complex;
use sha2::{Digest, Sha256};

fn caloronkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caloronkit")).args(args).output().expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn sha256(file: &str) -> Vec<u8> {
    Sha256::digest(std::fs::read(file).unwrap()).to_vec()
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr holds an error document")
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = path(dir.path(), name);
        let r = caloronkit(&["generate", "pair", "--grid", "8x8x16s1", "--unitary", "--seed", seed, "--out", &out]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        out
    };
    let (a, b, c) = (run("a.json", "7"), run("b.json", "7"), run("c.json", "8"));
    assert_eq!(sha256(&a), sha256(&b));
    assert_ne!(sha256(&a), sha256(&c));

    let text = std::fs::read_to_string(&a).unwrap();
    let p = from_json::<PairFile>(&text).unwrap().to_pair::<f64>(None).unwrap();
    assert!(p.is_unitary());
    assert_eq!(p.rank(), 2);
}

#[test]
fn rotation_homotopy_has_the_expected_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let map = path(dir.path(), "map.json");
    let hom = path(dir.path(), "hom.json");
    let r = caloronkit(&["generate", "map", "--grid", "8x8", "--unitary", "--seed", "3", "--out", &map]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let r = caloronkit(&["generate", "homotopy", "--kind", "rotation", "--from", &map, "--out", &hom]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let g = from_json::<GroupMapFile>(&std::fs::read_to_string(&map).unwrap()).unwrap().to_map::<f64>(None).unwrap();
    let h = from_json::<GroupMapFile>(&std::fs::read_to_string(&hom).unwrap()).unwrap().to_map::<f64>(None).unwrap();
    let t = h.grid().dim() - 1;
    let n = h.grid().shape()[t];
    let start = h.slice(t, 0).unwrap();
    let end = h.slice(t, n - 1).unwrap();
    let expected = g.block_sum(&g.pointwise_inverse()).unwrap();
    let diff = |a: &GroupMap<f64>, b: &GroupMap<f64>| {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    };
    assert!(diff(&start, &expected) < 1e-14);
    assert!(diff(&end, &GroupMap::identity(g.grid(), 4)) < 1e-14);
}

#[test]
fn odd_chern_of_winding_map_integrates_to_three() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::<f64>::new(GridSpec::torus(&[64])).unwrap();
    let g = GroupMap::from_fn(&grid, 1, true, false, |p, out| {
        out[0] = Complex::from_polar(1.0, 3.0 * grid.coords(p)[0]);
    })
    .unwrap();
    let map = path(dir.path(), "wind.json");
    std::fs::write(&map, to_json(&GroupMapFile::from_map(&g)).unwrap()).unwrap();
    let out = path(dir.path(), "ch.json");
    let r = caloronkit(&["compute", "odd-chern", "-i", &map, "--cutoff", "1", "--out", &out]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let mut rows = csv::Reader::from_path(dir.path().join("ch.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    let row = rows.records().map(Result::unwrap).find(|r| &r[0] == "1").expect("degree 1 row");
    let col = headers.iter().position(|h| h == "integral_re").unwrap();
    let integral: f64 = row[col].parse().unwrap();
    assert!((integral - 3.0).abs() < 1e-10, "integral {integral}");
}

#[test]
fn holonomy_of_half_turn_higgs_field_is_minus_identity() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::<f64>::new(GridSpec::torus_with_loop(&[8], 16)).unwrap();
    let mut phi = MatrixForm::<f64>::zeros(&grid, 0, 2);
    for m in phi.component_mut(0).chunks_mut(4) {
        m[0] = Complex::new(0.0, 0.5);
        m[3] = Complex::new(0.0, 0.5);
    }
    let p = ConnectionPair::new(MatrixForm::zeros(&grid, 1, 2), phi, true).unwrap();
    let input = path(dir.path(), "pair.json");
    std::fs::write(&input, to_json(&PairFile::from_pair(&p)).unwrap()).unwrap();
    let out = path(dir.path(), "hol.json");
    let r = caloronkit(&["compute", "holonomy", "-i", &input, "--out", &out]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let h = from_json::<GroupMapFile>(&std::fs::read_to_string(&out).unwrap()).unwrap().to_map::<f64>(None).unwrap();
    assert_eq!(h.grid().len(), 8);
    for m in h.values().chunks(4) {
        let expected = [-1.0, 0.0, 0.0, -1.0];
        for (z, e) in m.iter().zip(expected) {
            assert!((z - Complex::new(e, 0.0)).norm() < 1e-10);
        }
    }
}

#[test]
fn string_form_both_algorithms_report_cross_defect() {
    let dir = tempfile::tempdir().unwrap();
    let pair = path(dir.path(), "pair.json");
    let r = caloronkit(&["generate", "pair", "--grid", "8x8x16s1", "--unitary", "--seed", "1", "--out", &pair]);
    assert!(r.status.success());
    let out = path(dir.path(), "s.json");
    let r = caloronkit(&["compute", "string-form", "-i", &pair, "--algorithm", "both", "--out", &out]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.report.json")).unwrap()).unwrap();
    let cross = report["cross_defect"].as_f64().expect("cross defect present");
    assert!(cross < 1e-9);
    assert_eq!(report["config"]["command"], "compute");
    assert_eq!(report["config"]["seed"], serde_json::Value::Null);
}

#[test]
fn verify_caloron_suite_passes_and_embeds_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "caloron.json");
    let r = caloronkit(&["verify", "--suite", "caloron", "--grid", "16x16x32", "--rank", "2", "--seed", "7", "--out", &out]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["config"]["seed"], 7);
    assert_eq!(report["schema_version"], 1);
    let rows = report["suites"][0]["rows"].as_array().unwrap();
    let roundtrip = rows.iter().find(|r| r["identity"].as_str().unwrap().starts_with("inverse caloron")).unwrap();
    assert_eq!(roundtrip["defect"], 0.0);
    assert!(PathBuf::from(path(dir.path(), "caloron.csv")).exists());
}

#[test]
fn identity_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "calc.json");
    let r = caloronkit(&["verify", "--suite", "calculus", "--grid", "8x8x8", "--tol", "1e-300", "--out", &out]);
    assert_eq!(r.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "x.json");

    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, r#"{"grid": {"factors": []}, "surprise": 1}"#).unwrap();
    let r = caloronkit(&["compute", "odd-chern", "-i", &bad, "--out", &out]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(error_json(&r)["error"]["kind"], "Schema");

    let r = caloronkit(&["verify", "--suite", "nonsense", "--out", &out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(error_json(&r)["error"]["message"].as_str().unwrap().contains("nonsense"));

    let r = caloronkit(&["generate", "map", "--grid", "8x8", "--seed", "1", "--band-limit", "4", "--out", &out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(error_json(&r)["error"]["message"].as_str().unwrap().contains("Nyquist"));

    let r = caloronkit(&["generate", "map", "--grid", "8x8", "--out", &out]);
    assert_eq!(r.status.code(), Some(2));

    let r = caloronkit(&["verify", "--suite", "caloron", "--tol=0", "--out", &out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!Path::new(&out).exists());
}
