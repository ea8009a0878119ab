use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use brolin_core::measure::Provenance;
use brolin_lab::commands::{DynSummary, LabReportFile};
use brolin_lab::formats;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_brolin-lab"));
    c.env_remove("BROLIN_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn ortho_gammas_match_closed_forms() {
    let t = tempfile::tempdir().unwrap();
    for (doc, gamma) in [("circle.json", 1.0), ("arcsine.json", 0.5f64.sqrt())] {
        let out = t.path().join(doc);
        let o = run(&["ortho", "--measure", &cfg(doc), "--degree", "10", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let rows = formats::read_csv_table(&out.join("gammas.csv"), &["degree", "gamma", "gamma_root"]).unwrap();
        assert_eq!(rows.len(), 11);
        for r in rows.iter().skip(1) {
            assert!((r[1] - gamma).abs() < 1e-8, "{doc}: {r:?}");
        }
        let q = formats::read_quadrature_csv(&out.join("quadrature.csv")).unwrap();
        assert!(q.node_count() >= 2);
    }
}

#[test]
fn malformed_input_names_the_key() {
    let t = tempfile::tempdir().unwrap();
    let m = write(t.path(), "m.json", r#"{"kind": "circle-uniform", "radius": 1, "centre": [0, 0]}"#);
    let o = run(&["measure", "validate", &m]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("centre"), "{}", stderr(&o));
    let c = write(t.path(), "c.json", r#"{"measure": {"kind": "circle-uniform", "radius": 1}, "lab": {"sample": 10}}"#);
    let o = run(&["lab", "--config", &c]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sample"), "{}", stderr(&o));
    let o = run(&["measure", "validate", &write(t.path(), "bad.json", "{")]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["dyn", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dyn_circle_samples_lie_on_the_circle() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("dyn");
    let o = run(&[
        "dyn", "--measure", &cfg("circle.json"), "--degree", "4", "--samples", "2000", "--resolution", "64", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: DynSummary = formats::read_json(&out.join("summary.json")).unwrap();
    assert!((s.capacity - 1.0).abs() < 1e-12);
    assert!((s.capacity_from_green - 1.0).abs() < 1e-6);
    let omega = formats::read_empirical_csv(&out.join("samples.csv"), Provenance::Brolin).unwrap();
    assert_eq!(omega.points.len(), 2000);
    assert!(omega.points.iter().all(|z| (z.norm() - 1.0).abs() < 1e-6));
    let g = formats::read_grid_field_binary(&out.join("green.json")).unwrap();
    assert_eq!(g.values.len(), 64 * 64);
    assert_eq!(g.escaped_at.len(), 64 * 64);
    let rows = formats::read_csv_table(&out.join("green.csv"), &["x", "y", "green", "escaped_at"]).unwrap();
    assert_eq!(rows.len(), 64 * 64);
    let k = formats::read_gridset(&out.join("filled.json")).unwrap();
    assert_eq!(k.mask.iter().filter(|&&b| b).count(), s.filled_pixels);
}

#[test]
fn dyn_arcsine_capacity() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("dyn");
    let o = run(&[
        "dyn", "--measure", &cfg("arcsine.json"), "--degree", "6", "--samples", "1000", "--resolution", "64", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: DynSummary = formats::read_json(&out.join("summary.json")).unwrap();
    assert!((s.capacity - 2f64.powf(0.1)).abs() < 1e-12, "{}", s.capacity);
}

#[test]
fn degree_one_is_rejected() {
    let t = tempfile::tempdir().unwrap();
    let o = run(&["dyn", "--measure", &cfg("circle.json"), "--degree", "1", "--out", t.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("degree must be ≥ 2"), "{}", stderr(&o));
}

#[test]
fn eq_writes_support_hull_and_measure() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("eq");
    let o = run(&["eq", "--measure", &cfg("arcsine.json"), "--resolution", "64", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hull = formats::read_gridset(&out.join("hull.json")).unwrap();
    let support = formats::read_gridset(&out.join("support.json")).unwrap();
    assert_eq!(hull.mask, support.mask);
    let e = formats::read_empirical_csv(&out.join("equilibrium.csv"), Provenance::Equilibrium).unwrap();
    assert!(!e.points.is_empty());
}

#[test]
fn lab_sweep_and_report_round_trip() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("lab");
    let c = write(
        t.path(),
        "c.json",
        &format!(
            r#"{{"measure": {{"kind": "circle-uniform", "radius": 1}}, "degrees": [2, 4], "seed": 5,
                "output_dir": {:?}, "lab": {{"samples": 2000, "energy_points": 500, "resolution": 64}}}}"#,
            out.display().to_string()
        ),
    );
    let o = run(&["lab", "--config", &c]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f: LabReportFile = formats::read_json(&out.join("report.json")).unwrap();
    assert_eq!(f.report.degrees, vec![2, 4]);
    assert_eq!(f.verdicts.get("regularity"), Some(&Some(true)));
    let before: Vec<(String, Vec<u8>)> = csvs(&out);
    assert!(before.iter().any(|(n, _)| n == "gamma_roots.csv"));
    let again = t.path().join("again");
    let o = run(&["report", out.join("report.json").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csvs(&again), before);
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn region_meeting_the_hull_is_a_hypothesis_violation() {
    let t = tempfile::tempdir().unwrap();
    let c = write(
        t.path(),
        "c.json",
        &format!(
            r#"{{"measure": {{"kind": "interval", "a": -2, "b": 2, "density": "arcsine"}}, "degrees": [2, 3],
                "output_dir": {:?}, "lab": {{"samples": 500, "resolution": 64, "region": {{"shape": "disk", "center": [0, 0], "radius": 0.5}}}}}}"#,
            t.path().join("lab").display().to_string()
        ),
    );
    let o = run(&["lab", "--config", &c]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).to_lowercase().contains("hypothesis"), "{}", stderr(&o));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let t = tempfile::tempdir().unwrap();
    let args = ["dyn", "--measure", &cfg("circle.json"), "--degree", "2", "--samples", "200", "--resolution", "32"];
    let o = bin().args(args).args(["--out", t.path().to_str().unwrap()]).env("BROLIN_LAB_THREADS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("threads"), "{}", stderr(&o));
    let o = bin().args(args).args(["--out", t.path().to_str().unwrap()]).env("BROLIN_LAB_THREADS", "2").output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn quadrature_table_round_trips_through_a_document() {
    let t = tempfile::tempdir().unwrap();
    let table = t.path().join("nodes.csv");
    let o = run(&["measure", "quadrature", &cfg("legendre.json"), "--nodes", "64", "-o", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = write(t.path(), "table.json", r#"{"kind": "quadrature-table", "path": "nodes.csv"}"#);
    let o = run(&["measure", "validate", &m]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
