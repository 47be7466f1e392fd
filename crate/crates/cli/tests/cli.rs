use std::process::Command;

use featremesh::geom::Vec3;
use featremesh::mesh::obj::write_obj;
use featremesh::shapes::{box_edges, box_mesh};

fn featremesh(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_featremesh"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn usage_errors_exit_1_on_one_line() {
    let (code, err) = featremesh(&["remesh", "--input", "x.obj"]);
    assert_eq!(code, 1);
    assert_eq!(err.trim().lines().count(), 1);
    assert!(err.contains("--out"));
    assert_eq!(featremesh(&["--help"]).0, 0);
    assert_eq!(
        featremesh(&["--threads", "0", "fields", "inspect", "--dir", "."]).0,
        1
    );
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("m.obj");
    write_obj(&box_mesh(Vec3::repeat(-1.0), Vec3::repeat(1.0), 2), &mesh).unwrap();
    let (code, err) = featremesh(&[
        "remesh",
        "--input",
        mesh.to_str().unwrap(),
        "--out",
        dir.path().join("o.obj").to_str().unwrap(),
        "--provider",
        "files",
        "--fields",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(err.starts_with("error: "));
    let (code, _) = featremesh(&[
        "fields",
        "inspect",
        "--dir",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn export_then_inspect_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let lo = Vec3::repeat(-1.0);
    let hi = Vec3::repeat(1.0);
    write_obj(&box_mesh(lo, hi, 3), p("gt.obj")).unwrap();
    write_obj(&box_mesh(lo * 0.97, hi * 0.97, 4), p("m.obj")).unwrap();
    box_edges(lo, hi).save(p("c.json")).unwrap();
    let (code, err) = featremesh(&[
        "fields",
        "export",
        "--mesh",
        &p("m.obj"),
        "--gt",
        &p("gt.obj"),
        "--curves",
        &p("c.json"),
        "--lambda",
        "0.1",
        "--out",
        &p("fields"),
    ]);
    assert_eq!(code, 0, "{err}");
    let out = Command::new(env!("CARGO_BIN_EXE_featremesh"))
        .args(["fields", "inspect", "--dir", &p("fields")])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(stats.is_object());
    let (code, err) = featremesh(&[
        "eval",
        "--recon",
        &p("m.obj"),
        "--gt",
        &p("gt.obj"),
        "--curves",
        &p("c.json"),
        "--out",
        &p("r.csv"),
        "--lambda",
        "0.1",
        "--samples",
        "2000",
    ]);
    assert_eq!(code, 0, "{err}");
    let rows =
        featremesh::metrics::MetricReport::from_csv(&std::fs::read_to_string(p("r.csv")).unwrap())
            .unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.value)));
}
