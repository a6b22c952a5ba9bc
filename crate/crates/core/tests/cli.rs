use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_serre-spectrum")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn manifold_info_reports() {
    let o = run(&["manifold", "info", path(&fixture("unit_sheet.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("measure=1, i(X)=1, connected=true"), "{}", stdout(&o));

    let o = run(&["manifold", "info", path(&fixture("sphere_q3.json"))]);
    assert!(stdout(&o).contains("measure=2*Q^-1, i(X)=0"), "{}", stdout(&o));
}

#[test]
fn manifold_info_exit_codes() {
    let o = run(&["manifold", "info", path(&fixture("disconnected.json"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("not connected"));

    let o = run(&["manifold", "info", path(&fixture("truncated.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = run(&["manifold", "info", "/nonexistent/x.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spectrum_csv_rows() {
    let o = run(&["spectrum", path(&fixture("unit_sheet.json")), "--max-level", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "sheet,ball,lambda_symbolic,lambda_at_s,residue\n0,[],1,,1\n0,[0],(1-Q^-1)+Q^-1*T^1,,1\n");
}

#[test]
fn spectrum_numeric_column_matches_symbolic() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("spec.json");
    let o = run(&[
        "spectrum",
        path(&fixture("sphere_q3.json")),
        "--max-level",
        "3",
        "--s",
        "1/1",
        "--format",
        "json",
        "-o",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for row in rows.as_array().unwrap() {
        assert_eq!(row["residue"], 0);
        let level = row["level"].as_i64().unwrap();
        // e = -1, s = 1: outside sheet 3^-1, shells (3^{-1-k} - 3^{-2-k}) 3^{1+k}, ball term 1.
        let mut expect = 3f64.powi(-1);
        for k in 0..level {
            expect += (3f64.powi(-1 - k as i32) - 3f64.powi(-2 - k as i32)) * 3f64.powi(1 + k as i32);
        }
        expect += 1.0;
        assert!((row["lambda_at_s"].as_f64().unwrap() - expect).abs() < 1e-9, "{row}");
    }
}

#[test]
fn elliptic_reports() {
    let o = run(&["elliptic", "0", "0", "0", "1", "1", "-p", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "{\"p\":5,\"type\":\"Good\",\"m\":null,\"component_index\":1,\"smooth_count\":9,\"measure\":\"9*Q^-1\",\"serre_residue\":1}\n"
    );

    let o = run(&["elliptic", "0", "1", "0", "0", "25", "-p", "5"]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["type"], "MultSplit");
    assert_eq!(report["serre_residue"], 0);

    let o = run(&["elliptic", "0", "0", "0", "0", "0", "-p", "5"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("discriminant zero"));

    assert_eq!(run(&["elliptic", "0", "0", "0", "0", "1", "-p", "3"]).status.code(), Some(4));
    assert_eq!(run(&["elliptic", "0", "0", "0", "5", "5", "-p", "5"]).status.code(), Some(5));
    let o = run(&["elliptic", "0", "0", "0", "5", "5", "-p", "5", "--component-index", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"measure\":\"10*Q^-1\""), "{}", stdout(&o));
}

#[test]
fn emitted_tate_model_spectrum() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("tate.json");
    let o = run(&["elliptic", "0", "1", "0", "0", "343", "-p", "7", "--emit-manifold", path(&model)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let info = run(&["manifold", "info", path(&model)]);
    assert!(stdout(&info).contains("sheets=18"), "{}", stdout(&info));
    let o = run(&["spectrum", path(&model), "--max-level", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",0")));
}

fn write_wavelet(dir: &Path) -> PathBuf {
    // Dipole on [1] of the unit sheet at precision 2: +1 on [1,0,*], -1 on [1,1,*].
    let mut values = Vec::new();
    for (digit, sign) in [(0, 1), (1, -1)] {
        for c in 0..3 {
            values.push(format!(
                "{{\"sheet\":0,\"cell\":[1,{digit},{c}],\"terms\":[{{\"q\":0,\"t\":0,\"num\":{sign},\"den\":1}}]}}"
            ));
        }
    }
    let p = dir.join("psi.json");
    fs::write(&p, format!("{{\"precision\":3,\"values\":[{}]}}", values.join(","))).unwrap();
    p
}

#[test]
fn operator_apply_wavelet_is_eigenfunction() {
    let dir = TempDir::new().unwrap();
    let psi = write_wavelet(dir.path());
    let out = dir.path().join("out.json");
    let model = fixture("unit_sheet.json");
    let args = ["operator", "apply", path(&model), path(&psi), "--kernel", "k0", "--precision", "3", "-o", path(&out)];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read(&out).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    // Level-1 support on the unit sheet, q = 3: lambda = (1 - 1/3) + 1/3 T.
    let cell = &v["values"][0];
    assert_eq!(cell["cell"], serde_json::json!([1, 0, 0]));
    let terms = cell["terms"].as_array().unwrap();
    let as_tuple: Vec<(i64, i64, i64)> = terms
        .iter()
        .map(|t| (t["t"].as_i64().unwrap(), t["num"].as_i64().unwrap(), t["den"].as_i64().unwrap()))
        .collect();
    assert_eq!(as_tuple, vec![(0, 2, 3), (1, 1, 3)]);

    run(&args);
    assert_eq!(fs::read(&out).unwrap(), first, "output bytes must be stable");
}

#[test]
fn operator_apply_modes() {
    let dir = TempDir::new().unwrap();
    let psi = write_wavelet(dir.path());
    let out = dir.path().join("out.json");
    let model = fixture("unit_sheet.json");
    let base = ["operator", "apply", path(&model), path(&psi), "--precision", "3", "-o", path(&out)];

    let mut geo = base.to_vec();
    geo.extend(["--kernel", "geodetic"]);
    assert_eq!(run(&geo).status.code(), Some(6));
    geo.extend(["--s", "1"]);
    assert_eq!(run(&geo).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    // One sheet, so the geodetic kernel agrees with k0: 2/3 + 1/3 * 3 at s = 1.
    assert!((v["values"][0]["re"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-11);

    let mut wrong = base.to_vec();
    wrong[5] = "2";
    wrong.extend(["--kernel", "k0"]);
    assert_eq!(run(&wrong).status.code(), Some(2));
}

#[test]
fn operator_geodetic_on_bridged_model() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("u.json");
    fs::write(&f, r#"{"precision":1,"values":[{"sheet":0,"cell":[0],"re":1.0,"im":0.0}]}"#).unwrap();
    let out = dir.path().join("out.json");
    let o = run(&[
        "operator",
        "apply",
        path(&fixture("bridged.json")),
        path(&f),
        "--kernel",
        "geodetic",
        "--s",
        "-1/2",
        "--precision",
        "1",
        "-o",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    for entry in v["values"].as_array().unwrap() {
        assert!(entry["re"].as_f64().unwrap().is_finite());
    }
}
