use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wavecone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavecone"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn analyze_curl_reports_exact_thresholds() {
    let o = wavecone(&["analyze", "builtin:curl", "--d", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["ell_a"]["lower"], 2);
    assert_eq!(v["ell_a"]["exact"], true);
    assert_eq!(v["ell_star"]["upper"], 2);
}

#[test]
fn reports_are_deterministic_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = wavecone(&[
            "analyze",
            "builtin:cubic3d",
            "--seed",
            "3",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(code(&o) == 0 || code(&o) == 2);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v = wavecone(&["validate", a.to_str().unwrap()]);
    assert_eq!(code(&v), 0, "{}", String::from_utf8_lossy(&v.stdout));
    assert_eq!(json(&v)["valid"], true);

    // a tampered verdict fails validation
    let text = std::fs::read_to_string(&a).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["ell_a"]["lower"] = Value::from(0);
    doc["ell_a"]["upper"] = Value::from(0);
    let t = dir.path().join("t.json");
    std::fs::write(&t, serde_json::to_string(&doc).unwrap()).unwrap();
    let v = wavecone(&["validate", t.to_str().unwrap()]);
    assert_eq!(code(&v), 2);
    assert_eq!(json(&v)["valid"], false);
}

#[test]
fn member_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    let o = wavecone(&[
        "member",
        "builtin:cubic3d",
        "--lambda",
        "1",
        "--cone",
        "n:2",
        "--out",
        p.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(doc["decision"], "member");
    assert_eq!(code(&wavecone(&["validate", p.to_str().unwrap()])), 0);
}

#[test]
fn measure_check_exit_codes() {
    let ok = wavecone(&[
        "measure-check",
        "builtin:div-matrix",
        "--plane",
        "x1=0",
        "--auto-lambda",
        "--n",
        "16",
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(json(&ok)["residual"]["passed"], true);
    let bad = wavecone(&[
        "measure-check",
        "builtin:div-matrix",
        "--plane",
        "x1=0",
        "--lambda",
        "e1xe1",
        "--n",
        "16",
    ]);
    assert_eq!(code(&bad), 2);
    let bv = wavecone(&[
        "measure-check",
        "builtin:curl",
        "--p",
        "2",
        "--bv-slab",
        "--jump",
        "1,-1",
        "--n",
        "16",
    ]);
    assert_eq!(code(&bv), 0, "{}", String::from_utf8_lossy(&bv.stderr));
}

#[test]
fn measure_check_reads_field_files() {
    use wavecone::measure::{bv_jump_example, write_field_binary, Shape};
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.bin");
    let mu = bv_jump_example(
        &Shape::Cube {
            d: 2,
            lo: 0.25,
            hi: 0.75,
        },
        &[1.0],
        16,
    )
    .unwrap();
    write_field_binary(&mu, std::fs::File::create(&p).unwrap()).unwrap();
    let o = wavecone(&[
        "measure-check",
        "builtin:curl",
        "--d",
        "2",
        "--field",
        p.to_str().unwrap(),
        "--convention",
        "centered",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn input_errors_exit_with_one() {
    assert_eq!(code(&wavecone(&["analyze", "builtin:nope"])), 1);
    assert_eq!(code(&wavecone(&["analyze"])), 1);
    assert_eq!(
        code(&wavecone(&[
            "member",
            "builtin:laplacian",
            "--lambda",
            "1,2",
            "--cone",
            "wave"
        ])),
        1
    );
    assert_eq!(
        code(&wavecone(&[
            "member",
            "builtin:laplacian",
            "--lambda",
            "1",
            "--cone",
            "sideways"
        ])),
        1
    );
    assert_eq!(code(&wavecone(&["analyze", "does/not/exist.json"])), 1);
    assert_eq!(code(&wavecone(&["validate", "does/not/exist.json"])), 1);
    assert_eq!(code(&wavecone(&["--tol-zero", "2", "analyze", "builtin:laplacian"])), 1);
    assert_eq!(code(&wavecone(&["--help"])), 0);
}

#[test]
fn operator_files_and_grid_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("op.json");
    std::fs::write(
        &p,
        r#"{"d":2,"m":1,"n":1,"k":2,"terms":[{"alpha":[2,0],"matrix":[[1]]},{"alpha":[0,2],"matrix":[[-1]]}]}"#,
    )
    .unwrap();
    let o = wavecone(&["member", p.to_str().unwrap(), "--lambda", "1", "--cone", "wave"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["decision"], "member");
    let g = wavecone(&[
        "grid-oracle",
        "builtin:cubic3d",
        "--lambda",
        "1",
        "--cone",
        "n:1",
        "--resolution",
        "2",
    ]);
    assert_eq!(code(&g), 0);
    assert!(json(&g)["value"].as_f64().unwrap() > 0.3);
    assert!(Path::new(env!("CARGO_BIN_EXE_wavecone")).exists());
}
