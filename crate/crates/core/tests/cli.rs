use std::process::{Command, Output};

fn extpauli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extpauli")).args(args).output().unwrap()
}

fn lambda_close(v: &serde_json::Value, want: [f64; 6]) -> bool {
    let got = v["result"]["lambda"].as_array().unwrap();
    got.len() == 6 && got.iter().zip(want).all(|(g, w)| (g.as_f64().unwrap() - w).abs() < 1e-12)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn every_output_carries_the_header() {
    for cmd in ["prepare", "functional", "echo"] {
        let csv = stdout(&extpauli(&[cmd, "--format", "csv"]));
        for key in ["# tool: extpauli", "# command:", "# seed:", "# config_sha256:"] {
            assert!(csv.contains(key), "{cmd} csv lacks {key}");
        }
        let json: serde_json::Value = serde_json::from_str(&stdout(&extpauli(&[cmd]))).unwrap();
        assert_eq!(json["header"]["command"], cmd);
        assert!(json["header"]["config_sha256"].as_str().unwrap().len() == 64);
    }
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"target": "epr", "seed": 4}"#).unwrap();
    let p = path.to_str().unwrap();

    let from_file: serde_json::Value = serde_json::from_str(&stdout(&extpauli(&["prepare", "--config", p]))).unwrap();
    assert_eq!(from_file["header"]["seed"], 4);
    assert!(lambda_close(&from_file, [1.0, 0.5, 0.5, 0.5, 0.5, 0.0]));

    let overridden: serde_json::Value =
        serde_json::from_str(&stdout(&extpauli(&["prepare", "--config", p, "--target", "slater"]))).unwrap();
    assert!(lambda_close(&overridden, [1.0, 1.0, 1.0, 0.0, 0.0, 0.0]));
    assert_ne!(from_file["header"]["config_sha256"], overridden["header"]["config_sha256"]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"targte": "epr"}"#).unwrap();
    for args in [
        vec!["prepare", "--config", bad.to_str().unwrap()],
        vec!["prepare", "--target", "bell"],
        vec!["montecarlo", "--confidence", "0.2", "--samples", "10"],
        vec!["noisy", "--dt", "1e-9"],
    ] {
        let out = extpauli(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn outside_lambda_is_reported_not_rejected() {
    let out = extpauli(&["polytope", "--lambda", "1,1,1,1,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["result"]["bd_member"], false);
    assert_eq!(json["result"]["classes"]["ghz"], false);
}
