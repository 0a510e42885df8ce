//! Exit codes and output shape of the `rdk` binary.

use std::process::{Command, Output};

fn rdk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdk")).args(args).output().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let out = out.to_str().unwrap();
    assert_eq!(rdk(&["verify", "--suite", "nope", "--out", out]).status.code(), Some(2));
    assert_eq!(rdk(&["frobnicate"]).status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"vocab_size": 10, "prune_keep": [20]}"#).unwrap();
    let code = rdk(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out]).status.code();
    assert_eq!(code, Some(2));
    std::fs::write(&cfg, r#"{"vocab_size": 10, "colour": "red"}"#).unwrap();
    let code = rdk(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out]).status.code();
    assert_eq!(code, Some(2));

    let few = dir.path().join("few.txt");
    std::fs::write(&few, "1 2 3").unwrap();
    let code = rdk(&["fit", "--input", few.to_str().unwrap(), "--out", out]).status.code();
    assert_eq!(code, Some(2));
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let missing = dir.path().join("missing.txt");
    let o = rdk(&["freq", "--input", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn passing_suite_exits_0_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = rdk(&["verify", "--suite", "bounded_l1", "--trials", "500", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,trials,violations,max_residual,bound,seed,pass"));
    assert!(lines.next().unwrap().starts_with("bounded_l1,500,0,"));
}

#[test]
fn sweep_csv_has_one_row_per_level_and_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"vocab_size": 1000, "prune_keep": [1000, 100], "trials": 4, "schemes": ["tli", "masked_only"]}"#,
    )
    .unwrap();
    let out = dir.path().join("s.csv");
    let o = rdk(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 1 + 4);
    assert!(rows[1].starts_with("1000,") && rows[4].starts_with("100,"));
    // nothing is pruned at full size, so masking and TLI both accept everything
    for r in &rows[1..3] {
        let alpha: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!((alpha - 1.0).abs() < 1e-12, "{r}");
    }
}
