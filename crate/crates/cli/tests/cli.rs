use std::path::Path;
use std::process::{Command, Output};

fn asf(args: &[&str], env: Option<(&str, &Path)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_asf"));
    cmd.args(args).env_remove("ASF_OUTPUT_DIR");
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().expect("run asf")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "asf failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn simulate_estimate_metrics_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scen = d.join("scenario");
    ok(&asf(
        &["simulate", "--m", "16", "--g", "64", "--seed", "2", "--tm", "4", "--output-dir", scen.to_str().unwrap()],
        None,
    ));
    for f in ["asf.json", "sigma_hat.csv", "sigma_hat.json", "truth.csv", "snapshots.csv"] {
        assert!(scen.join(f).exists(), "missing {f}");
    }

    let sigma = scen.join("sigma_hat.csv");
    let mut estimates = Vec::new();
    for method in ["nnls", "gnnls", "burg", "spice"] {
        let out = d.join(format!("{method}.csv"));
        let mut args = vec!["estimate", "--sigma", sigma.to_str().unwrap(), "--method", method, "--g", "64"];
        let snaps = scen.join("snapshots.csv");
        if method == "spice" {
            args.extend(["--snapshots", snaps.to_str().unwrap()]);
        }
        args.extend(["--out", out.to_str().unwrap()]);
        ok(&asf(&args, None));
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().next(), Some("xi,gamma"));
        assert_eq!(text.lines().count(), 65);
        estimates.push(out);
    }

    let mut args = vec!["metrics".to_string(), "--truth".into(), scen.join("asf.json").display().to_string()];
    args.extend(estimates.iter().map(|p| p.display().to_string()));
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let table = ok(&asf(&argv, None));
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("file,method,l1_error"));
    assert_eq!(lines.len(), 5);
    for (line, method) in lines[1..].iter().zip(["nnls", "gnnls", "burg", "spice"]) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], method);
        let l1: f64 = fields[2].parse().unwrap();
        assert!((0.0..=2.0).contains(&l1));
    }
}

#[test]
fn experiment_honours_output_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = asf(
        &["experiment", "--m", "8", "--g", "32", "--t-over-m", "2", "--seeds", "0,1", "--methods", "nnls,gnnls,burg"],
        Some(("ASF_OUTPUT_DIR", dir.path())),
    );
    ok(&out);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    // header plus 2 seeds x 3 methods
    assert_eq!(metrics.lines().count(), 7);
    assert!(dir.path().join("config.json").exists());
    assert!(dir.path().join("timings.csv").exists());
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"M": 8, "G": 32, "not_a_field": 1}"#).unwrap();
    let out = asf(&["experiment", "--config", bad.to_str().unwrap()], Some(("ASF_OUTPUT_DIR", dir.path())));
    assert!(!out.status.success());
    assert!(!dir.path().join("metrics.csv").exists());

    // l2proj on a grid coarser than 4M is rejected before any work is done
    let out = asf(&["experiment", "--m", "16", "--g", "32", "--methods", "l2proj"], Some(("ASF_OUTPUT_DIR", dir.path())));
    assert!(!out.status.success());
}
