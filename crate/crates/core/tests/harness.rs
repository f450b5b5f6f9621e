use std::path::Path;

use asf_core::covariance::{
    build_grid_problem, load_first_column_csv, sample_snapshots, SnapshotSet,
};
use asf_core::estimators::{estimate_nnls, AsfEstimate, Method};
use asf_core::harness::{connected_components, random_asf, run_dir, run_experiment, score, ExperimentConfig};
use asf_core::model::{asf_to_covariance, grid_sample_asf, AngularGrid, Cluster, GroupSparseAsf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(16, 64);
    cfg.t_over_m = vec![2, 8];
    cfg.seeds = vec![0, 1, 2];
    cfg.clusters = [1, 3];
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&config(a.path())).unwrap();
    run_experiment(&config(b.path())).unwrap();
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(a.path(), "metrics.csv"), read(b.path(), "metrics.csv"));
    for file in ["gnnls.csv", "sigma_hat.csv", "asf.json"] {
        let rel = run_dir(Path::new(""), 2, 8).join(file);
        assert_eq!(read(a.path(), rel.to_str().unwrap()), read(b.path(), rel.to_str().unwrap()));
    }
}

#[test]
fn per_run_files_follow_the_interfaces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.rows.len(), 3 * 2 * cfg.methods.len());
    let run = run_dir(dir.path(), 1, 2);
    let (sigma, meta) = load_first_column_csv(&run.join("sigma_hat.csv")).unwrap();
    assert_eq!((sigma.len(), meta.m, meta.t), (16, 16, 32));
    assert!((meta.n0 - 0.01).abs() < 1e-15);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("sigma_hat.json")).unwrap()).unwrap();
    for key in ["M", "T", "N0", "seed"] {
        assert!(sidecar.get(key).is_some(), "missing {key}");
    }
    let (xi, est) = AsfEstimate::load_csv(&run.join("gnnls.csv"), Method::Nnls).unwrap();
    assert_eq!(est.method, Method::Gnnls);
    assert_eq!(xi.len(), 64);
    let chosen = est.diagnostics.varsigma_prime.unwrap();
    let mut swept = Vec::new();
    for entry in std::fs::read_dir(run.join("gnnls_sweep")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let (_, point) = AsfEstimate::load_csv(&path, Method::Nnls).unwrap();
            swept.push(point.diagnostics.varsigma_prime.unwrap());
        }
    }
    assert_eq!(swept.len(), cfg.sweep().len());
    assert!(swept.contains(&chosen));
    let panel = std::fs::read_to_string(dir.path().join("panels/seed1_tm2.csv")).unwrap();
    assert!(panel.starts_with("xi,truth,nnls,gnnls,spice,burg,l2proj\n"));
    assert_eq!(panel.lines().count(), 65);
}

#[test]
fn snapshot_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let asf = GroupSparseAsf::new(vec![Cluster::flat(-0.5, -0.2, 1.0)]).unwrap();
    let set = sample_snapshots(&asf_to_covariance(&asf, 4), 10, 0.1, 42).unwrap();
    let path = dir.path().join("snap.csv");
    set.save_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.split(',').count() == 8));
    assert_eq!(SnapshotSet::load_csv(&path).unwrap(), set);
}

#[test]
fn external_estimates_without_sidecar_are_scored() {
    let dir = tempfile::tempdir().unwrap();
    let grid = AngularGrid::new(8).unwrap();
    let path = dir.path().join("dnn.csv");
    let mut body = String::from("xi,gamma\n");
    for (i, xi) in grid.points().iter().enumerate() {
        body.push_str(&format!("{xi},{}\n", if i == 3 { 1.0 } else { 0.0 }));
    }
    std::fs::write(&path, body).unwrap();
    let (_, est) = AsfEstimate::load_csv(&path, Method::Dnn).unwrap();
    assert_eq!(est.method, Method::Dnn);
    let mut truth = vec![0.0; 8];
    truth[3] = 1.0;
    assert_eq!(score(&est.gamma, &truth).l1_error, 0.0);
}

#[test]
fn dictionary_span_fit_is_exact() {
    // cells 40..=47 and 70..=73 of a 128 grid: edges at xi_g +- 1/G
    let grid = AngularGrid::new(128).unwrap();
    let edge = |g: usize| grid.point(g) - 1.0 / 128.0;
    let asf = GroupSparseAsf::new(vec![
        Cluster::flat(edge(40), edge(48), 0.6),
        Cluster::flat(edge(70), edge(74), 0.4),
    ])
    .unwrap();
    let sigma = asf_to_covariance(&asf, 32);
    let problem = build_grid_problem(sigma.first_column(), &grid, 0.0).unwrap();
    let est = estimate_nnls(&problem).unwrap();
    assert!(est.diagnostics.residual_norm.unwrap() <= 1e-6);
}

#[test]
fn noiseless_exact_moments_favor_gnnls() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(32, 128);
    cfg.snr_db = None;
    cfg.exact_moments = true;
    cfg.clusters = [2, 2];
    cfg.t_over_m = vec![8];
    cfg.methods = vec![Method::Nnls, Method::Gnnls];
    cfg.write_estimates = false;
    cfg.output_dir = dir.path().to_path_buf();
    let out = run_experiment(&cfg).unwrap();
    let wins = out
        .rows
        .chunks(2)
        .filter(|pair| pair[1].scores.unwrap().l1_error <= pair[0].scores.unwrap().l1_error)
        .count();
    assert!(wins >= 14, "{wins}/20");
}

#[test]
fn grid_sampled_truth_has_k_components() {
    let grid = AngularGrid::new(128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for k in 1..=4 {
        for _ in 0..50 {
            let asf = random_asf(k, 0.3, &grid, &mut rng).unwrap();
            assert_eq!(connected_components(&grid_sample_asf(&asf, &grid), 0.01).count(), k);
        }
    }
}

#[test]
fn config_files_load_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"M": 8, "G": 32, "snr_db": null, "methods": ["nnls", "burg"]}"#).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.noise_power(), 0.0);
    assert_eq!(cfg.methods, vec![Method::Nnls, Method::Burg]);
    std::fs::write(&path, r#"{"M": 8, "G": 32, "seeds": []}"#).unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
}
