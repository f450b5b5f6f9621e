use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::metrics::{score, MetricsRow, METRICS_HEADER};
use super::scenario::random_asf;
use crate::baselines::{estimate_burg, estimate_l2_projection, estimate_spice};
use crate::covariance::{
    build_grid_problem, sample_covariance, sample_snapshots, save_first_column_csv, toeplitz_matrix,
    toeplitz_noise_level, toeplitzify, NnlsProblem, SnapshotMeta, SnapshotSet,
};
use crate::error::{AsfError, Result};
use crate::estimators::{estimate_nnls, AsfEstimate, GnnlsSystem, Method, PulseDictionary, SweepPoint};
use crate::model::{asf_to_covariance, grid_sample_asf, AngularGrid, GroupSparseAsf};
use crate::C64;

/// Seed for the snapshot stream of one `(seed, T/M)` run, decorrelated from
/// the scenario stream (`seed` itself).
pub fn snapshot_seed(seed: u64, t_over_m: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (t_over_m as u64).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Inputs shared by every estimator in one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub t_over_m: usize,
    pub asf: GroupSparseAsf,
    /// Grid-sampled truth, unit sum.
    pub truth: Vec<f64>,
    pub noise_power: f64,
    /// Snapshot count; `None` in exact-moment mode.
    pub snapshots: Option<usize>,
    pub sigma_hat: Vec<C64>,
    /// Sample covariance (Toeplitz of the exact moments in exact mode).
    pub sample_cov: DMatrix<C64>,
    /// Raw snapshots; `None` in exact-moment mode.
    pub snapshot_set: Option<SnapshotSet>,
}

impl Scenario {
    pub fn meta(&self) -> SnapshotMeta {
        SnapshotMeta {
            m: self.sigma_hat.len(),
            t: self.snapshots.unwrap_or(0),
            n0: self.noise_power,
            seed: snapshot_seed(self.seed, self.t_over_m),
        }
    }
}

/// Draws the ASF for `seed` (shared across `T/M`) and the covariance
/// estimate for `(seed, T/M)`.
pub fn simulate(config: &ExperimentConfig, grid: &AngularGrid, seed: u64, t_over_m: usize) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [k_min, k_max] = config.clusters;
    let k = rng.random_range(k_min..=k_max);
    let asf = random_asf(k, config.width_bound, grid, &mut rng)?;
    let truth = grid_sample_asf(&asf, grid);
    let m = config.array_size;
    let n0 = config.noise_power();
    let cov = asf_to_covariance(&asf, m);
    let (sigma_hat, sample_cov, snapshot_set) = if config.exact_moments {
        let col = cov.with_noise(n0).first_column().to_vec();
        let mat = toeplitz_matrix(&col);
        (col, mat, None)
    } else {
        let snaps = sample_snapshots(&cov, t_over_m * m, n0, snapshot_seed(seed, t_over_m))?;
        let s = sample_covariance(&snaps);
        (toeplitzify(&s), s, Some(snaps))
    };
    let snapshots = snapshot_set.as_ref().map(|s| s.len());
    Ok(Scenario { seed, t_over_m, asf, truth, noise_power: n0, snapshots, sigma_hat, sample_cov, snapshot_set })
}

/// Index of the largest penalty whose data-fit residual stays within the
/// expected estimation noise of the plain NNLS fit:
/// `r(s')^2 <= r_nnls^2 + noise_level^2`. Falls back to the smallest penalty.
pub fn residual_matched(points: &[SweepPoint], nnls_residual: f64, noise_level: f64) -> usize {
    assert!(!points.is_empty(), "empty sweep");
    let budget = (nnls_residual.powi(2) + noise_level.powi(2)) * (1.0 + 1e-9) + f64::MIN_POSITIVE;
    let feasible = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.fit_residual.powi(2) <= budget)
        .max_by(|a, b| a.1.varsigma_prime.total_cmp(&b.1.varsigma_prime));
    match feasible {
        Some((i, _)) => i,
        None => {
            points
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.varsigma_prime.total_cmp(&b.1.varsigma_prime))
                .expect("non-empty")
                .0
        }
    }
}

/// Generalized NNLS with the penalty chosen by [`residual_matched`] over
/// `relative_sweep * ||Phi^T b||_inf`.
pub fn gnnls_residual_matched(
    problem: &NnlsProblem,
    dict: &PulseDictionary,
    relative_sweep: &[f64],
    nnls_residual: f64,
    noise_level: f64,
) -> Result<AsfEstimate> {
    let (best, mut points) = gnnls_sweep(problem, dict, relative_sweep, nnls_residual, noise_level)?;
    Ok(points.swap_remove(best).estimate)
}

/// Every point of the relative sweep together with the index chosen by
/// [`residual_matched`].
pub fn gnnls_sweep(
    problem: &NnlsProblem,
    dict: &PulseDictionary,
    relative_sweep: &[f64],
    nnls_residual: f64,
    noise_level: f64,
) -> Result<(usize, Vec<SweepPoint>)> {
    let system = GnnlsSystem::new(problem, dict)?;
    let scale = system.scale();
    let values: Vec<f64> = relative_sweep.iter().map(|s| s * scale).collect();
    let points = system.sweep(&values)?;
    let best = residual_matched(&points, nnls_residual, noise_level);
    Ok((best, points))
}

/// Wall-clock time of one estimator call.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: Method,
    pub seed: u64,
    pub t_over_m: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub estimate: std::result::Result<AsfEstimate, String>,
    /// Estimates at every swept penalty (gnnls only).
    pub sweep: Vec<AsfEstimate>,
    pub seconds: f64,
}

/// Everything produced by one `(seed, T/M)` run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub outcomes: Vec<MethodOutcome>,
}

impl RunOutput {
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.outcomes
            .iter()
            .map(|o| {
                let (scores, varsigma_prime, status) = match &o.estimate {
                    Ok(est) => {
                        let status = if est.diagnostics.converged {
                            "ok".to_string()
                        } else {
                            format!("unconverged: {}", est.diagnostics.flags.join("; "))
                        };
                        (Some(score(&est.gamma, &self.scenario.truth)), est.diagnostics.varsigma_prime, status)
                    }
                    Err(e) => (None, None, format!("failed: {e}")),
                };
                MetricsRow {
                    method: o.method,
                    seed: self.scenario.seed,
                    t_over_m: self.scenario.t_over_m,
                    clusters: self.scenario.asf.clusters().len(),
                    scores,
                    varsigma_prime,
                    status,
                }
            })
            .collect()
    }
}

fn run_method(
    method: Method,
    config: &ExperimentConfig,
    scenario: &Scenario,
    grid: &AngularGrid,
    dict: &PulseDictionary,
    problem: &Result<NnlsProblem>,
    nnls: &std::result::Result<AsfEstimate, String>,
) -> std::result::Result<(AsfEstimate, Vec<AsfEstimate>), String> {
    let problem = problem.as_ref().map_err(|e| e.to_string());
    let single = |r: Result<AsfEstimate>| r.map(|e| (e, Vec::new())).map_err(|e| e.to_string());
    match method {
        Method::Nnls => nnls.clone().map(|e| (e, Vec::new())),
        Method::Gnnls => {
            let problem = problem?;
            let nnls = nnls.as_ref().map_err(|e| format!("plain NNLS fit unavailable: {e}"))?;
            let r_nnls = nnls.diagnostics.residual_norm.unwrap_or(0.0);
            let eta = scenario.snapshots.map_or(0.0, |t| toeplitz_noise_level(&scenario.sigma_hat, t));
            let (best, points) =
                gnnls_sweep(problem, dict, &config.sweep(), r_nnls, eta).map_err(|e| e.to_string())?;
            let sweep: Vec<AsfEstimate> = points.into_iter().map(|p| p.estimate).collect();
            Ok((sweep[best].clone(), sweep))
        }
        Method::Spice => single(estimate_spice(&scenario.sample_cov, grid, &config.spice)),
        Method::Burg => single(estimate_burg(&scenario.sigma_hat, config.burg_order, grid)),
        Method::L2proj => {
            let mut signal = scenario.sigma_hat.clone();
            signal[0].re -= scenario.noise_power;
            single(estimate_l2_projection(&signal, grid, &config.l2proj))
        }
        Method::Dnn => Err("dnn estimates are produced externally; score them with the metrics command".into()),
    }
}

/// Runs every configured method on one scenario.
pub fn run_single(
    config: &ExperimentConfig,
    grid: &AngularGrid,
    dict: &PulseDictionary,
    seed: u64,
    t_over_m: usize,
) -> Result<RunOutput> {
    let scenario = simulate(config, grid, seed, t_over_m)?;
    let problem = build_grid_problem(&scenario.sigma_hat, grid, scenario.noise_power);
    if let Ok(p) = &problem {
        if !p.first_row_positive() {
            return Err(AsfError::Numerical("first row of A is not positive".into()));
        }
    }

    let nnls_start = Instant::now();
    let nnls = match &problem {
        Ok(p) => estimate_nnls(p).map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    };
    let nnls_seconds = nnls_start.elapsed().as_secs_f64();

    let outcomes = config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let result = run_method(method, config, &scenario, grid, dict, &problem, &nnls);
            let mut seconds = start.elapsed().as_secs_f64();
            if method == Method::Nnls {
                seconds = nnls_seconds;
            }
            if let Err(e) = &result {
                log::warn!("seed {seed}, T/M {t_over_m}: {method} failed: {e}");
            }
            let (estimate, sweep) = match result {
                Ok((est, sweep)) => (Ok(est), sweep),
                Err(e) => (Err(e), Vec::new()),
            };
            MethodOutcome { method, estimate, sweep, seconds }
        })
        .collect();
    Ok(RunOutput { scenario, outcomes })
}

pub fn run_dir(output_dir: &Path, seed: u64, t_over_m: usize) -> PathBuf {
    output_dir.join("runs").join(format!("seed{seed}_tm{t_over_m}"))
}

fn write_unit_csv(path: &Path, grid: &AngularGrid, gamma: &[f64]) -> Result<()> {
    let mut out = String::from("xi,gamma\n");
    for (xi, v) in grid.points().iter().zip(gamma) {
        writeln!(out, "{xi},{v}").expect("write to string");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the ASF, covariance estimate, truth, estimates (plus one file per
/// swept penalty under `<method>_sweep/`, ordered as the sweep, each sidecar
/// recording its `varsigma_prime`) and a plot panel (`xi,truth,<method>...`,
/// unit-sum columns) for one run.
pub fn write_run(output_dir: &Path, grid: &AngularGrid, run: &RunOutput) -> Result<()> {
    let sc = &run.scenario;
    let dir = run_dir(output_dir, sc.seed, sc.t_over_m);
    std::fs::create_dir_all(&dir)?;
    sc.asf.save(&dir.join("asf.json"))?;
    save_first_column_csv(&dir.join("sigma_hat.csv"), &sc.sigma_hat, &sc.meta())?;
    write_unit_csv(&dir.join("truth.csv"), grid, &sc.truth)?;

    let mut columns: Vec<(String, Vec<f64>)> = vec![("truth".into(), sc.truth.clone())];
    for o in &run.outcomes {
        if let Ok(est) = &o.estimate {
            est.save_csv(&dir.join(format!("{}.csv", o.method)), grid)?;
            columns.push((o.method.to_string(), est.normalized_gamma()));
        }
        if !o.sweep.is_empty() {
            let sweep_dir = dir.join(format!("{}_sweep", o.method));
            std::fs::create_dir_all(&sweep_dir)?;
            for (i, est) in o.sweep.iter().enumerate() {
                est.save_csv(&sweep_dir.join(format!("{i:02}.csv")), grid)?;
            }
        }
    }
    let panels = output_dir.join("panels");
    std::fs::create_dir_all(&panels)?;
    let mut out = String::from("xi");
    for (name, _) in &columns {
        write!(out, ",{name}").expect("write to string");
    }
    out.push('\n');
    for (g, xi) in grid.points().iter().enumerate() {
        write!(out, "{xi}").expect("write to string");
        for (_, col) in &columns {
            write!(out, ",{}", col[g]).expect("write to string");
        }
        out.push('\n');
    }
    std::fs::write(panels.join(format!("seed{}_tm{}.csv", sc.seed, sc.t_over_m)), out)?;
    Ok(())
}

/// Aggregate result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub timings: Vec<TimingRow>,
    pub metrics_path: PathBuf,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Runs all `(seed, T/M)` combinations in parallel and writes
/// `metrics.csv`, `timings.csv`, `config.json` and per-run files under the
/// output directory. Rows are ordered by seed, then `T/M`, then method, so
/// `metrics.csv` depends only on the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let grid = AngularGrid::new(config.grid_size)?;
    let dict = PulseDictionary::new(config.grid_size, config.max_pulse_width())?;
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.json"), config.to_json()?)?;

    let jobs: Vec<(u64, usize)> = config
        .seeds
        .iter()
        .flat_map(|&s| config.t_over_m.iter().map(move |&t| (s, t)))
        .collect();
    let runs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(seed, t)| {
            let run = run_single(config, &grid, &dict, seed, t)?;
            if config.write_estimates {
                write_run(out_dir, &grid, &run)?;
            }
            log::info!("finished seed {seed}, T/M {t}");
            Ok(run)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for run in &runs {
        rows.extend(run.rows());
        timings.extend(run.outcomes.iter().map(|o| TimingRow {
            method: o.method,
            seed: run.scenario.seed,
            t_over_m: run.scenario.t_over_m,
            seconds: o.seconds,
        }));
    }
    let metrics_path = out_dir.join("metrics.csv");
    std::fs::write(&metrics_path, metrics_csv(&rows))?;
    let mut t = String::from("method,seed,T_over_M,runtime_s\n");
    for row in &timings {
        writeln!(t, "{},{},{},{}", row.method, row.seed, row.t_over_m, row.seconds).expect("write to string");
    }
    std::fs::write(out_dir.join("timings.csv"), t)?;
    Ok(ExperimentOutput { rows, timings, metrics_path })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(8, 32);
        cfg.t_over_m = vec![2, 4];
        cfg.seeds = vec![1];
        cfg.methods = vec![Method::Nnls];
        cfg.clusters = [1, 2];
        cfg.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn one_seed_bookkeeping() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path());
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2);
        for t in [2, 4] {
            let run = run_dir(dir.path(), 1, t);
            let csvs: Vec<_> = std::fs::read_dir(&run)
                .unwrap()
                .map(|e| e.unwrap().file_name().into_string().unwrap())
                .filter(|n| n.ends_with(".csv") && n != "truth.csv" && n != "sigma_hat.csv")
                .collect();
            assert_eq!(csvs, vec!["nnls.csv".to_string()]);
        }
        let text = std::fs::read_to_string(&out.metrics_path).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn method_failure_is_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(dir.path());
        cfg.methods = vec![Method::Dnn, Method::Nnls];
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert!(out.rows[0].status.starts_with("failed"));
        assert!(out.rows[0].scores.is_none());
        assert!(out.rows[1].scores.is_some());
    }

    #[test]
    fn snapshot_seeds_differ() {
        assert_ne!(snapshot_seed(1, 2), snapshot_seed(1, 4));
        assert_ne!(snapshot_seed(1, 2), snapshot_seed(2, 2));
        assert_eq!(snapshot_seed(7, 8), snapshot_seed(7, 8));
    }
}
