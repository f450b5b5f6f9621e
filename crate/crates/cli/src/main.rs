use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use asf_core::baselines::{estimate_burg, estimate_l2_projection, estimate_spice};
use asf_core::covariance::{
    build_grid_problem, load_first_column_csv, sample_covariance, save_first_column_csv, toeplitz_matrix,
    toeplitz_noise_level, SnapshotSet,
};
use asf_core::estimators::{estimate_nnls, AsfEstimate, GnnlsSystem, Method, PulseDictionary};
use asf_core::harness::{
    gnnls_residual_matched, run_experiment, score, simulate, ExperimentConfig,
};
use asf_core::model::{grid_sample_asf, AngularGrid, GroupSparseAsf};

#[derive(Parser)]
#[command(name = "asf", version, about = "Group-sparse angular spread function estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random ASF and write snapshots, sigma_hat and truth files.
    Simulate(SimulateArgs),
    /// Estimate an ASF from a sigma_hat CSV.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo experiment and write metrics and estimates.
    Experiment(ExperimentArgs),
    /// Score estimate CSVs against a true ASF.
    Metrics(MetricsArgs),
}

/// Flags mirroring the experiment config; they override the config file.
#[derive(Args, Debug, Default)]
struct ConfigFlags {
    /// Experiment config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of antennas.
    #[arg(long = "m")]
    array_size: Option<usize>,
    /// Grid size.
    #[arg(long = "g")]
    grid_size: Option<usize>,
    /// Snapshot counts as multiples of M, comma separated.
    #[arg(long, value_delimiter = ',')]
    t_over_m: Option<Vec<usize>>,
    /// Per-antenna SNR in dB.
    #[arg(long, conflicts_with = "noiseless")]
    snr_db: Option<f64>,
    /// No additive noise.
    #[arg(long)]
    noiseless: bool,
    /// Smallest cluster count.
    #[arg(long)]
    k_min: Option<usize>,
    /// Largest cluster count.
    #[arg(long)]
    k_max: Option<usize>,
    /// Upper bound on cluster widths.
    #[arg(long)]
    width_bound: Option<f64>,
    /// Maximum pulse width for gnnls.
    #[arg(long)]
    p0: Option<usize>,
    /// Scenario seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Methods to run: nnls, gnnls, spice, burg, l2proj, dnn.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Use exact moments instead of sampled snapshots.
    #[arg(long)]
    exact_moments: bool,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => match (self.array_size, self.grid_size) {
                (Some(m), Some(g)) => ExperimentConfig::new(m, g),
                _ => bail!("either --config or both --m and --g are required"),
            },
        };
        if let Some(m) = self.array_size {
            cfg.array_size = m;
        }
        if let Some(g) = self.grid_size {
            cfg.grid_size = g;
        }
        if let Some(t) = &self.t_over_m {
            cfg.t_over_m = t.clone();
        }
        if self.noiseless {
            cfg.snr_db = None;
        } else if let Some(snr) = self.snr_db {
            cfg.snr_db = Some(snr);
        }
        if let Some(k) = self.k_min {
            cfg.clusters[0] = k;
        }
        if let Some(k) = self.k_max {
            cfg.clusters[1] = k;
        }
        if let Some(w) = self.width_bound {
            cfg.width_bound = w;
        }
        if self.p0.is_some() {
            cfg.p0 = self.p0;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(m) = &self.methods {
            cfg.methods = m.clone();
        }
        if self.exact_moments {
            cfg.exact_moments = true;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Scenario seed (the first configured seed by default).
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot count as a multiple of M (the first configured value by default).
    #[arg(long)]
    tm: Option<usize>,
    /// Output directory.
    #[arg(long, env = "ASF_OUTPUT_DIR", default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// sigma_hat CSV (`lag,re,im`) with its JSON sidecar.
    #[arg(long)]
    sigma: PathBuf,
    #[arg(long)]
    method: Method,
    /// Grid size.
    #[arg(long = "g")]
    grid_size: usize,
    /// Maximum pulse width for gnnls.
    #[arg(long)]
    p0: Option<usize>,
    /// Fixed gnnls penalty relative to ||Phi^T b||_inf; residual-matched when absent.
    #[arg(long)]
    varsigma_prime: Option<f64>,
    /// Snapshot CSV for spice (the Toeplitz estimate is used otherwise).
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Burg AR order (M - 1 by default).
    #[arg(long)]
    order: Option<usize>,
    /// Output estimate CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    /// Output directory (overrides the config file).
    #[arg(long, env = "ASF_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// True ASF: `asf.json` or a `xi,gamma` CSV on the estimate grid.
    #[arg(long)]
    truth: PathBuf,
    /// Estimate CSVs in the `xi,gamma` format.
    #[arg(required = true)]
    estimates: Vec<PathBuf>,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = args.flags.resolve()?;
    cfg.validate()?;
    let seed = args.seed.unwrap_or(cfg.seeds[0]);
    let tm = args.tm.unwrap_or(cfg.t_over_m[0]);
    let grid = AngularGrid::new(cfg.grid_size)?;
    let scenario = simulate(&cfg, &grid, seed, tm)?;
    let dir = &args.output_dir;
    std::fs::create_dir_all(dir)?;
    scenario.asf.save(&dir.join("asf.json"))?;
    save_first_column_csv(&dir.join("sigma_hat.csv"), &scenario.sigma_hat, &scenario.meta())?;
    let mut truth = String::from("xi,gamma\n");
    for (xi, v) in grid.points().iter().zip(&scenario.truth) {
        truth.push_str(&format!("{xi},{v}\n"));
    }
    std::fs::write(dir.join("truth.csv"), truth)?;
    if let Some(snaps) = &scenario.snapshot_set {
        snaps.save_csv(&dir.join("snapshots.csv"))?;
    }
    println!("wrote scenario seed {seed}, T/M {tm} to {}", dir.display());
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let (sigma, meta) = load_first_column_csv(&args.sigma)
        .with_context(|| format!("reading {}", args.sigma.display()))?;
    let grid = AngularGrid::new(args.grid_size)?;
    let m = sigma.len();
    let estimate: AsfEstimate = match args.method {
        Method::Nnls => estimate_nnls(&build_grid_problem(&sigma, &grid, meta.n0)?)?,
        Method::Gnnls => {
            let problem = build_grid_problem(&sigma, &grid, meta.n0)?;
            let p0 = args.p0.unwrap_or_else(|| asf_core::estimators::default_p0(args.grid_size, m));
            let dict = PulseDictionary::new(args.grid_size, p0)?;
            match args.varsigma_prime {
                Some(rel) => {
                    let system = GnnlsSystem::new(&problem, &dict)?;
                    let scale = system.scale();
                    system.solve(rel * scale)?
                }
                None => {
                    let nnls = estimate_nnls(&problem)?;
                    let eta = if meta.t > 0 { toeplitz_noise_level(&sigma, meta.t) } else { 0.0 };
                    let sweep = ExperimentConfig::new(m, args.grid_size).sweep();
                    gnnls_residual_matched(
                        &problem,
                        &dict,
                        &sweep,
                        nnls.diagnostics.residual_norm.unwrap_or(0.0),
                        eta,
                    )?
                }
            }
        }
        Method::Spice => {
            let cov = match &args.snapshots {
                Some(path) => sample_covariance(&SnapshotSet::load_csv(path)?),
                None => toeplitz_matrix(&sigma),
            };
            estimate_spice(&cov, &grid, &Default::default())?
        }
        Method::Burg => estimate_burg(&sigma, args.order, &grid)?,
        Method::L2proj => {
            let mut signal = sigma.clone();
            signal[0].re -= meta.n0;
            estimate_l2_projection(&signal, &grid, &Default::default())?
        }
        Method::Dnn => bail!("dnn estimates are produced by the external model"),
    };
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    estimate.save_csv(&args.out, &grid)?;
    if !estimate.diagnostics.converged {
        log::warn!("{} did not converge: {:?}", estimate.method, estimate.diagnostics.flags);
    }
    println!("wrote {} estimate to {}", estimate.method, args.out.display());
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = args.flags.resolve()?;
    if let Some(dir) = args.output_dir {
        cfg.output_dir = dir;
    }
    let out = run_experiment(&cfg)?;
    let failed = out.rows.iter().filter(|r| r.scores.is_none()).count();
    println!(
        "wrote {} metric rows ({failed} failed) to {}",
        out.rows.len(),
        out.metrics_path.display()
    );
    Ok(())
}

fn load_truth(path: &Path, grid: &AngularGrid) -> Result<Vec<f64>> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(grid_sample_asf(&GroupSparseAsf::load(path)?, grid))
    } else {
        let (_, est) = AsfEstimate::load_csv(path, Method::Nnls)?;
        if est.gamma.len() != grid.len() {
            bail!("truth has {} cells, estimate grid has {}", est.gamma.len(), grid.len());
        }
        Ok(est.gamma)
    }
}

fn method_from_name(path: &Path) -> Method {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .unwrap_or(Method::Dnn)
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    let mut out = String::from("file,method,l1_error,l2_error,support_jaccard,group_count,oob_power\n");
    for path in &args.estimates {
        let (xi, est) = AsfEstimate::load_csv(path, method_from_name(path))
            .with_context(|| format!("reading {}", path.display()))?;
        let grid = AngularGrid::new(xi.len())?;
        let truth = load_truth(&args.truth, &grid)?;
        let s = score(&est.gamma, &truth);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            path.display(),
            est.method,
            s.l1_error,
            s.l2_error,
            s.support_jaccard,
            s.group_count,
            s.oob_power
        ));
    }
    match args.out {
        Some(p) => std::fs::write(p, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}
