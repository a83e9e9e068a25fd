//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ffs::io::{load_dataset, load_fit_trajectory, read_summary, save_fit, save_synthetic, save_trajectory, write_matrix};
use ffs::metrics::{network_pcc, rank_subjects_by_movement, rmse, transition_norm_heatmap};
use ffs::postprocess::{kmeans_rows, row_normalize, sequential_align, AlignedTrajectory};
use ffs::{fit, ModelConfig, ObservationKind, PriorKind};

use crate::bench::{methods_for, rows_csv, run_benchmark, summary_csv};
use crate::scenario::{Scenario, ScenarioKind, SizeArgs};
use crate::MissingInput;

#[derive(Debug, Parser)]
#[command(name = "ffs", version, about = "Fusion-shrinkage factor models for dynamic matrices, networks and tensors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a dataset directory and write factors, predictions and a summary.
    Fit(FitArgs),
    /// Generate a synthetic dataset directory.
    Simulate(SimulateArgs),
    /// Compare methods over simulated replicates and write a CSV.
    Benchmark(BenchmarkArgs),
    /// Normalize, align and cluster the factors of a fit directory.
    Postprocess(PostprocessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Gaussian,
    Bernoulli,
    Tensor,
}

impl From<KindArg> for ObservationKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gaussian => ObservationKind::GaussianMatrix,
            KindArg::Bernoulli => ObservationKind::BernoulliNetwork,
            KindArg::Tensor => ObservationKind::GaussianTensor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Ffs,
    Iglsm,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dataset directory containing manifest.txt.
    #[arg(long)]
    pub data: PathBuf,
    /// Expected observation kind; checked against the manifest.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "ffs")]
    pub prior: PriorArg,
    /// Fit a global intercept (networks).
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    pub intercept: bool,
    /// Stopping tolerance on the training RMSE (Gaussian) or AUC (networks).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-cycles", default_value_t = 100)]
    pub max_cycles: usize,
    #[arg(long = "a-sigma0", default_value_t = 0.5)]
    pub a_sigma0: f64,
    #[arg(long = "b-sigma0", default_value_t = 0.5)]
    pub b_sigma0: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioKind,
    #[command(flatten)]
    pub sizes: SizeArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioKind,
    #[command(flatten)]
    pub sizes: SizeArgs,
    #[arg(long, default_value_t = 25)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-replicate CSV; the median summary goes next to it as `<stem>.summary.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    /// Fit directory written by `ffs fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// Sequential Procrustes alignment over time.
    #[arg(long)]
    pub align: bool,
    /// Scale every latent vector to unit length before alignment.
    #[arg(long)]
    pub normalize: bool,
    /// Number of K-means clusters per time point.
    #[arg(long)]
    pub kmeans: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => run_fit(&a),
        Command::Simulate(a) => run_simulate(&a),
        Command::Benchmark(a) => run_benchmark_cmd(&a),
        Command::Postprocess(a) => run_postprocess(&a),
    }
}

fn require(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(MissingInput(path.to_path_buf()).into());
    }
    Ok(())
}

pub fn run_fit(a: &FitArgs) -> Result<()> {
    require(&a.data.join("manifest.txt"))?;
    let ds = load_dataset(&a.data).with_context(|| format!("reading dataset {}", a.data.display()))?;
    let kind = ds.observations.kind;
    if let Some(k) = a.kind {
        let wanted = ObservationKind::from(k);
        if wanted != kind {
            bail!("--kind {} does not match the dataset kind {kind}", wanted);
        }
    }
    let mut config = ModelConfig {
        d: a.d,
        alpha: a.alpha,
        a_sigma0: a.a_sigma0,
        b_sigma0: a.b_sigma0,
        prior_kind: match a.prior {
            PriorArg::Ffs => PriorKind::Ffs,
            PriorArg::Iglsm => PriorKind::Iglsm,
        },
        intercept: a.intercept,
        max_outer_cycles: a.max_cycles,
        seed: a.seed,
        ..ModelConfig::default()
    };
    if let Some(tol) = a.tol {
        if kind.is_gaussian() {
            config.tol_rmse = tol;
        } else {
            config.tol_auc = tol;
        }
    }
    let result = fit(&ds.observations, config)?;
    save_fit(&a.out, &result)?;

    let mut report = format!(
        "cycles={}\nconverged={}\nfinal_metric={}\n",
        result.cycles_used,
        result.converged,
        result.trace.last().copied().unwrap_or(f64::NAN)
    );
    if let Some(truth) = ds.into_synthetic() {
        let est = result.predicted_means()?;
        let response = truth.truth_response();
        let mut lines = String::new();
        if kind == ObservationKind::BernoulliNetwork {
            lines.push_str(&format!("pcc_truth={}\n", network_pcc(&est, &response, result.dims[0])?));
        }
        lines.push_str(&format!("rmse_truth={}\n", rmse(&est, &response)?));
        fs::write(a.out.join("truth_metrics.txt"), &lines)?;
        report.push_str(&lines);
    }
    print!("{report}");
    Ok(())
}

pub fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let scenario = Scenario::new(a.scenario, &a.sizes);
    let ds = scenario.generate(a.seed)?;
    save_synthetic(&a.out, &ds)?;
    println!("wrote {} ({}, dims {:?}, T={})", a.out.display(), scenario.kind, scenario.dims, scenario.len);
    Ok(())
}

/// `results.csv` → `results.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("benchmark".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.summary.csv"))
}

pub fn run_benchmark_cmd(a: &BenchmarkArgs) -> Result<()> {
    let scenario = Scenario::new(a.scenario, &a.sizes);
    let rows = run_benchmark(&scenario, methods_for(scenario.kind), a.reps, a.seed)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&a.out, rows_csv(&rows))?;
    let summary = summary_csv(scenario.kind.name(), &rows);
    fs::write(summary_path(&a.out), &summary)?;
    print!("{summary}");
    Ok(())
}

pub fn run_postprocess(a: &PostprocessArgs) -> Result<()> {
    require(&a.fit.join("summary.txt"))?;
    let summary = read_summary(&a.fit)?;
    let kind: ObservationKind = summary.get("kind").context("summary.txt has no kind")?.parse()?;
    let modes = match kind {
        ObservationKind::GaussianMatrix => 2,
        ObservationKind::BernoulliNetwork => 1,
        ObservationKind::GaussianTensor => {
            summary.get("dims").context("summary.txt has no dims")?.split(',').count()
        }
    };
    fs::create_dir_all(&a.out)?;
    for m in 0..modes {
        let mut traj = load_fit_trajectory(&a.fit, "means", m)?;
        if a.normalize {
            traj = traj.iter().map(row_normalize).collect();
        }
        let processed = if a.align {
            sequential_align(&traj)?
        } else {
            AlignedTrajectory { factors: traj, rotations: vec![] }
        };
        save_trajectory(&a.out.join(format!("factors_mode{m}.txt")), &processed.factors)?;
        let heat = transition_norm_heatmap(&processed);
        write_matrix(&a.out.join(format!("heatmap_mode{m}.txt")), heat.nrows(), heat.ncols(), heat.as_slice())?;
        let ranking: Vec<f64> = rank_subjects_by_movement(&heat).iter().map(|&i| i as f64).collect();
        write_matrix(&a.out.join(format!("ranking_mode{m}.txt")), ranking.len(), 1, &ranking)?;
        if let Some(k) = a.kmeans {
            let len = processed.factors.len();
            let n = processed.factors.first().map_or(0, |u| u.nrows());
            let mut labels = vec![0.0; len * n];
            for (t, u) in processed.factors.iter().enumerate() {
                let fit = kmeans_rows(u, k, a.restarts, a.seed)?;
                for (i, l) in fit.labels.iter().enumerate() {
                    labels[t + len * i] = *l as f64;
                }
            }
            write_matrix(&a.out.join(format!("clusters_mode{m}.txt")), len, n, &labels)?;
        }
    }
    println!("wrote {}", a.out.display());
    Ok(())
}
