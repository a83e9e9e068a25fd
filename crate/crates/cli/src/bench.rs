//! Method comparisons on simulated replicates.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use ffs::baselines::{cp_als, cp_reconstruct, flasso1, flasso2, svd1, svd2, LambdaGrid};
use ffs::metrics::{network_pcc, rank_subjects_by_movement, rmse, transition_norm_heatmap};
use ffs::postprocess::{kmeans_rows, rand_index, row_normalize, sequential_align};
use ffs::{fit, FitResult, ModelConfig, PriorKind, SyntheticDataset};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::scenario::{Scenario, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ffs,
    Iglsm,
    Svd1,
    Svd2,
    Flasso1,
    Flasso2,
    Cp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ffs => "ffs",
            Method::Iglsm => "iglsm",
            Method::Svd1 => "svd1",
            Method::Svd2 => "svd2",
            Method::Flasso1 => "flasso1",
            Method::Flasso2 => "flasso2",
            Method::Cp => "cp",
        }
    }
}

/// Methods compared in each scenario, in output order.
pub fn methods_for(kind: ScenarioKind) -> &'static [Method] {
    match kind {
        ScenarioKind::Case1 => &[Method::Ffs, Method::Svd1, Method::Svd2, Method::Flasso1, Method::Flasso2],
        ScenarioKind::Case2 => &[Method::Ffs, Method::Iglsm, Method::Svd1, Method::Svd2],
        ScenarioKind::Case3 => &[Method::Ffs, Method::Cp],
        ScenarioKind::Cluster | ScenarioKind::TwoMovers => &[Method::Ffs, Method::Iglsm],
    }
}

/// The metric reported for a scenario.
pub fn metric_for(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Case1 | ScenarioKind::Case3 => "rmse",
        ScenarioKind::Case2 => "pcc",
        ScenarioKind::Cluster => "rand_index",
        ScenarioKind::TwoMovers => "top2_hit",
    }
}

pub const CV_FOLDS: usize = 5;
pub const LAMBDA_GRID_SIZE: usize = 20;
pub const CP_ITERS: usize = 100;
pub const KMEANS_CLUSTERS: usize = 4;
pub const KMEANS_RESTARTS: usize = 10;

/// Engine settings used for a scenario.
pub fn model_config(kind: ScenarioKind, prior_kind: PriorKind, seed: u64) -> ModelConfig {
    let base = ModelConfig { prior_kind, seed, ..ModelConfig::default() };
    match kind {
        ScenarioKind::Cluster => ModelConfig { intercept: true, ..base },
        ScenarioKind::TwoMovers => ModelConfig { tol_auc: 1e-4, max_outer_cycles: 50, ..base },
        _ => base,
    }
}

fn slices_as_matrices(ds: &SyntheticDataset) -> Vec<DMatrix<f64>> {
    (0..ds.observations.len()).map(|t| ds.observations.unfolding(t)).collect()
}

fn flatten(ms: &[DMatrix<f64>]) -> Vec<Vec<f64>> {
    ms.iter().map(|m| m.as_slice().to_vec()).collect()
}

/// Mean over time of the rand index after normalize, align and K-means.
pub fn cluster_score(fit: &FitResult, truth: &[Vec<usize>], seed: u64) -> Result<f64> {
    let normalized: Vec<DMatrix<f64>> = fit.mode_states[0].trajectory().iter().map(row_normalize).collect();
    let aligned = sequential_align(&normalized)?;
    let mut total = 0.0;
    for (u, labels) in aligned.factors.iter().zip(truth) {
        let m = kmeans_rows(u, KMEANS_CLUSTERS, KMEANS_RESTARTS, seed)?;
        total += rand_index(&m.labels, labels)?;
    }
    Ok(total / truth.len() as f64)
}

/// Whether the two subjects with the largest aligned transition norms are subjects 0 and 1.
pub fn top_two_hit(fit: &FitResult) -> Result<bool> {
    let aligned = sequential_align(&fit.mode_states[0].trajectory())?;
    let ranking = rank_subjects_by_movement(&transition_norm_heatmap(&aligned));
    let mut top = [ranking[0], ranking[1]];
    top.sort_unstable();
    Ok(top == [0, 1])
}

/// Score of one method on one dataset.
pub fn evaluate(scenario: &Scenario, method: Method, ds: &SyntheticDataset, seed: u64) -> Result<f64> {
    let kind = scenario.kind;
    let d = 2;
    let truth = ds.truth_response();
    let n = scenario.dims[0];
    let score_slices = |est: &[Vec<f64>]| -> Result<f64> {
        Ok(match kind {
            ScenarioKind::Case2 => network_pcc(est, &truth, n)?,
            _ => rmse(est, &truth)?,
        })
    };
    match method {
        Method::Ffs | Method::Iglsm => {
            let prior = if method == Method::Ffs { PriorKind::Ffs } else { PriorKind::Iglsm };
            let fitted = fit(&ds.observations, model_config(kind, prior, seed))?;
            match kind {
                ScenarioKind::Cluster => {
                    let labels = ds.truth_labels.as_ref().expect("cluster truth has labels");
                    cluster_score(&fitted, labels, seed)
                }
                ScenarioKind::TwoMovers => Ok(if top_two_hit(&fitted)? { 1.0 } else { 0.0 }),
                _ => score_slices(&fitted.predicted_means()?),
            }
        }
        Method::Svd1 => score_slices(&flatten(&svd1(&slices_as_matrices(ds), d)?.estimates)),
        Method::Svd2 => score_slices(&flatten(&svd2(&slices_as_matrices(ds))?.estimates)),
        Method::Flasso1 => {
            score_slices(&flatten(&flasso1(&slices_as_matrices(ds), CV_FOLDS, &LambdaGrid::Auto(LAMBDA_GRID_SIZE))?))
        }
        Method::Flasso2 => score_slices(&flatten(
            &flasso2(&slices_as_matrices(ds), d, CV_FOLDS, &LambdaGrid::Auto(LAMBDA_GRID_SIZE))?.estimates,
        )),
        Method::Cp => {
            let dims = &ds.observations.dims;
            let est = ds
                .observations
                .slices
                .iter()
                .map(|s| Ok(cp_reconstruct(&cp_als(s, dims, d, CP_ITERS, seed)?.factors)))
                .collect::<Result<Vec<_>>>()?;
            score_slices(&est)
        }
    }
}

/// One benchmark CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: &'static str,
    pub method: &'static str,
    pub replicate: usize,
    pub seed: u64,
    pub metric: &'static str,
    pub value: f64,
}

/// Runs every applicable method on replicates `0..reps`; replicate `r` uses `seed + r`.
/// Replicates run in parallel, rows come back in replicate then method order.
pub fn run_benchmark(scenario: &Scenario, methods: &[Method], reps: usize, seed: u64) -> Result<Vec<Row>> {
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    let per_rep: Vec<Vec<Row>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_seed = seed.wrapping_add(r as u64);
            let ds = scenario.generate(rep_seed)?;
            methods
                .iter()
                .map(|&m| {
                    Ok(Row {
                        scenario: scenario.kind.name(),
                        method: m.name(),
                        replicate: r,
                        seed: rep_seed,
                        metric: metric_for(scenario.kind),
                        value: evaluate(scenario, m, &ds, rep_seed)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// `(method, metric, median, replicates)` in first-appearance order.
pub fn summarize(rows: &[Row]) -> Vec<(&'static str, &'static str, f64, usize)> {
    let mut keys: Vec<(&'static str, &'static str)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.method, r.metric)) {
            keys.push((r.method, r.metric));
        }
    }
    keys.into_iter()
        .map(|(method, metric)| {
            let vals: Vec<f64> =
                rows.iter().filter(|r| r.method == method && r.metric == metric).map(|r| r.value).collect();
            (method, metric, median(&vals), vals.len())
        })
        .collect()
}

pub fn rows_csv(rows: &[Row]) -> String {
    let mut out = String::from("scenario,method,replicate,seed,metric,value\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.scenario, r.method, r.replicate, r.seed, r.metric, r.value)
            .expect("writing to a string");
    }
    out
}

pub fn summary_csv(scenario: &str, rows: &[Row]) -> String {
    let mut out = String::from("scenario,method,metric,median,replicates\n");
    for (method, metric, med, count) in summarize(rows) {
        writeln!(out, "{scenario},{method},{metric},{med},{count}").expect("writing to a string");
    }
    out
}
