//! Text formats for datasets and fit artifacts.
//!
//! A dataset directory holds `manifest.txt` (`key=value` lines), one
//! whitespace-separated slice file per time (`t0000.txt`, …, each the
//! `n₁ × (n₂⋯n_M)` unfolding), optional `m0000.txt` 0/1 masks, and an
//! optional `truth/` directory written by the simulators.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces every value exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::data::{ObservationKind, ObservationSet};
use crate::engine::FitResult;
use crate::error::{FfsError, Result};
use crate::postprocess::sequential_align;
use crate::simgen::SyntheticDataset;

pub const FORMAT_VERSION: u32 = 1;

fn format_err(path: &Path, msg: impl Into<String>) -> FfsError {
    FfsError::Format { path: path.display().to_string(), msg: msg.into() }
}

pub fn slice_file_name(prefix: char, t: usize) -> String {
    format!("{prefix}{t:04}.txt")
}

/// Writes a column-major `rows × cols` array as `rows` lines.
pub fn write_matrix(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(data.len() * 12);
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{}", data[i + rows * j]).expect("writing to a string");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_dmatrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix(path, m.nrows(), m.ncols(), m.as_slice())
}

/// Reads a rectangular whitespace-separated matrix; returns it column-major.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err(path, format!("line {}: {e}", line_no + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_err(path, format!("line {} has {} values, expected {}", line_no + 1, row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn read_shaped(path: &Path, rows: usize, cols: usize) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.shape() != (rows, cols) {
        return Err(format_err(path, format!("shape {:?}, expected ({rows}, {cols})", m.shape())));
    }
    Ok(m.as_slice().to_vec())
}

fn write_kv(path: &Path, pairs: &[(&str, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in pairs {
        writeln!(out, "{k}={v}").expect("writing to a string");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn read_kv(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format_err(path, format!("line {} is not key=value", line_no + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn get<'m>(map: &'m BTreeMap<String, String>, path: &Path, key: &str) -> Result<&'m str> {
    map.get(key).map(String::as_str).ok_or_else(|| format_err(path, format!("missing key {key}")))
}

fn parse<T: std::str::FromStr>(path: &Path, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| format_err(path, format!("{key}: {e}")))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Simulation truth stored alongside a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredTruth {
    pub factors: Vec<Vec<DMatrix<f64>>>,
    pub means: Vec<Vec<f64>>,
    pub intercept: f64,
    pub labels: Option<Vec<Vec<usize>>>,
}

/// Dataset directory contents.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredDataset {
    pub observations: ObservationSet,
    pub seed: u64,
    pub truth: Option<StoredTruth>,
}

impl StoredDataset {
    pub fn into_synthetic(self) -> Option<SyntheticDataset> {
        let truth = self.truth?;
        Some(SyntheticDataset {
            observations: self.observations,
            truth_factors: truth.factors,
            truth_means: truth.means,
            truth_intercept: truth.intercept,
            truth_labels: truth.labels,
            seed: self.seed,
        })
    }
}

impl From<SyntheticDataset> for StoredDataset {
    fn from(ds: SyntheticDataset) -> Self {
        StoredDataset {
            observations: ds.observations,
            seed: ds.seed,
            truth: Some(StoredTruth {
                factors: ds.truth_factors,
                means: ds.truth_means,
                intercept: ds.truth_intercept,
                labels: ds.truth_labels,
            }),
        }
    }
}

fn unfolding_shape(dims: &[usize]) -> (usize, usize) {
    let rows = dims[0];
    (rows, dims.iter().product::<usize>() / rows)
}

/// `[t][i]` factor rows stacked as a `(T·n) × d` matrix, row `t·n + i`.
fn stack_trajectory(per_time: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = per_time.first().map_or(0, |m| m.nrows());
    let d = per_time.first().map_or(0, |m| m.ncols());
    DMatrix::from_fn(per_time.len() * n, d, |r, k| per_time[r / n.max(1)][(r % n.max(1), k)])
}

fn unstack_trajectory(path: &Path, m: &DMatrix<f64>, len: usize) -> Result<Vec<DMatrix<f64>>> {
    if len == 0 || m.nrows() % len != 0 {
        return Err(format_err(path, format!("{} rows do not split into {len} time points", m.nrows())));
    }
    let n = m.nrows() / len;
    Ok((0..len).map(|t| m.rows(t * n, n).into_owned()).collect())
}

pub fn save_dataset(dir: &Path, ds: &StoredDataset) -> Result<()> {
    let obs = &ds.observations;
    obs.validate()?;
    fs::create_dir_all(dir)?;
    write_kv(
        &dir.join("manifest.txt"),
        &[
            ("format_version", FORMAT_VERSION.to_string()),
            ("kind", obs.kind.to_string()),
            ("dims", join(&obs.dims)),
            ("T", obs.len().to_string()),
            ("seed", ds.seed.to_string()),
            ("has_mask", obs.mask.is_some().to_string()),
        ],
    )?;
    let (rows, cols) = unfolding_shape(&obs.dims);
    for (t, s) in obs.slices.iter().enumerate() {
        write_matrix(&dir.join(slice_file_name('t', t)), rows, cols, s)?;
    }
    if let Some(mask) = &obs.mask {
        for (t, m) in mask.iter().enumerate() {
            let vals: Vec<f64> = m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            write_matrix(&dir.join(slice_file_name('m', t)), rows, cols, &vals)?;
        }
    }
    if let Some(truth) = &ds.truth {
        let tdir = dir.join("truth");
        fs::create_dir_all(&tdir)?;
        write_kv(
            &tdir.join("info.txt"),
            &[
                ("modes", truth.factors.len().to_string()),
                ("intercept", truth.intercept.to_string()),
                ("has_labels", truth.labels.is_some().to_string()),
            ],
        )?;
        for (m, per_time) in truth.factors.iter().enumerate() {
            write_dmatrix(&tdir.join(format!("factors_mode{m}.txt")), &stack_trajectory(per_time))?;
        }
        for (t, s) in truth.means.iter().enumerate() {
            write_matrix(&tdir.join(slice_file_name('t', t)), rows, cols, s)?;
        }
        if let Some(labels) = &truth.labels {
            let n = labels.first().map_or(0, Vec::len);
            let flat: Vec<f64> = (0..n).flat_map(|i| labels.iter().map(move |l| l[i] as f64)).collect();
            write_matrix(&tdir.join("labels.txt"), labels.len(), n, &flat)?;
        }
    }
    Ok(())
}

pub fn save_synthetic(dir: &Path, ds: &SyntheticDataset) -> Result<()> {
    save_dataset(dir, &StoredDataset::from(ds.clone()))
}

pub fn load_dataset(dir: &Path) -> Result<StoredDataset> {
    let manifest_path = dir.join("manifest.txt");
    let manifest = read_kv(&manifest_path)?;
    let p = manifest_path.as_path();
    let version: u32 = parse(p, "format_version", get(&manifest, p, "format_version")?)?;
    if version != FORMAT_VERSION {
        return Err(format_err(p, format!("format_version {version} is not supported (expected {FORMAT_VERSION})")));
    }
    let kind: ObservationKind = get(&manifest, p, "kind")?.parse().map_err(|e: FfsError| format_err(p, e.to_string()))?;
    let dims: Vec<usize> = get(&manifest, p, "dims")?
        .split(',')
        .map(|s| parse(p, "dims", s.trim()))
        .collect::<Result<_>>()?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(format_err(p, "dims must be positive"));
    }
    let len: usize = parse(p, "T", get(&manifest, p, "T")?)?;
    let seed: u64 = parse(p, "seed", get(&manifest, p, "seed")?)?;
    let has_mask: bool = parse(p, "has_mask", manifest.get("has_mask").map_or("false", String::as_str))?;

    let (rows, cols) = unfolding_shape(&dims);
    let slices = (0..len)
        .map(|t| read_shaped(&dir.join(slice_file_name('t', t)), rows, cols))
        .collect::<Result<Vec<_>>>()?;
    if dir.join(slice_file_name('t', len)).exists() {
        return Err(format_err(p, format!("found more than T={len} slice files")));
    }
    let mask = if has_mask {
        Some(
            (0..len)
                .map(|t| {
                    let path = dir.join(slice_file_name('m', t));
                    read_shaped(&path, rows, cols)?
                        .into_iter()
                        .map(|v| match v {
                            0.0 => Ok(false),
                            1.0 => Ok(true),
                            other => Err(format_err(&path, format!("mask value {other} is not 0/1"))),
                        })
                        .collect::<Result<Vec<bool>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let observations =
        ObservationSet::new(kind, dims, slices, mask).map_err(|e| format_err(dir, e.to_string()))?;

    let tdir = dir.join("truth");
    let truth = if tdir.join("info.txt").exists() {
        let info_path = tdir.join("info.txt");
        let info = read_kv(&info_path)?;
        let ip = info_path.as_path();
        let modes: usize = parse(ip, "modes", get(&info, ip, "modes")?)?;
        let intercept: f64 = parse(ip, "intercept", get(&info, ip, "intercept")?)?;
        let has_labels: bool = parse(ip, "has_labels", get(&info, ip, "has_labels")?)?;
        let factors = (0..modes)
            .map(|m| {
                let path = tdir.join(format!("factors_mode{m}.txt"));
                unstack_trajectory(&path, &read_matrix(&path)?, len)
            })
            .collect::<Result<Vec<_>>>()?;
        let means = (0..len)
            .map(|t| read_shaped(&tdir.join(slice_file_name('t', t)), rows, cols))
            .collect::<Result<Vec<_>>>()?;
        let labels = if has_labels {
            let path = tdir.join("labels.txt");
            let m = read_matrix(&path)?;
            if m.nrows() != len {
                return Err(format_err(&path, format!("{} label rows, expected {len}", m.nrows())));
            }
            Some(m.row_iter().map(|r| r.iter().map(|&v| v as usize).collect()).collect())
        } else {
            None
        };
        Some(StoredTruth { factors, means, intercept, labels })
    } else {
        None
    };
    Ok(StoredDataset { observations, seed, truth })
}

/// Writes variational means, aligned means, predicted slices, the metric
/// trace and a run summary.
pub fn save_fit(dir: &Path, fit: &FitResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (m, state) in fit.mode_states.iter().enumerate() {
        let traj = state.trajectory();
        write_dmatrix(&dir.join(format!("means_mode{m}.txt")), &stack_trajectory(&traj))?;
        let aligned = sequential_align(&traj)?;
        write_dmatrix(&dir.join(format!("aligned_mode{m}.txt")), &stack_trajectory(&aligned.factors))?;
    }
    let pdir = dir.join("predicted");
    fs::create_dir_all(&pdir)?;
    let (rows, cols) = unfolding_shape(&fit.dims);
    for t in 0..fit.len {
        write_matrix(&pdir.join(slice_file_name('t', t)), rows, cols, &fit.predict(t)?)?;
    }
    write_matrix(&dir.join("trace.txt"), fit.trace.len(), 1, &fit.trace)?;
    let mut summary = vec![
        ("cycles", fit.cycles_used.to_string()),
        ("converged", fit.converged.to_string()),
        ("final_metric", fit.trace.last().map_or("nan".to_string(), f64::to_string)),
        ("metric", if fit.kind.is_gaussian() { "rmse" } else { "auc" }.to_string()),
        ("kind", fit.kind.to_string()),
        ("dims", join(&fit.dims)),
        ("T", fit.len.to_string()),
        ("d", fit.config.d.to_string()),
        ("prior", fit.config.prior_kind.to_string()),
    ];
    if let Some(q) = &fit.aux.intercept_q {
        summary.push(("intercept", q.mean.to_string()));
    }
    if let Some(q) = &fit.aux.noise_q {
        summary.push(("noise_variance", (q.rate / (q.shape - 1.0).max(f64::MIN_POSITIVE)).to_string()));
    }
    write_kv(&dir.join("summary.txt"), &summary)
}

/// Reads `<stem>_mode{m}.txt` from a fit directory as per-time `n × d` factors.
pub fn load_fit_trajectory(dir: &Path, stem: &str, mode: usize) -> Result<Vec<DMatrix<f64>>> {
    let summary_path = dir.join("summary.txt");
    let summary = read_kv(&summary_path)?;
    let len: usize = parse(&summary_path, "T", get(&summary, &summary_path, "T")?)?;
    let path: PathBuf = dir.join(format!("{stem}_mode{mode}.txt"));
    unstack_trajectory(&path, &read_matrix(&path)?, len)
}

/// Writes per-time `n × d` factors stacked as rows `t·n + i`.
pub fn save_trajectory(path: &Path, per_time: &[DMatrix<f64>]) -> Result<()> {
    write_dmatrix(path, &stack_trajectory(per_time))
}

pub fn read_summary(dir: &Path) -> Result<BTreeMap<String, String>> {
    read_kv(&dir.join("summary.txt"))
}
