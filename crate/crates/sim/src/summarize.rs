//! Aggregates result CSVs across seeds.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{io_err, Result};
use crate::files::{read_csv, write_csv, RewardRow, SweepRow, REWARD_HEADER, SWEEP_HEADER};

/// Moving-average window of the convergence step.
pub const CONVERGENCE_WINDOW: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn stats(values: &[f64]) -> Option<Stats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Stats {
        n,
        mean,
        std,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Trailing means `mean(x[e - w..e])` for `e = w..=len`, with `w`
/// capped at the series length.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let w = window.min(x.len()).max(1);
    if x.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(x.len() + 1 - w);
    let mut sum: f64 = x[..w].iter().sum();
    out.push(sum / w as f64);
    for e in w..x.len() {
        sum += x[e] - x[e - w];
        out.push(sum / w as f64);
    }
    out
}

/// Number of steps after which the trailing moving average first reaches
/// 95% of its final value. Never exceeds `x.len()`.
pub fn convergence_step(x: &[f64], window: usize) -> usize {
    let ma = moving_average(x, window);
    let Some(&last) = ma.last() else { return 0 };
    let w = window.min(x.len()).max(1);
    let i = ma.iter().position(|&v| v >= 0.95 * last).unwrap_or(ma.len() - 1);
    i + w
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub source: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub scheme: String,
    pub seeds: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub source: String,
    pub seed: u64,
    pub steps: usize,
    pub final_average: f64,
    pub convergence_step: usize,
}

/// Groups by (param, value, scheme) in first-appearance order.
pub fn summarize_sweep(source: &str, rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut keys: Vec<(&str, f64, &str)> = Vec::new();
    for r in rows {
        let k = (r.sweep_param.as_str(), r.sweep_value, r.scheme.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(p, v, s)| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.sweep_param == p && r.sweep_value == v && r.scheme == s)
                .map(|r| r.best_ssr)
                .collect();
            let st = stats(&vals).expect("group has at least one row");
            SweepSummary {
                source: source.to_owned(),
                sweep_param: p.to_owned(),
                sweep_value: v,
                scheme: s.to_owned(),
                seeds: st.n,
                mean: st.mean,
                std: st.std,
                min: st.min,
                max: st.max,
            }
        })
        .collect()
}

/// One summary per seed, in first-appearance order.
pub fn summarize_rewards(source: &str, rows: &[RewardRow]) -> Vec<ConvergenceSummary> {
    let mut seeds: Vec<u64> = Vec::new();
    for r in rows {
        if !seeds.contains(&r.seed) {
            seeds.push(r.seed);
        }
    }
    seeds
        .into_iter()
        .map(|seed| {
            let x: Vec<f64> = rows.iter().filter(|r| r.seed == seed).map(|r| r.instant_reward).collect();
            let ma = moving_average(&x, CONVERGENCE_WINDOW);
            ConvergenceSummary {
                source: source.to_owned(),
                seed,
                steps: x.len(),
                final_average: ma.last().copied().unwrap_or(0.0),
                convergence_step: convergence_step(&x, CONVERGENCE_WINDOW),
            }
        })
        .collect()
}

/// Summarizes every `*_sweep.csv` and `*_rewards.csv` in `dir` into
/// `summary_sweep.csv` and `summary_convergence.csv` under `out`.
pub fn summarize_dir(dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(dir)))
        .collect::<Result<_>>()?;
    names.sort();
    let mut sweeps = Vec::new();
    let mut convergence = Vec::new();
    for path in &names {
        let Some(file) = path.file_name().and_then(|f| f.to_str()) else { continue };
        if file.starts_with("summary_") {
            continue;
        }
        if file.ends_with("_sweep.csv") {
            let rows: Vec<SweepRow> = read_csv(path, &SWEEP_HEADER)?;
            sweeps.extend(summarize_sweep(file, &rows));
        } else if file.ends_with("_rewards.csv") {
            let rows: Vec<RewardRow> = read_csv(path, &REWARD_HEADER)?;
            convergence.extend(summarize_rewards(file, &rows));
        }
    }
    let line = format!("summary of {}", dir.display());
    let a = out.join("summary_sweep.csv");
    let b = out.join("summary_convergence.csv");
    write_csv(&a, &line, &sweeps)?;
    write_csv(&b, &line, &convergence)?;
    Ok(vec![a, b])
}
