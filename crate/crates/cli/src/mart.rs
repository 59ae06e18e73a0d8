//! The `martingale` subcommand: difference traces over many base configurations.

use std::path::Path;

use fpp_core::martingale::{difference_constant, mean_stderr, realized_tau_time};
use fpp_core::rng::derive_seed;
use fpp_core::stats::default_x_grid;
use fpp_core::{azuma_curve, martingale_trace, sample_configuration, FppError, MartingaleTrace};
use serde::{Deserialize, Serialize};

use crate::config::{ensure_dir, CliError, CliResult, ExperimentConfig};
use crate::ensemble::SCHEMA;

/// `Δ_k` across base configurations at one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub k: i64,
    pub bases: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `|mean| <= 3 stderr`, or every difference is exactly 0.
    pub centred: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AzumaPoint {
    pub x: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub replica: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSummary {
    pub kind: String,
    pub schema: u32,
    pub config: ExperimentConfig,
    pub n: u64,
    pub traces: Vec<MartingaleTrace>,
    pub skipped: Vec<Skipped>,
    pub levels: Vec<LevelSummary>,
    pub max_abs_difference: f64,
    /// `C` with `max |Δ_k| = C (ln n)^{2+2δ}`.
    pub difference_constant: f64,
    /// Every `Δ_k` with `k >= k*` is exactly 0.
    pub zero_after_hit: bool,
    pub max_telescoping_residual: f64,
    pub max_terminal_residual: f64,
    /// `2 exp(-x² / (2 K c²))` with `c = max |Δ_k|` and `K` the longest trace, in
    /// units of `sqrt(n)`.
    pub azuma: Vec<AzumaPoint>,
}

impl MartingaleSummary {
    pub fn level(&self, k: i64) -> Option<&LevelSummary> {
        self.levels.iter().find(|l| l.k == k)
    }
}

fn trace_one(cfg: &ExperimentConfig, n: u64, seed: u64) -> fpp_core::Result<MartingaleTrace> {
    let params = cfg.params();
    let region = params.box_window(n)?;
    let field = sample_configuration(&region, &cfg.dist, seed)?;
    let k_max = match cfg.k_max {
        Some(k) => k,
        None => {
            let t = realized_tau_time(&field, n, &params)?;
            if !t.is_finite() {
                return Err(FppError::Precondition("boxes are not connected in the window".into()));
            }
            t.ceil() as u64 + 1
        }
    };
    martingale_trace(&field, n, k_max, cfg.inner_replicas, &params)
}

/// Traces at the first `n` of the config, one per base configuration.
/// Bases whose frozen region reaches the window face are skipped and listed.
pub fn run(cfg: &ExperimentConfig) -> CliResult<MartingaleSummary> {
    let n = cfg.n[0];
    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    // bases run one after another; the inner replicas are parallel
    for replica in 0..cfg.replicas {
        let seed = derive_seed(cfg.seed, &[n, replica as u64]);
        match trace_one(cfg, n, seed) {
            Ok(t) => traces.push(t),
            Err(FppError::Precondition(reason)) => skipped.push(Skipped { replica, seed, reason }),
            Err(e) => return Err(e.into()),
        }
    }
    if traces.is_empty() {
        return Err(CliError::Usage(format!(
            "no base configuration fits the window at n = {n}; raise --padding"
        )));
    }
    let k_top = traces.iter().map(|t| t.differences.len() as i64 - 2).max().unwrap_or(-1);
    let levels = (-1..=k_top)
        .filter_map(|k| {
            let xs: Vec<f64> = traces.iter().filter_map(|t| t.difference(k)).collect();
            if xs.is_empty() {
                return None;
            }
            let (mean, se) = mean_stderr(&xs);
            let se = if se.is_nan() { 0.0 } else { se };
            Some(LevelSummary {
                k,
                bases: xs.len(),
                mean,
                stderr: se,
                centred: mean.abs() <= 3.0 * se || xs.iter().all(|&d| d == 0.0),
            })
        })
        .collect();
    let zero_after_hit = traces.iter().all(|t| match t.k_star {
        Some(ks) => t.differences.iter().enumerate().all(|(i, &d)| (i as i64 - 1) < ks as i64 || d == 0.0),
        None => true,
    });
    let max_abs_difference = traces.iter().map(|t| t.max_abs_difference()).fold(0.0, f64::max);
    let longest = traces.iter().map(|t| t.differences.len()).max().unwrap_or(0) as u64;
    let grid = default_x_grid();
    let scaled: Vec<f64> = grid.iter().map(|x| x * (n as f64).sqrt()).collect();
    let azuma = match azuma_curve(max_abs_difference, longest, &scaled) {
        Ok(b) => grid.iter().zip(b).map(|(&x, bound)| AzumaPoint { x, bound }).collect(),
        Err(_) => Vec::new(),
    };
    Ok(MartingaleSummary {
        kind: "martingale".into(),
        schema: SCHEMA,
        config: cfg.clone(),
        n,
        difference_constant: difference_constant(max_abs_difference, n, cfg.delta),
        max_telescoping_residual: traces.iter().map(|t| t.telescoping_residual).fold(0.0, f64::max),
        max_terminal_residual: traces.iter().map(|t| t.terminal_residual).fold(0.0, f64::max),
        max_abs_difference,
        zero_after_hit,
        azuma,
        levels,
        traces,
        skipped,
    })
}

pub fn write(dir: &Path, summary: &MartingaleSummary) -> CliResult<()> {
    ensure_dir(dir)?;
    let json = serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(dir.join("martingale.json"), json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use fpp_core::DistributionSpec;

    fn cfg(dist: DistributionSpec) -> ExperimentConfig {
        ExperimentConfig {
            n: vec![12],
            dist,
            replicas: 3,
            inner_replicas: 4,
            box_scale: Some(1.0),
            padding: 2.0,
            ..Default::default()
        }
    }

    #[test]
    fn point_mass_differences_vanish() {
        let s = run(&cfg(DistributionSpec::PointMass { c: 1.0 })).unwrap();
        assert_eq!(s.traces.len(), 3);
        assert_eq!(s.max_abs_difference, 0.0);
        assert!(s.levels.iter().all(|l| l.centred && l.mean == 0.0));
        assert!(s.azuma.is_empty());
    }

    #[test]
    fn exponential_trace_identities() {
        let s = run(&cfg(DistributionSpec::Exponential { rate: 1.0 })).unwrap();
        assert!(s.zero_after_hit);
        assert!(s.max_telescoping_residual < 1e-9);
        assert_eq!(s.max_terminal_residual, 0.0);
        assert!(s.level(-1).is_some());
        assert_eq!(s.azuma[0].bound, 2.0);
    }
}
