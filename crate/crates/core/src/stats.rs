//! Monte Carlo ensembles and the fits used for variance scaling, moment
//! growth, tails and the time constant.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{FppError, Result};
use crate::lattice::Region;
use crate::params::FppParams;
use crate::passage::{a_0n, b_0n, box_to_box, pairwise_sum, s_0n, PathResult};
use crate::rng::derive_seed;
use crate::tau::{tau_transform, TauField};
use crate::weights::{sample_configuration, DistributionSpec, WeightField};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

fn t_quantile(dof: usize, level: f64) -> f64 {
    if dof == 0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.5 + level / 2.0))
        .unwrap_or(f64::INFINITY)
}

fn exact_mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    let dev: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    x0 + pairwise_sum(&dev) / xs.len() as f64
}

/// Ordinary least squares `y = intercept + slope · x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
    pub dof: usize,
}

impl Fit {
    /// Two-sided Student-t interval for the slope.
    pub fn slope_ci(&self, level: f64) -> (f64, f64) {
        let h = t_quantile(self.dof, level) * self.slope_se;
        (self.slope - h, self.slope + h)
    }

    pub fn intercept_ci(&self, level: f64) -> (f64, f64) {
        let h = t_quantile(self.dof, level) * self.intercept_se;
        (self.intercept - h, self.intercept + h)
    }
}

/// Least-squares line through `pts`; `None` with fewer than two distinct `x`.
pub fn ols(pts: &[(f64, f64)]) -> Option<Fit> {
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (mx, my) = (exact_mean(&xs), exact_mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = pts.iter().map(|(x, y)| y - intercept - slope * x).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = n - 2;
    let s2 = if dof > 0 { sse / dof as f64 } else { f64::NAN };
    let sumx2: f64 = xs.iter().map(|x| x * x).sum();
    Some(Fit {
        slope,
        intercept,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * sumx2 / (n as f64 * sxx)).sqrt(),
        r2: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        residuals,
        dof,
    })
}

/// Least squares through the origin, `y = c · x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginFit {
    pub c: f64,
    pub c_se: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

pub fn ols_origin(pts: &[(f64, f64)]) -> Option<OriginFit> {
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    if pts.is_empty() || !(sxx > 0.0) {
        return None;
    }
    let c = pts.iter().map(|(x, y)| x * y).sum::<f64>() / sxx;
    let residuals: Vec<f64> = pts.iter().map(|(x, y)| y - c * x).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let my = exact_mean(&ys);
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let dof = pts.len().saturating_sub(1);
    let c_se = if dof > 0 { (sse / dof as f64 / sxx).sqrt() } else { f64::NAN };
    Some(OriginFit {
        c,
        c_se,
        r2: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        residuals,
    })
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "a0n")]
    A0n,
    #[serde(rename = "b0n")]
    B0n,
    #[serde(rename = "s0n")]
    S0n,
    /// `T(D_n(0), D_n(nu))`.
    #[serde(rename = "dd")]
    BoxBox,
    /// `T_τ(D_n(0), D_n(nu))`.
    #[serde(rename = "dd_tau")]
    BoxBoxTau,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [Self::A0n, Self::B0n, Self::S0n, Self::BoxBox, Self::BoxBoxTau];

    pub fn name(self) -> &'static str {
        match self {
            Self::A0n => "a0n",
            Self::B0n => "b0n",
            Self::S0n => "s0n",
            Self::BoxBox => "dd",
            Self::BoxBoxTau => "dd_tau",
        }
    }

    /// The window this quantity is computed in.
    pub fn window(self, n: u64, params: &FppParams) -> Result<Arc<Region>> {
        match self {
            Self::A0n | Self::B0n => params.line_window(n),
            Self::S0n => params.cylinder_window(n, params.transverse(n)),
            Self::BoxBox | Self::BoxBoxTau => params.box_window(n),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = FppError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name() == s.trim())
            .ok_or_else(|| {
                FppError::Parse(format!("unknown quantity '{s}' (expected a0n, b0n, s0n, dd or dd_tau)"))
            })
    }
}

/// One replica's value, as written to the ensemble CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub quantity: Quantity,
    pub n: u64,
    pub replica: usize,
    pub seed: u64,
    pub value: f64,
    pub path_len: usize,
    pub max_edge: f64,
}

/// Evaluates `quantity` on the configuration with the given seed.
pub fn evaluate(
    quantity: Quantity,
    dist: &DistributionSpec,
    n: u64,
    seed: u64,
    params: &FppParams,
) -> Result<PathResult> {
    let region = quantity.window(n, params)?;
    let field = sample_configuration(&region, dist, seed)?;
    evaluate_on(quantity, &field, n, params)
}

pub fn evaluate_on(quantity: Quantity, field: &WeightField, n: u64, params: &FppParams) -> Result<PathResult> {
    match quantity {
        Quantity::A0n => a_0n(field, n),
        Quantity::B0n => b_0n(field, n),
        Quantity::S0n => s_0n(field, n, params),
        Quantity::BoxBox => box_to_box(field, n, params),
        Quantity::BoxBoxTau => {
            let tf: TauField = tau_transform(field, &params.tau_params(n))?;
            box_to_box(&tf, n, params)
        }
    }
}

/// Empirical tail `P[|X - X̄| >= x √n]` at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub x: f64,
    pub count: usize,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
}

pub fn tail_profile(values: &[f64], n: u64, x_grid: &[f64]) -> Vec<TailPoint> {
    if values.is_empty() {
        return Vec::new();
    }
    let mean = exact_mean(values);
    let scale = (n as f64).sqrt();
    x_grid
        .iter()
        .map(|&x| {
            let count = values.iter().filter(|&&v| (v - mean).abs() >= x * scale).count();
            let (lo, hi) = wilson(count, values.len(), Z95);
            TailPoint {
                x,
                count,
                p: count as f64 / values.len() as f64,
                lo,
                hi,
            }
        })
        .collect()
}

pub fn default_x_grid() -> Vec<f64> {
    (0..=16).map(|i| i as f64 * 0.25).collect()
}

/// Per-`n` summary of one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaStats {
    pub quantity: Quantity,
    pub n: u64,
    pub replicas: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub stderr: f64,
    /// Central moments `E[(X - X̄)^p]` for `p = 1..=2 m_max`.
    pub moments: Vec<f64>,
    pub tails: Vec<TailPoint>,
    pub seeds: Vec<u64>,
}

impl ReplicaStats {
    /// Summary of `values` in replica order. Sums are pairwise over the
    /// replica-ordered values, so the result does not depend on the order
    /// replicas finished in.
    pub fn from_values(
        quantity: Quantity,
        n: u64,
        values: &[f64],
        seeds: Vec<u64>,
        m_max: usize,
        x_grid: &[f64],
    ) -> Result<Self> {
        if values.len() < 2 {
            return Err(FppError::Config(format!("need at least 2 replicas, got {}", values.len())));
        }
        let count = values.len() as f64;
        let mean = exact_mean(values);
        let moments = (1..=2 * m_max.max(1))
            .map(|p| {
                let terms: Vec<f64> = values.iter().map(|v| (v - mean).powi(p as i32)).collect();
                pairwise_sum(&terms) / count
            })
            .collect::<Vec<_>>();
        let var = moments[1] * count / (count - 1.0);
        Ok(Self {
            quantity,
            n,
            replicas: values.len(),
            mean,
            var,
            stderr: (var / count).sqrt(),
            moments,
            tails: tail_profile(values, n, x_grid),
            seeds,
        })
    }

    /// Central moment of order `p`.
    pub fn moment(&self, p: usize) -> Option<f64> {
        p.checked_sub(1).and_then(|i| self.moments.get(i).copied())
    }
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub records: Vec<ReplicaRecord>,
    pub stats: Vec<ReplicaStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub quantity: Quantity,
    pub n_list: Vec<u64>,
    pub replicas: usize,
    pub dist: DistributionSpec,
    pub params: FppParams,
    pub seed: u64,
    pub m_max: usize,
    pub x_grid: Vec<f64>,
}

/// `replicas` independent configurations per `n`, seeded by
/// `(seed, n, replica)`. Deterministic regardless of thread count.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<Ensemble> {
    if spec.replicas < 2 {
        return Err(FppError::Config(format!("need at least 2 replicas, got {}", spec.replicas)));
    }
    if spec.n_list.is_empty() {
        return Err(FppError::Config("empty n list".into()));
    }
    spec.params.validate()?;
    spec.dist.validate()?;
    for &n in &spec.n_list {
        if n < 2 {
            return Err(FppError::Config(format!("n = {n} must be at least 2")));
        }
        spec.quantity.window(n, &spec.params)?;
    }
    let jobs: Vec<(u64, usize)> = spec
        .n_list
        .iter()
        .flat_map(|&n| (0..spec.replicas).map(move |r| (n, r)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(n, replica)| {
            let seed = derive_seed(spec.seed, &[n, replica as u64]);
            let p = evaluate(spec.quantity, &spec.dist, n, seed, &spec.params)?;
            Ok(ReplicaRecord {
                quantity: spec.quantity,
                n,
                replica,
                seed,
                value: p.time,
                path_len: p.len(),
                max_edge: if p.is_empty() { 0.0 } else { p.max_edge },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = spec
        .n_list
        .iter()
        .map(|&n| {
            let rs: Vec<&ReplicaRecord> = records.iter().filter(|r| r.n == n).collect();
            let values: Vec<f64> = rs.iter().map(|r| r.value).collect();
            let seeds = rs.iter().map(|r| r.seed).collect();
            ReplicaStats::from_values(spec.quantity, n, &values, seeds, spec.m_max, &spec.x_grid)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { records, stats })
}

fn distinct_n(stats: &[ReplicaStats]) -> usize {
    let mut ns: Vec<u64> = stats.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.len()
}

/// Fit of `σ² ≈ c n^γ` on log-log axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub model: String,
    pub exponent: f64,
    pub exponent_ci: (f64, f64),
    pub prefactor: f64,
    pub fit: Fit,
}

pub fn variance_scaling(stats: &[ReplicaStats]) -> Result<PowerFit> {
    if distinct_n(stats) < 2 {
        return Err(FppError::Precondition("variance fit needs at least 2 distinct n".into()));
    }
    if stats.iter().any(|s| !(s.var > 0.0)) {
        return Err(FppError::Precondition("zero variance: nothing to fit".into()));
    }
    let pts: Vec<(f64, f64)> = stats.iter().map(|s| ((s.n as f64).ln(), s.var.ln())).collect();
    let fit = ols(&pts).ok_or_else(|| FppError::Precondition("degenerate variance fit".into()))?;
    Ok(PowerFit {
        model: "var = c * n^gamma".into(),
        exponent: fit.slope,
        exponent_ci: fit.slope_ci(0.95),
        prefactor: fit.intercept.exp(),
        fit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub m: usize,
    /// `None` when some moment vanishes.
    pub fit: Option<PowerFit>,
    pub degenerate: bool,
    /// `min_n (m + 10 m ln ln n / ln n)` over the grid.
    pub envelope: f64,
    /// The upper 95% bound of the slope is within the envelope.
    pub consistent: bool,
}

/// Growth of `E[(X - X̄)^{2m}]` in `n`.
pub fn moment_growth(stats: &[ReplicaStats], m: usize) -> Result<MomentReport> {
    if m == 0 {
        return Err(FppError::Domain("m must be at least 1".into()));
    }
    if distinct_n(stats) < 3 {
        return Err(FppError::Precondition("moment growth needs at least 3 distinct n".into()));
    }
    let mut pts = Vec::new();
    for s in stats {
        let mom = s.moment(2 * m).ok_or_else(|| {
            FppError::Domain(format!("moment of order {} was not recorded", 2 * m))
        })?;
        pts.push(((s.n as f64).ln(), mom));
    }
    let mf = m as f64;
    let envelope = stats
        .iter()
        .map(|s| {
            let l = (s.n as f64).ln();
            mf + 10.0 * mf * l.ln() / l
        })
        .fold(f64::INFINITY, f64::min);
    if pts.iter().any(|&(_, v)| !(v > 0.0)) {
        return Ok(MomentReport {
            m,
            fit: None,
            degenerate: true,
            envelope,
            consistent: false,
        });
    }
    let logged: Vec<(f64, f64)> = pts.iter().map(|&(x, v)| (x, v.ln())).collect();
    let fit = ols(&logged).ok_or_else(|| FppError::Precondition("degenerate moment fit".into()))?;
    let ci = fit.slope_ci(0.95);
    Ok(MomentReport {
        m,
        degenerate: false,
        envelope,
        consistent: ci.1 <= envelope,
        fit: Some(PowerFit {
            model: format!("E|X - mean|^{} = c * n^slope", 2 * m),
            exponent: fit.slope,
            exponent_ci: ci,
            prefactor: fit.intercept.exp(),
            fit,
        }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub ratio: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConstantReport {
    pub mu_hat: f64,
    /// `min_n mean/n`, the subadditive upper bound.
    pub min_ratio: f64,
    /// Intercept of `mean/n` against `n^{-1/2}`.
    pub mu_extrapolated: f64,
    /// `min_ratio - mu_hat`.
    pub bias_allowance: f64,
    pub gaps: Vec<GapPoint>,
    /// `g(n) ≈ c √n (ln n)^4`.
    pub gap_fit: Option<OriginFit>,
    /// Least-squares slope of `g` on `n`.
    pub trend: Option<Fit>,
    /// The upper 95% bound of the trend slope is nonnegative.
    pub trend_nondecreasing: bool,
    /// `n μ̂ <= mean(n)` for every `n`.
    pub lower_bound_holds: bool,
    /// `g(n) >= -3 stderr` for every `n`.
    pub gaps_nonnegative: bool,
    /// `n` at which `mean/n` rose by more than 3 standard errors.
    pub warnings: Vec<String>,
}

pub fn time_constant(stats: &[ReplicaStats]) -> Result<TimeConstantReport> {
    if distinct_n(stats) < 4 {
        return Err(FppError::Precondition("time constant needs at least 4 distinct n".into()));
    }
    let mut sorted: Vec<&ReplicaStats> = stats.iter().collect();
    sorted.sort_by_key(|s| s.n);
    let ratios: Vec<(f64, f64)> = sorted
        .iter()
        .map(|s| (1.0 / (s.n as f64).sqrt(), s.mean / s.n as f64))
        .collect();
    let min_ratio = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mu_extrapolated = ols(&ratios).map_or(min_ratio, |f| f.intercept);
    let mut mu_hat = min_ratio.min(mu_extrapolated).max(0.0);
    // n * (mean / n) can round above mean
    while mu_hat > 0.0 && sorted.iter().any(|s| s.n as f64 * mu_hat > s.mean) {
        mu_hat = f64::from_bits(mu_hat.to_bits() - 1);
    }
    let gaps: Vec<GapPoint> = sorted
        .iter()
        .map(|s| GapPoint {
            n: s.n,
            mean: s.mean,
            stderr: s.stderr,
            ratio: s.mean / s.n as f64,
            gap: s.mean - s.n as f64 * mu_hat,
        })
        .collect();
    let mut warnings = Vec::new();
    for w in sorted.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ra, rb) = (a.mean / a.n as f64, b.mean / b.n as f64);
        let se = ((a.stderr / a.n as f64).powi(2) + (b.stderr / b.n as f64).powi(2)).sqrt();
        if rb > ra + 3.0 * se {
            warnings.push(format!("mean/n increased from n = {} to n = {}", a.n, b.n));
        }
    }
    let gap_pts: Vec<(f64, f64)> = gaps
        .iter()
        .map(|g| {
            let nf = g.n as f64;
            (nf.sqrt() * nf.ln().powi(4), g.gap)
        })
        .collect();
    let trend = ols(&gaps.iter().map(|g| (g.n as f64, g.gap)).collect::<Vec<_>>());
    let trend_nondecreasing = trend.as_ref().is_none_or(|f| {
        let (_, hi) = f.slope_ci(0.95);
        !(hi < 0.0)
    });
    Ok(TimeConstantReport {
        mu_hat,
        min_ratio,
        mu_extrapolated,
        bias_allowance: min_ratio - mu_hat,
        lower_bound_holds: gaps.iter().all(|g| g.n as f64 * mu_hat <= g.mean),
        gaps_nonnegative: gaps.iter().all(|g| g.gap >= -3.0 * g.stderr),
        gap_fit: ols_origin(&gap_pts),
        trend,
        trend_nondecreasing,
        gaps,
        warnings,
    })
}

/// A binomial proportion with its Wilson interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub n: u64,
    pub count: usize,
    pub total: usize,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl RateEstimate {
    pub fn new(n: u64, count: usize, total: usize) -> Self {
        let (lo, hi) = wilson(count, total, Z95);
        Self {
            n,
            count,
            total,
            rate: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            lo,
            hi,
        }
    }
}

/// Fraction of configurations with `T(D_n(0), D_n(nu)) != T_τ(D_n(0), D_n(nu))`.
pub fn tau_equality_rate(
    dist: &DistributionSpec,
    params: &FppParams,
    n: u64,
    replicas: usize,
    seed: u64,
) -> Result<RateEstimate> {
    params.validate()?;
    let region = params.box_window(n)?;
    let differs = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, &[n, r as u64]);
            let field = sample_configuration(&region, dist, s)?;
            let t = box_to_box(&field, n, params)?.time;
            let tf = tau_transform(&field, &params.tau_params(n))?;
            let tt = box_to_box(&tf, n, params)?.time;
            Ok((t - tt).abs() > 1e-9)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(RateEstimate::new(n, differs.iter().filter(|&&d| d).count(), replicas))
}

/// No rate rises above its predecessor beyond the Wilson intervals.
pub fn rates_nonincreasing(rates: &[RateEstimate]) -> bool {
    let mut sorted: Vec<&RateEstimate> = rates.iter().collect();
    sorted.sort_by_key(|r| r.n);
    sorted.windows(2).all(|w| w[1].lo <= w[0].hi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub n: u64,
    pub pairs: usize,
    /// Sup-distance between the nearest endpoints of each pair.
    pub separation: i64,
    pub rho: f64,
    pub bound: f64,
    /// `τ` was constant, so the correlation is undefined and reported as 0.
    pub degenerate: bool,
}

impl CorrelationEstimate {
    pub fn within_bound(&self) -> bool {
        self.rho.abs() < self.bound
    }
}

/// Pearson correlation of `τ(e_1)` and `τ(e_2)` over independent
/// configurations, with the two edges more than `2θ_n + 1` apart.
pub fn tau_distant_correlation(
    dist: &DistributionSpec,
    params: &FppParams,
    n: u64,
    pairs: usize,
    seed: u64,
) -> Result<CorrelationEstimate> {
    params.validate()?;
    if pairs < 2 {
        return Err(FppError::Config(format!("need at least 2 pairs, got {pairs}")));
    }
    let r = params.theta(n).ceil() as i64;
    let d = params.dim;
    let mut lower = vec![-(r + 1); d];
    let mut upper = vec![r + 1; d];
    lower[0] = -2 * r - 2;
    upper[0] = 2 * r + 3;
    let region = Arc::new(Region::new(lower, upper)?);
    let mut left = vec![0i64; d];
    left[0] = -r - 1;
    let mut right = vec![0i64; d];
    right[0] = r + 2;
    let e1 = region.edge(region.index(&left).expect("inside"), 0).expect("edge");
    let e2 = region.edge(region.index(&right).expect("inside"), 0).expect("edge");
    let separation = crate::tau::edge_distance(&region, e1, e2);
    let tp = params.tau_params(n);
    let xy = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let f = sample_configuration(&region, dist, derive_seed(seed, &[n, i as u64]))?;
            let tf = tau_transform(&f, &tp)?;
            Ok((tf.tau(e1), tf.tau(e2)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let xs: Vec<f64> = xy.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = xy.iter().map(|p| p.1).collect();
    let (mx, my) = (exact_mean(&xs), exact_mean(&ys));
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let degenerate = !(sxx > 0.0 && syy > 0.0);
    Ok(CorrelationEstimate {
        n,
        pairs,
        separation,
        rho: if degenerate { 0.0 } else { sxy / (sxx * syy).sqrt() },
        bound: 3.0 / (pairs as f64).sqrt(),
        degenerate,
    })
}

/// Shape of `ln P̂` against `x²` over grid points with enough exceedances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailShape {
    pub points: usize,
    pub slope: f64,
    /// Chord slopes of `ln P̂` against `x²`; nonincreasing means concave.
    pub chords: Vec<f64>,
    pub decreasing: bool,
    pub concave: bool,
}

/// Sub-Gaussian shape test on a tail table: `ln P̂` is decreasing and
/// concave in `x²`, within sampling error, where `P̂ >= 10/N`.
pub fn tail_shape(tails: &[TailPoint], replicas: usize) -> Option<TailShape> {
    let pts: Vec<&TailPoint> = tails
        .iter()
        .filter(|t| t.x > 0.0 && t.count >= 10 && t.count < replicas)
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let xy: Vec<(f64, f64)> = pts.iter().map(|t| (t.x * t.x, t.p.ln())).collect();
    let fit = ols(&xy)?;
    // sd of ln p̂ is about sqrt((1 - p) / count)
    let sd: Vec<f64> = pts
        .iter()
        .map(|t| ((1.0 - t.p) / t.count as f64).sqrt())
        .collect();
    let chords: Vec<f64> = xy.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let chord_sd: Vec<f64> = (0..chords.len())
        .map(|i| (sd[i].powi(2) + sd[i + 1].powi(2)).sqrt() / (xy[i + 1].0 - xy[i].0))
        .collect();
    let concave = (1..chords.len()).all(|i| {
        chords[i] <= chords[i - 1] + 3.0 * (chord_sd[i].powi(2) + chord_sd[i - 1].powi(2)).sqrt()
    });
    Some(TailShape {
        points: pts.len(),
        slope: fit.slope,
        decreasing: fit.slope < 0.0,
        concave,
        chords,
    })
}
