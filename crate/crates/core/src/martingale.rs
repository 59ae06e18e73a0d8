//! Monte Carlo estimates of the ball-filtration martingale
//! `M_k = E[T_τ | F_k] - E[T_τ]`.
//!
//! Conditioning on `F_k` is done by freezing every edge with an endpoint
//! within sup-distance `⌊θ_n⌋` of `B_τ(k) ∪ ∂_o B_τ(k)` and redrawing the
//! rest. The frozen `τ` values then coincide with the base configuration on
//! every edge spanned by `B_τ(k) ∪ ∂_o B_τ(k)`, so every replica has the same
//! ball: the frozen set is a stopping set and the replicas sample the exact
//! conditional law given the frozen weights.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::lattice::{boundaries, Adjacency, VertexSet};
use crate::params::FppParams;
use crate::passage::{ball_to_horizon, box_to_box, BallSequence};
use crate::tau::{tau_transform, TauField};
use crate::weights::WeightField;

/// `T_τ(D_n(0), D_n(nu))` on one configuration.
pub fn realized_tau_time(field: &WeightField, n: u64, params: &FppParams) -> Result<f64> {
    let tf = tau_transform(field, &params.tau_params(n))?;
    Ok(box_to_box(&tf, n, params)?.time)
}

/// Mean and standard error, exact when all values agree.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let x0 = xs[0];
    let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let var = ss / (xs.len() - 1) as f64;
    (mean, (var / xs.len() as f64).sqrt())
}

/// `B_τ(k) ∪ ∂_o B_τ(k)`; edges with both endpoints here form `B̄_τ(k)`.
pub fn frozen_vertices(ball: &VertexSet) -> VertexSet {
    match boundaries(ball, Adjacency::Zd) {
        Ok(b) => ball.union(&b.outer),
        Err(_) => ball.clone(),
    }
}

/// Number of edges with both endpoints in `set`.
pub fn spanned_edges(set: &VertexSet) -> usize {
    let r = set.region();
    r.edges()
        .filter(|&e| {
            let (a, b) = r.edge_endpoints(e);
            set.contains(a) && set.contains(b)
        })
        .count()
}

struct Base {
    field: WeightField,
    seq: BallSequence,
    theta: f64,
}

impl Base {
    fn new(field: &WeightField, n: u64, horizon: u64, params: &FppParams) -> Result<(Self, TauField)> {
        params.validate()?;
        let tf = tau_transform(field, &params.tau_params(n))?;
        let (d0, _) = params.boxes(field.region(), n)?;
        let seq = ball_to_horizon(&tf, &d0, horizon)?;
        Ok((
            Self {
                field: field.clone(),
                seq,
                theta: params.theta(n),
            },
            tf,
        ))
    }

    // Vertices whose incident edges stay frozen at level k (None for k = -1).
    fn collar(&self, k: i64) -> Result<Option<VertexSet>> {
        if k < 0 {
            return Ok(None);
        }
        let frozen = frozen_vertices(&self.seq.ball(k as u64));
        let collar = frozen.chebyshev_dilate(self.theta.floor() as u32);
        if frozen.chebyshev_dilate(self.theta.ceil() as u32).touches_face() {
            return Err(FppError::Precondition(format!(
                "frozen region at k = {k} plus its collar reaches the window face"
            )));
        }
        Ok(Some(collar))
    }
}

fn replicas_at(base: &Base, n: u64, k: i64, replicas: usize, params: &FppParams) -> Result<Vec<f64>> {
    let collar = base.collar(k)?;
    let region = Arc::clone(base.field.region());
    let keep = |e: usize| match &collar {
        None => false,
        Some(c) => {
            let (a, b) = region.edge_endpoints(e);
            c.contains(a) || c.contains(b)
        }
    };
    let level = (k + 1) as u32;
    (0..replicas)
        .into_par_iter()
        .map(|j| {
            let bump = 1 + level * replicas as u32 + j as u32;
            let redrawn = base.field.resample_where(keep, bump);
            realized_tau_time(&redrawn, n, params)
        })
        .collect()
}

/// Estimate and standard error of `E[T_τ | F_k]` from `replicas` redraws.
/// `k = -1` is the trivial σ-field (every edge redrawn).
pub fn conditional_mean(
    field: &WeightField,
    n: u64,
    k: i64,
    replicas: usize,
    params: &FppParams,
) -> Result<(f64, f64)> {
    if replicas < 2 {
        return Err(FppError::Config(format!("need at least 2 inner replicas, got {replicas}")));
    }
    if k < -1 {
        return Err(FppError::Domain(format!("k = {k} must be at least -1")));
    }
    let (base, _) = Base::new(field, n, k.max(0) as u64, params)?;
    let xs = replicas_at(&base, n, k, replicas, params)?;
    Ok(mean_stderr(&xs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub k: i64,
    pub frozen_vertices: usize,
    pub frozen_edges: usize,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTrace {
    pub seed: u64,
    pub n: u64,
    pub replicas: usize,
    /// `T_τ` of the base configuration.
    pub realized: f64,
    pub k_star: Option<u64>,
    /// Levels `k = -1..=k_max`.
    pub levels: Vec<LevelRecord>,
    /// `Δ_k = m_{k+1} - m_k` for `k = -1..k_max`.
    pub differences: Vec<f64>,
    /// The level `k = -1` estimate of `E T_τ`.
    pub grand_mean: f64,
    /// `|Σ Δ_k - (m_{k_max} - m_{-1})|`.
    pub telescoping_residual: f64,
    /// `|m_{k_max} - T_τ|`, meaningful once `k_max >= k*`.
    pub terminal_residual: f64,
}

impl MartingaleTrace {
    /// `Δ_k` for `k >= -1`.
    pub fn difference(&self, k: i64) -> Option<f64> {
        usize::try_from(k + 1).ok().and_then(|i| self.differences.get(i).copied())
    }

    pub fn max_abs_difference(&self) -> f64 {
        self.differences.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }
}

pub fn martingale_trace(
    field: &WeightField,
    n: u64,
    k_max: u64,
    replicas: usize,
    params: &FppParams,
) -> Result<MartingaleTrace> {
    if replicas < 2 {
        return Err(FppError::Config(format!("need at least 2 inner replicas, got {replicas}")));
    }
    let (base, tf) = Base::new(field, n, k_max, params)?;
    let realized = box_to_box(&tf, n, params)?.time;
    let k_star = if realized.is_finite() {
        Some(realized.ceil() as u64)
    } else {
        None
    };
    let mut levels = Vec::with_capacity(k_max as usize + 2);
    for k in -1..=k_max as i64 {
        let xs = replicas_at(&base, n, k, replicas, params)?;
        let (estimate, stderr) = mean_stderr(&xs);
        let frozen = if k >= 0 {
            frozen_vertices(&base.seq.ball(k as u64))
        } else {
            VertexSet::empty(field.region())
        };
        levels.push(LevelRecord {
            k,
            frozen_vertices: frozen.len(),
            frozen_edges: spanned_edges(&frozen),
            estimate,
            stderr,
        });
    }
    let differences: Vec<f64> = levels.windows(2).map(|w| w[1].estimate - w[0].estimate).collect();
    let first = levels[0].estimate;
    let last = levels[levels.len() - 1].estimate;
    let telescoping_residual = (differences.iter().sum::<f64>() - (last - first)).abs();
    Ok(MartingaleTrace {
        seed: field.seed(),
        n,
        replicas,
        realized,
        k_star,
        grand_mean: first,
        terminal_residual: (last - realized).abs(),
        telescoping_residual,
        levels,
        differences,
    })
}

/// `C` such that `max_k |Δ_k| = C (ln n)^{2+2δ}`.
pub fn difference_constant(max_abs_difference: f64, n: u64, delta: f64) -> f64 {
    max_abs_difference / (n as f64).ln().powf(2.0 + 2.0 * delta)
}

/// Azuma-Hoeffding tail `2 exp(-x² / (2 k c²))` on `x_grid`.
pub fn azuma_curve(diff_bound: f64, k_count: u64, x_grid: &[f64]) -> Result<Vec<f64>> {
    if !(diff_bound > 0.0) || !diff_bound.is_finite() {
        return Err(FppError::Domain(format!("difference bound {diff_bound} must be positive")));
    }
    if k_count == 0 {
        return Err(FppError::Domain("need at least one difference".into()));
    }
    let denom = 2.0 * k_count as f64 * diff_bound * diff_bound;
    Ok(x_grid.iter().map(|&x| 2.0 * (-x * x / denom).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;
    use crate::weights::{sample_configuration, DistributionSpec};

    fn params() -> FppParams {
        FppParams {
            box_scale: Some(1.0),
            padding: 2.0,
            ..Default::default()
        }
    }

    fn base(dist: DistributionSpec, n: u64, seed: u64) -> WeightField {
        sample_configuration(&params().box_window(n).unwrap(), &dist, seed).unwrap()
    }

    #[test]
    fn mean_stderr_is_exact_on_constants() {
        let xs = vec![0.1 + 0.2; 10];
        assert_eq!(mean_stderr(&xs), (0.1 + 0.2, 0.0));
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_too_few_replicas() {
        let f = base(DistributionSpec::Exponential { rate: 1.0 }, 16, 0);
        assert!(conditional_mean(&f, 16, 0, 1, &params()).is_err());
        assert!(martingale_trace(&f, 16, 3, 1, &params()).is_err());
    }

    #[test]
    fn small_window_is_a_precondition_error() {
        let p = FppParams { padding: 0.0, ..params() };
        let f = sample_configuration(&p.box_window(16).unwrap(), &DistributionSpec::Exponential { rate: 1.0 }, 0).unwrap();
        assert!(matches!(conditional_mean(&f, 16, 0, 4, &p), Err(FppError::Precondition(_))));
    }

    #[test]
    fn point_mass_is_deterministic() {
        let f = base(DistributionSpec::PointMass { c: 1.0 }, 16, 0);
        let t = martingale_trace(&f, 16, 4, 4, &params()).unwrap();
        assert!(t.differences.iter().all(|&d| d == 0.0));
        assert!(t.levels.iter().all(|l| l.stderr == 0.0 && l.estimate == t.realized));
    }

    #[test]
    fn collapses_after_the_hit() {
        let p = params();
        for seed in 0..3 {
            let f = base(DistributionSpec::Exponential { rate: 1.0 }, 16, seed);
            let t = realized_tau_time(&f, 16, &p).unwrap();
            let ks = t.ceil() as i64;
            let (m, s) = conditional_mean(&f, 16, ks, 8, &p).unwrap();
            assert_eq!((m, s), (t, 0.0));
            let trace = martingale_trace(&f, 16, ks as u64 + 1, 8, &p).unwrap();
            assert_eq!(trace.terminal_residual, 0.0);
            assert!(trace.telescoping_residual < 1e-9);
            assert_eq!(trace.difference(ks), Some(0.0));
            for w in trace.levels.windows(2) {
                assert!(w[0].frozen_vertices <= w[1].frozen_vertices);
            }
        }
    }

    #[test]
    fn trivial_level_matches_fresh_mean() {
        let p = params();
        let dist = DistributionSpec::Exponential { rate: 1.0 };
        let f = base(dist, 16, 1);
        let (m1, s1) = conditional_mean(&f, 16, -1, 200, &p).unwrap();
        let fresh: Vec<f64> = (0..200)
            .map(|i| realized_tau_time(&base(dist, 16, derive_seed(99, &[i])), 16, &p).unwrap())
            .collect();
        let (m2, s2) = mean_stderr(&fresh);
        assert!((m1 - m2).abs() <= 3.0 * (s1 * s1 + s2 * s2).sqrt(), "{m1} vs {m2}");
    }

    #[test]
    fn azuma_shape() {
        let xs = [0.0, 0.5, 1.0, 2.0, 4.0];
        let b = azuma_curve(1.0, 3, &xs).unwrap();
        assert_eq!(b[0], 2.0);
        assert!(b.windows(2).all(|w| w[1] < w[0]));
        let half = azuma_curve(0.5, 3, &xs).unwrap();
        assert!((half[2] - b[2].powi(4) / 8.0).abs() < 1e-12);
        assert!(azuma_curve(0.0, 3, &xs).is_err());
        assert!(azuma_curve(1.0, 0, &xs).is_err());
    }
}
