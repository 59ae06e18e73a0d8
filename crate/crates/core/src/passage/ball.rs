//! Growth balls `B_τ(k)` and the exact per-configuration verifiers built on them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{passage_time, pairwise_sum, sweep, EdgeWeights, PathResult, Stop};
use crate::error::{FppError, Result};
use crate::lattice::{boundaries, Adjacency, Region, VertexSet};
use crate::params::FppParams;
use crate::tau::{theta, TauField};
use crate::weights::WeightField;

/// Absolute tolerance for floating-point identities.
pub const TOLERANCE: f64 = 1e-9;

/// Outcome of one exact check on one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "detail", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail(String),
    /// The check's precondition did not hold; not a failure.
    Skip(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Self::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Self::Fail(_))
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, Self::Skip(_))
    }

    fn check(ok: bool, detail: impl FnOnce() -> String) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail(detail())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallStatus {
    /// The target met `B_τ(k)` first at `k = k_star`.
    Hit { k_star: u64 },
    /// No target within `k_max`.
    NotReached,
    /// Every reachable vertex was exhausted before the target or `k_max`.
    WindowTruncated,
    /// Grown to a fixed horizon without a target.
    Untargeted,
}

/// The nested balls `B_τ(0) ⊆ B_τ(1) ⊆ …` up to `horizon`.
#[derive(Clone, Debug)]
pub struct BallSequence {
    source: VertexSet,
    dist: Vec<f64>,
    horizon: u64,
    status: BallStatus,
}

impl BallSequence {
    pub fn source(&self) -> &VertexSet {
        &self.source
    }

    pub fn region(&self) -> &Arc<Region> {
        self.source.region()
    }

    /// `T_τ(source, v)` for `v` within the horizon, `+∞` beyond it.
    pub fn dist(&self) -> &[f64] {
        &self.dist
    }

    /// Largest `k` for which `B_τ(k)` is exact.
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn status(&self) -> BallStatus {
        self.status
    }

    pub fn k_star(&self) -> Option<u64> {
        match self.status {
            BallStatus::Hit { k_star } => Some(k_star),
            _ => None,
        }
    }

    pub fn ball(&self, k: u64) -> VertexSet {
        let k = k as f64;
        VertexSet::from_indices(
            self.source.region(),
            (0..self.dist.len()).filter(|&v| self.dist[v] <= k),
        )
    }
}

/// `B_τ(k)` for `k = 0..`, stopping at the first `k` that meets `target`.
pub fn ball_growth<W: EdgeWeights + ?Sized>(
    w: &W,
    source: &VertexSet,
    target: &VertexSet,
    k_max: u64,
) -> Result<BallSequence> {
    if source.is_empty() || target.is_empty() {
        return Err(FppError::Domain("source and target must be nonempty".into()));
    }
    let first = sweep(w.region(), w.weights(), source, None, Stop::FirstTarget(target));
    let (status, horizon) = match first.hit() {
        Some(v) => {
            let k = first.dist()[v].ceil() as u64;
            if k <= k_max {
                (BallStatus::Hit { k_star: k }, k)
            } else {
                (BallStatus::NotReached, k_max)
            }
        }
        None => (BallStatus::WindowTruncated, k_max),
    };
    let s = sweep(w.region(), w.weights(), source, None, Stop::Horizon(horizon as f64));
    Ok(BallSequence {
        source: source.clone(),
        dist: s.dist().to_vec(),
        horizon,
        status,
    })
}

/// `B_τ(k)` for `k = 0..=horizon` with no target.
pub fn ball_to_horizon<W: EdgeWeights + ?Sized>(
    w: &W,
    source: &VertexSet,
    horizon: u64,
) -> Result<BallSequence> {
    if source.is_empty() {
        return Err(FppError::Domain("source must be nonempty".into()));
    }
    let s = sweep(w.region(), w.weights(), source, None, Stop::Horizon(horizon as f64));
    Ok(BallSequence {
        source: source.clone(),
        dist: s.dist().to_vec(),
        horizon,
        status: BallStatus::Untargeted,
    })
}

fn ball_checked(seq: &BallSequence, k: u64) -> std::result::Result<VertexSet, Verdict> {
    if k > seq.horizon {
        return Err(Verdict::Skip(format!("k = {k} beyond horizon {}", seq.horizon)));
    }
    Ok(seq.ball(k))
}

/// `k + T_τ(B_τ(k), target) = T_τ(source, target)` when `B_τ(k)` misses the target.
pub fn verify_lemma2(seq: &BallSequence, tf: &TauField, target: &VertexSet, k: u64) -> Verdict {
    let ball = match ball_checked(seq, k) {
        Ok(b) => b,
        Err(v) => return v,
    };
    if ball.intersects(target) {
        return Verdict::Skip(format!("B(k) meets the target at k = {k}"));
    }
    let lhs = k as f64 + passage_time(tf, &ball, target, None).time;
    let rhs = passage_time(tf, seq.source(), target, None).time;
    Verdict::check((lhs - rhs).abs() <= TOLERANCE, || {
        format!("k + T(B(k), target) = {lhs} but T(source, target) = {rhs}")
    })
}

/// The one-sided form `T_τ(source, target) <= k + T_τ(B_τ(k), target)`,
/// which holds for any weights.
pub fn verify_lemma2_upper(seq: &BallSequence, tf: &TauField, target: &VertexSet, k: u64) -> Verdict {
    let ball = match ball_checked(seq, k) {
        Ok(b) => b,
        Err(v) => return v,
    };
    if ball.intersects(target) {
        return Verdict::Skip(format!("B(k) meets the target at k = {k}"));
    }
    let lhs = k as f64 + passage_time(tf, &ball, target, None).time;
    let rhs = passage_time(tf, seq.source(), target, None).time;
    Verdict::check(rhs <= lhs + TOLERANCE, || {
        format!("T(source, target) = {rhs} exceeds k + T(B(k), target) = {lhs}")
    })
}

/// The recovered optimal source-to-target path stays inside `B_τ(k)` once
/// the ball meets the target.
pub fn verify_lemma7(seq: &BallSequence, tf: &TauField, target: &VertexSet, k: u64) -> Verdict {
    let ball = match ball_checked(seq, k) {
        Ok(b) => b,
        Err(v) => return v,
    };
    if !ball.intersects(target) {
        return Verdict::Skip(format!("B(k) misses the target at k = {k}"));
    }
    let path = passage_time(tf, seq.source(), target, None);
    match path.vertices.iter().find(|&&v| !ball.contains(v)) {
        None if path.reached => Verdict::Pass,
        None => Verdict::Fail("target unreachable".into()),
        Some(&v) => Verdict::Fail(format!(
            "path vertex {:?} lies outside B({k})",
            tf.region().point(v)
        )),
    }
}

/// `3^d M (ln n)^{1+δ}`.
pub fn lemma3_bound(dim: usize, m_level: f64, n: u64, delta: f64) -> f64 {
    3f64.powi(dim as i32) * m_level * theta(n, delta)
}

/// Every `τ` along an optimal path is at most `3^d M (ln n)^{1+δ}`.
pub fn verify_lemma3(tf: &TauField, path: &PathResult, n: u64, m_level: f64, delta: f64, dim: usize) -> Verdict {
    let bound = lemma3_bound(dim, m_level, n, delta);
    let max = path.edges.iter().map(|&e| tf.tau(e)).fold(0.0, f64::max);
    Verdict::check(max <= bound, || format!("path edge with tau = {max} exceeds {bound}"))
}

/// Every `v ∈ B_τ(k)` lies within sup-distance `(k+1)(ln n)^{1+δ}` of the source.
pub fn verify_lemma5(seq: &BallSequence, theta: f64) -> Verdict {
    let cheb = seq.source().chebyshev_distance_map();
    for (v, &d) in seq.dist().iter().enumerate() {
        if !d.is_finite() {
            continue;
        }
        let k = d.ceil();
        if cheb[v] as f64 > (k + 1.0) * theta {
            return Verdict::Fail(format!(
                "vertex {:?} in B({k}) at sup-distance {} > {}",
                seq.region().point(v),
                cheb[v],
                (k + 1.0) * theta
            ));
        }
    }
    Verdict::Pass
}

/// Nestedness, source containment, connectedness, and the threshold
/// characterisation of `B_τ(k)` and `∂_o B_τ(k)` for every `k` up to the
/// horizon, against an independent exhaustive sweep.
pub fn verify_ball_invariants<W: EdgeWeights + ?Sized>(seq: &BallSequence, w: &W) -> Verdict {
    let full = sweep(w.region(), w.weights(), seq.source(), None, Stop::Exhaust);
    let full = full.dist();
    let mut prev: Option<VertexSet> = None;
    for k in 0..=seq.horizon() {
        let ball = seq.ball(k);
        let kf = k as f64;
        if !seq.source().is_subset(&ball) {
            return Verdict::Fail(format!("source not inside B({k})"));
        }
        if let Some(p) = &prev {
            if !p.is_subset(&ball) {
                return Verdict::Fail(format!("B({}) not inside B({k})", k - 1));
            }
        }
        if !ball.is_zd_connected() {
            return Verdict::Fail(format!("B({k}) is not connected"));
        }
        if let Some(v) = ball.iter().find(|&v| !(full[v] <= kf) || full[v] != seq.dist()[v]) {
            return Verdict::Fail(format!("vertex {v} in B({k}) has T = {}", full[v]));
        }
        if let Ok(b) = boundaries(&ball, Adjacency::Zd) {
            if let Some(v) = b.outer.iter().find(|&v| !(full[v] > kf)) {
                return Verdict::Fail(format!("outer boundary vertex {v} of B({k}) has T = {}", full[v]));
            }
        }
        prev = Some(ball);
    }
    Verdict::Pass
}

/// `T_τ(D_n(0), D_n(nu)) <= L · M · 3^d · (ln n)^{1+δ}` with `L` the
/// taxicab gap between the two boxes.
pub fn verify_lemma6(tf: &TauField, n: u64, params: &FppParams) -> Result<Verdict> {
    let region = tf.region();
    let (d0, dn) = params.boxes(region, n)?;
    let h = params.box_half(n)?;
    let gap = (n as i64 - 2 * h).max(0) as f64;
    let t = passage_time(tf, &d0, &dn, None).time;
    let bound = gap * lemma3_bound(params.dim, params.m_level, n, params.delta);
    Ok(Verdict::check(t <= bound + TOLERANCE, || {
        format!("T_tau(D0, Dn) = {t} exceeds {bound}")
    }))
}

/// `T(D_n(0), D_n(nu)) <= T(0, nu) <= Σ_{e ⊂ D_n(0) ∪ D_n(nu)} t(e) + T(D_n(0), D_n(nu))`.
pub fn sandwich_check(field: &WeightField, n: u64, params: &FppParams) -> Result<Verdict> {
    let region = field.region();
    let (d0, dn) = params.boxes(region, n)?;
    let mut far = vec![0i64; params.dim];
    far[0] = n as i64;
    let origin = VertexSet::from_points(region, [vec![0i64; params.dim]])?;
    let end = VertexSet::from_points(region, [far])?;
    if origin.is_empty() || end.is_empty() {
        return Err(FppError::Precondition("0 or nu lies outside the window".into()));
    }
    let dd = passage_time(field, &d0, &dn, None).time;
    let a = passage_time(field, &origin, &end, None).time;
    let both = d0.union(&dn);
    let inside: Vec<f64> = region
        .edges()
        .filter(|&e| {
            let (x, y) = region.edge_endpoints(e);
            both.contains(x) && both.contains(y)
        })
        .map(|e| field.weight(e))
        .collect();
    let sum = pairwise_sum(&inside);
    if dd > a + TOLERANCE {
        return Ok(Verdict::Fail(format!("T(D0, Dn) = {dd} > T(0, nu) = {a}")));
    }
    Ok(Verdict::check(a <= sum + dd + TOLERANCE, || {
        format!("T(0, nu) = {a} > box sum {sum} + T(D0, Dn) = {dd}")
    }))
}

/// The shell `S(Γ)` (Euclidean distance to `Γ` in `(2θ, 1 + 2θ)`) and
/// `S⁺(Γ)` (distance above `2θ`).
pub fn shell(gamma: &VertexSet, theta: f64) -> Result<(VertexSet, VertexSet)> {
    if gamma.is_empty() {
        return Err(FppError::Domain("shell of an empty set".into()));
    }
    let region = gamma.region();
    let members: Vec<usize> = gamma.iter().collect();
    let lo = 2.0 * theta;
    let hi = 1.0 + 2.0 * theta;
    let mut s = VertexSet::empty(region);
    let mut plus = VertexSet::empty(region);
    for u in 0..region.len() {
        let d2 = members.iter().map(|&g| region.dist_sq(u, g)).min().unwrap_or(0);
        let d = (d2 as f64).sqrt();
        if d > lo {
            plus.insert(u);
            if d < hi {
                s.insert(u);
            }
        }
    }
    Ok((s, plus))
}

/// [`shell`] at `θ_n = (ln n)^{1+δ}`.
pub fn shell_for(gamma: &VertexSet, n: u64, delta: f64) -> Result<(VertexSet, VertexSet)> {
    shell(gamma, theta(n, delta))
}
