//! The renormalized passage time `τ(e)`.
//!
//! Edges inside oversized fast (ε⁻) clusters, and slow (`t > M`) edges
//! touching oversized open `L^d` clusters, are capped at 1. Everything else
//! keeps its original weight. "Oversized" means more than
//! `θ_n = (ln n)^{1+δ}` vertices.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::clusters::{epsilon_clusters, open_ld_clusters};
use crate::error::{FppError, Result};
use crate::lattice::{Region, VertexSet};
use crate::weights::WeightField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// `ε <= t <= M`.
    Mid,
    SmallKept,
    SmallCapped,
    LargeKept,
    LargeCapped,
}

impl TauRule {
    pub fn is_capped(self) -> bool {
        matches!(self, Self::SmallCapped | Self::LargeCapped)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauParams {
    pub epsilon: f64,
    pub m_level: f64,
    pub n: u64,
    pub delta: f64,
}

impl TauParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(FppError::Config(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.epsilon >= self.m_level {
            return Err(FppError::Config(format!(
                "epsilon = {} must be smaller than M = {}",
                self.epsilon, self.m_level
            )));
        }
        if self.n < 2 {
            return Err(FppError::Config(format!("n = {} must be at least 2", self.n)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(FppError::Config(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        theta(self.n, self.delta)
    }
}

/// `θ_n = (ln n)^{1+δ}`.
pub fn theta(n: u64, delta: f64) -> f64 {
    (n as f64).ln().powf(1.0 + delta)
}

#[derive(Clone, Debug)]
pub struct TauField {
    region: Arc<Region>,
    tau: Vec<f64>,
    rules: Vec<TauRule>,
    params: TauParams,
}

impl TauField {
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    /// `τ` indexed by edge slot (`+∞` on non-edges).
    pub fn weights(&self) -> &[f64] {
        &self.tau
    }

    #[inline]
    pub fn tau(&self, e: usize) -> f64 {
        self.tau[e]
    }

    pub fn rule(&self, e: usize) -> TauRule {
        self.rules[e]
    }

    pub fn params(&self) -> &TauParams {
        &self.params
    }

    pub fn count(&self, rule: TauRule) -> usize {
        self.region.edges().filter(|&e| self.rules[e] == rule).count()
    }
}

pub fn tau_transform(field: &WeightField, params: &TauParams) -> Result<TauField> {
    params.validate()?;
    let region = Arc::clone(field.region());
    let theta = params.theta();
    let small = epsilon_clusters(field, params.epsilon)?;
    let open = open_ld_clusters(field, params.m_level)?;
    let big_open: Vec<bool> = open.sizes().iter().map(|&s| s as f64 > theta).collect();

    // Big open clusters a vertex belongs to or is L^d-adjacent to.
    let touched = |v: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut add = |u: usize| {
            if let Some(l) = open.label(u) {
                if big_open[l] && !out.contains(&l) {
                    out.push(l);
                }
            }
        };
        add(v);
        region.for_each_ld(v, &mut add);
        out
    };

    let mut tau = vec![f64::INFINITY; region.edge_slots()];
    let mut rules = vec![TauRule::Mid; region.edge_slots()];
    for e in region.edges() {
        let t = field.weight(e);
        let (a, b) = region.edge_endpoints(e);
        let rule = if t < params.epsilon {
            if small.size_at(a) as f64 > theta {
                TauRule::SmallCapped
            } else {
                TauRule::SmallKept
            }
        } else if t <= params.m_level {
            TauRule::Mid
        } else {
            // Both endpoints of an M⁺ edge are open, so in practice this is
            // membership of their common cluster.
            let ta = touched(a);
            if touched(b).iter().any(|l| ta.contains(l)) {
                TauRule::LargeCapped
            } else {
                TauRule::LargeKept
            }
        };
        rules[e] = rule;
        tau[e] = if rule.is_capped() { 1.0 } else { t };
    }
    Ok(TauField {
        region,
        tau,
        rules,
        params: *params,
    })
}

/// Sup-norm distance between the nearest endpoints of two edges.
pub fn edge_distance(region: &Region, e1: usize, e2: usize) -> i64 {
    let (a1, b1) = region.edge_endpoints(e1);
    let (a2, b2) = region.edge_endpoints(e2);
    [(a1, a2), (a1, b2), (b1, a2), (b1, b2)]
        .into_iter()
        .map(|(x, y)| region.chebyshev(x, y))
        .min()
        .unwrap_or(0)
}

/// Edges whose nearest endpoint is within sup-distance `θ_n` of an endpoint of `e1`.
pub fn locality_neighbourhood(region: &Arc<Region>, e1: usize, theta: f64) -> VertexSet {
    let (a, b) = region.edge_endpoints(e1);
    VertexSet::from_indices(region, [a, b]).chebyshev_dilate(theta.floor() as u32)
}

/// Outcome of a locality check: whether `τ(e1)` survived every redraw.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalityReport {
    pub base: f64,
    pub rounds: usize,
    pub changed_in_round: Option<usize>,
}

impl LocalityReport {
    pub fn holds(&self) -> bool {
        self.changed_in_round.is_none()
    }
}

/// Redraws every edge farther than `θ_n` (sup metric) from `e1`, `rounds`
/// times, and reports whether `τ(e1)` ever moves.
pub fn tau_locality_check(
    field: &WeightField,
    e1: usize,
    params: &TauParams,
    rounds: usize,
) -> Result<LocalityReport> {
    params.validate()?;
    let region = Arc::clone(field.region());
    if !region.is_edge(e1) {
        return Err(FppError::Domain(format!("{e1} is not an edge of the window")));
    }
    let theta = params.theta();
    let radius = theta.ceil() as i64;
    let (a, b) = region.edge_endpoints(e1);
    if region.face_distance(a).min(region.face_distance(b)) <= radius {
        return Err(FppError::Precondition(format!(
            "edge {e1} is within {radius} of the window face"
        )));
    }
    let near = locality_neighbourhood(&region, e1, theta);
    let keep = |e: usize| {
        let (x, y) = region.edge_endpoints(e);
        near.contains(x) || near.contains(y)
    };
    let base = tau_transform(field, params)?.tau(e1);
    for round in 1..=rounds {
        let redrawn = field.resample_where(keep, round as u32);
        let t = tau_transform(&redrawn, params)?.tau(e1);
        if t.to_bits() != base.to_bits() {
            return Ok(LocalityReport {
                base,
                rounds,
                changed_in_round: Some(round),
            });
        }
    }
    Ok(LocalityReport {
        base,
        rounds,
        changed_in_round: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{sample_configuration, DistributionSpec};
    use proptest::prelude::*;

    const UNIT: DistributionSpec = DistributionSpec::PointMass { c: 1.0 };

    fn unit_field(half: i64) -> WeightField {
        let r = Arc::new(Region::cube(2, half).unwrap());
        sample_configuration(&r, &UNIT, 0).unwrap()
    }

    fn edge(r: &Region, a: [i64; 2], b: [i64; 2]) -> usize {
        r.edge_between(r.index(&a).unwrap(), r.index(&b).unwrap()).unwrap()
    }

    fn params(n: u64) -> TauParams {
        TauParams {
            epsilon: 0.5,
            m_level: 2.0,
            n,
            delta: 0.1,
        }
    }

    #[test]
    fn theta_values() {
        // (ln 64)^1.1 = 4.1589^1.1
        assert!((theta(64, 0.1) - 4.1589f64.powf(1.1)).abs() < 1e-3);
        assert!(theta(2, 0.5) > 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        let f = unit_field(2);
        let mut p = params(10);
        p.epsilon = 3.0;
        assert!(matches!(tau_transform(&f, &p), Err(FppError::Config(_))));
        p = params(1);
        assert!(tau_transform(&f, &p).is_err());
        p = params(10);
        p.delta = 1.0;
        assert!(tau_transform(&f, &p).is_err());
    }

    #[test]
    fn unit_weights_are_all_mid() {
        let f = unit_field(4);
        let tf = tau_transform(&f, &params(64)).unwrap();
        let r = f.region();
        assert!(r.edges().all(|e| tf.rule(e) == TauRule::Mid && tf.tau(e) == 1.0));
    }

    #[test]
    fn long_small_path_is_capped() {
        let f = unit_field(8);
        let r = Arc::clone(f.region());
        let p = params(64);
        let th = p.theta();
        let vertices = th.ceil() as i64 + 2;
        let path: Vec<usize> = (0..vertices - 1)
            .map(|i| edge(&r, [-6 + i, 0], [-5 + i, 0]))
            .collect();
        let lone = edge(&r, [0, 5], [1, 5]);
        let mut edits: Vec<(usize, f64)> = path.iter().map(|&e| (e, 0.1)).collect();
        edits.push((lone, 0.2));
        let g = f.with_edits(&edits).unwrap();
        let tf = tau_transform(&g, &p).unwrap();
        for &e in &path {
            assert_eq!(tf.rule(e), TauRule::SmallCapped);
            assert_eq!(tf.tau(e), 1.0);
        }
        assert_eq!(tf.rule(lone), TauRule::SmallKept);
        assert_eq!(tf.tau(lone), 0.2);
    }

    #[test]
    fn slow_edge_next_to_small_open_cluster_is_kept() {
        // theta = 5 exactly: (ln n)^{1+δ} = 5 with δ = 0.1
        let n = (5f64.powf(1.0 / 1.1)).exp().round() as u64;
        let mut p = params(n);
        p.delta = (5f64.ln() / (n as f64).ln().ln()) - 1.0;
        assert!((p.theta() - 5.0).abs() < 1e-9);
        let f = unit_field(6);
        let r = Arc::clone(f.region());
        let e = edge(&r, [0, 0], [1, 0]);
        let g = f.with_edits(&[(e, p.m_level + 1.0)]).unwrap();
        let tf = tau_transform(&g, &p).unwrap();
        assert_eq!(tf.rule(e), TauRule::LargeKept);
        assert_eq!(tf.tau(e), p.m_level + 1.0);
    }

    #[test]
    fn slow_edge_in_big_open_cluster_is_capped() {
        let f = unit_field(8);
        let r = Arc::clone(f.region());
        let p = params(64);
        // a vertical chain of 4 slow edges opens 5+ vertices... make it 8
        let edits: Vec<(usize, f64)> = (0..7)
            .map(|i| (edge(&r, [0, -3 + i], [0, -2 + i]), 5.0))
            .collect();
        let g = f.with_edits(&edits).unwrap();
        let tf = tau_transform(&g, &p).unwrap();
        for &(e, _) in &edits {
            assert_eq!(tf.rule(e), TauRule::LargeCapped);
            assert_eq!(tf.tau(e), 1.0);
        }
    }

    #[test]
    fn unit_weights_are_local() {
        let f = unit_field(10);
        let r = f.region();
        let e = edge(r, [0, 0], [1, 0]);
        assert!(tau_locality_check(&f, e, &params(64), 20).unwrap().holds());
        let corner = edge(r, [-10, -10], [-9, -10]);
        assert!(matches!(
            tau_locality_check(&f, corner, &params(64), 20),
            Err(FppError::Precondition(_))
        ));
    }

    #[test]
    fn sampled_edges_are_local() {
        let r = Arc::new(Region::cube(2, 14).unwrap());
        let dist = DistributionSpec::Exponential { rate: 1.0 };
        let p = TauParams {
            epsilon: 0.3,
            m_level: 1.5,
            n: 64,
            delta: 0.1,
        };
        let center = r.index(&[0, 0]).unwrap();
        for seed in 0..30 {
            let f = sample_configuration(&r, &dist, seed).unwrap();
            let e = r.edge(center, (seed % 2) as usize).unwrap();
            assert!(tau_locality_check(&f, e, &p, 20).unwrap().holds(), "seed {seed}");
        }
    }

    #[test]
    fn change_inside_radius_can_move_tau() {
        // open cluster of exactly floor(theta) vertices around e1, one more
        // open vertex at distance theta/2 pushes it over the threshold
        let p = params(64);
        let th = p.theta();
        let size = th.floor() as i64; // 4
        let f = unit_field(12);
        let r = Arc::clone(f.region());
        let slow: Vec<(usize, f64)> = (0..size - 1)
            .map(|i| (edge(&r, [i, 0], [i + 1, 0]), 5.0))
            .collect();
        let e1 = slow[0].0;
        let g = f.with_edits(&slow).unwrap();
        let before = tau_transform(&g, &p).unwrap();
        assert_eq!(before.rule(e1), TauRule::LargeKept);
        // (size, 1) is L^2-adjacent to (size-1, 0); open it via an upward edge
        let extra = edge(&r, [size, 1], [size, 2]);
        let d = edge_distance(&r, e1, extra) as f64;
        assert!(d <= th);
        let h = g.with_edits(&[(extra, 5.0)]).unwrap();
        let after = tau_transform(&h, &p).unwrap();
        assert_eq!(after.rule(e1), TauRule::LargeCapped);
        assert_ne!(before.tau(e1), after.tau(e1));
    }

    proptest! {
        #[test]
        fn tau_is_t_or_one(seed in any::<u64>()) {
            let r = Arc::new(Region::cube(2, 10).unwrap());
            let f = sample_configuration(&r, &DistributionSpec::Exponential { rate: 1.0 }, seed).unwrap();
            let p = TauParams { epsilon: 0.3, m_level: 1.5, n: 16, delta: 0.2 };
            let tf = tau_transform(&f, &p).unwrap();
            for e in r.edges() {
                let (t, tau) = (f.weight(e), tf.tau(e));
                prop_assert!(tau == t || tau == 1.0);
                prop_assert!(tau <= t.max(1.0));
                match tf.rule(e) {
                    TauRule::Mid => prop_assert!(tau == t && (0.3..=1.5).contains(&t)),
                    TauRule::SmallKept => prop_assert!(tau == t && t < 0.3),
                    TauRule::LargeKept => prop_assert!(tau == t && t > 1.5),
                    TauRule::SmallCapped | TauRule::LargeCapped => prop_assert!(tau == 1.0),
                }
            }
        }

        #[test]
        fn larger_n_only_uncaps(seed in any::<u64>()) {
            let r = Arc::new(Region::cube(2, 10).unwrap());
            let f = sample_configuration(&r, &DistributionSpec::Exponential { rate: 1.0 }, seed).unwrap();
            let small_n = tau_transform(&f, &TauParams { epsilon: 0.4, m_level: 1.2, n: 8, delta: 0.2 }).unwrap();
            let big_n = tau_transform(&f, &TauParams { epsilon: 0.4, m_level: 1.2, n: 512, delta: 0.2 }).unwrap();
            for e in r.edges() {
                if big_n.rule(e).is_capped() {
                    prop_assert!(small_n.rule(e).is_capped());
                }
            }
        }
    }
}
