//! First-passage times between vertex sets.
//!
//! The engine is a binary-heap label-setting sweep. Ties in the heap are
//! broken by vertex index and ties between equally short predecessors by
//! the smaller predecessor index, so recovered paths are deterministic.

mod ball;
mod variants;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lattice::{Region, VertexSet};
use crate::tau::TauField;
use crate::weights::WeightField;

pub use ball::*;
pub use variants::*;

/// Anything that assigns a nonnegative weight to each edge slot of a window.
pub trait EdgeWeights {
    fn region(&self) -> &Arc<Region>;
    fn weights(&self) -> &[f64];
}

impl EdgeWeights for WeightField {
    fn region(&self) -> &Arc<Region> {
        WeightField::region(self)
    }
    fn weights(&self) -> &[f64] {
        WeightField::weights(self)
    }
}

impl EdgeWeights for TauField {
    fn region(&self) -> &Arc<Region> {
        TauField::region(self)
    }
    fn weights(&self) -> &[f64] {
        TauField::weights(self)
    }
}

/// An optimal path and its passage time. Unreachable targets give `time = +∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub time: f64,
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub max_edge: f64,
    pub reached: bool,
}

impl PathResult {
    fn unreached() -> Self {
        Self {
            time: f64::INFINITY,
            vertices: Vec::new(),
            edges: Vec::new(),
            max_edge: f64::NAN,
            reached: false,
        }
    }

    /// Number of edges on the path.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

const NO_PRED: u32 = u32::MAX;

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    d: f64,
    v: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// When a sweep may stop early.
#[derive(Clone, Copy, Debug)]
pub enum Stop<'a> {
    /// Settle every reachable vertex.
    Exhaust,
    /// Stop on the first settled target vertex.
    FirstTarget(&'a VertexSet),
    /// Settle exactly the vertices at distance `<= horizon`.
    Horizon(f64),
}

/// Result of one sweep: exact distances on settled vertices, `+∞` elsewhere.
#[derive(Clone, Debug)]
pub struct Sweep {
    region: Arc<Region>,
    dist: Vec<f64>,
    pred: Vec<u32>,
    hit: Option<usize>,
}

impl Sweep {
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn dist(&self) -> &[f64] {
        &self.dist
    }

    /// The target vertex that stopped a [`Stop::FirstTarget`] sweep.
    pub fn hit(&self) -> Option<usize> {
        self.hit
    }

    /// Path from the source set to a settled vertex `v`.
    pub fn path_to(&self, weights: &[f64], v: usize) -> PathResult {
        if !self.dist[v].is_finite() {
            return PathResult::unreached();
        }
        let mut vertices = vec![v];
        let mut cur = v;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur] as usize;
            vertices.push(cur);
        }
        vertices.reverse();
        let edges: Vec<usize> = vertices
            .windows(2)
            .map(|w| self.region.edge_between(w[0], w[1]).expect("adjacent path vertices"))
            .collect();
        let ws: Vec<f64> = edges.iter().map(|&e| weights[e]).collect();
        PathResult {
            time: pairwise_sum(&ws),
            max_edge: ws.iter().copied().fold(0.0, f64::max),
            vertices,
            edges,
            reached: true,
        }
    }
}

/// Multi-source label-setting sweep over paths whose vertices stay in `allowed`.
pub fn sweep(
    region: &Arc<Region>,
    weights: &[f64],
    sources: &VertexSet,
    allowed: Option<&VertexSet>,
    stop: Stop<'_>,
) -> Sweep {
    let n = region.len();
    let ok = |v: usize| allowed.is_none_or(|a| a.contains(v));
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    for s in sources.iter().filter(|&s| ok(s)) {
        dist[s] = 0.0;
        heap.push(Entry { d: 0.0, v: s });
    }
    let mut hit = None;
    while let Some(Entry { d, v }) = heap.pop() {
        if settled[v] || d > dist[v] {
            continue;
        }
        if let Stop::Horizon(h) = stop {
            if d > h {
                break;
            }
        }
        settled[v] = true;
        if let Stop::FirstTarget(t) = stop {
            if t.contains(v) {
                hit = Some(v);
                break;
            }
        }
        region.for_each_zd(v, |u, e| {
            if settled[u] || !ok(u) {
                return;
            }
            let nd = d + weights[e];
            if nd < dist[u] {
                dist[u] = nd;
                pred[u] = v as u32;
                heap.push(Entry { d: nd, v: u });
            } else if nd == dist[u] && (v as u32) < pred[u] {
                pred[u] = v as u32;
            }
        });
    }
    for v in 0..n {
        if !settled[v] {
            dist[v] = f64::INFINITY;
            pred[v] = NO_PRED;
        }
    }
    Sweep {
        region: Arc::clone(region),
        dist,
        pred,
        hit,
    }
}

/// `T(source, target)` over paths inside `allowed` (the whole window if `None`).
pub fn passage_time<W: EdgeWeights + ?Sized>(
    w: &W,
    source: &VertexSet,
    target: &VertexSet,
    allowed: Option<&VertexSet>,
) -> PathResult {
    let s = sweep(w.region(), w.weights(), source, allowed, Stop::FirstTarget(target));
    match s.hit {
        Some(v) => s.path_to(w.weights(), v),
        None => PathResult::unreached(),
    }
}

/// Point-to-point convenience wrapper.
pub fn point_passage_time<W: EdgeWeights + ?Sized>(w: &W, a: &[i64], b: &[i64]) -> PathResult {
    let r = w.region();
    let src = VertexSet::from_points(r, [a]);
    let dst = VertexSet::from_points(r, [b]);
    match (src, dst) {
        (Ok(s), Ok(t)) if !s.is_empty() && !t.is_empty() => passage_time(w, &s, &t, None),
        _ => PathResult::unreached(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_seed, EdgePrf};
    use crate::weights::{sample_configuration, DistributionSpec};
    use proptest::prelude::*;

    fn window(lower: [i64; 2], upper: [i64; 2]) -> Arc<Region> {
        Arc::new(Region::new(lower.to_vec(), upper.to_vec()).unwrap())
    }

    fn unit(r: &Arc<Region>) -> WeightField {
        sample_configuration(r, &DistributionSpec::PointMass { c: 1.0 }, 0).unwrap()
    }

    fn random_table(r: &Arc<Region>, seed: u64) -> WeightField {
        let prf = EdgePrf::new(seed);
        let mut w = vec![f64::INFINITY; r.edge_slots()];
        for e in r.edges() {
            // mix of ties, zeros and continuous values
            let u = prf.uniform(&[e as i64], 0, 0);
            w[e] = if u < 0.15 { 0.0 } else if u < 0.3 { 1.0 } else { 3.0 * u };
        }
        WeightField::from_weights(r, DistributionSpec::PointMass { c: 1.0 }, seed, w).unwrap()
    }

    // Brute force over all self-avoiding paths.
    fn enumerate(r: &Region, w: &[f64], s: usize, t: usize) -> f64 {
        fn go(r: &Region, w: &[f64], v: usize, t: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if v == t {
                *best = best.min(acc);
                return;
            }
            let mut next = Vec::new();
            r.for_each_zd(v, |u, e| next.push((u, e)));
            for (u, e) in next {
                if !seen[u] {
                    seen[u] = true;
                    go(r, w, u, t, seen, acc + w[e], best);
                    seen[u] = false;
                }
            }
        }
        let mut seen = vec![false; r.len()];
        seen[s] = true;
        let mut best = f64::INFINITY;
        go(r, w, s, t, &mut seen, 0.0, &mut best);
        best
    }

    #[test]
    fn unit_weights_give_graph_distance() {
        let r = window([-1, -1], [4, 1]);
        let f = unit(&r);
        let p = point_passage_time(&f, &[0, 0], &[3, 0]);
        assert_eq!(p.time, 3.0);
        assert_eq!(p.len(), 3);
        assert!(p.reached);
        assert_eq!(p.max_edge, 1.0);
    }

    #[test]
    fn overlapping_sets_cost_nothing() {
        let r = window([0, 0], [3, 3]);
        let f = unit(&r);
        let a = VertexSet::from_points(&r, [[0, 0], [1, 1]]).unwrap();
        let b = VertexSet::from_points(&r, [[1, 1], [3, 3]]).unwrap();
        let p = passage_time(&f, &a, &b, None);
        assert_eq!(p.time, 0.0);
        assert!(p.is_empty());
        assert!(p.reached);
    }

    #[test]
    fn unreachable_is_infinite() {
        let r = window([0, 0], [3, 0]);
        let f = unit(&r);
        let a = VertexSet::from_points(&r, [[0, 0]]).unwrap();
        let b = VertexSet::from_points(&r, [[3, 0]]).unwrap();
        let mut wall = VertexSet::full(&r);
        wall.remove(r.index(&[2, 0]).unwrap());
        let p = passage_time(&f, &a, &b, Some(&wall));
        assert!(!p.reached);
        assert_eq!(p.time, f64::INFINITY);
    }

    #[test]
    fn explicit_three_by_three_table() {
        let r = window([0, 0], [2, 2]);
        assert_eq!(r.edge_count(), 12);
        let table = [0.5, 2.0, 1.5, 0.25, 3.0, 0.75, 1.0, 0.125, 2.5, 0.375, 1.25, 4.0];
        let mut w = vec![f64::INFINITY; r.edge_slots()];
        for (e, &x) in r.edges().zip(table.iter()) {
            w[e] = x;
        }
        let f = WeightField::from_weights(&r, DistributionSpec::PointMass { c: 1.0 }, 0, w).unwrap();
        for s in 0..r.len() {
            for t in 0..r.len() {
                let got = point_passage_time(&f, &r.point(s), &r.point(t));
                let want = enumerate(&r, f.weights(), s, t);
                assert!((got.time - want).abs() <= 1e-12, "{s}->{t}: {} vs {want}", got.time);
            }
        }
    }

    #[test]
    fn engine_matches_enumeration() {
        for (lower, upper) in [([0, 0], [2, 2]), ([0, 0], [1, 3])] {
            let r = window(lower, upper);
            for table in 0..100 {
                let f = random_table(&r, derive_seed(5, &[table]));
                for s in 0..r.len() {
                    for t in 0..r.len() {
                        let got = point_passage_time(&f, &r.point(s), &r.point(t));
                        let want = enumerate(&r, f.weights(), s, t);
                        assert!((got.time - want).abs() <= 1e-12);
                        let path_sum: f64 = got.edges.iter().map(|&e| f.weight(e)).sum();
                        assert!((path_sum - got.time).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn path_is_connected_and_ends_in_sets() {
        let r = Arc::new(Region::cube(2, 8).unwrap());
        let f = sample_configuration(&r, &DistributionSpec::Exponential { rate: 1.0 }, 3).unwrap();
        let a = VertexSet::from_points(&r, [[-5, -5], [-5, 4]]).unwrap();
        let b = VertexSet::from_points(&r, [[6, 1], [2, 7]]).unwrap();
        let p = passage_time(&f, &a, &b, None);
        assert!(a.contains(p.vertices[0]));
        assert!(b.contains(*p.vertices.last().unwrap()));
        for w in p.vertices.windows(2) {
            assert!(r.edge_between(w[0], w[1]).is_some());
        }
        assert_eq!(p.edges.len() + 1, p.vertices.len());
    }

    #[test]
    fn ties_are_deterministic() {
        let r = window([0, 0], [3, 3]);
        let f = unit(&r);
        let p = point_passage_time(&f, &[0, 0], &[3, 3]);
        let q = point_passage_time(&f, &[0, 0], &[3, 3]);
        assert_eq!(p, q);
        assert_eq!(p.time, 6.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&xs), xs.iter().sum::<f64>());
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    proptest! {
        #[test]
        fn subadditive(seed in any::<u64>(), pts in proptest::collection::vec((-6i64..=6, -6i64..=6), 3)) {
            let r = Arc::new(Region::cube(2, 6).unwrap());
            let f = sample_configuration(&r, &DistributionSpec::Exponential { rate: 1.0 }, seed).unwrap();
            let p: Vec<[i64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
            let uv = point_passage_time(&f, &p[0], &p[1]).time;
            let vw = point_passage_time(&f, &p[1], &p[2]).time;
            let uw = point_passage_time(&f, &p[0], &p[2]).time;
            prop_assert!(uw <= uv + vw + 1e-12);
        }

        #[test]
        fn monotone_in_one_edge(seed in any::<u64>(), pick in any::<prop::sample::Index>(), bump in 0.0f64..3.0) {
            let r = Arc::new(Region::cube(2, 5).unwrap());
            let f = sample_configuration(&r, &DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }, seed).unwrap();
            let edges: Vec<usize> = r.edges().collect();
            let e = edges[pick.index(edges.len())];
            let up = f.with_edits(&[(e, f.weight(e) + bump)]).unwrap();
            let down = f.with_edits(&[(e, f.weight(e) * 0.5)]).unwrap();
            let base = point_passage_time(&f, &[-5, -5], &[5, 3]).time;
            prop_assert!(point_passage_time(&up, &[-5, -5], &[5, 3]).time >= base - 1e-12);
            prop_assert!(point_passage_time(&down, &[-5, -5], &[5, 3]).time <= base + 1e-12);
        }
    }
}
