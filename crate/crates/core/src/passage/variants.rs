//! Named passage times: point-point `a_{0,n}`, point-face `b_{0,n}`,
//! cube-cube `s_{0,n}`, slab crossings `Φ_{k,m}` and box-box times.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{passage_time, EdgeWeights, PathResult, Verdict, TOLERANCE};
use crate::error::{FppError, Result};
use crate::lattice::{Region, VertexSet};
use crate::params::FppParams;
use crate::weights::{sample_configuration, DistributionSpec, WeightField};

fn on_axis(dim: usize, x: i64) -> Vec<i64> {
    let mut p = vec![0i64; dim];
    p[0] = x;
    p
}

fn nonempty(set: VertexSet, what: &str) -> Result<VertexSet> {
    if set.is_empty() {
        Err(FppError::Precondition(format!("{what} lies outside the window")))
    } else {
        Ok(set)
    }
}

/// The hyperplane `{x_1 = x}` inside the window.
pub fn face(region: &Arc<Region>, x: i64) -> VertexSet {
    VertexSet::from_predicate(region, |p| p[0] == x)
}

/// The closed slab `{k <= x_1 <= m}` inside the window.
pub fn slab(region: &Arc<Region>, k: i64, m: i64) -> VertexSet {
    VertexSet::from_predicate(region, |p| p[0] >= k && p[0] <= m)
}

/// The transverse cube `S_0(x)` of side `side` on the face `{x_1 = x}`.
pub fn face_cube(region: &Arc<Region>, x: i64, side: i64) -> VertexSet {
    let lo = -(side - 1) / 2;
    let hi = lo + side - 1;
    VertexSet::from_predicate(region, |p| {
        p[0] == x && p[1..].iter().all(|&c| c >= lo && c <= hi)
    })
}

/// `a_{0,n} = T(0, nu)`.
pub fn a_0n<W: EdgeWeights + ?Sized>(w: &W, n: u64) -> Result<PathResult> {
    let r = w.region();
    let d = r.dim();
    let s = nonempty(VertexSet::from_points(r, [on_axis(d, 0)])?, "origin")?;
    let t = nonempty(VertexSet::from_points(r, [on_axis(d, n as i64)])?, "nu")?;
    Ok(passage_time(w, &s, &t, None))
}

/// `b_{0,n} = T(0, {x_1 = n})`.
pub fn b_0n<W: EdgeWeights + ?Sized>(w: &W, n: u64) -> Result<PathResult> {
    let r = w.region();
    let s = nonempty(VertexSet::from_points(r, [on_axis(r.dim(), 0)])?, "origin")?;
    let t = nonempty(face(r, n as i64), "face x_1 = n")?;
    Ok(passage_time(w, &s, &t, None))
}

/// `s_{0,n} = T(S_0(0), S_0(n))` with cubes of side `⌈(ln n)^{1+δ}⌉`.
pub fn s_0n<W: EdgeWeights + ?Sized>(w: &W, n: u64, params: &FppParams) -> Result<PathResult> {
    let r = w.region();
    let side = params.cube_side(n);
    let s = nonempty(face_cube(r, 0, side), "S_0(0)")?;
    let t = nonempty(face_cube(r, n as i64, side), "S_0(n)")?;
    Ok(passage_time(w, &s, &t, None))
}

/// `Φ_{k,m}`: face `{x_1 = k}` to face `{x_1 = m}` through the closed slab.
///
/// Restricting to the closed slab gives the same value as confining only
/// interior vertices to the open slab: the last visit to the first face and
/// the first visit to the second cut any admissible path to one of that kind.
pub fn phi<W: EdgeWeights + ?Sized>(w: &W, k: i64, m: i64) -> Result<PathResult> {
    if k >= m {
        return Err(FppError::Domain(format!("need k < m, got {k} and {m}")));
    }
    let r = w.region();
    let s = nonempty(face(r, k), "face x_1 = k")?;
    let t = nonempty(face(r, m), "face x_1 = m")?;
    let allowed = slab(r, k, m);
    Ok(passage_time(w, &s, &t, Some(&allowed)))
}

/// `T(D_n(0), D_n(nu))`.
pub fn box_to_box<W: EdgeWeights + ?Sized>(w: &W, n: u64, params: &FppParams) -> Result<PathResult> {
    let (d0, dn) = params.boxes(w.region(), n)?;
    let d0 = nonempty(d0, "D_n(0)")?;
    let dn = nonempty(dn, "D_n(nu)")?;
    Ok(passage_time(w, &d0, &dn, None))
}

/// `b_{0,n} <= a_{0,n}` and `s_{0,n} <= a_{0,n}` on one configuration.
pub fn comparison_check(field: &WeightField, n: u64, params: &FppParams) -> Result<Verdict> {
    let a = a_0n(field, n)?.time;
    let b = b_0n(field, n)?.time;
    let s = s_0n(field, n, params)?.time;
    Ok(if b > a + TOLERANCE {
        Verdict::Fail(format!("b = {b} > a = {a}"))
    } else if s > a + TOLERANCE {
        Verdict::Fail(format!("s = {s} > a = {a}"))
    } else {
        Verdict::Pass
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub phis: Vec<f64>,
    pub s: f64,
    pub verdict: Verdict,
}

/// `Σ_j Φ_{jn,(j+1)n} <= s_{0,4n}` on one configuration of the cylinder of
/// transverse half-width `w`.
pub fn crossing_check(
    dist: &DistributionSpec,
    n: u64,
    seed: u64,
    params: &FppParams,
    w: i64,
) -> Result<Crossing> {
    let big = 4 * n;
    let region = params.cylinder_window(big, w)?;
    let field = sample_configuration(&region, dist, seed)?;
    let s = s_0n(&field, big, params)?.time;
    let step = n as i64;
    let phis = (0..4)
        .map(|j| phi(&field, j * step, (j + 1) * step).map(|p| p.time))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = phis.iter().sum();
    let verdict = if total <= s + TOLERANCE {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("sum of slab crossings {total} > s = {s}"))
    };
    Ok(Crossing { phis, s, verdict })
}

/// Change in `s_{0,n}` and `Φ_{0,n}` when the transverse half-width doubles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub width: i64,
    pub s_change: f64,
    /// `Φ` runs between whole faces, so it can only drop as they widen.
    pub phi_change: f64,
}

impl Sensitivity {
    pub fn flagged(&self) -> bool {
        self.s_change >= TOLERANCE || self.phi_change >= TOLERANCE
    }
}

pub fn transverse_sensitivity(
    dist: &DistributionSpec,
    n: u64,
    seed: u64,
    params: &FppParams,
) -> Result<Sensitivity> {
    let w = params.transverse(n);
    let mut out = [[0.0; 2]; 2];
    for (i, width) in [w, 2 * w].into_iter().enumerate() {
        let region = params.cylinder_window(n, width)?;
        let field = sample_configuration(&region, dist, seed)?;
        out[i] = [s_0n(&field, n, params)?.time, phi(&field, 0, n as i64)?.time];
    }
    Ok(Sensitivity {
        width: w,
        s_change: (out[0][0] - out[1][0]).abs(),
        phi_change: out[0][1] - out[1][1],
    })
}
