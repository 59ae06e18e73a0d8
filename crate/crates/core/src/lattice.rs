//! Finite axis-aligned windows of `Z^d`.
//!
//! Vertices are indexed lexicographically by coordinates (first axis most
//! significant). An edge is identified by its lower endpoint and axis; its
//! index is the slot `v * d + axis`, which keeps edges in lexicographic
//! order by lower endpoint then axis. Slots whose upper endpoint would leave
//! the window are not edges.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};

/// Neighbourhood rule used for clusters and boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Adjacency {
    /// Nearest neighbours, `d(u, v) = 1`.
    Zd,
    /// King moves, `d(u, v) < 2`.
    Ld,
}

#[derive(Clone, Debug)]
pub struct Region {
    lower: Vec<i64>,
    upper: Vec<i64>,
    extent: Vec<usize>,
    stride: Vec<usize>,
    len: usize,
    // (3^d - 1) offsets in {-1,0,1}^d, flattened, with the matching index delta.
    ld_offsets: Vec<i8>,
    ld_delta: Vec<isize>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower && self.upper == other.upper
    }
}

impl Eq for Region {}

impl Region {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self> {
        let dim = lower.len();
        if !(2..=8).contains(&dim) {
            return Err(FppError::Domain(format!("dimension must be in 2..=8, got {dim}")));
        }
        if upper.len() != dim {
            return Err(FppError::Domain(format!(
                "corner dimensions differ: {} vs {}",
                dim,
                upper.len()
            )));
        }
        if let Some(axis) = (0..dim).find(|&i| lower[i] > upper[i]) {
            return Err(FppError::Domain(format!(
                "lower[{axis}] = {} exceeds upper[{axis}] = {}",
                lower[axis], upper[axis]
            )));
        }
        let extent: Vec<usize> = (0..dim).map(|i| (upper[i] - lower[i] + 1) as usize).collect();
        let mut stride = vec![1usize; dim];
        for i in (0..dim - 1).rev() {
            stride[i] = stride[i + 1]
                .checked_mul(extent[i + 1])
                .ok_or_else(|| FppError::Domain("window too large to index".into()))?;
        }
        let len = stride[0]
            .checked_mul(extent[0])
            .ok_or_else(|| FppError::Domain("window too large to index".into()))?;

        let mut ld_offsets = Vec::new();
        let mut ld_delta = Vec::new();
        let total = 3usize.pow(dim as u32);
        for code in 0..total {
            let mut c = code;
            let mut off = vec![0i8; dim];
            for o in off.iter_mut() {
                *o = (c % 3) as i8 - 1;
                c /= 3;
            }
            if off.iter().all(|&o| o == 0) {
                continue;
            }
            let delta: isize = off
                .iter()
                .zip(&stride)
                .map(|(&o, &s)| o as isize * s as isize)
                .sum();
            ld_offsets.extend_from_slice(&off);
            ld_delta.push(delta);
        }

        Ok(Self {
            lower,
            upper,
            extent,
            stride,
            len,
            ld_offsets,
            ld_delta,
        })
    }

    /// The cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: i64) -> Result<Self> {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.len() == self.dim() && (0..self.dim()).all(|i| p[i] >= self.lower[i] && p[i] <= self.upper[i])
    }

    pub fn index(&self, p: &[i64]) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        Some(
            (0..self.dim())
                .map(|i| (p[i] - self.lower[i]) as usize * self.stride[i])
                .sum(),
        )
    }

    pub fn point(&self, v: usize) -> Vec<i64> {
        (0..self.dim()).map(|i| self.coord(v, i)).collect()
    }

    #[inline]
    pub fn coord(&self, v: usize, axis: usize) -> i64 {
        self.lower[axis] + ((v / self.stride[axis]) % self.extent[axis]) as i64
    }

    #[inline]
    pub fn coords_into(&self, v: usize, out: &mut [i64]) {
        for (axis, o) in out.iter_mut().enumerate() {
            *o = self.coord(v, axis);
        }
    }

    /// Number of edge slots, `len * dim`. Not every slot is an edge.
    pub fn edge_slots(&self) -> usize {
        self.len * self.dim()
    }

    /// Edge from `v` in the positive `axis` direction, if it stays in the window.
    #[inline]
    pub fn edge(&self, v: usize, axis: usize) -> Option<usize> {
        (self.coord(v, axis) < self.upper[axis]).then(|| v * self.dim() + axis)
    }

    #[inline]
    pub fn is_edge(&self, e: usize) -> bool {
        e < self.edge_slots() && {
            let (v, axis) = (e / self.dim(), e % self.dim());
            self.coord(v, axis) < self.upper[axis]
        }
    }

    #[inline]
    pub fn edge_axis(&self, e: usize) -> usize {
        e % self.dim()
    }

    /// Endpoints `(lower, upper)` of edge `e`.
    #[inline]
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let d = self.dim();
        let v = e / d;
        (v, v + self.stride[e % d])
    }

    /// The edge joining two `Z^d`-adjacent vertices.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        (0..self.dim()).find_map(|axis| {
            self.edge(lo, axis)
                .filter(|_| lo + self.stride[axis] == hi)
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edge_slots()).filter(move |&e| self.is_edge(e))
    }

    pub fn edge_count(&self) -> usize {
        (0..self.dim())
            .map(|axis| {
                self.extent
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if i == axis { x - 1 } else { x })
                    .product::<usize>()
            })
            .sum()
    }

    /// Visit every `Z^d` neighbour `u` of `v` together with the joining edge.
    #[inline]
    pub fn for_each_zd(&self, v: usize, mut f: impl FnMut(usize, usize)) {
        let d = self.dim();
        for axis in 0..d {
            let c = self.coord(v, axis);
            let s = self.stride[axis];
            if c < self.upper[axis] {
                f(v + s, v * d + axis);
            }
            if c > self.lower[axis] {
                let u = v - s;
                f(u, u * d + axis);
            }
        }
    }

    /// Visit every `L^d` neighbour of `v` (all `u != v` with `d(u, v) < 2`).
    #[inline]
    pub fn for_each_ld(&self, v: usize, mut f: impl FnMut(usize)) {
        let d = self.dim();
        let mut c = [0i64; 8];
        let coords = &mut c[..d];
        self.coords_into(v, coords);
        for (k, &delta) in self.ld_delta.iter().enumerate() {
            let off = &self.ld_offsets[k * d..(k + 1) * d];
            let inside = (0..d).all(|i| {
                let x = coords[i] + off[i] as i64;
                x >= self.lower[i] && x <= self.upper[i]
            });
            if inside {
                f((v as isize + delta) as usize);
            }
        }
    }

    pub fn on_face(&self, v: usize) -> bool {
        (0..self.dim()).any(|i| {
            let c = self.coord(v, i);
            c == self.lower[i] || c == self.upper[i]
        })
    }

    /// Sup-norm distance from `v` to the nearest window face.
    pub fn face_distance(&self, v: usize) -> i64 {
        (0..self.dim())
            .map(|i| {
                let c = self.coord(v, i);
                (c - self.lower[i]).min(self.upper[i] - c)
            })
            .min()
            .unwrap_or(0)
    }

    pub fn chebyshev(&self, u: usize, v: usize) -> i64 {
        (0..self.dim())
            .map(|i| (self.coord(u, i) - self.coord(v, i)).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn dist_sq(&self, u: usize, v: usize) -> i64 {
        (0..self.dim())
            .map(|i| {
                let t = self.coord(u, i) - self.coord(v, i);
                t * t
            })
            .sum()
    }

    fn require(&self, p: &[i64]) -> Result<usize> {
        self.index(p)
            .ok_or_else(|| FppError::Domain(format!("vertex {p:?} lies outside the window")))
    }

    /// All `Z^d`-adjacent vertices of `p` inside the window.
    pub fn zd_neighbors(&self, p: &[i64]) -> Result<Vec<Vec<i64>>> {
        let v = self.require(p)?;
        let mut out = Vec::with_capacity(2 * self.dim());
        self.for_each_zd(v, |u, _| out.push(self.point(u)));
        Ok(out)
    }

    /// All `L^d`-adjacent vertices of `p` inside the window.
    pub fn ld_neighbors(&self, p: &[i64]) -> Result<Vec<Vec<i64>>> {
        let v = self.require(p)?;
        let mut out = Vec::with_capacity(self.ld_delta.len());
        self.for_each_ld(v, |u| out.push(self.point(u)));
        Ok(out)
    }
}

/// A subset of the vertices of a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    region: Arc<Region>,
    bits: Vec<bool>,
}

impl VertexSet {
    pub fn empty(region: &Arc<Region>) -> Self {
        Self {
            region: Arc::clone(region),
            bits: vec![false; region.len()],
        }
    }

    pub fn full(region: &Arc<Region>) -> Self {
        Self {
            region: Arc::clone(region),
            bits: vec![true; region.len()],
        }
    }

    pub fn from_indices(region: &Arc<Region>, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(region);
        for v in indices {
            s.insert(v);
        }
        s
    }

    pub fn from_points<P: AsRef<[i64]>>(
        region: &Arc<Region>,
        points: impl IntoIterator<Item = P>,
    ) -> Result<Self> {
        let mut s = Self::empty(region);
        for p in points {
            let p = p.as_ref();
            let v = region.require(p)?;
            s.insert(v);
        }
        Ok(s)
    }

    /// Vertices satisfying a predicate on their coordinates.
    pub fn from_predicate(region: &Arc<Region>, mut pred: impl FnMut(&[i64]) -> bool) -> Self {
        let mut coords = vec![0i64; region.dim()];
        let bits = (0..region.len())
            .map(|v| {
                region.coords_into(v, &mut coords);
                pred(&coords)
            })
            .collect();
        Self {
            region: Arc::clone(region),
            bits,
        }
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.bits[v]
    }

    pub fn contains_point(&self, p: &[i64]) -> bool {
        self.region.index(p).is_some_and(|v| self.bits[v])
    }

    #[inline]
    pub fn insert(&mut self, v: usize) {
        self.bits[v] = true;
    }

    pub fn remove(&mut self, v: usize) {
        self.bits[v] = false;
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(v, &b)| b.then_some(v))
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        self.iter().map(|v| self.region.point(v)).collect()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        assert_eq!(self.region, other.region, "vertex sets from different windows");
        Self {
            region: Arc::clone(&self.region),
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a && !b)
    }

    /// Complement within the window.
    pub fn complement(&self) -> Self {
        Self {
            region: Arc::clone(&self.region),
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    pub fn touches_face(&self) -> bool {
        self.iter().any(|v| self.region.on_face(v))
    }

    /// Whether the set is connected under `Z^d` adjacency.
    pub fn is_zd_connected(&self) -> bool {
        let Some(start) = self.iter().next() else {
            return true;
        };
        let mut seen = vec![false; self.bits.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            self.region.for_each_zd(v, |u, _| {
                if self.bits[u] && !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            });
        }
        count == self.len()
    }

    /// Sup-norm distance of every window vertex to the set (`u32::MAX` if empty).
    pub fn chebyshev_distance_map(&self) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.bits.len()];
        let mut queue: VecDeque<usize> = self.iter().collect();
        for &v in &queue {
            dist[v] = 0;
        }
        // BFS over king moves measures sup-norm distance inside a box window.
        while let Some(v) = queue.pop_front() {
            let next = dist[v] + 1;
            self.region.for_each_ld(v, |u| {
                if dist[u] == u32::MAX {
                    dist[u] = next;
                    queue.push_back(u);
                }
            });
        }
        dist
    }

    /// All vertices within sup-norm distance `radius` of the set.
    pub fn chebyshev_dilate(&self, radius: u32) -> Self {
        let dist = self.chebyshev_distance_map();
        Self {
            region: Arc::clone(&self.region),
            bits: dist.iter().map(|&x| x <= radius).collect(),
        }
    }
}

/// `ceil(3^d * M * (ln n)^(1+delta))`, the half-width of `D_n(v)`.
pub fn box_half_width(dim: usize, n: u64, m_level: f64, delta: f64) -> Result<i64> {
    scaled_box_half_width(3f64.powi(dim as i32) * m_level, n, delta)
}

/// `ceil(scale * (ln n)^(1+delta))`.
pub fn scaled_box_half_width(scale: f64, n: u64, delta: f64) -> Result<i64> {
    if n < 2 {
        return Err(FppError::Domain(format!("n must be at least 2, got {n}")));
    }
    if !(scale > 0.0) {
        return Err(FppError::Domain(format!("box scale must be positive, got {scale}")));
    }
    Ok((scale * (n as f64).ln().powf(1.0 + delta)).ceil() as i64)
}

/// Vertices of the cube `center + [-half, half]^d` inside the window.
pub fn cube_around(region: &Arc<Region>, center: &[i64], half: i64) -> Result<VertexSet> {
    if center.len() != region.dim() {
        return Err(FppError::Domain("center has the wrong dimension".into()));
    }
    Ok(VertexSet::from_predicate(region, |p| {
        p.iter().zip(center).all(|(&x, &c)| (x - c).abs() <= half)
    }))
}

/// The box `D_n(center)` intersected with the window.
pub fn box_d_n(
    center: &[i64],
    n: u64,
    m_level: f64,
    delta: f64,
    region: &Arc<Region>,
) -> Result<VertexSet> {
    let half = box_half_width(region.dim(), n, m_level, delta)?;
    cube_around(region, center, half)
}

#[derive(Clone, Debug)]
pub struct Boundaries {
    /// Vertices of `A` adjacent to a vertex outside `A`.
    pub inner: VertexSet,
    /// Vertices outside `A` adjacent to `A`.
    pub outer: VertexSet,
    /// `Z^d` edges between `inner` and `outer`.
    pub edges: Vec<usize>,
}

/// `∂A`, `∂_oA` and `∂_o^eA` under the given adjacency.
///
/// Adjacency across the window face is not visible, so vertices of `A` on the
/// face count as boundary only through neighbours inside the window.
pub fn boundaries(a: &VertexSet, adjacency: Adjacency) -> Result<Boundaries> {
    if a.is_empty() {
        return Err(FppError::Domain("boundary of an empty set".into()));
    }
    let region = Arc::clone(a.region());
    let mut inner = VertexSet::empty(&region);
    let mut outer = VertexSet::empty(&region);
    for v in a.iter() {
        let mut visit = |u: usize| {
            if !a.contains(u) {
                inner.insert(v);
                outer.insert(u);
            }
        };
        match adjacency {
            Adjacency::Zd => region.for_each_zd(v, |u, _| visit(u)),
            Adjacency::Ld => region.for_each_ld(v, visit),
        }
    }
    let edges = region
        .edges()
        .filter(|&e| {
            let (x, y) = region.edge_endpoints(e);
            (inner.contains(x) && outer.contains(y)) || (inner.contains(y) && outer.contains(x))
        })
        .collect();
    Ok(Boundaries { inner, outer, edges })
}

/// `ΔA`: outer `L^d` boundary vertices joined to the window face by a
/// `Z^d`-path avoiding `A`. The window face stands in for infinity, so `A`
/// must not touch it.
pub fn exterior_boundary(a: &VertexSet) -> Result<VertexSet> {
    if a.is_empty() {
        return Err(FppError::Domain("exterior boundary of an empty set".into()));
    }
    if a.touches_face() {
        return Err(FppError::Precondition(
            "set touches the window face; the face cannot proxy for infinity".into(),
        ));
    }
    let region = Arc::clone(a.region());
    let mut reached = vec![false; region.len()];
    let mut queue = VecDeque::new();
    for v in 0..region.len() {
        if region.on_face(v) {
            reached[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        region.for_each_zd(v, |u, _| {
            if !reached[u] && !a.contains(u) {
                reached[u] = true;
                queue.push_back(u);
            }
        });
    }
    let outer = boundaries(a, Adjacency::Ld)?.outer;
    Ok(VertexSet::from_indices(&region, outer.iter().filter(|&v| reached[v])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted(mut v: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
        v.sort();
        v
    }

    fn square(half: i64) -> Arc<Region> {
        Arc::new(Region::cube(2, half).unwrap())
    }

    #[test]
    fn interior_zd_neighbors() {
        let r = Region::cube(2, 2).unwrap();
        assert_eq!(
            sorted(r.zd_neighbors(&[0, 0]).unwrap()),
            vec![vec![-1, 0], vec![0, -1], vec![0, 1], vec![1, 0]]
        );
    }

    #[test]
    fn corner_truncation() {
        let r = Region::cube(2, 2).unwrap();
        assert_eq!(sorted(r.zd_neighbors(&[2, 2]).unwrap()), vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(r.ld_neighbors(&[2, 2]).unwrap().len(), 3);
    }

    #[test]
    fn neighbor_counts_in_three_dimensions() {
        let r = Region::cube(3, 1).unwrap();
        assert_eq!(r.zd_neighbors(&[0, 0, 0]).unwrap().len(), 6);
        assert_eq!(r.ld_neighbors(&[0, 0, 0]).unwrap().len(), 26);
        let big = Region::cube(2, 5).unwrap();
        assert_eq!(big.ld_neighbors(&[0, 0]).unwrap().len(), 8);
    }

    #[test]
    fn outside_vertex_is_domain_error() {
        let r = Region::cube(2, 2).unwrap();
        assert!(matches!(r.zd_neighbors(&[3, 0]), Err(FppError::Domain(_))));
        assert!(matches!(r.ld_neighbors(&[0, -3]), Err(FppError::Domain(_))));
    }

    #[test]
    fn rejects_bad_corners() {
        assert!(Region::new(vec![0, 1], vec![3, 0]).is_err());
        assert!(Region::new(vec![0], vec![3]).is_err());
    }

    #[test]
    fn edge_count_matches_enumeration() {
        let r = Region::new(vec![0, 0, 0], vec![2, 3, 1]).unwrap();
        assert_eq!(r.edges().count(), r.edge_count());
        // 3x4x2 box: 2*4*2 + 3*3*2 + 3*4*1
        assert_eq!(r.edge_count(), 16 + 18 + 12);
    }

    #[test]
    fn lexicographic_vertex_order() {
        let r = Region::cube(2, 1).unwrap();
        assert_eq!(r.point(0), vec![-1, -1]);
        assert_eq!(r.point(1), vec![-1, 0]);
        assert_eq!(r.point(3), vec![0, -1]);
    }

    #[test]
    fn box_half_width_example() {
        // 9 * (ln 10)^1.1 = 9 * 2.4997 = 22.50
        assert_eq!(box_half_width(2, 10, 1.0, 0.1).unwrap(), 23);
        assert!(box_half_width(2, 1, 1.0, 0.1).is_err());
    }

    #[test]
    fn box_on_window_boundary_is_truncated() {
        let r = square(5);
        let b = box_d_n(&[5, 5], 10, 1.0, 0.1, &r).unwrap();
        assert!(b.contains_point(&[5, 5]));
        assert_eq!(b.len(), r.len());
        let far = Arc::new(Region::new(vec![-30, -30], vec![80, 30]).unwrap());
        let b0 = box_d_n(&[0, 0], 10, 1.0, 0.1, &far).unwrap();
        let b1 = box_d_n(&[48, 0], 10, 1.0, 0.1, &far).unwrap();
        assert!(!b0.intersects(&b1));
    }

    #[test]
    fn singleton_boundaries() {
        let r = square(3);
        let a = VertexSet::from_points(&r, [[0i64, 0]]).unwrap();
        let b = boundaries(&a, Adjacency::Zd).unwrap();
        assert_eq!(b.inner.len(), 1);
        assert_eq!(b.outer.len(), 4);
        assert_eq!(b.edges.len(), 4);
    }

    #[test]
    fn two_by_two_square_boundaries() {
        let r = square(3);
        let a = VertexSet::from_points(&r, [[0i64, 0], [0, 1], [1, 0], [1, 1]]).unwrap();
        let b = boundaries(&a, Adjacency::Zd).unwrap();
        assert_eq!(b.inner.len(), 4);
        // brute force: every vertex outside A with a unit-distance neighbour in A
        let brute = (0..r.len())
            .filter(|&v| !a.contains(v) && a.iter().any(|w| r.dist_sq(v, w) == 1))
            .count();
        assert_eq!(brute, 8);
        assert_eq!(b.outer.len(), brute);
    }

    #[test]
    fn whole_window_has_no_outside() {
        let r = square(2);
        let b = boundaries(&VertexSet::full(&r), Adjacency::Ld).unwrap();
        assert!(b.outer.is_empty());
        assert!(boundaries(&VertexSet::empty(&r), Adjacency::Zd).is_err());
    }

    #[test]
    fn singleton_exterior_boundary() {
        let r = square(3);
        let a = VertexSet::from_points(&r, [[0i64, 0]]).unwrap();
        let ext = exterior_boundary(&a).unwrap();
        assert_eq!(ext.len(), 8);
        assert!(ext.len() <= 9 * a.len());
    }

    #[test]
    fn ring_hole_is_not_exterior() {
        let r = square(5);
        // 5x5 ring around the 3x3 hole [-1,1]^2
        let ring = VertexSet::from_predicate(&r, |p| p[0].abs().max(p[1].abs()) == 2);
        let ext = exterior_boundary(&ring).unwrap();
        let outer = boundaries(&ring, Adjacency::Ld).unwrap().outer;
        // brute force: outer L^2 boundary at sup-distance 3 is exterior, the hole is not
        let expected = VertexSet::from_predicate(&r, |p| p[0].abs().max(p[1].abs()) == 3);
        assert_eq!(ext, expected);
        assert!(outer.contains_point(&[1, 1]));
        assert!(!ext.contains_point(&[1, 1]));
        assert!(!ext.contains_point(&[0, 0]));
    }

    #[test]
    fn exterior_boundary_preconditions() {
        let r = square(3);
        assert!(matches!(
            exterior_boundary(&VertexSet::empty(&r)),
            Err(FppError::Domain(_))
        ));
        let on_face = VertexSet::from_points(&r, [[3i64, 0]]).unwrap();
        assert!(matches!(
            exterior_boundary(&on_face),
            Err(FppError::Precondition(_))
        ));
    }

    #[test]
    fn chebyshev_dilation() {
        let r = square(4);
        let a = VertexSet::from_points(&r, [[0i64, 0]]).unwrap();
        let d = a.chebyshev_dilate(2);
        assert_eq!(d.len(), 25);
        assert!(d.contains_point(&[2, -2]));
        assert!(!d.contains_point(&[3, 0]));
    }

    proptest! {
        #[test]
        fn vertex_and_edge_indices_round_trip(
            lx in -4i64..2, ly in -4i64..2, lz in -3i64..1,
            wx in 0i64..4, wy in 0i64..4, wz in 0i64..3,
        ) {
            let r = Region::new(vec![lx, ly, lz], vec![lx + wx, ly + wy, lz + wz]).unwrap();
            for v in 0..r.len() {
                prop_assert_eq!(r.index(&r.point(v)), Some(v));
            }
            for e in r.edges() {
                let (a, b) = r.edge_endpoints(e);
                prop_assert_eq!(r.dist_sq(a, b), 1);
                prop_assert_eq!(r.edge_between(a, b), Some(e));
                prop_assert_eq!(r.edge(a, r.edge_axis(e)), Some(e));
            }
        }

        #[test]
        fn ld_contains_zd(x in -3i64..=3, y in -3i64..=3) {
            let r = Region::cube(2, 3).unwrap();
            let zd = r.zd_neighbors(&[x, y]).unwrap();
            let ld = r.ld_neighbors(&[x, y]).unwrap();
            for p in &zd {
                prop_assert!(ld.contains(p));
            }
            for p in &ld {
                let d2: i64 = p.iter().zip([x, y]).map(|(a, b)| (a - b) * (a - b)).sum();
                prop_assert!(d2 > 0 && d2 < 4);
            }
        }

        #[test]
        fn boundary_partition_and_exterior_bound(cells in proptest::collection::vec((-3i64..=3, -3i64..=3), 1..20)) {
            let r = square(6);
            let a = VertexSet::from_points(&r, cells.iter().map(|&(x, y)| [x, y])).unwrap();
            for adj in [Adjacency::Zd, Adjacency::Ld] {
                let b = boundaries(&a, adj).unwrap();
                prop_assert!(b.inner.is_subset(&a));
                prop_assert!(!b.outer.intersects(&a));
            }
            let ext = exterior_boundary(&a).unwrap();
            prop_assert!(ext.is_subset(&boundaries(&a, Adjacency::Ld).unwrap().outer));
            prop_assert!(ext.len() <= 9 * a.len());
        }

        #[test]
        fn set_algebra(xs in proptest::collection::vec(any::<bool>(), 25), ys in proptest::collection::vec(any::<bool>(), 25)) {
            let r = square(2);
            let a = VertexSet::from_indices(&r, xs.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i));
            let b = VertexSet::from_indices(&r, ys.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i));
            prop_assert_eq!(a.union(&b).complement(), a.complement().intersection(&b.complement()));
            prop_assert!(a.intersection(&b).is_subset(&a));
            prop_assert_eq!(a.difference(&b), a.intersection(&b.complement()));
            prop_assert_eq!(a.len() + a.complement().len(), r.len());
        }
    }
}
