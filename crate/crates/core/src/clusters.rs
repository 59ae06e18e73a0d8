//! ε⁻-clusters, open vertices and open `L^d`-clusters, plus the bypass path
//! around a finite open cluster.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{FppError, Result};
use crate::lattice::{exterior_boundary, Adjacency, VertexSet};
use crate::weights::WeightField;

const NONE: u32 = u32::MAX;

/// Disjoint sets with path compression and union by size.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        while self.parent[x] as usize != root {
            let next = self.parent[x] as usize;
            self.parent[x] = root as u32;
            x = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        a
    }
}

/// Component labelling of a subset of the window's vertices.
#[derive(Clone, Debug)]
pub struct ClusterReport {
    adjacency: Adjacency,
    labels: Vec<u32>,
    sizes: Vec<usize>,
}

impl ClusterReport {
    // Labels are numbered by smallest member index, so they are deterministic.
    fn from_union_find(adjacency: Adjacency, member: &[bool], uf: &mut UnionFind) -> Self {
        let mut labels = vec![NONE; member.len()];
        let mut root_label = vec![NONE; member.len()];
        let mut sizes = Vec::new();
        for v in 0..member.len() {
            if !member[v] {
                continue;
            }
            let r = uf.find(v);
            if root_label[r] == NONE {
                root_label[r] = sizes.len() as u32;
                sizes.push(0);
            }
            labels[v] = root_label[r];
            sizes[root_label[r] as usize] += 1;
        }
        Self {
            adjacency,
            labels,
            sizes,
        }
    }

    pub fn adjacency(&self) -> Adjacency {
        self.adjacency
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        (self.labels[v] != NONE).then(|| self.labels[v] as usize)
    }

    /// Number of vertices in the cluster of `v` (0 when unlabelled).
    pub fn size_at(&self, v: usize) -> usize {
        self.label(v).map_or(0, |l| self.sizes[l])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Labels of clusters with more than `threshold` vertices.
    pub fn larger_than(&self, threshold: f64) -> Vec<usize> {
        (0..self.sizes.len())
            .filter(|&l| self.sizes[l] as f64 > threshold)
            .collect()
    }

    pub fn members(&self, region: &Arc<crate::lattice::Region>, label: usize) -> VertexSet {
        VertexSet::from_indices(
            region,
            (0..self.labels.len()).filter(|&v| self.labels[v] as usize == label),
        )
    }

    /// Fraction of window vertices whose cluster has at least `m` vertices,
    /// for `m = 1..=max_m`. Translation averaging of `P[|C(0)| >= m]`.
    pub fn size_tail(&self, max_m: usize) -> Vec<(usize, f64)> {
        let total = self.labels.len() as f64;
        (1..=max_m)
            .map(|m| {
                let mass: usize = self.sizes.iter().filter(|&&s| s >= m).sum();
                (m, mass as f64 / total)
            })
            .collect()
    }
}

/// `Z^d` components of the subgraph of edges with `t(e) < ε`.
pub fn epsilon_clusters(field: &WeightField, epsilon: f64) -> Result<ClusterReport> {
    if !(epsilon > 0.0) {
        return Err(FppError::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let region = field.region();
    let mut uf = UnionFind::new(region.len());
    let mut member = vec![false; region.len()];
    for e in region.edges() {
        if field.weight(e) < epsilon {
            let (a, b) = region.edge_endpoints(e);
            member[a] = true;
            member[b] = true;
            uf.union(a, b);
        }
    }
    Ok(ClusterReport::from_union_find(Adjacency::Zd, &member, &mut uf))
}

/// Vertices with at least one incident edge `t(e) > M`.
pub fn open_vertices(field: &WeightField, m_level: f64) -> Result<VertexSet> {
    if !(m_level > 0.0) {
        return Err(FppError::Domain(format!("M must be positive, got {m_level}")));
    }
    let region = field.region();
    let mut open = VertexSet::empty(region);
    for e in region.edges() {
        if field.weight(e) > m_level {
            let (a, b) = region.edge_endpoints(e);
            open.insert(a);
            open.insert(b);
        }
    }
    Ok(open)
}

/// `L^d` components of the open vertices.
pub fn open_ld_clusters(field: &WeightField, m_level: f64) -> Result<ClusterReport> {
    let open = open_vertices(field, m_level)?;
    Ok(ld_components(&open))
}

pub(crate) fn ld_components(set: &VertexSet) -> ClusterReport {
    let region = set.region();
    let mut uf = UnionFind::new(region.len());
    let mut member = vec![false; region.len()];
    for v in set.iter() {
        member[v] = true;
        region.for_each_ld(v, |u| {
            if u > v && set.contains(u) {
                uf.union(u, v);
            }
        });
    }
    ClusterReport::from_union_find(Adjacency::Ld, &member, &mut uf)
}

/// A `Z^d`-path as vertices and the edges between them.
#[derive(Clone, Debug, PartialEq)]
pub struct BypassPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl BypassPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn max_weight(&self, field: &WeightField) -> f64 {
        self.edges.iter().map(|&e| field.weight(e)).fold(0.0, f64::max)
    }
}

/// Shortest `Z^d`-path from `x` to `y` that avoids `cluster` and uses only
/// edges with `t(e) <= M`. Both ends must lie in the exterior boundary of
/// the cluster.
pub fn lemma1_bypass(
    cluster: &VertexSet,
    field: &WeightField,
    m_level: f64,
    x: usize,
    y: usize,
) -> Result<BypassPath> {
    let region = field.region();
    let exterior = exterior_boundary(cluster)?;
    if !exterior.contains(x) || !exterior.contains(y) {
        return Err(FppError::Precondition(
            "bypass endpoints must lie in the exterior boundary".into(),
        ));
    }
    if x == y {
        return Ok(BypassPath {
            vertices: vec![x],
            edges: Vec::new(),
        });
    }
    let mut pred: Vec<u32> = vec![NONE; region.len()];
    let mut pred_edge = vec![0usize; region.len()];
    pred[x] = x as u32;
    let mut queue = VecDeque::from([x]);
    'search: while let Some(v) = queue.pop_front() {
        let mut found = false;
        region.for_each_zd(v, |u, e| {
            if found || pred[u] != NONE || cluster.contains(u) || field.weight(e) > m_level {
                return;
            }
            pred[u] = v as u32;
            pred_edge[u] = e;
            if u == y {
                found = true;
            } else {
                queue.push_back(u);
            }
        });
        if found {
            break 'search;
        }
    }
    if pred[y] == NONE {
        return Err(FppError::WindowTooSmall(
            "no path of M⁻-edges around the cluster inside the window".into(),
        ));
    }
    let mut vertices = vec![y];
    let mut edges = Vec::new();
    let mut v = y;
    while v != x {
        edges.push(pred_edge[v]);
        v = pred[v] as usize;
        vertices.push(v);
    }
    vertices.reverse();
    edges.reverse();
    Ok(BypassPath { vertices, edges })
}
