//! Edge-weight distributions and reproducible configurations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::lattice::{boundaries, Adjacency, Region, VertexSet};
use crate::rng::EdgePrf;

/// The common law `F` of the edge passage times.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    PointMass { c: f64 },
    /// Two values `a < b`; `p` is the probability of the lower value `a`.
    Bernoulli { a: f64, b: f64, p: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Pareto { alpha: f64, scale: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FppError::Config(msg));
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        match *self {
            Self::PointMass { c } if !finite_nonneg(c) => bad(format!("point_mass: c = {c} must be finite and >= 0")),
            Self::Bernoulli { a, b, p } => {
                if !finite_nonneg(a) || !b.is_finite() || a >= b {
                    bad(format!("bernoulli: need 0 <= a < b, got a = {a}, b = {b}"))
                } else if !(0.0..=1.0).contains(&p) {
                    bad(format!("bernoulli: p = {p} must lie in [0, 1]"))
                } else {
                    Ok(())
                }
            }
            Self::Uniform { lo, hi } if !finite_nonneg(lo) || !hi.is_finite() || lo >= hi => {
                bad(format!("uniform: need 0 <= lo < hi, got lo = {lo}, hi = {hi}"))
            }
            Self::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                bad(format!("exponential: rate = {rate} must be positive"))
            }
            Self::Pareto { alpha, scale } => {
                if !(alpha > 1.0 && alpha.is_finite()) {
                    bad(format!("pareto: alpha = {alpha} must exceed 1 for the mean to exist"))
                } else if !(scale > 0.0 && scale.is_finite()) {
                    bad(format!("pareto: scale = {scale} must be positive"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Inverse-cdf draw from a uniform `u` in `[0, 1)`.
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            Self::PointMass { c } => c,
            Self::Bernoulli { a, b, p } => {
                if u < p {
                    a
                } else {
                    b
                }
            }
            Self::Uniform { lo, hi } => lo + u * (hi - lo),
            Self::Exponential { rate } => -(1.0 - u).ln() / rate,
            Self::Pareto { alpha, scale } => scale * (1.0 - u).powf(-1.0 / alpha),
        }
    }

    /// Point masses `(value, probability)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match *self {
            Self::PointMass { c } => vec![(c, 1.0)],
            Self::Bernoulli { a, b, p } => vec![(a, p), (b, 1.0 - p)],
            _ => Vec::new(),
        }
    }

    fn atom_mass(&self, x: f64) -> f64 {
        self.atoms()
            .into_iter()
            .filter(|&(v, _)| v == x)
            .map(|(_, m)| m)
            .sum()
    }

    /// `F(x) = P[t <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::PointMass { c } => {
                if x >= c {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Bernoulli { a, b, p } => {
                if x < a {
                    0.0
                } else if x < b {
                    p
                } else {
                    1.0
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::Pareto { alpha, scale } => {
                if x <= scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(alpha)
                }
            }
        }
    }

    /// `F(x-) = P[t < x]`, subtracting the atom at `x` exactly.
    pub fn cdf_left(&self, x: f64) -> f64 {
        (self.cdf(x) - self.atom_mass(x)).max(0.0)
    }

    /// `P[t >= x]`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => (-rate * x.max(0.0)).exp(),
            Self::Pareto { alpha, scale } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(alpha)
                }
            }
            _ => 1.0 - self.cdf_left(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::PointMass { c } => c,
            Self::Bernoulli { a, b, p } => p * a + (1.0 - p) * b,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Exponential { rate } => 1.0 / rate,
            Self::Pareto { alpha, scale } => alpha * scale / (alpha - 1.0),
        }
    }

    /// Pareto with `alpha <= 2` has infinite variance.
    pub fn is_heavy_tailed(&self) -> bool {
        matches!(*self, Self::Pareto { alpha, .. } if alpha <= 2.0)
    }
}

/// `p(M) = 1 - P[t < M]^{2d}`.
pub fn p_open(dist: &DistributionSpec, m_level: f64, dim: usize) -> f64 {
    1.0 - dist.cdf_left(m_level).powi(2 * dim as i32)
}

/// `P[t >= x]`.
pub fn tail_mass(dist: &DistributionSpec, x: f64) -> f64 {
    dist.tail_mass(x)
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| FppError::Parse(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| FppError::Parse(format!("'{}' is not a number", v.trim())))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

impl FromStr for DistributionSpec {
    type Err = FppError;

    /// Parses `point_mass:c=1`, `bernoulli:a=0,b=1,p=0.5`, `uniform:lo=0,hi=1`,
    /// `exponential:rate=1`, `pareto:alpha=2.5,scale=1`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, body) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let params = parse_params(body)?;
        let get = |key: &str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|&(_, v)| v)
                .ok_or_else(|| FppError::Parse(format!("{family}: missing parameter '{key}'")))
        };
        let allowed: &[&str] = match family {
            "point_mass" => &["c"],
            "bernoulli" => &["a", "b", "p"],
            "uniform" => &["lo", "hi"],
            "exponential" => &["rate"],
            "pareto" => &["alpha", "scale"],
            other => return Err(FppError::Parse(format!("unknown distribution family '{other}'"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(FppError::Parse(format!("{family}: unknown parameter '{k}'")));
        }
        let spec = match family {
            "point_mass" => Self::PointMass { c: get("c")? },
            "bernoulli" => Self::Bernoulli {
                a: get("a")?,
                b: get("b")?,
                p: get("p")?,
            },
            "uniform" => Self::Uniform {
                lo: get("lo")?,
                hi: get("hi")?,
            },
            "exponential" => Self::Exponential { rate: get("rate")? },
            _ => Self::Pareto {
                alpha: get("alpha")?,
                scale: get("scale")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::PointMass { c } => write!(f, "point_mass:c={c}"),
            Self::Bernoulli { a, b, p } => write!(f, "bernoulli:a={a},b={b},p={p}"),
            Self::Uniform { lo, hi } => write!(f, "uniform:lo={lo},hi={hi}"),
            Self::Exponential { rate } => write!(f, "exponential:rate={rate}"),
            Self::Pareto { alpha, scale } => write!(f, "pareto:alpha={alpha},scale={scale}"),
        }
    }
}

/// One configuration `ω`: a passage time per edge of a window.
///
/// Weights are indexed by edge slot; slots that are not edges hold `+∞`.
#[derive(Clone, Debug)]
pub struct WeightField {
    region: Arc<Region>,
    dist: DistributionSpec,
    seed: u64,
    weights: Vec<f64>,
    rounds: Vec<u32>,
}

/// I.i.d. weights on every edge of `region`, keyed by `(seed, edge, round 0)`.
pub fn sample_configuration(
    region: &Arc<Region>,
    dist: &DistributionSpec,
    seed: u64,
) -> Result<WeightField> {
    dist.validate()?;
    let rounds = vec![0u32; region.edge_slots()];
    let weights = draw(region, dist, seed, &rounds, |_| true, None);
    Ok(WeightField {
        region: Arc::clone(region),
        dist: *dist,
        seed,
        weights,
        rounds,
    })
}

// Draws every edge selected by `redraw`; other edges are copied from `old`.
fn draw(
    region: &Region,
    dist: &DistributionSpec,
    seed: u64,
    rounds: &[u32],
    redraw: impl Fn(usize) -> bool,
    old: Option<&[f64]>,
) -> Vec<f64> {
    let prf = EdgePrf::new(seed);
    let d = region.dim();
    let mut coords = vec![0i64; d];
    let mut out = vec![f64::INFINITY; region.edge_slots()];
    for v in 0..region.len() {
        region.coords_into(v, &mut coords);
        for axis in 0..d {
            let Some(e) = region.edge(v, axis) else { continue };
            out[e] = match old {
                Some(w) if !redraw(e) => w[e],
                _ => dist.sample(prf.uniform(&coords, axis, rounds[e])),
            };
        }
    }
    out
}

impl WeightField {
    /// A field with explicit weights, indexed by edge slot.
    pub fn from_weights(
        region: &Arc<Region>,
        dist: DistributionSpec,
        seed: u64,
        mut weights: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != region.edge_slots() {
            return Err(FppError::Domain(format!(
                "expected {} edge slots, got {}",
                region.edge_slots(),
                weights.len()
            )));
        }
        for (e, w) in weights.iter_mut().enumerate() {
            if region.is_edge(e) {
                if !(*w >= 0.0) || w.is_infinite() {
                    return Err(FppError::Domain(format!("edge {e} has invalid weight {w}")));
                }
            } else {
                *w = f64::INFINITY;
            }
        }
        Ok(Self {
            region: Arc::clone(region),
            dist,
            seed,
            weights,
            rounds: vec![0; region.edge_slots()],
        })
    }

    /// Copy with some edge weights replaced.
    pub fn with_edits(&self, edits: &[(usize, f64)]) -> Result<Self> {
        let mut weights = self.weights.clone();
        for &(e, w) in edits {
            if !self.region.is_edge(e) || !(w >= 0.0) || w.is_infinite() {
                return Err(FppError::Domain(format!("cannot set edge {e} to {w}")));
            }
            weights[e] = w;
        }
        Ok(Self {
            weights,
            ..self.clone()
        })
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn dist(&self) -> &DistributionSpec {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Weights indexed by edge slot.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    pub fn round(&self, e: usize) -> u32 {
        self.rounds[e]
    }

    /// Recomputes edge `e` from `(seed, edge, round, dist)` alone.
    pub fn rederive(&self, e: usize) -> f64 {
        let (v, _) = self.region.edge_endpoints(e);
        let coords = self.region.point(v);
        let prf = EdgePrf::new(self.seed);
        self.dist
            .sample(prf.uniform(&coords, self.region.edge_axis(e), self.rounds[e]))
    }

    /// Redraws every edge for which `keep` is false by advancing its round by `bump`.
    pub fn resample_where(&self, keep: impl Fn(usize) -> bool, bump: u32) -> Self {
        let mut rounds = self.rounds.clone();
        for e in self.region.edges() {
            if !keep(e) {
                rounds[e] = rounds[e].wrapping_add(bump);
            }
        }
        let weights = draw(
            &self.region,
            &self.dist,
            self.seed,
            &rounds,
            |e| !keep(e),
            Some(&self.weights),
        );
        Self {
            region: Arc::clone(&self.region),
            dist: self.dist,
            seed: self.seed,
            weights,
            rounds,
        }
    }
}

/// Edges with both endpoints in `keep ∪ ∂_o(keep)`.
fn keep_closure(keep: &VertexSet) -> VertexSet {
    if keep.is_empty() {
        return keep.clone();
    }
    let outer = boundaries(keep, Adjacency::Zd).map(|b| b.outer);
    match outer {
        Ok(outer) => keep.union(&outer),
        Err(_) => keep.clone(),
    }
}

/// Keeps every edge with both endpoints in `keep ∪ ∂_o(keep)` and redraws
/// all others in their next round.
pub fn resample_outside(field: &WeightField, keep: &VertexSet) -> Result<WeightField> {
    resample_outside_by(field, keep, 1)
}

/// As [`resample_outside`], advancing redrawn rounds by `bump`. Distinct bumps
/// give independent redraws from the same base.
pub fn resample_outside_by(field: &WeightField, keep: &VertexSet, bump: u32) -> Result<WeightField> {
    if keep.region().as_ref() != field.region().as_ref() {
        return Err(FppError::Domain("keep set belongs to a different window".into()));
    }
    let closure = keep_closure(keep);
    let region = Arc::clone(field.region());
    Ok(field.resample_where(
        |e| {
            let (a, b) = region.edge_endpoints(e);
            closure.contains(a) && closure.contains(b)
        },
        bump,
    ))
}
