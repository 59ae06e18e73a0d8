//! Shared experiment parameters and the windows each quantity is computed in.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};
use crate::lattice::{box_half_width, cube_around, scaled_box_half_width, Region, VertexSet};
use crate::tau::{theta, TauParams};

/// Largest window (in vertices) any single computation may allocate.
pub const MAX_VERTICES: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FppParams {
    pub dim: usize,
    pub epsilon: f64,
    pub m_level: f64,
    pub delta: f64,
    /// Box half-width `⌈c (ln n)^{1+δ}⌉`; `None` means `c = 3^d M`.
    pub box_scale: Option<f64>,
    /// Transverse half-width for cylinder and slab windows; `None` means `4n`.
    pub transverse: Option<i64>,
    /// Extra margin around the regions of interest, as a multiple of `n`.
    pub padding: f64,
}

impl Default for FppParams {
    fn default() -> Self {
        Self {
            dim: 2,
            epsilon: 0.1,
            m_level: 3.0,
            delta: 0.5,
            box_scale: None,
            transverse: None,
            padding: 1.0,
        }
    }
}

impl FppParams {
    pub fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.dim) {
            return Err(FppError::Config(format!("dim = {} must be in 2..=8", self.dim)));
        }
        if !(self.epsilon > 0.0) {
            return Err(FppError::Config(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if !(self.epsilon < self.m_level) || !self.m_level.is_finite() {
            return Err(FppError::Config(format!(
                "epsilon = {} must be smaller than M = {}",
                self.epsilon, self.m_level
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(FppError::Config(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if let Some(c) = self.box_scale {
            if !(c > 0.0) || !c.is_finite() {
                return Err(FppError::Config(format!("box_scale = {c} must be positive")));
            }
        }
        if let Some(w) = self.transverse {
            if w < 1 {
                return Err(FppError::Config(format!("transverse = {w} must be at least 1")));
            }
        }
        if !(self.padding >= 0.0) || !self.padding.is_finite() {
            return Err(FppError::Config(format!("padding = {} must be nonnegative", self.padding)));
        }
        Ok(())
    }

    pub fn theta(&self, n: u64) -> f64 {
        theta(n, self.delta)
    }

    pub fn tau_params(&self, n: u64) -> TauParams {
        TauParams {
            epsilon: self.epsilon,
            m_level: self.m_level,
            n,
            delta: self.delta,
        }
    }

    /// Half-width of the boxes `D_n(v)`.
    pub fn box_half(&self, n: u64) -> Result<i64> {
        match self.box_scale {
            None => box_half_width(self.dim, n, self.m_level, self.delta),
            Some(c) => scaled_box_half_width(c, n, self.delta),
        }
    }

    pub fn transverse(&self, n: u64) -> i64 {
        self.transverse.unwrap_or(4 * n as i64)
    }

    pub fn pad(&self, n: u64) -> i64 {
        (self.padding * n as f64).ceil() as i64
    }

    /// `[x_lo, x_hi] × [-w, w]^{d-1}`, with a capacity check.
    pub fn slab(&self, n: u64, x_lo: i64, x_hi: i64, w: i64) -> Result<Arc<Region>> {
        let d = self.dim;
        let mut vertices = (x_hi - x_lo + 1).max(0) as f64;
        for _ in 1..d {
            vertices *= (2 * w + 1) as f64;
        }
        if vertices > MAX_VERTICES as f64 {
            return Err(FppError::Capacity {
                n,
                vertices: vertices.min(usize::MAX as f64) as usize,
                limit: MAX_VERTICES,
            });
        }
        let mut lower = vec![-w; d];
        let mut upper = vec![w; d];
        lower[0] = x_lo;
        upper[0] = x_hi;
        Ok(Arc::new(Region::new(lower, upper)?))
    }

    /// Window for `a_{0,n}` and `b_{0,n}`: the segment `[0, n]` padded on every side.
    pub fn line_window(&self, n: u64) -> Result<Arc<Region>> {
        let p = self.pad(n).max(1);
        self.slab(n, -p, n as i64 + p, p)
    }

    /// Window for box-to-box times: `D_n(0) ∪ D_n(nu)` padded on every side.
    pub fn box_window(&self, n: u64) -> Result<Arc<Region>> {
        let h = self.box_half(n)?;
        let p = self.pad(n).max(1);
        self.slab(n, -h - p, n as i64 + h + p, h + p)
    }

    /// Window for `s_{0,n}` with transverse half-width `w`.
    pub fn cylinder_window(&self, n: u64, w: i64) -> Result<Arc<Region>> {
        let p = self.pad(n).max(1);
        self.slab(n, -p, n as i64 + p, w)
    }

    /// The boxes `D_n(0)` and `D_n(nu)` in `region`.
    pub fn boxes(&self, region: &Arc<Region>, n: u64) -> Result<(VertexSet, VertexSet)> {
        let h = self.box_half(n)?;
        let mut far = vec![0i64; self.dim];
        far[0] = n as i64;
        Ok((
            cube_around(region, &vec![0; self.dim], h)?,
            cube_around(region, &far, h)?,
        ))
    }

    /// Side length of the transverse cubes `S_0`.
    pub fn cube_side(&self, n: u64) -> i64 {
        (self.theta(n).ceil() as i64).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        FppParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            FppParams { epsilon: 4.0, ..Default::default() },
            FppParams { delta: 0.0, ..Default::default() },
            FppParams { dim: 1, ..Default::default() },
            FppParams { box_scale: Some(-1.0), ..Default::default() },
            FppParams { transverse: Some(0), ..Default::default() },
            FppParams { padding: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(FppError::Config(_))), "{p:?}");
        }
    }

    #[test]
    fn windows_contain_their_regions() {
        let p = FppParams { box_scale: Some(1.0), ..Default::default() };
        let r = p.box_window(32).unwrap();
        let (d0, dn) = p.boxes(&r, 32).unwrap();
        let h = p.box_half(32).unwrap();
        assert_eq!(d0.len(), ((2 * h + 1) * (2 * h + 1)) as usize);
        assert_eq!(dn.len(), d0.len());
        assert!(!d0.touches_face() && !dn.touches_face());
        assert!(!d0.intersects(&dn));
        assert_eq!(p.transverse(32), 128);
        let c = p.cylinder_window(16, 9).unwrap();
        assert_eq!(c.upper()[1], 9);
    }

    #[test]
    fn capacity_is_enforced() {
        let p = FppParams { dim: 3, ..Default::default() };
        assert!(matches!(p.cylinder_window(4096, 16384), Err(FppError::Capacity { n: 4096, .. })));
    }
}
