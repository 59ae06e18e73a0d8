//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use fpp_core::{sample_configuration, DistributionSpec, FppParams, Region, VertexSet, WeightField};

pub fn params() -> FppParams {
    FppParams {
        box_scale: Some(1.0),
        ..Default::default()
    }
}

pub fn exponential() -> DistributionSpec {
    DistributionSpec::Exponential { rate: 1.0 }
}

/// A sampled box window for `n` with its two boxes.
pub fn box_fixture(n: u64, seed: u64) -> (WeightField, VertexSet, VertexSet) {
    let p = params();
    let region: Arc<Region> = p.box_window(n).expect("window");
    let field = sample_configuration(&region, &exponential(), seed).expect("field");
    let (d0, dn) = p.boxes(&region, n).expect("boxes");
    (field, d0, dn)
}
