//! First-passage percolation on finite windows of `Z^d`: weight sampling,
//! cluster renormalization, passage times, growth balls, the ball-filtration
//! martingale, and Monte Carlo summaries.

pub mod clusters;
pub mod error;
pub mod lattice;
pub mod martingale;
pub mod params;
pub mod passage;
pub mod rng;
pub mod stats;
pub mod tau;
pub mod weights;

pub use clusters::{epsilon_clusters, lemma1_bypass, open_ld_clusters, open_vertices, BypassPath, ClusterReport};
pub use error::{FppError, Result};
pub use lattice::{Adjacency, Region, VertexSet};
pub use martingale::{azuma_curve, conditional_mean, martingale_trace, MartingaleTrace};
pub use params::FppParams;
pub use passage::{passage_time, BallSequence, BallStatus, PathResult, Verdict};
pub use stats::{run_ensemble, Ensemble, EnsembleSpec, Quantity, ReplicaRecord, ReplicaStats};
pub use tau::{tau_transform, TauField, TauParams, TauRule};
pub use weights::{sample_configuration, DistributionSpec, WeightField};
