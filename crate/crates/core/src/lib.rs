//! Robust reconstruction of point configurations from anchor-based squared
//! distance measurements.
//!
//! Exact anchor–anchor distances `E` and sparsely corrupted anchor–target
//! distances `F` are mapped into the anchor-centred Gram domain through a
//! pair of closed-form dual-basis operators. Outliers are removed by
//! alternating hard thresholding (in distance space) with rank-`d`
//! projection (in Gram space), after which the target–target Gram block is
//! filled in with a Nyström extension and the configuration is recovered by
//! a truncated eigendecomposition.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: EDMs, block partitions, centring, Procrustes, RMSE.
//! - [`dual_basis`]: the anchor Gram block and the `𝓐`/`𝓑` operators.
//! - [`dbap`]: the alternating-projection outlier removal loop.
//! - [`pipeline`]: Nyström extension, embedding and end-to-end `reconstruct`.
//! - [`diagnostics`]: incoherence, sparsity and conditioning of instances.
//! - [`experiments`]: instance generators, outlier injection, PDB loading and
//!   seeded trial grids.

pub mod dbap;
pub mod diagnostics;
pub mod dual_basis;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod pipeline;

pub use dbap::{dbap_run, DbapReport, SolverConfig, StopReason};
pub use dual_basis::DualBasisContext;
pub use error::{Error, Result};
pub use geometry::{AnchorSplit, CenteringVector, DistanceBlocks, GramBlocks, PointConfiguration};
pub use pipeline::{reconstruct, ReconstructionResult};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;
