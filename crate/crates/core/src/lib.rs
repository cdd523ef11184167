//! Spatial discretizations of torus maps.
//!
//! The crate covers two closely related computations:
//!
//! * the finite maps obtained by evaluating a torus map on the uniform grid
//!   `E_N = {i/N}` and rounding back to the nearest grid point, together with
//!   the invariant measures carried by their periodic orbits;
//! * the discretizations `x ↦ round(Ax + w)` of sequences of determinant-one
//!   linear maps on `Z^n`, and the density of the image of their compositions
//!   (the rate of injectivity).
//!
//! Everything here is `no_std` + `alloc`. File formats, parallel drivers and
//! the command-line front end live in the `ergodisc` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod grid;
pub mod linalg;
pub mod linear;
pub mod measure;
pub mod orbit;
pub mod raster;
pub mod torus;

pub use error::{Error, Result};
pub use grid::{
    grid_project, project_scalar, DiscretizedMap, GridIndex, GridSpec, Successor, SuccessorTable,
};
pub use linalg::Matrix;
pub use linear::{
    build_m, build_m_tilde, compose_discretized, decay_experiment, hat_apply, mean_rate_mc,
    preimage_search, random_sl_sequence, rate_brute_force, DecayRow, LatticeBasis,
    MatrixSequence, RateEstimate, RateMethod,
};
pub use measure::{
    dyadic_distance, histogram_distance, lebesgue, lebesgue_histogram, pushforward, to_histogram, DiscreteMeasure,
    DyadicHistogram,
};
pub use orbit::{
    analyze_full_grid, floyd_orbit, global_measure, orbit_measure, recurrence_degree, Fraction,
    GridAnalysis, OrbitResult,
};
pub use raster::{colorize, rasterize, ColorImage, PixelGrid, RasterSpec, Rgb};
pub use torus::{builtin, IntegerLinearSpec, Phase, ShearTerm, Stage, TorusMapExpr, TorusPoint, TrigShearSpec};

/// Resource limits shared by the materializing and iterating operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Upper bound on bytes allocated for dense per-grid-point tables.
    pub bytes: u64,
    /// Upper bound on map evaluations for a single orbit search.
    pub steps: u64,
}

impl Budget {
    pub const DEFAULT_BYTES: u64 = 2 << 30;
    pub const DEFAULT_STEPS: u64 = 10_000_000_000;
}

impl Default for Budget {
    fn default() -> Self {
        Budget { bytes: Self::DEFAULT_BYTES, steps: Self::DEFAULT_STEPS }
    }
}
