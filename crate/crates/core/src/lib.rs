//! Numerical laboratory for the two-dimensional integral radiation transfer
//! equation with constant coefficients and vacuum boundaries.
//!
//! The crate provides:
//!
//! * [`special`]: the first Bickley–Naylor function `Ki1` and its running
//!   integral, which make up the 2D transport kernel.
//! * [`kernel`]: the kernel `K(x, y) = σ_s Ki1(σρ) / (2πρ)`, cell integrals
//!   with singularity-aware polar quadrature, and derivative probes.
//! * [`ordinates`]: level-symmetric discrete-ordinate sets folded to x-y geometry.
//! * [`sn`]: Diamond Difference sweeps, source iteration and mesh-convergence studies.
//! * [`integral`]: the Peierls equation discretized by cell collocation and
//!   solved by Neumann iteration.
//! * [`regularity`]: boundary derivative profiles and weighted-norm diagnostics.
//! * [`harness`]: case registry, configuration, caching and report emission
//!   used by the `radtrans` command-line tool.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod integral;
pub mod integrate;
pub mod io;
pub mod kernel;
pub mod ordinates;
pub mod parallel;
pub mod regularity;
pub mod sn;
pub mod special;

pub use error::{Error, Result};
pub use geometry::{Point2, RectDomain};
pub use integrate::QuadratureSpec;
pub use kernel::Material;
pub use ordinates::DiscreteOrdinateSet;
pub use parallel::Execution;
pub use sn::{Grid2D, ScalarField};
