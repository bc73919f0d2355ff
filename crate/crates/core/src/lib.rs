//! Neumann spectra of rotationally symmetric caps with convex boundary and
//! positive Ricci curvature, closed-form heat-kernel and eigenvalue bounds, and
//! a harness that checks every bound against the computed spectra.
//!
//! Modules, bottom up:
//! - [`geometry`]: model manifolds, curvature/convexity certificate, comparison volumes.
//! - [`spectral`]: radial Sturm-Liouville solver, spectrum tables, heat kernel and semigroup.
//! - [`bounds`]: pure evaluators of the explicit bounds.
//! - [`verify`]: inequality checks on parameter grids and the verification report.
//! - [`config`]: the JSON run configuration shared by the CLI and the harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod error;
pub mod format;
pub mod geometry;
pub mod numerics;
pub mod spectral;
pub mod spline;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Hypothesis, Result};
