//! Numerics for the Landau-de Gennes energy on a disk with degree-k/2 anchoring.
//!
//! Everything works in the moving-frame coordinates `w = (w0, .., w4)` of
//! [`qtensor::Frame`]. The radial solvers in [`radial`] handle the symmetry
//! reduced problems, [`disk`] handles unrestricted fields on a polar grid,
//! and the remaining modules build limit geometry, spectra and saddle paths
//! on top of those two discretisations.

// Index loops mirror the stencils; solvers hand back their last iterate on failure.
#![allow(clippy::needless_range_loop, clippy::result_large_err)]

pub mod banded;
pub mod disk;
pub mod error;
pub mod lanczos;
pub mod limit;
pub mod path;
pub mod qtensor;
pub mod radial;
pub mod spectra;
pub mod tol;

pub use error::{Error, NotConverged};
pub use qtensor::{MaterialParams, QTensor, WVector};
