//! Sliced optimal transport on the 2-sphere.
//!
//! The crate provides the vertical slice and normalized semicircle
//! transforms with their closed-form singular value decompositions,
//! one-dimensional optimal transport on the interval and the circle
//! (including the cumulative distribution transform), the two sliced
//! Wasserstein distances built from them, a KL-regularized primal-dual
//! inversion, and the vMF interpolation/classification pipelines.

// index-heavy numeric kernels read better with explicit loops
#![allow(clippy::needless_range_loop)]
// NaN-rejecting comparisons are written as negations on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod inversion;
pub mod io;
pub mod ot1d;
pub mod pipelines;
pub mod quadrature;
pub mod rng;
pub mod sliced;
pub mod special;
pub mod util;

pub use error::{CoreError, Result};
