//! Kernel interpolation on compact parametric submanifolds of ℝ³.
//!
//! The crate restricts positive-definite radial kernels on ℝ³ (Wendland
//! φ₃,₂ and Matérn) to an embedded curve or surface, interpolates scattered
//! data on near-minimal Riesz energy node sets, and measures how the
//! interpolation error decays with the fill distance of the nodes.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`manifold`] | built-in parametric manifolds, quadrature grids, geodesic distances |
//! | [`nodeset`] | Riesz energy node sets and fill distance / separation radius |
//! | [`kernels`] | Wendland and Matérn kernels, fractional-order `K_μ` |
//! | [`interp`] | Gram system assembly, Cholesky solve, interpolant evaluation |
//! | [`targets`] | smooth polynomial and Matérn-combination target functions |
//! | [`study`] | error norms, slope fitting, predicted rates, convergence runs |
//! | [`cli`] | configuration files and the command implementations behind the binary |

// NaN-rejecting guards read as `!(x > 0.0)`; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod interp;
pub mod kernels;
pub mod manifold;
pub mod nodeset;
pub mod study;
pub mod targets;

pub use error::{Error, Result};

/// A point in ℝ³.
pub type Point3 = [f64; 3];

#[inline]
pub(crate) fn dist2(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub(crate) fn dist(a: &Point3, b: &Point3) -> f64 {
    dist2(a, b).sqrt()
}
