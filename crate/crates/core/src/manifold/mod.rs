//! Parametric embedded submanifolds of ℝ³.
//!
//! A manifold is described by a 2π-periodic embedding of one or two
//! parameters. Parameter tuples are stored as `[f64; 2]`; for curves the
//! second component is ignored and kept at zero.

mod geodesic;
mod knn;
mod quadrature;

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::{Error, Point3, Result};

pub use geodesic::{geodesic_distance, ArcLength, Geodesic, GeodesicConfig, GraphGeodesic, SourceField, Targets};
pub use knn::PointIndex;
pub use quadrature::{quadrature_grid, EvaluationGrid};

/// Parameter tuple. Only the first `intrinsic_dim()` entries are used.
pub type Param = [f64; 2];

/// A compact manifold given by a periodic parameterization.
///
/// Implementors provide the raw formulas; [`embed`] and [`jacobian`] add
/// input validation and periodic wrapping.
pub trait ParametricManifold: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Intrinsic dimension k (1 or 2).
    fn intrinsic_dim(&self) -> usize;

    /// Period of each parameter.
    fn periods(&self) -> [f64; 2] {
        [TAU, TAU]
    }

    /// The embedding formula, evaluated without wrapping or validation.
    fn map(&self, t: Param) -> Point3;

    /// Columns of the derivative of [`map`](Self::map). For k = 1 the second
    /// column is zero.
    fn tangents(&self, t: Param) -> [Point3; 2];
}

/// Reduces each used parameter modulo its period; unused components become 0.
pub fn wrap_params(m: &dyn ParametricManifold, t: Param) -> Param {
    let p = m.periods();
    let mut out = [0.0; 2];
    for i in 0..m.intrinsic_dim() {
        let w = t[i].rem_euclid(p[i]);
        // rem_euclid can round up to the period itself for tiny negative input
        out[i] = if w >= p[i] { 0.0 } else { w };
    }
    out
}

fn check_finite(m: &dyn ParametricManifold, t: Param) -> Result<()> {
    if t[..m.intrinsic_dim()].iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite parameter {t:?} on {}", m.name())))
    }
}

/// Embedded point for the parameter tuple `t` (wrapped first).
pub fn embed(m: &dyn ParametricManifold, t: Param) -> Result<Point3> {
    check_finite(m, t)?;
    Ok(m.map(wrap_params(m, t)))
}

/// The k tangent vectors spanning the tangent space at `t`.
pub fn jacobian(m: &dyn ParametricManifold, t: Param) -> Result<Vec<Point3>> {
    check_finite(m, t)?;
    let cols = m.tangents(wrap_params(m, t));
    Ok(cols[..m.intrinsic_dim()].to_vec())
}

/// Gram matrix JᵀJ of the tangent columns, as (g11, g12, g22).
pub(crate) fn metric(m: &dyn ParametricManifold, t: Param) -> (f64, f64, f64) {
    let [a, b] = m.tangents(t);
    (dot(&a, &a), dot(&a, &b), dot(&b, &b))
}

/// Length (k = 1) or area (k = 2) element √det(JᵀJ).
pub fn volume_element(m: &dyn ParametricManifold, t: Param) -> f64 {
    let (g11, g12, g22) = metric(m, t);
    if m.intrinsic_dim() == 1 {
        g11.sqrt()
    } else {
        (g11 * g22 - g12 * g12).max(0.0).sqrt()
    }
}

#[inline]
pub(crate) fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Unit circle in the xy-plane, (cos θ, sin θ, 0).
#[derive(Debug, Clone, Copy, Default)]
pub struct Circle;

/// Six-lobed closed space curve:
/// ((1 + ⅓cos 6θ)cos θ, (1 + ⅓cos 6θ)sin θ, ⅓sin 2θ).
#[derive(Debug, Clone, Copy, Default)]
pub struct Curve6Lobe;

/// Ring torus with major radius 1 and minor radius ⅓:
/// ((1 + ⅓cos λ)cos θ, (1 + ⅓cos λ)sin θ, ⅓sin λ).
#[derive(Debug, Clone, Copy, Default)]
pub struct Torus;

impl ParametricManifold for Circle {
    fn name(&self) -> &str {
        "circle"
    }

    fn intrinsic_dim(&self) -> usize {
        1
    }

    fn map(&self, t: Param) -> Point3 {
        let (s, c) = t[0].sin_cos();
        [c, s, 0.0]
    }

    fn tangents(&self, t: Param) -> [Point3; 2] {
        let (s, c) = t[0].sin_cos();
        [[-s, c, 0.0], [0.0; 3]]
    }
}

impl ParametricManifold for Curve6Lobe {
    fn name(&self) -> &str {
        "curve6lobe"
    }

    fn intrinsic_dim(&self) -> usize {
        1
    }

    fn map(&self, t: Param) -> Point3 {
        let th = t[0];
        let r = 1.0 + (6.0 * th).cos() / 3.0;
        let (s, c) = th.sin_cos();
        [r * c, r * s, (2.0 * th).sin() / 3.0]
    }

    fn tangents(&self, t: Param) -> [Point3; 2] {
        let th = t[0];
        let (s6, c6) = (6.0 * th).sin_cos();
        let r = 1.0 + c6 / 3.0;
        let dr = -2.0 * s6;
        let (s, c) = th.sin_cos();
        [[dr * c - r * s, dr * s + r * c, 2.0 / 3.0 * (2.0 * th).cos()], [0.0; 3]]
    }
}

impl ParametricManifold for Torus {
    fn name(&self) -> &str {
        "torus"
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn map(&self, t: Param) -> Point3 {
        let (st, ct) = t[0].sin_cos();
        let (sl, cl) = t[1].sin_cos();
        let rho = 1.0 + cl / 3.0;
        [rho * ct, rho * st, sl / 3.0]
    }

    fn tangents(&self, t: Param) -> [Point3; 2] {
        let (st, ct) = t[0].sin_cos();
        let (sl, cl) = t[1].sin_cos();
        let rho = 1.0 + cl / 3.0;
        [[-rho * st, rho * ct, 0.0], [-sl / 3.0 * ct, -sl / 3.0 * st, cl / 3.0]]
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["curve6lobe", "torus", "circle"];

/// Looks up a built-in manifold by name.
pub fn builtin(name: &str) -> Result<Arc<dyn ParametricManifold>> {
    match name {
        "curve6lobe" => Ok(Arc::new(Curve6Lobe)),
        "torus" => Ok(Arc::new(Torus)),
        "circle" => Ok(Arc::new(Circle)),
        other => Err(Error::config(format!(
            "unknown manifold '{other}' (expected one of {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
