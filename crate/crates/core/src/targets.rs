//! Target functions for the convergence experiments: a smooth polynomial and
//! Matérn combinations of prescribed Sobolev smoothness pinned to it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::interp::{fit_points, FitOptions};
use crate::kernels::{parse_f64, split_spec, Kernel, Matern};
use crate::manifold::ParametricManifold;
use crate::nodeset::{minimize_riesz, RieszOptions};
use crate::{dist, Error, Point3, Result};

/// p(u, v, w) = ⅛(u⁵ − 10u³v² + 5uv⁴)(u² + v² − 60w²).
pub fn poly_target(x: &Point3) -> f64 {
    let [u, v, w] = *x;
    let (u2, v2) = (u * u, v * v);
    0.125 * u * (u2 * u2 - 10.0 * u2 * v2 + 5.0 * v2 * v2) * (u2 + v2 - 60.0 * w * w)
}

/// f(x) = Σ_j c_j κ_ν(‖x − x_j‖) with ν = (β + 3/2)/2, so that f restricted
/// to a k-manifold lies in H^{β − (3−k)/2}.
#[derive(Debug, Clone)]
pub struct MaternCombo {
    beta: f64,
    kernel: Matern,
    centers: Vec<Point3>,
    coeffs: Vec<f64>,
}

impl MaternCombo {
    /// Explicit centers and coefficients.
    pub fn new(beta: f64, centers: Vec<Point3>, coeffs: Vec<f64>) -> Result<Self> {
        if centers.len() != coeffs.len() {
            return Err(Error::LengthMismatch {
                expected: centers.len(),
                found: coeffs.len(),
            });
        }
        Ok(MaternCombo {
            beta,
            kernel: Matern::new(matern_order(beta), 3)?,
            centers,
            coeffs,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu(&self) -> f64 {
        self.kernel.nu()
    }

    pub fn centers(&self) -> &[Point3] {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn eval(&self, x: &Point3) -> f64 {
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(c, a)| a * self.kernel.eval(dist(x, c)).expect("distance is non-negative"))
            .sum()
    }
}

/// Matérn order ν = (β + d/2)/2 for d = 3.
pub fn matern_order(beta: f64) -> f64 {
    0.5 * (beta + 1.5)
}

#[derive(Debug, Clone)]
pub enum TargetFunction {
    SmoothPoly,
    MaternCombo(MaternCombo),
}

impl TargetFunction {
    pub fn eval(&self, x: &Point3) -> f64 {
        match self {
            TargetFunction::SmoothPoly => poly_target(x),
            TargetFunction::MaternCombo(c) => c.eval(x),
        }
    }

    /// β, or +∞ for the polynomial.
    pub fn beta(&self) -> f64 {
        match self {
            TargetFunction::SmoothPoly => f64::INFINITY,
            TargetFunction::MaternCombo(c) => c.beta(),
        }
    }
}

/// Pointwise values of `f`; parallel over points.
pub fn eval_target(f: &TargetFunction, pts: &[Point3]) -> Vec<f64> {
    pts.par_iter().map(|x| f.eval(x)).collect()
}

/// Matérn combination interpolating `poly_target` at `m_count` near-minimal
/// Riesz energy points of `m`. β = +∞ returns the polynomial itself.
pub fn build_target(m: Arc<dyn ParametricManifold>, m_count: usize, beta: f64, seed: u64) -> Result<TargetFunction> {
    if beta == f64::INFINITY {
        return Ok(TargetFunction::SmoothPoly);
    }
    if m_count == 0 {
        return Err(Error::Parameter("target needs at least one center".into()));
    }
    let kernel = Kernel::matern(matern_order(beta))?;
    let opts = RieszOptions {
        seed,
        ..RieszOptions::default()
    };
    let centers = minimize_riesz(m, m_count, 2.0, &opts)?.points().to_vec();
    let values: Vec<f64> = centers.iter().map(poly_target).collect();
    let fit = fit_points(&kernel, &centers, &values, &FitOptions::default())?;
    Ok(TargetFunction::MaternCombo(MaternCombo::new(
        beta,
        centers,
        fit.coeffs().to_vec(),
    )?))
}

/// Parsed target spec string: `poly` or `fbeta:beta=4,m=25,seed=7`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TargetSpec {
    Poly,
    FBeta {
        beta: f64,
        /// Center count; `None` picks 25 on curves and 100 on surfaces.
        m: Option<usize>,
        seed: u64,
    },
}

pub const DEFAULT_TARGET_SEED: u64 = 7;

impl TargetSpec {
    pub fn center_count(&self, k: usize) -> usize {
        match self {
            TargetSpec::FBeta { m: Some(m), .. } => *m,
            _ if k == 1 => 25,
            _ => 100,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            TargetSpec::Poly => f64::INFINITY,
            TargetSpec::FBeta { beta, .. } => *beta,
        }
    }

    pub fn build(&self, m: Arc<dyn ParametricManifold>) -> Result<TargetFunction> {
        match self {
            TargetSpec::Poly => Ok(TargetFunction::SmoothPoly),
            TargetSpec::FBeta { beta, seed, .. } => {
                let count = self.center_count(m.intrinsic_dim());
                build_target(m, count, *beta, *seed)
            }
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Poly => write!(f, "poly"),
            TargetSpec::FBeta { beta, m, seed } => {
                write!(f, "fbeta:beta={beta}")?;
                if let Some(m) = m {
                    write!(f, ",m={m}")?;
                }
                write!(f, ",seed={seed}")
            }
        }
    }
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (family, opts) = split_spec(spec)?;
        match family {
            "poly" if opts.is_empty() => Ok(TargetSpec::Poly),
            "poly" => Err(Error::config(format!("'{spec}': poly takes no options"))),
            "fbeta" => {
                let (mut beta, mut m, mut seed) = (None, None, DEFAULT_TARGET_SEED);
                for (k, v) in opts {
                    match k {
                        "beta" => beta = Some(parse_f64(spec, k, v)?),
                        "m" => {
                            m = Some(
                                v.parse()
                                    .map_err(|_| Error::config(format!("'{spec}': m = '{v}' is not a count")))?,
                            )
                        }
                        "seed" => {
                            seed = v
                                .parse()
                                .map_err(|_| Error::config(format!("'{spec}': seed = '{v}' is not an integer")))?
                        }
                        _ => return Err(Error::config(format!("'{spec}': unknown option '{k}'"))),
                    }
                }
                let beta = beta.ok_or_else(|| Error::config(format!("'{spec}': fbeta needs beta=")))?;
                if beta == f64::INFINITY {
                    return Ok(TargetSpec::Poly);
                }
                if !(beta > 1.5) || !beta.is_finite() {
                    return Err(Error::config(format!(
                        "'{spec}': beta must exceed 3/2 so that the Matérn order is admissible"
                    )));
                }
                if m == Some(0) {
                    return Err(Error::config(format!("'{spec}': m must be at least 1")));
                }
                Ok(TargetSpec::FBeta { beta, m, seed })
            }
            other => Err(Error::config(format!(
                "unknown target '{other}' (expected poly or fbeta)"
            ))),
        }
    }
}
