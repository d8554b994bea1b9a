//! Radial positive-definite kernels on ℝ³.

mod bessel;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::interp::Matrix;
use crate::{dist, Error, Point3, Result};

pub use bessel::{bessel_k, BesselK};

/// Default Wendland support radius: the largest node distance on the
/// built-in curve and torus.
pub const DEFAULT_DELTA: f64 = 8.0 / 3.0;

/// Wendland's φ₃,₂: (1 − r/δ)₊⁶ (3 + 18 r/δ + 35 (r/δ)²).
pub fn wendland32(r: f64, delta: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("distance must be ≥ 0, got {r}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Parameter(format!(
            "support radius must be positive, got {delta}"
        )));
    }
    Ok(wendland32_unchecked(r, delta))
}

#[inline]
fn wendland32_unchecked(r: f64, delta: f64) -> f64 {
    let x = r / delta;
    if x >= 1.0 {
        return 0.0;
    }
    let a = 1.0 - x;
    let a2 = a * a;
    let a6 = a2 * a2 * a2;
    a6 * (3.0 + 18.0 * x + 35.0 * x * x)
}

/// Matérn / Sobolev spline with Fourier decay (1 + ‖ξ‖²)^{−ν} in ℝ^d,
/// normalized to 1 at the origin:
/// κ_ν(r) = 2^{1−μ}/Γ(μ) · r^μ K_μ(r), μ = ν − d/2.
#[derive(Debug, Clone)]
pub struct Matern {
    nu: f64,
    d: usize,
    norm: f64,
    bessel: BesselK,
}

impl Matern {
    pub fn new(nu: f64, d: usize) -> Result<Self> {
        let mu = nu - d as f64 / 2.0;
        if !(mu > 0.0) || !nu.is_finite() {
            return Err(Error::Parameter(format!(
                "Matérn order ν = {nu} must exceed d/2 = {}",
                d as f64 / 2.0
            )));
        }
        let norm = 2f64.powf(1.0 - mu) / libm::tgamma(mu);
        Ok(Matern {
            nu,
            d,
            norm,
            bessel: BesselK::new(mu)?,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    /// Order μ = ν − d/2 of the Bessel factor.
    pub fn bessel_order(&self) -> f64 {
        self.bessel.order()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("distance must be ≥ 0, got {r}")));
        }
        Ok(self.eval_unchecked(r))
    }

    #[inline]
    fn eval_unchecked(&self, r: f64) -> f64 {
        if r == 0.0 {
            // r^μ K_μ(r) → Γ(μ) 2^{μ−1}
            return 1.0;
        }
        let k = self.bessel.eval(r).expect("r > 0 checked");
        self.norm * r.powf(self.bessel.order()) * k
    }
}

/// Matérn kernel value at distance r.
pub fn matern(nu: f64, d: usize, r: f64) -> Result<f64> {
    Matern::new(nu, d)?.eval(r)
}

/// A radial kernel evaluated on Euclidean distance.
#[derive(Debug, Clone)]
pub enum Kernel {
    Wendland32 { delta: f64 },
    Matern(Matern),
}

impl Kernel {
    pub fn wendland32(delta: f64) -> Result<Self> {
        wendland32(0.0, delta)?;
        Ok(Kernel::Wendland32 { delta })
    }

    pub fn matern(nu: f64) -> Result<Self> {
        Ok(Kernel::Matern(Matern::new(nu, 3)?))
    }

    /// Profile value at distance `r ≥ 0`. Negative or NaN input panics in
    /// debug builds and yields garbage otherwise; use [`Kernel::eval_checked`]
    /// for untrusted input.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match self {
            Kernel::Wendland32 { delta } => wendland32_unchecked(r, *delta),
            Kernel::Matern(m) => m.eval_unchecked(r),
        }
    }

    pub fn eval_checked(&self, r: f64) -> Result<f64> {
        match self {
            Kernel::Wendland32 { delta } => wendland32(r, *delta),
            Kernel::Matern(m) => m.eval(r),
        }
    }

    /// Sobolev order τ of the native space on ℝ³.
    pub fn native_order(&self) -> f64 {
        match self {
            Kernel::Wendland32 { .. } => 4.0,
            Kernel::Matern(m) => m.nu(),
        }
    }

    /// Spec string such as `wendland32:delta=2.6666666666666665`.
    pub fn spec(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Wendland32 { delta } => write!(f, "wendland32:delta={delta}"),
            Kernel::Matern(m) if m.d == 3 => write!(f, "matern:nu={}", m.nu),
            Kernel::Matern(m) => write!(f, "matern:nu={},d={}", m.nu, m.d),
        }
    }
}

/// Splits `family:key=value,key=value` into the family and its options.
pub(crate) fn split_spec(spec: &str) -> Result<(&str, Vec<(&str, &str)>)> {
    let (family, rest) = match spec.split_once(':') {
        Some((f, r)) => (f.trim(), r.trim()),
        None => (spec.trim(), ""),
    };
    let mut opts = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value in '{spec}', found '{item}'")))?;
        opts.push((k.trim(), v.trim()));
    }
    Ok((family, opts))
}

pub(crate) fn parse_f64(spec: &str, key: &str, v: &str) -> Result<f64> {
    match v {
        "inf" | "∞" => Ok(f64::INFINITY),
        _ => v
            .parse()
            .map_err(|_| Error::config(format!("'{spec}': {key} = '{v}' is not a number"))),
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (family, opts) = split_spec(spec)?;
        match family {
            "wendland32" => {
                let mut delta = DEFAULT_DELTA;
                for (k, v) in opts {
                    match k {
                        "delta" => delta = parse_f64(spec, k, v)?,
                        _ => return Err(Error::config(format!("'{spec}': unknown option '{k}'"))),
                    }
                }
                Kernel::wendland32(delta).map_err(|e| Error::config(e.to_string()))
            }
            "matern" => {
                let mut nu = None;
                let mut d = 3usize;
                for (k, v) in opts {
                    match k {
                        "nu" => nu = Some(parse_f64(spec, k, v)?),
                        "d" => {
                            d = v
                                .parse()
                                .map_err(|_| Error::config(format!("'{spec}': d = '{v}' is not an integer")))?
                        }
                        _ => return Err(Error::config(format!("'{spec}': unknown option '{k}'"))),
                    }
                }
                let nu = nu.ok_or_else(|| Error::config(format!("'{spec}': matern needs nu=")))?;
                Ok(Kernel::Matern(
                    Matern::new(nu, d).map_err(|e| Error::config(e.to_string()))?,
                ))
            }
            other => Err(Error::config(format!(
                "unknown kernel family '{other}' (expected wendland32 or matern)"
            ))),
        }
    }
}

/// Gram matrix A_ij = κ(‖x_i − x_j‖). Each unordered pair is evaluated once
/// and mirrored, so the result is bitwise symmetric.
pub fn kernel_matrix(kernel: &Kernel, pts: &[Point3]) -> Matrix {
    let n = pts.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kernel.eval(dist(&pts[i], &pts[j]))).collect())
        .collect();
    let mut a = Matrix::zeros(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + off;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::cholesky;
    use crate::manifold::{ParametricManifold, Torus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wendland_examples() {
        let d = DEFAULT_DELTA;
        assert_eq!(wendland32(0.0, d).unwrap(), 3.0);
        assert_eq!(wendland32(d, d).unwrap(), 0.0);
        // rational evaluation: (1/2)^6 (3 + 9 + 35/4) = 83/256
        let exact = 83.0 / 256.0;
        assert_eq!(exact, 0.324_218_75);
        assert!((wendland32(d / 2.0, d).unwrap() - exact).abs() < 1e-15);
        assert!(matches!(wendland32(-0.1, d), Err(Error::Domain(_))));
    }

    #[test]
    fn wendland_compact_support_and_monotone() {
        let d = 1.7;
        for i in 0..1000 {
            let r = d + 2.0 * d * i as f64 / 999.0;
            assert_eq!(wendland32(r, d).unwrap(), 0.0);
        }
        let mut prev = f64::INFINITY;
        for i in 0..=500 {
            let v = wendland32(d * i as f64 / 500.0, d).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn matern_examples() {
        for nu in [1.6, 2.0, 2.75, 3.5] {
            assert_eq!(matern(nu, 3, 0.0).unwrap(), 1.0);
        }
        // the analytic limit is approached continuously; 1 − κ(r) ~ r^{min(2μ, 1)}
        for nu in [2.0, 2.75, 3.5] {
            assert!((matern(nu, 3, 1e-9).unwrap() - 1.0).abs() < 1e-8, "nu={nu}");
        }
        assert!((matern(1.6, 3, 1e-12).unwrap() - 1.0).abs() < 1e-2);
        assert!((matern(2.0, 3, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert!(matches!(matern(1.5, 3, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(matern(1.0, 3, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn matern_half_is_exponential() {
        let m = Matern::new(2.0, 3).unwrap();
        for i in 0..=2000 {
            let r = i as f64 * 0.01;
            let v = m.eval(r).unwrap();
            assert!(((v - (-r).exp()) / (-r).exp()).abs() < 1e-10, "r={r}");
        }
    }

    /// Composite Simpson on the defining integral with a 10× finer step and
    /// a longer domain than the library path.
    fn bessel_oracle(mu: f64, r: f64) -> f64 {
        let (t_end, n) = (12.0, 12 * 120 * 2);
        let h = t_end / n as f64;
        let f = |t: f64| (-r * t.cosh()).exp() * (mu * t).cosh();
        let mut s = f(0.0) + f(t_end);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn matern_fractional_against_oversampled_quadrature() {
        let mu = 2.75 - 1.5;
        let oracle = 2f64.powf(1.0 - mu) / libm::tgamma(mu) * bessel_oracle(mu, 1.0);
        assert!((matern(2.75, 3, 1.0).unwrap() - oracle).abs() < 1e-9);
        for r in [0.05, 0.3, 2.0, 5.0] {
            let o = bessel_oracle(mu, r);
            assert!(((bessel_k(mu, r).unwrap() - o) / o).abs() < 1e-9, "r={r}");
        }
    }

    #[test]
    fn spec_strings() {
        let k: Kernel = "wendland32:delta=2.6667".parse().unwrap();
        assert!(matches!(k, Kernel::Wendland32 { delta } if delta == 2.6667));
        let k: Kernel = "wendland32".parse().unwrap();
        assert!(matches!(k, Kernel::Wendland32 { delta } if delta == DEFAULT_DELTA));
        let k: Kernel = "matern:nu=2.75".parse().unwrap();
        assert_eq!(k.native_order(), 2.75);
        let back: Kernel = k.spec().parse().unwrap();
        assert_eq!(back.spec(), k.spec());
        assert!("gauss:eps=1".parse::<Kernel>().is_err());
        assert!("matern".parse::<Kernel>().is_err());
        assert!("matern:nu=1.2".parse::<Kernel>().is_err());
        assert!("wendland32:delta=abc".parse::<Kernel>().is_err());
        assert!("wendland32:radius=2".parse::<Kernel>().is_err());
    }

    #[test]
    fn gram_matrix_basics() {
        let k = Kernel::wendland32(DEFAULT_DELTA).unwrap();
        let a = kernel_matrix(&k, &[[0.3, 0.1, 0.0]]);
        assert_eq!(a.n(), 1);
        assert_eq!(a[(0, 0)], 3.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Point3> = (0..40)
            .map(|_| {
                Torus.map([
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ])
            })
            .collect();
        let a = kernel_matrix(&k, &pts);
        for i in 0..40 {
            for j in 0..40 {
                assert_eq!(a[(i, j)].to_bits(), a[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn gram_positive_definite_on_torus() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..10)
            .map(|_| {
                Torus.map([
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ])
            })
            .collect();
        for k in [
            Kernel::wendland32(DEFAULT_DELTA).unwrap(),
            Kernel::matern(2.75).unwrap(),
        ] {
            let a = kernel_matrix(&k, &pts);
            let l = cholesky::factor(&a).unwrap();
            for i in 0..10 {
                assert!(l[(i, i)] > 0.0);
            }
        }
    }
}
