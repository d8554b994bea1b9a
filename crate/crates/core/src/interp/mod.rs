//! Kernel interpolants s = Σ_j c_j κ(‖· − x_j‖) through scattered data.

pub mod cholesky;

use rayon::prelude::*;
use serde::Serialize;

use crate::kernels::{kernel_matrix, Kernel};
use crate::nodeset::NodeSet;
use crate::{dist, Error, Point3, Result};

pub use cholesky::Matrix;

/// Node residual allowed at fit time, relative to ‖data‖∞.
pub const NODE_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Adds ε·I to the Gram matrix. Off by default; a ridged fit no longer
    /// interpolates and is flagged inexact instead of failing the residual check.
    pub ridge: Option<f64>,
    /// Iterative refinement sweeps after the first solve.
    pub refinement_steps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ridge: None,
            refinement_steps: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// (max L_ii / min L_ii)², a lower bound on cond₂(A).
    pub condition_estimate: f64,
    /// max_i |s(x_i) − f_i| / ‖f‖∞.
    pub max_node_residual: f64,
    pub inexact: bool,
}

/// A fitted interpolant. Immutable; share freely across threads.
#[derive(Debug, Clone)]
pub struct Interpolant {
    kernel: Kernel,
    centers: Vec<Point3>,
    coeffs: Vec<f64>,
    diagnostics: FitDiagnostics,
}

/// Fits the kernel interpolant of `values` on the nodes of `nodes`.
pub fn fit(kernel: &Kernel, nodes: &NodeSet, values: &[f64]) -> Result<Interpolant> {
    fit_points(kernel, nodes.points(), values, &FitOptions::default())
}

pub fn fit_points(kernel: &Kernel, centers: &[Point3], values: &[f64], opts: &FitOptions) -> Result<Interpolant> {
    if values.len() != centers.len() {
        return Err(Error::LengthMismatch {
            expected: centers.len(),
            found: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("data value {i} is not finite")));
    }
    if let Some(eps) = opts.ridge {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::Parameter(format!("ridge must be finite and ≥ 0, got {eps}")));
        }
    }
    check_distinct(centers)?;

    let mut a = kernel_matrix(kernel, centers);
    if let Some(eps) = opts.ridge {
        a.add_diagonal(eps);
    }
    let l = cholesky::factor(&a)?;
    let mut c = cholesky::solve(&l, values);

    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual_of = |c: &[f64]| -> Vec<f64> { a.mul_vec(c).iter().zip(values).map(|(ac, f)| f - ac).collect() };
    let norm_inf = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut r = residual_of(&c);
    for _ in 0..opts.refinement_steps {
        if scale == 0.0 {
            break;
        }
        let dc = cholesky::solve(&l, &r);
        let trial: Vec<f64> = c.iter().zip(&dc).map(|(a, b)| a + b).collect();
        let r_trial = residual_of(&trial);
        if norm_inf(&r_trial) >= norm_inf(&r) {
            break;
        }
        c = trial;
        r = r_trial;
    }

    let max_node_residual = if scale > 0.0 { norm_inf(&r) / scale } else { 0.0 };
    let inexact = opts.ridge.is_some();
    if !inexact && max_node_residual > NODE_RESIDUAL_TOL {
        return Err(Error::NodeResidual {
            residual: max_node_residual,
            tolerance: NODE_RESIDUAL_TOL,
        });
    }
    Ok(Interpolant {
        kernel: kernel.clone(),
        centers: centers.to_vec(),
        coeffs: c,
        diagnostics: FitDiagnostics {
            condition_estimate: cholesky::condition_estimate(&l),
            max_node_residual,
            inexact,
        },
    })
}

/// Rejects exactly coincident centers, reporting the first pair found.
fn check_distinct(pts: &[Point3]) -> Result<()> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let cmp = |a: &Point3, b: &Point3| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    };
    order.sort_by(|&i, &j| cmp(&pts[i], &pts[j]).then(i.cmp(&j)));
    for w in order.windows(2) {
        if pts[w[0]] == pts[w[1]] {
            return Err(Error::SingularConfiguration(w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    Ok(())
}

impl Interpolant {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn centers(&self) -> &[Point3] {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    /// s(x) at a single point.
    pub fn eval(&self, x: &Point3) -> f64 {
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(xj, cj)| cj * self.kernel.eval(dist(x, xj)))
            .sum()
    }

    /// s at each point; parallel over points.
    pub fn evaluate(&self, pts: &[Point3]) -> Vec<f64> {
        pts.par_iter().map(|x| self.eval(x)).collect()
    }

    /// cᵀ A c, the squared native-space norm of s.
    pub fn native_norm_sq(&self) -> f64 {
        let ac: Vec<f64> = self.evaluate(&self.centers);
        self.coeffs.iter().zip(&ac).map(|(c, v)| c * v).sum()
    }
}

pub fn evaluate(interp: &Interpolant, pts: &[Point3]) -> Vec<f64> {
    interp.evaluate(pts)
}

pub fn native_norm_sq(interp: &Interpolant) -> f64 {
    interp.native_norm_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{wendland32, DEFAULT_DELTA};
    use crate::manifold::{ParametricManifold, Torus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wendland() -> Kernel {
        Kernel::wendland32(DEFAULT_DELTA).unwrap()
    }

    fn torus_points(n: usize, seed: u64) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Torus.map([
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ])
            })
            .collect()
    }

    fn exact() -> FitOptions {
        FitOptions::default()
    }

    #[test]
    fn one_node() {
        let s = fit_points(&wendland(), &[[1.0, 0.0, 0.0]], &[2.4], &exact()).unwrap();
        assert!((s.coeffs()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn gram_column_reproduces_itself() {
        let k = wendland();
        let pts = torus_points(30, 1);
        let a = kernel_matrix(&k, &pts);
        for j in [0, 7, 29] {
            let col: Vec<f64> = (0..30).map(|i| a[(i, j)]).collect();
            let s = fit_points(&k, &pts, &col, &exact()).unwrap();
            for (i, c) in s.coeffs().iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 1e-10, "j={j} i={i} c={c}");
            }
        }
    }

    #[test]
    fn two_nodes_hand_solve() {
        let k = wendland();
        let (x, y) = ([1.0, 0.0, 0.0], [0.2, 0.5, -0.3]);
        let r = dist(&x, &y);
        let s = fit_points(&k, &[x, y], &[1.0, 1.0], &exact()).unwrap();
        let want = 1.0 / (3.0 + wendland32(r, DEFAULT_DELTA).unwrap());
        for c in s.coeffs() {
            assert!((c - want).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_evaluated_at_half_support() {
        let s = fit_points(&wendland(), &[[0.0; 3]], &[3.0], &exact()).unwrap();
        assert_eq!(s.coeffs(), &[1.0]);
        let v = s.evaluate(&[[DEFAULT_DELTA / 2.0, 0.0, 0.0]])[0];
        assert!((v - 0.324_218_75).abs() < 1e-15);
        assert_eq!(s.native_norm_sq(), 3.0);
    }

    #[test]
    fn zero_data() {
        let pts = torus_points(12, 2);
        let s = fit_points(&wendland(), &pts, &[0.0; 12], &exact()).unwrap();
        assert!(s.coeffs().iter().all(|&c| c == 0.0));
        assert!(s.evaluate(&torus_points(50, 3)).iter().all(|&v| v == 0.0));
        assert_eq!(s.native_norm_sq(), 0.0);
    }

    #[test]
    fn reproduces_data_and_is_orthogonal() {
        for k in [wendland(), Kernel::matern(2.75).unwrap()] {
            let pts = torus_points(200, 4);
            let f: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[2]).collect();
            let s = fit_points(&k, &pts, &f, &exact()).unwrap();
            let at_nodes = s.evaluate(&pts);
            let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let worst = at_nodes.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-8 * scale);
            assert!(s.diagnostics().max_node_residual <= 1e-8);
            assert!(s.diagnostics().condition_estimate >= 1.0);
            // cᵀ(Ac − f) vanishes: the interpolant is the native-space projection
            let ortho: f64 = s
                .coeffs()
                .iter()
                .zip(at_nodes.iter().zip(&f))
                .map(|(c, (a, b))| c * (a - b))
                .sum();
            assert!(ortho.abs() <= 1e-10 * s.native_norm_sq(), "{ortho}");
        }
    }

    #[test]
    fn native_norm_grows_under_refinement() {
        let k = wendland();
        let pts = torus_points(10, 5);
        let f = |p: &Point3| p[0] * p[0] - p[2];
        let small: Vec<f64> = pts[..5].iter().map(f).collect();
        let large: Vec<f64> = pts.iter().map(f).collect();
        let n5 = fit_points(&k, &pts[..5], &small, &exact()).unwrap().native_norm_sq();
        let n10 = fit_points(&k, &pts, &large, &exact()).unwrap().native_norm_sq();
        assert!(n5 <= n10, "{n5} > {n10}");
    }

    #[test]
    fn unit_coefficient_norm_is_diagonal() {
        let k = wendland();
        let pts = torus_points(8, 6);
        let a = kernel_matrix(&k, &pts);
        let col: Vec<f64> = (0..8).map(|i| a[(i, 3)]).collect();
        let s = fit_points(&k, &pts, &col, &exact()).unwrap();
        assert!((s.native_norm_sq() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let k = wendland();
        let p = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        assert_eq!(
            fit_points(&k, &p, &[1.0, 2.0, 3.0], &exact()).unwrap_err(),
            Error::SingularConfiguration(0, 2)
        );
        assert!(matches!(
            fit_points(&k, &p[..2], &[1.0], &exact()),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            fit_points(&k, &p[..2], &[1.0, f64::NAN], &exact()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ridge_marks_inexact() {
        let pts = torus_points(20, 7);
        let f: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let opts = FitOptions {
            ridge: Some(1e-10),
            ..FitOptions::default()
        };
        let s = fit_points(&wendland(), &pts, &f, &opts).unwrap();
        assert!(s.diagnostics().inexact);
        assert!(
            !fit_points(&wendland(), &pts, &f, &exact())
                .unwrap()
                .diagnostics()
                .inexact
        );
    }
}
