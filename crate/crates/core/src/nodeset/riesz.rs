//! Riesz s-energy and its minimization over parameter tuples.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{NodeSet, Provenance};
use crate::manifold::{metric, quadrature_grid, volume_element, wrap_params, Param, ParametricManifold};
use crate::{dist2, Error, Point3, Result};

/// E = Σ_{i<j} ‖x_i − x_j‖^{−s}.
pub fn riesz_energy(points: &[Point3], s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Parameter(format!("Riesz exponent must be positive, got {s}")));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if dist2(&points[i], &points[j]) == 0.0 {
                return Err(Error::SingularConfiguration(i, j));
            }
        }
    }
    Ok(energy(points, s))
}

/// Unchecked energy; +∞ if two points coincide. Row sums run in parallel
/// and are added in row order.
fn energy(points: &[Point3], s: f64) -> f64 {
    let half = 0.5 * s;
    let rows: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = points[i];
            let mut e = 0.0;
            for q in &points[i + 1..] {
                let r2 = dist2(&p, q);
                e += if s == 2.0 { 1.0 / r2 } else { r2.powf(-half) };
            }
            e
        })
        .collect();
    rows.iter().sum()
}

/// ∂E/∂x_i in ℝ³ for every point.
fn ambient_gradient(points: &[Point3], s: f64) -> Vec<Point3> {
    let half = 0.5 * s;
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut g = [0.0; 3];
            for (j, q) in points.iter().enumerate() {
                if j == i {
                    continue;
                }
                let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                // d/dx r^{-s} = −s r^{−s−2} (x_i − x_j)
                let f = if s == 2.0 {
                    let inv = 1.0 / r2;
                    -2.0 * inv * inv
                } else {
                    -s * r2.powf(-half - 1.0)
                };
                for c in 0..3 {
                    g[c] += f * d[c];
                }
            }
            g
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RieszOptions {
    pub seed: u64,
    pub max_iters: usize,
    /// First trial step as a fraction of the mean node spacing
    /// (measure/N)^{1/k}, applied to the largest node displacement.
    pub step: f64,
    /// Stop once the parameter-gradient norm falls to this value.
    pub tol: f64,
}

impl Default for RieszOptions {
    fn default() -> Self {
        RieszOptions {
            seed: 0,
            max_iters: 5000,
            step: 0.25,
            tol: 1e-8,
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Near-minimal Riesz s-energy configuration of `n` points on `m`.
pub fn minimize_riesz(m: Arc<dyn ParametricManifold>, n: usize, s: f64, opts: &RieszOptions) -> Result<NodeSet> {
    Ok(minimize_riesz_traced(m, n, s, opts)?.0)
}

/// As [`minimize_riesz`], also returning the energy after every accepted step
/// (the first entry is the starting energy).
pub fn minimize_riesz_traced(
    m: Arc<dyn ParametricManifold>,
    n: usize,
    s: f64,
    opts: &RieszOptions,
) -> Result<(NodeSet, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Parameter("node count must be at least 1".into()));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Parameter(format!("Riesz exponent must be positive, got {s}")));
    }
    if !(opts.step > 0.0) || !(opts.tol >= 0.0) {
        return Err(Error::Parameter("step must be positive and tol non-negative".into()));
    }
    let k = m.intrinsic_dim();
    let mr = m.as_ref();

    let mut params = initial_params(mr, n, opts.seed)?;
    let mut points: Vec<Point3> = params.iter().map(|&t| mr.map(t)).collect();
    let mut e = energy(&points, s);
    let mut trace = vec![e];
    let spacing = (measure(mr) / n as f64).powf(1.0 / k as f64);
    let mut step: Option<f64> = None;
    let mut iterations = 0;

    while n > 1 && iterations < opts.max_iters {
        let ga = ambient_gradient(&points, s);
        // parameter gradient g = Jᵀ∇E and the metric-preconditioned
        // descent direction −(JᵀJ)⁻¹g, which is the ambient gradient
        // projected onto the tangent space and pulled back
        let mut gnorm2 = 0.0;
        let mut slope = 0.0;
        let mut max_move: f64 = 0.0;
        let mut dir = vec![[0.0; 2]; n];
        for i in 0..n {
            let [a, b] = mr.tangents(params[i]);
            let g = [dot(&a, &ga[i]), dot(&b, &ga[i])];
            let (g11, g12, g22) = metric(mr, params[i]);
            let d = if k == 1 {
                [-g[0] / g11, 0.0]
            } else {
                let det = g11 * g22 - g12 * g12;
                [-(g22 * g[0] - g12 * g[1]) / det, -(g11 * g[1] - g12 * g[0]) / det]
            };
            gnorm2 += g[0] * g[0] + g[1] * g[1];
            slope += g[0] * d[0] + g[1] * d[1];
            let mv = [0, 1, 2].map(|c| a[c] * d[0] + b[c] * d[1]);
            max_move = max_move.max(dot(&mv, &mv).sqrt());
            dir[i] = d;
        }
        if gnorm2.sqrt() <= opts.tol || max_move == 0.0 {
            break;
        }

        let mut t = step.unwrap_or(opts.step * spacing / max_move);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<Param> = params
                .iter()
                .zip(&dir)
                .map(|(p, d)| wrap_params(mr, [p[0] + t * d[0], p[1] + t * d[1]]))
                .collect();
            let tp: Vec<Point3> = trial.iter().map(|&p| mr.map(p)).collect();
            let et = energy(&tp, s);
            if et.is_finite() && et <= e + ARMIJO_C * t * slope && et < e {
                accepted = Some((trial, tp, et));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, tp, et)) = accepted else {
            log::debug!("line search stalled after {iterations} iterations");
            break;
        };
        params = trial;
        points = tp;
        e = et;
        trace.push(e);
        step = Some(2.0 * t);
        iterations += 1;
    }

    let nodes = NodeSet::build(
        m,
        params,
        points,
        Provenance::RieszOptimized {
            seed: opts.seed,
            iterations,
            s,
            energy: e,
        },
    )?;
    Ok((nodes, trace))
}

#[inline]
fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn measure(m: &dyn ParametricManifold) -> f64 {
    let res = if m.intrinsic_dim() == 1 {
        vec![512]
    } else {
        vec![64, 64]
    };
    quadrature_grid(m, &res).map(|g| g.total_weight()).unwrap_or(1.0)
}

/// Starting configuration, uniform with respect to the length or area
/// measure. Curves get one draw per equal-length cell (points cannot pass
/// each other during descent, so independent draws would freeze their
/// clumps in place); surfaces get independent draws by rejection against
/// the largest volume element.
fn initial_params(m: &dyn ParametricManifold, n: usize, seed: u64) -> Result<Vec<Param>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if m.intrinsic_dim() == 1 {
        return Ok(stratified_curve(m, n, &mut rng));
    }
    let periods = m.periods();
    let grid = quadrature_grid(m, &[128, 128])?;
    let vmax = grid.params.iter().map(|&t| volume_element(m, t)).fold(0.0, f64::max) * 1.05;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t = [rng.gen_range(0.0..periods[0]), rng.gen_range(0.0..periods[1])];
        if rng.gen::<f64>() * vmax <= volume_element(m, t) {
            out.push(t);
        }
    }
    Ok(out)
}

fn stratified_curve(m: &dyn ParametricManifold, n: usize, rng: &mut ChaCha8Rng) -> Vec<Param> {
    const CELLS: usize = 4096;
    let period = m.periods()[0];
    let dt = period / CELLS as f64;
    // cumulative length at the cell boundaries, midpoint rule per cell
    let mut cum = Vec::with_capacity(CELLS + 1);
    cum.push(0.0);
    for i in 0..CELLS {
        let v = volume_element(m, [(i as f64 + 0.5) * dt, 0.0]);
        cum.push(cum[i] + v * dt);
    }
    let total = cum[CELLS];
    (0..n)
        .map(|j| {
            let target = (j as f64 + rng.gen::<f64>()) / n as f64 * total;
            let i = cum.partition_point(|&c| c <= target).clamp(1, CELLS) - 1;
            let frac = (target - cum[i]) / (cum[i + 1] - cum[i]);
            [(i as f64 + frac) * dt, 0.0]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Circle, Torus};
    use std::f64::consts::TAU;

    #[test]
    fn energy_examples() {
        assert_eq!(riesz_energy(&[[0.0; 3], [1.0, 0.0, 0.0]], 2.0).unwrap(), 1.0);
        let h = 3f64.sqrt() / 2.0;
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]];
        assert!((riesz_energy(&tri, 2.0).unwrap() - 3.0).abs() < 1e-14);
        let sq = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        assert!((riesz_energy(&sq, 2.0).unwrap() - 5.0).abs() < 1e-14);
        // general exponent path agrees with the s = 2 fast path
        assert!((energy(&sq, 2.0 + 1e-12) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn energy_errors() {
        let p = [[0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]];
        assert_eq!(riesz_energy(&p, 2.0), Err(Error::SingularConfiguration(0, 2)));
        assert!(matches!(riesz_energy(&p[..2], 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Point3> = (0..7)
            .map(|_| [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        for s in [2.0, 1.3] {
            let g = ambient_gradient(&pts, s);
            let h = 1e-6;
            for i in 0..7 {
                for c in 0..3 {
                    let mut p = pts.clone();
                    p[i][c] += h;
                    let ep = energy(&p, s);
                    p[i][c] -= 2.0 * h;
                    let em = energy(&p, s);
                    let fd = (ep - em) / (2.0 * h);
                    assert!((fd - g[i][c]).abs() < 1e-5 * fd.abs().max(1.0), "s={s} i={i} c={c}");
                }
            }
        }
    }

    #[test]
    fn two_points_on_circle_become_antipodal() {
        let x = minimize_riesz(Arc::new(Circle), 2, 2.0, &RieszOptions::default()).unwrap();
        let d = dist2(&x.points()[0], &x.points()[1]).sqrt();
        assert!((d - 2.0).abs() < 1e-6, "d = {d}");
    }

    #[test]
    fn twenty_points_on_circle_near_equispaced_energy() {
        let opts = RieszOptions {
            seed: 3,
            ..RieszOptions::default()
        };
        let x = minimize_riesz(Arc::new(Circle), 20, 2.0, &opts).unwrap();
        let eq: Vec<Point3> = (0..20)
            .map(|i| {
                let t = TAU * i as f64 / 20.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let e_eq = riesz_energy(&eq, 2.0).unwrap();
        let e = riesz_energy(x.points(), 2.0).unwrap();
        assert!(e >= e_eq * (1.0 - 1e-12));
        assert!((e - e_eq) / e_eq < 1e-3, "{e} vs {e_eq}");
    }

    #[test]
    fn energy_trace_is_non_increasing() {
        let opts = RieszOptions {
            seed: 9,
            max_iters: 200,
            ..RieszOptions::default()
        };
        let (x, trace) = minimize_riesz_traced(Arc::new(Torus), 60, 2.0, &opts).unwrap();
        assert!(trace.len() > 10);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        match x.provenance() {
            Provenance::RieszOptimized { energy, iterations, .. } => {
                assert_eq!(*energy, *trace.last().unwrap());
                assert_eq!(*iterations, trace.len() - 1);
            }
            p => panic!("unexpected provenance {p:?}"),
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let opts = RieszOptions {
            seed: 4,
            max_iters: 50,
            ..RieszOptions::default()
        };
        let a = minimize_riesz(Arc::new(Torus), 40, 2.0, &opts).unwrap();
        let b = minimize_riesz(Arc::new(Torus), 40, 2.0, &opts).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn initial_draws_follow_arc_length() {
        // on the torus the outer half (cos λ > 0) carries more area
        let t = initial_params(&Torus, 20000, 2).unwrap();
        let outer = t.iter().filter(|p| p[1].cos() > 0.0).count() as f64 / 20000.0;
        // exact share: (π + 2/3) / (2π)
        let want = (std::f64::consts::PI + 2.0 / 3.0) / TAU;
        assert!((outer - want).abs() < 0.015, "{outer} vs {want}");
    }
}
