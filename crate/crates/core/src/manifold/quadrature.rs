use super::{volume_element, Param, ParametricManifold};
use crate::{Error, Point3, Result};

/// Midpoint quadrature grid over the parameter cell of a manifold.
#[derive(Debug, Clone)]
pub struct EvaluationGrid {
    /// Points per parameter.
    pub resolution: Vec<usize>,
    pub params: Vec<Param>,
    pub points: Vec<Point3>,
    /// Length (k = 1) or area (k = 2) carried by each point.
    pub weights: Vec<f64>,
}

impl EvaluationGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total measure of the manifold as seen by the rule.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest spacing between neighboring parameter lines, measured in
    /// ambient length.
    pub fn max_spacing(&self, m: &dyn ParametricManifold) -> f64 {
        let periods = m.periods();
        let mut worst: f64 = 0.0;
        for (i, &n) in self.resolution.iter().enumerate() {
            let step = periods[i] / n as f64;
            for t in &self.params {
                let col = m.tangents(*t)[i];
                worst = worst.max(super::dot(&col, &col).sqrt() * step);
            }
        }
        worst
    }
}

/// Uniform midpoint grid with weights `volume_element × cell volume`.
///
/// For a torus the parameters are ordered θ-major: index = i·n_λ + j.
pub fn quadrature_grid(m: &dyn ParametricManifold, resolution: &[usize]) -> Result<EvaluationGrid> {
    let k = m.intrinsic_dim();
    if resolution.len() != k {
        return Err(Error::Parameter(format!(
            "{} needs {k} grid counts, got {}",
            m.name(),
            resolution.len()
        )));
    }
    if let Some(&n) = resolution.iter().find(|&&n| n < 2) {
        return Err(Error::Parameter(format!("grid count {n} is below 2")));
    }
    let periods = m.periods();
    let steps: Vec<f64> = resolution.iter().zip(periods).map(|(&n, p)| p / n as f64).collect();
    let cell: f64 = steps.iter().product();

    let mut params = Vec::with_capacity(resolution.iter().product());
    if k == 1 {
        for i in 0..resolution[0] {
            params.push([(i as f64 + 0.5) * steps[0], 0.0]);
        }
    } else {
        for i in 0..resolution[0] {
            for j in 0..resolution[1] {
                params.push([(i as f64 + 0.5) * steps[0], (j as f64 + 0.5) * steps[1]]);
            }
        }
    }
    let points = params.iter().map(|&t| m.map(t)).collect();
    let weights = params.iter().map(|&t| volume_element(m, t) * cell).collect();
    Ok(EvaluationGrid {
        resolution: resolution.to_vec(),
        params,
        points,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Circle, Curve6Lobe, Torus};
    use std::f64::consts::PI;

    /// Arc length of the six-lobed curve, computed once with an
    /// independent high-precision quadrature and frozen here.
    const CURVE_LENGTH: f64 = 11.025_683_547_587_412;

    /// Composite Simpson on the speed |γ'(θ)| from finite differences of
    /// the embedding, with one Richardson step.
    fn simpson_length(n: usize) -> f64 {
        let speed = |t: f64| {
            let h = 1e-5;
            let a = Curve6Lobe.map([t + h, 0.0]);
            let b = Curve6Lobe.map([t - h, 0.0]);
            let d: Vec<f64> = (0..3).map(|c| (a[c] - b[c]) / (2.0 * h)).collect();
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        };
        let simpson = |n: usize| {
            let h = 2.0 * PI / n as f64;
            let mut s = speed(0.0) + speed(2.0 * PI);
            for i in 1..n {
                s += speed(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let (a, b) = (simpson(n), simpson(2 * n));
        b + (b - a) / 15.0
    }

    #[test]
    fn circle_circumference() {
        let g = quadrature_grid(&Circle, &[100]).unwrap();
        assert!((g.total_weight() - 2.0 * PI).abs() < 1e-10);
        assert!(g.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn torus_area() {
        let g = quadrature_grid(&Torus, &[180, 135]).unwrap();
        assert_eq!(g.len(), 24_300);
        let exact = 4.0 * PI * PI / 3.0;
        assert!(((g.total_weight() - exact) / exact).abs() < 1e-8);
        assert!(g.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn curve_length_against_oracle() {
        let oracle = simpson_length(200_000);
        assert!((oracle - CURVE_LENGTH).abs() < 1e-8, "oracle {oracle}");
        let g = quadrature_grid(&Curve6Lobe, &[3000]).unwrap();
        assert!((g.total_weight() - CURVE_LENGTH).abs() < 1e-10);
    }

    #[test]
    fn weight_sums_converge_under_doubling() {
        // periodic midpoint rule: errors drop at least quadratically
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32] {
            let g = quadrature_grid(&Curve6Lobe, &[n]).unwrap();
            let err = (g.total_weight() - CURVE_LENGTH).abs();
            assert!(err <= prev / 4.0 || err < 1e-12, "n={n} err={err}");
            prev = err;
        }
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(quadrature_grid(&Torus, &[10]).is_err());
        assert!(quadrature_grid(&Circle, &[1]).is_err());
    }
}
