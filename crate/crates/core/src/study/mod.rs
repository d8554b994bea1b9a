//! Convergence experiments: discrete norms, rate predictions, slope fits and
//! the driver that runs a node hierarchy end to end.

mod report;
mod run;

use serde::Serialize;

use crate::interp::Interpolant;
use crate::manifold::EvaluationGrid;
use crate::targets::{eval_target, TargetFunction};
use crate::{Error, Result};

pub use report::{parse_csv, ConvergenceReport, LevelRow, Slopes, CSV_HEADER};
pub use run::{level_seed, run_convergence, run_convergence_cached, NodeCache, RieszConfig, StudyConfig};

/// (Σ w_i v_i²)^{1/2}.
pub fn discrete_l2(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            found: values.len(),
        });
    }
    Ok(values.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub rel_l2: f64,
    pub rel_linf: f64,
}

/// Relative ℓ₂ and ℓ∞ errors of `approx` against `exact` on a grid with
/// quadrature `weights`, each normalized by the same norm of `exact`.
pub fn relative_errors_of(approx: &[f64], exact: &[f64], weights: &[f64]) -> Result<ErrorNorms> {
    if approx.len() != exact.len() {
        return Err(Error::LengthMismatch {
            expected: exact.len(),
            found: approx.len(),
        });
    }
    let diff: Vec<f64> = exact.iter().zip(approx).map(|(f, s)| f - s).collect();
    let (fl2, fmax) = (discrete_l2(exact, weights)?, max_abs(exact));
    if fl2 == 0.0 || fmax == 0.0 {
        return Err(Error::ZeroNormalization);
    }
    Ok(ErrorNorms {
        rel_l2: discrete_l2(&diff, weights)? / fl2,
        rel_linf: max_abs(&diff) / fmax,
    })
}

/// Relative errors of an interpolant of `f` over `grid`.
pub fn relative_errors(interp: &Interpolant, f: &TargetFunction, grid: &EvaluationGrid) -> Result<ErrorNorms> {
    let exact = eval_target(f, &grid.points);
    relative_errors_of(&interp.evaluate(&grid.points), &exact, &grid.weights)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Target regularity: a Sobolev index β on ℝ³, or infinitely smooth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Smoothness {
    Finite(f64),
    Smooth,
}

impl Smoothness {
    pub fn from_beta(beta: f64) -> Self {
        if beta.is_finite() {
            Smoothness::Finite(beta)
        } else {
            Smoothness::Smooth
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Target in the restricted native space H^s(𝕄).
    InNative,
    /// Target rougher than the native space; the rate assumes ρ stays bounded.
    Escape,
    /// Target smooth enough for the doubled ℓ₂ rate 2s.
    Doubling,
}

/// Expected error decay order in h, or why none applies.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prediction {
    Rate { rate: f64, regime: Regime },
    None { reason: String },
}

impl Prediction {
    pub fn rate(&self) -> Option<f64> {
        match self {
            Prediction::Rate { rate, .. } => Some(*rate),
            Prediction::None { .. } => None,
        }
    }

    fn none(reason: impl Into<String>) -> Self {
        Prediction::None { reason: reason.into() }
    }
}

/// Predicted ℓ_q rate for a kernel with native order τ on ℝ³ restricted to a
/// k-dimensional manifold. With s = τ − (3−k)/2 and β_𝕄 = β − (3−k)/2:
/// s − k(1/2 − 1/q)₊ if β_𝕄 ≥ s, β_𝕄 − k(1/2 − 1/q)₊ if k/2 < β_𝕄 < s,
/// and 2s for smooth targets in ℓ₂.
pub fn predicted_rate(tau: f64, k: usize, target: Smoothness, q: f64) -> Prediction {
    let kf = k as f64;
    let codim_shift = (3.0 - kf) / 2.0;
    let s = tau - codim_shift;
    if !(1.0..=f64::INFINITY).contains(&q) {
        return Prediction::none(format!("norm index q = {q} outside [1, ∞]"));
    }
    if !(s.floor() > kf / 2.0) {
        return Prediction::none(format!("s = {s} too small: need ⌊s⌋ > k/2 = {}", kf / 2.0));
    }
    let loss = kf * (0.5 - 1.0 / q).max(0.0);
    match target {
        Smoothness::Smooth if q == 2.0 => Prediction::Rate {
            rate: 2.0 * s,
            regime: Regime::Doubling,
        },
        Smoothness::Smooth => Prediction::none("the doubled rate is only established in ℓ₂"),
        Smoothness::Finite(beta) => {
            let bm = beta - codim_shift;
            if bm >= s {
                Prediction::Rate {
                    rate: s - loss,
                    regime: Regime::InNative,
                }
            } else if bm > kf / 2.0 && bm.floor() > kf / 2.0 {
                Prediction::Rate {
                    rate: bm - loss,
                    regime: Regime::Escape,
                }
            } else {
                Prediction::none(format!(
                    "β_𝕄 = {bm} below the escape hypothesis ⌊β_𝕄⌋ > k/2 = {}",
                    kf / 2.0
                ))
            }
        }
    }
}

/// Predicted ℓ₂ and ℓ∞ rates with the quantities they derive from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateDerivation {
    pub tau: f64,
    pub k: usize,
    pub s: f64,
    /// β of the target on ℝ³; `null` for a smooth target.
    pub beta: Option<f64>,
    pub beta_manifold: Option<f64>,
    /// Derivative order μ of the error norm (always 0 here).
    pub mu: u32,
    pub l2: Prediction,
    pub linf: Prediction,
}

pub fn predicted_rates(tau: f64, k: usize, target: Smoothness) -> RateDerivation {
    let shift = (3.0 - k as f64) / 2.0;
    let beta = match target {
        Smoothness::Finite(b) => Some(b),
        Smoothness::Smooth => None,
    };
    RateDerivation {
        tau,
        k,
        s: tau - shift,
        beta,
        beta_manifold: beta.map(|b| b - shift),
        mu: 0,
        l2: predicted_rate(tau, k, target, 2.0),
        linf: predicted_rate(tau, k, target, f64::INFINITY),
    }
}

/// Least-squares slope of log e against log h over the last `trailing` rows.
pub fn fit_slope(h: &[f64], e: &[f64], trailing: usize) -> Result<f64> {
    if h.len() != e.len() {
        return Err(Error::LengthMismatch {
            expected: h.len(),
            found: e.len(),
        });
    }
    if trailing < 2 {
        return Err(Error::Parameter(format!(
            "slope needs at least 2 rows, asked for {trailing}"
        )));
    }
    if h.len() < trailing {
        return Err(Error::InsufficientRows {
            need: trailing,
            have: h.len(),
        });
    }
    let start = h.len() - trailing;
    let (h, e) = (&h[start..], &e[start..]);
    if let Some(v) = h.iter().chain(e).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "slope fit needs positive finite entries, got {v}"
        )));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = trailing as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("slope fit needs distinct h values".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}
