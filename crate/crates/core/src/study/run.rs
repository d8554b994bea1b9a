use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::report::{ConvergenceReport, LevelRow, Slopes};
use super::{fit_slope, predicted_rates, relative_errors_of, Smoothness};
use crate::interp::{fit_points, FitOptions};
use crate::kernels::Kernel;
use crate::manifold::{builtin, quadrature_grid, EvaluationGrid, Geodesic, GeodesicConfig, ParametricManifold};
use crate::nodeset::{mesh_measures, minimize_riesz, MeshMeasures, NodeSet, RieszOptions};
use crate::targets::{eval_target, TargetSpec};
use crate::{Error, Result};

/// Riesz optimizer settings shared by every level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszConfig {
    pub s: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub step: f64,
}

impl Default for RieszConfig {
    fn default() -> Self {
        let d = RieszOptions::default();
        RieszConfig {
            s: 2.0,
            max_iters: d.max_iters,
            tol: d.tol,
            step: d.step,
        }
    }
}

/// A fully resolved convergence experiment.
#[derive(Debug, Clone, Serialize)]
pub struct StudyConfig {
    pub manifold: String,
    #[serde(serialize_with = "as_display")]
    pub kernel: Kernel,
    #[serde(serialize_with = "as_display")]
    pub target: TargetSpec,
    pub hierarchy: Vec<usize>,
    pub grid_resolution: Vec<usize>,
    pub geodesic: GeodesicConfig,
    pub nodes: RieszConfig,
    pub seed: u64,
    pub trailing: usize,
    /// Allowed |fitted − predicted| slope gap under `--check`.
    pub tolerance: f64,
    pub ridge: Option<f64>,
    pub output_dir: PathBuf,
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl StudyConfig {
    /// Defaults for `manifold`: the paper's hierarchies (the surface one cut
    /// at 2000 nodes), grids and the Wendland kernel with a β = 4 target.
    pub fn defaults_for(manifold: &str) -> Result<Self> {
        let m = builtin(manifold)?;
        let k = m.intrinsic_dim();
        let (hierarchy, grid) = match (manifold, k) {
            ("torus", _) => (vec![500, 750, 1000, 2000], vec![180, 135]),
            (_, 1) => (vec![50, 100, 200, 300, 400, 500], vec![3000]),
            _ => (vec![100, 200, 400, 800], vec![180, 135]),
        };
        Ok(StudyConfig {
            manifold: manifold.to_string(),
            kernel: Kernel::wendland32(crate::kernels::DEFAULT_DELTA)?,
            target: TargetSpec::FBeta {
                beta: 4.0,
                m: None,
                seed: crate::targets::DEFAULT_TARGET_SEED,
            },
            hierarchy,
            grid_resolution: grid,
            geodesic: GeodesicConfig::default(),
            nodes: RieszConfig::default(),
            seed: 1,
            trailing: 4,
            tolerance: 0.5,
            ridge: None,
            output_dir: PathBuf::from("out"),
        })
    }

    /// Consistency checks; every problem is reported.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let m = builtin(&self.manifold);
        if let Err(Error::Config(e)) = &m {
            problems.extend(e.iter().cloned());
        }
        if self.hierarchy.is_empty() {
            problems.push("hierarchy.n is empty".to_string());
        }
        if self.hierarchy.windows(2).any(|w| w[1] <= w[0]) {
            problems.push(format!(
                "hierarchy.n must be strictly increasing, got {:?}",
                self.hierarchy
            ));
        }
        if self.hierarchy.first() == Some(&0) {
            problems.push("hierarchy.n entries must be positive".to_string());
        }
        if let Ok(m) = &m {
            let k = m.intrinsic_dim();
            if self.grid_resolution.len() != k {
                problems.push(format!("grid.resolution needs {k} entries for {}", self.manifold));
            }
            if let Some(r) = &self.geodesic.resolution {
                if r.len() != k {
                    problems.push(format!("geodesic.resolution needs {k} entries for {}", self.manifold));
                }
            }
        }
        if self.grid_resolution.iter().any(|&n| n < 2) {
            problems.push("grid.resolution entries must be at least 2".to_string());
        }
        if self.geodesic.knn == 0 {
            problems.push("geodesic.knn must be positive".to_string());
        }
        if self.trailing < 2 {
            problems.push("study.trailing must be at least 2".to_string());
        }
        if !(self.tolerance >= 0.0) {
            problems.push("study.tolerance must be non-negative".to_string());
        }
        if !(self.nodes.s > 0.0) {
            problems.push("nodes.s must be positive".to_string());
        }
        if !(self.nodes.step > 0.0) {
            problems.push("nodes.step must be positive".to_string());
        }
        if !(self.nodes.tol >= 0.0) {
            problems.push("nodes.tol must be non-negative".to_string());
        }
        if let Some(r) = self.ridge {
            if !(r >= 0.0) || !r.is_finite() {
                problems.push("interp.ridge must be finite and non-negative".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Seed for the node set of size `n`, derived from the study seed.
pub fn level_seed(seed: u64, n: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type CacheKey = (String, usize, u64, String);

/// Node sets and their measures, shared across studies that use the same
/// manifold, hierarchy, seed, optimizer and grids.
#[derive(Debug, Default)]
pub struct NodeCache {
    entries: Mutex<HashMap<CacheKey, Arc<NodeSet>>>,
}

impl NodeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every cached node set, ordered by manifold name and size.
    pub fn node_sets(&self) -> Vec<Arc<NodeSet>> {
        let map = self.entries.lock().unwrap();
        let mut keys: Vec<&CacheKey> = map.keys().collect();
        keys.sort();
        keys.into_iter().map(|k| map[k].clone()).collect()
    }
}

struct Setup {
    manifold: Arc<dyn ParametricManifold>,
    grid: EvaluationGrid,
    geodesic: Geodesic,
}

/// Runs every level of the hierarchy and fits slopes. Levels that fail are
/// recorded in their row and the run continues.
pub fn run_convergence(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    run_convergence_cached(cfg, &NodeCache::new())
}

pub fn run_convergence_cached(cfg: &StudyConfig, cache: &NodeCache) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let manifold = builtin(&cfg.manifold)?;
    let grid = quadrature_grid(manifold.as_ref(), &cfg.grid_resolution)?;
    let geodesic = Geodesic::build(manifold.clone(), &cfg.geodesic)?;
    let setup = Setup {
        manifold: manifold.clone(),
        grid,
        geodesic,
    };

    let target = cfg.target.build(manifold.clone())?;
    let exact = eval_target(&target, &setup.grid.points);

    let rows: Vec<LevelRow> = cfg
        .hierarchy
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let mut row = match run_level(cfg, &setup, cache, n, &target, &exact) {
                Ok(row) => row,
                Err(e) => {
                    log::warn!("level N = {n} failed: {e}");
                    LevelRow::failed(n, e.to_string())
                }
            };
            row.seconds = Some(start.elapsed().as_secs_f64());
            row
        })
        .collect();

    let k = manifold.intrinsic_dim();
    let predicted = predicted_rates(cfg.kernel.native_order(), k, Smoothness::from_beta(cfg.target.beta()));
    let mut flags = Vec::new();
    for r in rows.iter().filter(|r| r.error.is_some()) {
        flags.push(format!(
            "level N = {} failed: {}",
            r.n,
            r.error.as_deref().unwrap_or("")
        ));
    }
    let ok: Vec<&LevelRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    for w in ok.windows(2) {
        if !(w[1].h < w[0].h) {
            flags.push(format!("h does not decrease from N = {} to N = {}", w[0].n, w[1].n));
        }
    }
    let rhos: Vec<f64> = ok.iter().map(|r| r.rho).filter(|r| r.is_finite() && *r > 0.0).collect();
    if let (Some(lo), Some(hi)) = (
        rhos.iter().cloned().reduce(f64::min),
        rhos.iter().cloned().reduce(f64::max),
    ) {
        if hi >= 2.0 * lo {
            flags.push(format!("mesh ratio varies by {:.2}× across the hierarchy", hi / lo));
        }
    }

    let h: Vec<f64> = ok.iter().map(|r| r.h).collect();
    let slope = |e: Vec<f64>, name: &str, flags: &mut Vec<String>| match fit_slope(&h, &e, cfg.trailing) {
        Ok(s) => Some(s),
        Err(err) => {
            flags.push(format!("{name} slope unavailable: {err}"));
            None
        }
    };
    let l2 = slope(ok.iter().map(|r| r.rel_l2).collect(), "l2", &mut flags);
    let linf = slope(ok.iter().map(|r| r.rel_linf).collect(), "linf", &mut flags);

    let mut report = ConvergenceReport {
        config: cfg.clone(),
        rows,
        slopes: Slopes {
            l2,
            linf,
            trailing: cfg.trailing,
        },
        predicted,
        flags,
        within_tolerance: false,
    };
    report.within_tolerance = report.check_slopes().is_empty();
    for miss in report.check_slopes() {
        report.flags.push(miss);
    }
    Ok(report)
}

fn run_level(
    cfg: &StudyConfig,
    setup: &Setup,
    cache: &NodeCache,
    n: usize,
    target: &crate::targets::TargetFunction,
    exact: &[f64],
) -> Result<LevelRow> {
    let nodes = level_nodes(cfg, setup, cache, n)?;
    let mm = *nodes.measures().expect("cached node sets carry measures");
    let values = eval_target(target, nodes.points());
    let opts = FitOptions {
        ridge: cfg.ridge,
        ..FitOptions::default()
    };
    let interp = fit_points(&cfg.kernel, nodes.points(), &values, &opts)?;
    let approx = interp.evaluate(&setup.grid.points);
    let err = relative_errors_of(&approx, exact, &setup.grid.weights)?;
    Ok(LevelRow {
        n,
        h: mm.h,
        q: mm.q,
        rho: mm.rho,
        rel_l2: err.rel_l2,
        rel_linf: err.rel_linf,
        cond: interp.diagnostics().condition_estimate,
        seconds: None,
        error: None,
    })
}

fn level_nodes(cfg: &StudyConfig, setup: &Setup, cache: &NodeCache, n: usize) -> Result<Arc<NodeSet>> {
    let seed = level_seed(cfg.seed, n);
    let key: CacheKey = (
        cfg.manifold.clone(),
        n,
        seed,
        format!("{:?}|{:?}|{:?}", cfg.nodes, cfg.grid_resolution, cfg.geodesic),
    );
    if let Some(x) = cache.entries.lock().unwrap().get(&key) {
        return Ok(x.clone());
    }
    let opts = RieszOptions {
        seed,
        max_iters: cfg.nodes.max_iters,
        step: cfg.nodes.step,
        tol: cfg.nodes.tol,
    };
    let nodes = minimize_riesz(setup.manifold.clone(), n, cfg.nodes.s, &opts)?;
    let mm: MeshMeasures = mesh_measures(&nodes, &setup.grid, &setup.geodesic)?;
    let nodes = Arc::new(nodes.with_measures(mm));
    cache.entries.lock().unwrap().insert(key, nodes.clone());
    Ok(nodes)
}
