//! Command implementations behind the `manikern` binary.
//!
//! Argument parsing lives in the binary; everything here takes resolved
//! values, writes its files and returns what the binary prints.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::interp::{fit_points, FitDiagnostics, FitOptions};
use crate::kernels::Kernel;
use crate::manifold::{builtin, quadrature_grid, Geodesic, GeodesicConfig, Param};
use crate::nodeset::{mesh_measures, minimize_riesz, MeshMeasures, NodeSet, RieszOptions};
use crate::study::{run_convergence, ConvergenceReport, StudyConfig};
use crate::{Error, Point3, Result};

/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "MANIKERN_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`] if set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    // A second call (tests) finds the pool already built; that is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

#[derive(Debug, Clone, Serialize)]
pub struct NodesRequest {
    pub manifold: String,
    pub n: usize,
    pub s: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub step: f64,
    pub tol: f64,
    /// Grid used for the fill distance; `None` takes the manifold default.
    pub grid: Option<Vec<usize>>,
    pub geodesic: GeodesicConfig,
}

impl NodesRequest {
    pub fn new(manifold: &str, n: usize) -> Self {
        let d = RieszOptions::default();
        NodesRequest {
            manifold: manifold.to_string(),
            n,
            s: 2.0,
            seed: 1,
            max_iters: d.max_iters,
            step: d.step,
            tol: d.tol,
            grid: None,
            geodesic: GeodesicConfig::default(),
        }
    }
}

fn default_grid(manifold: &str) -> Result<Vec<usize>> {
    Ok(StudyConfig::defaults_for(manifold)?.grid_resolution)
}

/// Generates a Riesz node set, writes it as CSV to `out` and returns a JSON
/// summary with its mesh measures.
pub fn nodes(req: &NodesRequest, out: &Path) -> Result<serde_json::Value> {
    let m = builtin(&req.manifold)?;
    let opts = RieszOptions {
        seed: req.seed,
        max_iters: req.max_iters,
        step: req.step,
        tol: req.tol,
    };
    let set = minimize_riesz(m.clone(), req.n, req.s, &opts)?;
    let grid_res = match &req.grid {
        Some(g) => g.clone(),
        None => default_grid(&req.manifold)?,
    };
    let grid = quadrature_grid(m.as_ref(), &grid_res)?;
    let geo = Geodesic::build(m, &req.geodesic)?;
    let mm = mesh_measures(&set, &grid, &geo)?;

    let config = serde_json::to_string(req).expect("request serializes");
    write_file(out, &node_csv(&set, &config))?;
    Ok(json!({
        "manifold": req.manifold,
        "N": set.len(),
        "provenance": set.provenance(),
        "measures": mm,
        "output": out,
    }))
}

/// Node set as CSV: a `# config:` line, then parameters and ambient points.
pub fn node_csv(set: &NodeSet, config: &str) -> String {
    let k = set.manifold().intrinsic_dim();
    let mut s = format!("# config: {config}\n");
    s.push_str(if k == 1 {
        "theta,x,y,z\n"
    } else {
        "theta,lambda,x,y,z\n"
    });
    for (t, p) in set.params().iter().zip(set.points()) {
        if k == 1 {
            let _ = writeln!(s, "{},{},{},{}", t[0], p[0], p[1], p[2]);
        } else {
            let _ = writeln!(s, "{},{},{},{},{}", t[0], t[1], p[0], p[1], p[2]);
        }
    }
    s
}

/// Parameters from a node CSV written by [`node_csv`].
pub fn parse_node_csv(text: &str, intrinsic_dim: usize) -> Result<Vec<Param>> {
    let header: &[&str] = if intrinsic_dim == 1 {
        &["theta", "x", "y", "z"]
    } else {
        &["theta", "lambda", "x", "y", "z"]
    };
    let rows = read_table(text, header)?;
    Ok(rows
        .iter()
        .map(|r| if intrinsic_dim == 1 { [r[0], 0.0] } else { [r[0], r[1]] })
        .collect())
}

/// Mesh measures of the node file `path` on `manifold`.
pub fn mesh(manifold: &str, path: &Path, grid: Option<Vec<usize>>, geodesic: &GeodesicConfig) -> Result<MeshMeasures> {
    let m = builtin(manifold)?;
    let params = parse_node_csv(&fs::read_to_string(path)?, m.intrinsic_dim())?;
    let set = NodeSet::from_params(m.clone(), &params)?;
    let grid_res = match grid {
        Some(g) => g,
        None => default_grid(manifold)?,
    };
    let grid = quadrature_grid(m.as_ref(), &grid_res)?;
    let geo = Geodesic::build(m, geodesic)?;
    mesh_measures(&set, &grid, &geo)
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpSummary {
    pub kernel: String,
    pub nodes: usize,
    pub evaluated: usize,
    #[serde(flatten)]
    pub diagnostics: FitDiagnostics,
    pub output: PathBuf,
}

/// Fits `kernel` to the `x,y,z,value` rows of `data`, evaluates at the
/// `x,y,z` rows of `eval` and writes `x,y,z,value` CSV to `out`.
pub fn interp(kernel: &Kernel, data: &Path, eval: &Path, ridge: Option<f64>, out: &Path) -> Result<InterpSummary> {
    let rows = read_table(&fs::read_to_string(data)?, &["x", "y", "z", "value"]).map_err(|e| in_file(data, e))?;
    let at = read_table(&fs::read_to_string(eval)?, &["x", "y", "z"]).map_err(|e| in_file(eval, e))?;
    let centers: Vec<Point3> = rows.iter().map(|r| [r[0], r[1], r[2]]).collect();
    let values: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let pts: Vec<Point3> = at.iter().map(|r| [r[0], r[1], r[2]]).collect();

    let opts = FitOptions {
        ridge,
        ..FitOptions::default()
    };
    let fitted = fit_points(kernel, &centers, &values, &opts)?;
    let vals = fitted.evaluate(&pts);

    let config = json!({ "kernel": kernel.spec(), "data": data, "eval": eval, "ridge": ridge });
    let mut s = format!("# config: {config}\nx,y,z,value\n");
    for (p, v) in pts.iter().zip(&vals) {
        let _ = writeln!(s, "{},{},{},{}", p[0], p[1], p[2], v);
    }
    write_file(out, &s)?;
    Ok(InterpSummary {
        kernel: kernel.spec(),
        nodes: centers.len(),
        evaluated: pts.len(),
        diagnostics: *fitted.diagnostics(),
        output: out.to_path_buf(),
    })
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// Runs the study named by `spec` (a file or a bundled config name) and
/// writes its CSV, JSON and plot script into `out` (default: the config's
/// output directory).
pub fn converge(spec: &str, out: Option<&Path>, timing: bool) -> Result<(ConvergenceReport, Vec<PathBuf>)> {
    let (cfg, stem) = config::load(spec)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    let report = run_convergence(&cfg)?;
    let files = report.write(&dir, &stem, timing)?;
    Ok((report, files))
}

/// Compact JSON summary of a finished study.
pub fn converge_summary(report: &ConvergenceReport, files: &[PathBuf]) -> serde_json::Value {
    json!({
        "manifold": report.config.manifold,
        "target": report.config.target.to_string(),
        "slopes": report.slopes,
        "predicted": report.predicted,
        "within_tolerance": report.within_tolerance,
        "flags": report.flags,
        "files": files,
    })
}

/// Numeric table with a fixed header; `#` lines and blank lines are skipped.
/// Errors carry the 1-based line number.
pub fn read_table(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen {
            if fields != header {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header '{}', found '{line}'", header.join(",")),
                });
            }
            seen = true;
            continue;
        }
        if fields.len() != header.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        let mut row = Vec::with_capacity(fields.len());
        for (f, name) in fields.iter().zip(header) {
            match f.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("{name} = '{f}' is not a finite number"),
                    })
                }
            }
        }
        rows.push(row);
    }
    if !seen {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!("missing header '{}'", header.join(",")),
        });
    }
    Ok(rows)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}
