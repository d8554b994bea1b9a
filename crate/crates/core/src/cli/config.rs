//! Study configuration files: TOML with flat dotted keys.
//!
//! ```toml
//! manifold.name = "curve6lobe"
//! kernel.spec = "wendland32:delta=2.6666666666666665"
//! target.spec = "fbeta:beta=4,m=25,seed=7"
//! hierarchy.n = [50, 100, 200, 300, 400, 500]
//! grid.resolution = [3000]
//! seed = 1
//! ```
//!
//! Unset keys take the per-manifold defaults of [`StudyConfig::defaults_for`].

use std::path::{Path, PathBuf};

use toml::Value;

use crate::study::StudyConfig;
use crate::{Error, Result};

/// Configurations shipped with the binary, addressable by name.
pub const BUNDLED: [(&str, &str); 6] = [
    ("curve_beta4", include_str!("../../configs/curve_beta4.toml")),
    ("curve_beta3_5", include_str!("../../configs/curve_beta3_5.toml")),
    ("curve_poly", include_str!("../../configs/curve_poly.toml")),
    ("torus_beta4", include_str!("../../configs/torus_beta4.toml")),
    ("torus_beta3_5", include_str!("../../configs/torus_beta3_5.toml")),
    ("torus_poly", include_str!("../../configs/torus_poly.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads `spec` as a file path, or as a bundled config name when no such
/// file exists. Returns the config and a stem for output files.
pub fn load(spec: &str) -> Result<(StudyConfig, String)> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "study".into());
        return Ok((parse(&text)?, stem));
    }
    match bundled(spec) {
        Some(text) => Ok((parse(text)?, spec.to_string())),
        None => Err(Error::config(format!(
            "'{spec}' is neither a readable file nor a bundled config ({})",
            BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Flattens nested tables into (dotted key, value) pairs.
fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

const KEYS: [&str; 16] = [
    "manifold.name",
    "kernel.spec",
    "target.spec",
    "hierarchy.n",
    "grid.resolution",
    "geodesic.resolution",
    "geodesic.knn",
    "nodes.s",
    "nodes.max_iters",
    "nodes.tol",
    "nodes.step",
    "study.trailing",
    "study.tolerance",
    "seed",
    "output.dir",
    "interp.ridge",
];

/// Parses config text. Every unknown key, wrong type and invalid value is
/// collected into one [`Error::Config`].
pub fn parse(text: &str) -> Result<StudyConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config(format!("invalid TOML: {}", e.message())))?;
    let mut entries = Vec::new();
    flatten("", &table, &mut entries);

    let mut problems: Vec<String> = entries
        .iter()
        .filter(|(k, _)| !KEYS.contains(&k.as_str()))
        .map(|(k, _)| format!("unknown key '{k}'"))
        .collect();
    let get = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, v)| v);

    let name = match get("manifold.name") {
        Some(Value::String(s)) => s.clone(),
        Some(v) => {
            problems.push(format!("manifold.name must be a string, got {}", v.type_str()));
            return Err(Error::Config(problems));
        }
        None => {
            problems.push("manifold.name is required".into());
            return Err(Error::Config(problems));
        }
    };
    let mut cfg = match StudyConfig::defaults_for(&name) {
        Ok(c) => c,
        Err(e) => {
            problems.push(e.to_string());
            return Err(Error::Config(problems));
        }
    };

    for (key, v) in &entries {
        let r: std::result::Result<(), String> = match key.as_str() {
            "manifold.name" => Ok(()),
            "kernel.spec" => string(key, v).and_then(|s| s.parse().map(|k| cfg.kernel = k).map_err(msg)),
            "target.spec" => string(key, v).and_then(|s| s.parse().map(|t| cfg.target = t).map_err(msg)),
            "hierarchy.n" => counts(key, v).map(|n| cfg.hierarchy = n),
            "grid.resolution" => counts(key, v).map(|n| cfg.grid_resolution = n),
            "geodesic.resolution" => counts(key, v).map(|n| cfg.geodesic.resolution = Some(n)),
            "geodesic.knn" => count(key, v).map(|n| cfg.geodesic.knn = n),
            "nodes.s" => float(key, v).map(|x| cfg.nodes.s = x),
            "nodes.max_iters" => count(key, v).map(|n| cfg.nodes.max_iters = n),
            "nodes.tol" => float(key, v).map(|x| cfg.nodes.tol = x),
            "nodes.step" => float(key, v).map(|x| cfg.nodes.step = x),
            "study.trailing" => count(key, v).map(|n| cfg.trailing = n),
            "study.tolerance" => float(key, v).map(|x| cfg.tolerance = x),
            "seed" => count(key, v).map(|n| cfg.seed = n as u64),
            "output.dir" => string(key, v).map(|s| cfg.output_dir = PathBuf::from(s)),
            "interp.ridge" => float(key, v).map(|x| cfg.ridge = Some(x)),
            _ => Ok(()),
        };
        if let Err(m) = r {
            problems.push(m);
        }
    }
    if let Err(Error::Config(more)) = cfg.validate() {
        problems.extend(more);
    }
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(problems))
    }
}

fn msg(e: Error) -> String {
    match e {
        Error::Config(v) => v.join("; "),
        other => other.to_string(),
    }
}

fn string<'a>(key: &str, v: &'a Value) -> std::result::Result<&'a str, String> {
    v.as_str()
        .ok_or_else(|| format!("{key} must be a string, got {}", v.type_str()))
}

fn float(key: &str, v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(format!("{key} must be a number, got {}", v.type_str())),
    }
}

fn count(key: &str, v: &Value) -> std::result::Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(format!("{key} must be a non-negative integer, got {v}")),
    }
}

fn counts(key: &str, v: &Value) -> std::result::Result<Vec<usize>, String> {
    match v {
        Value::Array(a) => a.iter().map(|x| count(key, x)).collect(),
        _ => Err(format!("{key} must be an array of integers, got {}", v.type_str())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use crate::targets::TargetSpec;

    #[test]
    fn bundled_configs_parse() {
        for (name, text) in BUNDLED {
            let cfg = parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(matches!(cfg.kernel, Kernel::Wendland32 { delta } if delta == 8.0 / 3.0));
            let torus = name.starts_with("torus");
            assert_eq!(cfg.manifold, if torus { "torus" } else { "curve6lobe" });
            assert_eq!(cfg.target == TargetSpec::Poly, name.ends_with("poly"), "{name}");
        }
        assert!(bundled("nope").is_none());
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let a = parse("manifold.name = \"torus\"\nhierarchy.n = [10, 20]\n").unwrap();
        let b = parse("[manifold]\nname = \"torus\"\n[hierarchy]\nn = [10, 20]\n").unwrap();
        assert_eq!(a.hierarchy, b.hierarchy);
        assert_eq!(a.grid_resolution, vec![180, 135]);
    }

    #[test]
    fn all_problems_reported_together() {
        let text = r#"
manifold.name = "curve6lobe"
kernel.spec = "gauss:eps=1"
hierarchy.n = [100, 50]
grid.resolution = "many"
nodes.colour = 3
seed = -1
"#;
        let Err(Error::Config(p)) = parse(text) else { panic!() };
        assert_eq!(p.len(), 5, "{p:?}");
        assert!(p.iter().any(|m| m.contains("nodes.colour")));
        assert!(p.iter().any(|m| m.contains("gauss")));
        assert!(p.iter().any(|m| m.contains("strictly increasing")));
    }

    #[test]
    fn missing_or_unknown_manifold() {
        assert!(matches!(parse("seed = 2"), Err(Error::Config(_))));
        let Err(Error::Config(p)) = parse("manifold.name = \"klein\"\nfoo = 1") else {
            panic!()
        };
        assert_eq!(p.len(), 2);
    }
}
