use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{RateDerivation, StudyConfig};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "N,h,q,rho,rel_l2,rel_linf,cond,seconds";

/// One hierarchy level. Failed levels carry NaN measurements and the error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub q: f64,
    pub rho: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
    pub cond: f64,
    pub seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl LevelRow {
    pub(crate) fn failed(n: usize, error: String) -> Self {
        LevelRow {
            n,
            h: f64::NAN,
            q: f64::NAN,
            rho: f64::NAN,
            rel_l2: f64::NAN,
            rel_linf: f64::NAN,
            cond: f64::NAN,
            seconds: None,
            error: Some(error),
        }
    }

    fn csv_line(&self, timing: bool) -> String {
        let secs = match (timing, self.seconds) {
            (true, Some(s)) => format!("{s:.3}"),
            _ => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n, self.h, self.q, self.rho, self.rel_l2, self.rel_linf, self.cond, secs
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slopes {
    pub l2: Option<f64>,
    pub linf: Option<f64>,
    pub trailing: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub rows: Vec<LevelRow>,
    pub slopes: Slopes,
    pub predicted: RateDerivation,
    /// Non-fatal findings: failed levels, non-decreasing h, ρ drift, slope misses.
    pub flags: Vec<String>,
    /// Every predicted rate matched within `config.tolerance`.
    pub within_tolerance: bool,
}

impl ConvergenceReport {
    /// Slopes that miss their prediction by more than the tolerance.
    pub fn check_slopes(&self) -> Vec<String> {
        let tol = self.config.tolerance;
        let mut out = Vec::new();
        for (name, fitted, pred) in [
            ("l2", self.slopes.l2, &self.predicted.l2),
            ("linf", self.slopes.linf, &self.predicted.linf),
        ] {
            let Some(rate) = pred.rate() else { continue };
            match fitted {
                Some(s) if (s - rate).abs() <= tol => {}
                Some(s) => out.push(format!(
                    "{name} slope {s:.3} misses predicted {rate} by more than {tol}"
                )),
                None => out.push(format!("{name} slope missing; predicted {rate}")),
            }
        }
        out
    }

    /// One-line JSON of the resolved configuration.
    pub fn config_line(&self) -> String {
        serde_json::to_string(&self.config).expect("config serializes")
    }

    /// CSV with a leading `# config:` comment. The seconds column stays empty
    /// unless `timing` is set, keeping the file reproducible.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = format!("# config: {}\n{CSV_HEADER}\n", self.config_line());
        for r in &self.rows {
            out.push_str(&r.csv_line(timing));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, timing: bool) -> String {
        let mut copy = self.clone();
        if !timing {
            for r in &mut copy.rows {
                r.seconds = None;
            }
        }
        let mut s = serde_json::to_string_pretty(&copy).expect("report serializes");
        s.push('\n');
        s
    }

    /// A matplotlib script drawing both relative errors against h on log–log
    /// axes with dashed guide lines at the predicted rates, anchored at the
    /// finest level.
    pub fn plot_script(&self, csv_name: &str) -> String {
        let rate = |p: &super::Prediction| p.rate().map_or("None".to_string(), |r| format!("{r}"));
        format!(
            r##"# config: {config}
import csv
import matplotlib.pyplot as plt

rows = [r for r in csv.DictReader(l for l in open("{csv_name}") if not l.startswith("#"))]
rows = [r for r in rows if r["rel_l2"] not in ("NaN", "nan")]
h = [float(r["h"]) for r in rows]
l2 = [float(r["rel_l2"]) for r in rows]
linf = [float(r["rel_linf"]) for r in rows]

fig, ax = plt.subplots(figsize=(5, 4))
ax.loglog(h, l2, "o-", mfc="none", label=r"relative $\ell_2$")
ax.loglog(h, linf, "x-", label=r"relative $\ell_\infty$")
for rate, e, style, name in (({l2}, l2, "--", r"$\ell_2$"), ({linf}, linf, "-.", r"$\ell_\infty$")):
    if rate is None:
        continue
    ax.loglog(h, [e[-1] * (x / h[-1]) ** rate for x in h], "k" + style, lw=0.8,
              label=name + r" predicted $h^{{" + f"{{rate:g}}" + "}}$")
ax.set_xlabel("fill distance $h$")
ax.set_ylabel("relative error")
ax.set_title("{manifold}, {target}")
ax.legend()
fig.tight_layout()
fig.savefig("{stem}.pdf")
"##,
            config = self.config_line(),
            csv_name = csv_name,
            l2 = rate(&self.predicted.l2),
            linf = rate(&self.predicted.linf),
            manifold = self.config.manifold,
            target = self.config.target,
            stem = csv_name.trim_end_matches(".csv"),
        )
    }

    /// Writes `<stem>.csv`, `<stem>.json` and `<stem>_plot.py` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str, timing: bool) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        let plot = dir.join(format!("{stem}_plot.py"));
        fs::write(&csv, self.to_csv(timing))?;
        fs::write(&json, self.to_json(timing))?;
        fs::write(&plot, self.plot_script(&format!("{stem}.csv")))?;
        Ok(vec![csv, json, plot])
    }
}

/// Reads rows back from [`ConvergenceReport::to_csv`] output. Comment lines
/// are skipped; error messages are not part of the CSV.
pub fn parse_csv(text: &str) -> Result<Vec<LevelRow>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != CSV_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header '{CSV_HEADER}', found '{line}'"),
                });
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 8 fields, found {}", f.len()),
            });
        }
        let num = |j: usize| -> Result<f64> {
            f[j].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("field {} = '{}' is not a number", j + 1, f[j]),
            })
        };
        rows.push(LevelRow {
            n: f[0].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("N = '{}' is not a count", f[0]),
            })?,
            h: num(1)?,
            q: num(2)?,
            rho: num(3)?,
            rel_l2: num(4)?,
            rel_linf: num(5)?,
            cond: num(6)?,
            seconds: if f[7].is_empty() { None } else { Some(num(7)?) },
            error: None,
        });
    }
    if !header_seen {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "missing CSV header".into(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::{predicted_rates, Smoothness};

    fn report() -> ConvergenceReport {
        let rows = vec![
            LevelRow {
                n: 50,
                h: 0.123_456_789_012_345_67,
                q: 0.1,
                rho: 1.234_567_890_123_456_7,
                rel_l2: 1.5e-3,
                rel_linf: 2.25e-3,
                cond: 3.3e9,
                seconds: Some(0.25),
                error: None,
            },
            LevelRow {
                n: 100,
                h: 0.06,
                q: f64::INFINITY,
                rho: 0.0,
                rel_l2: 1e-300,
                rel_linf: 7e-5,
                cond: 1e12,
                seconds: Some(1.5),
                error: None,
            },
        ];
        ConvergenceReport {
            config: StudyConfig::defaults_for("curve6lobe").unwrap(),
            rows,
            slopes: Slopes {
                l2: Some(3.1),
                linf: Some(1.0),
                trailing: 2,
            },
            predicted: predicted_rates(4.0, 1, Smoothness::Finite(4.0)),
            flags: vec![],
            within_tolerance: false,
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = report();
        let text = r.to_csv(true);
        assert!(text.starts_with("# config: {"));
        assert_eq!(parse_csv(&text).unwrap(), r.rows);
        let untimed = parse_csv(&r.to_csv(false)).unwrap();
        assert!(untimed.iter().all(|row| row.seconds.is_none()));
        assert_eq!(untimed[0].h, r.rows[0].h);
    }

    #[test]
    fn csv_parse_errors_name_the_line() {
        let text = format!("# c\n{CSV_HEADER}\n50,0.1,0.1,1,1e-3,1e-3,10,\n60,0.1,x,1,1e-3,1e-3,10,\n");
        assert!(matches!(parse_csv(&text), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(parse_csv("N,h\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn slope_check() {
        let r = report();
        let misses = r.check_slopes();
        assert_eq!(misses.len(), 1);
        assert!(misses[0].starts_with("linf"));
    }

    #[test]
    fn json_and_plot() {
        let r = report();
        let v: serde_json::Value = serde_json::from_str(&r.to_json(false)).unwrap();
        assert_eq!(v["config"]["manifold"], "curve6lobe");
        assert_eq!(v["config"]["kernel"], "wendland32:delta=2.6666666666666665");
        assert_eq!(v["predicted"]["l2"]["rate"], 3.0);
        assert!(v["rows"][0]["seconds"].is_null());
        let p = r.plot_script("curve.csv");
        assert!(p.starts_with("# config: "));
        assert!(p.contains("((3, l2"));
        assert!(p.contains("curve.pdf"));
    }
}
