use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use manikern::cli::{self, NodesRequest};
use manikern::kernels::Kernel;
use manikern::manifold::GeodesicConfig;

/// Kernel interpolation on curves and surfaces in ℝ³.
#[derive(Parser)]
#[command(name = "manikern", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a near-minimal Riesz energy node set.
    Nodes {
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        /// Evaluation grid for the fill distance, e.g. `180,135`.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Geodesic graph resolution on surfaces, e.g. `360,270`.
        #[arg(long, value_delimiter = ',')]
        geodesic: Option<Vec<usize>>,
        #[arg(long, default_value = "nodes.csv")]
        out: PathBuf,
    },
    /// Fill distance, separation radius and mesh ratio of a node file.
    Mesh {
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        geodesic: Option<Vec<usize>>,
        #[arg(long, default_value_t = 16)]
        knn: usize,
    },
    /// Interpolate scattered `x,y,z,value` data and evaluate elsewhere.
    Interp {
        /// e.g. `wendland32:delta=2.6666666666666665` or `matern:nu=2.75`.
        #[arg(long)]
        kernel: Kernel,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        ridge: Option<f64>,
        #[arg(long, default_value = "interp.csv")]
        out: PathBuf,
    },
    /// Run a convergence study from a config file or bundled config name.
    Converge {
        #[arg(long)]
        config: String,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 1 if a fitted slope misses its prediction.
        #[arg(long)]
        check: bool,
        /// Record wall-clock seconds per level.
        #[arg(long)]
        timing: bool,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    cli::configure_threads()?;
    match cli.command {
        Command::Nodes {
            manifold,
            n,
            s,
            seed,
            max_iters,
            grid,
            geodesic,
            out,
        } => {
            let req = NodesRequest {
                s,
                seed,
                max_iters,
                grid,
                geodesic: GeodesicConfig {
                    resolution: geodesic,
                    ..Default::default()
                },
                ..NodesRequest::new(&manifold, n)
            };
            let summary = cli::nodes(&req, &out).context("generating nodes")?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Mesh {
            manifold,
            nodes,
            grid,
            geodesic,
            knn,
        } => {
            let geo = GeodesicConfig {
                resolution: geodesic,
                knn,
            };
            let mm =
                cli::mesh(&manifold, &nodes, grid, &geo).with_context(|| format!("measuring {}", nodes.display()))?;
            println!("{}", serde_json::to_string_pretty(&mm)?);
        }
        Command::Interp {
            kernel,
            data,
            eval,
            ridge,
            out,
        } => {
            let summary = cli::interp(&kernel, &data, &eval, ridge, &out).context("interpolating")?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Converge {
            config,
            out,
            check,
            timing,
        } => {
            let (report, files) =
                cli::converge(&config, out.as_deref(), timing).with_context(|| format!("running study '{config}'"))?;
            println!(
                "{}",
                serde_json::to_string_pretty(&cli::converge_summary(&report, &files))?
            );
            for f in &report.flags {
                log::warn!("{f}");
            }
            if check && !report.within_tolerance {
                eprintln!("slope check failed");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
