//! `orbitspace`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration, 3 unsupported
//! stabilizer or group, 4 certificate search exhausted, 5 certificate
//! precondition violated, 6 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde_json::Value;

use orbitspace_tangent::config::{
    load_config, parse_grid, parse_points, parse_vector, ActionConfig,
};
use orbitspace_tangent::report;
use orbitspace_tangent::strata::stratify;
use orbitspace_tangent::tangent::{
    group_average, internal_tangent_space, oracle_at, relation_certificate, PointAnalysis,
};
use orbitspace_tangent::Error;

#[derive(Parser)]
#[command(
    name = "orbitspace",
    version,
    about = "Internal tangent spaces of linear orbit spaces"
)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the matching tolerance; the rank tolerance becomes a tenth of it.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Internal tangent space at one point.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Also run the relation-span oracle.
        #[arg(long)]
        oracle: bool,
        /// Also certify this (ambient, slice) vector.
        #[arg(long, allow_hyphen_values = true)]
        certify: Option<String>,
    },
    /// Orbit-type strata of a point list or grid.
    Stratify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        points: Option<PathBuf>,
        /// Grid spec such as "r=1,stride=0.5".
        #[arg(long)]
        grid: Option<String>,
        /// Overrides the Haar seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Relation certificate for a vector at a point.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, allow_hyphen_values = true)]
        vector: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_attempts: usize,
    },
    /// Averaging projector of the whole group and its fixed subspace.
    Average {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Config(Error),
    Run(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Config(_) => 2,
            Failure::Run(e) => match e {
                Error::Config(_) => 2,
                Error::UnsupportedStabilizer(_)
                | Error::UnsupportedGroup(_)
                | Error::UnsupportedScheme(_) => 3,
                Error::CertificateExhausted { .. } => 4,
                Error::FixedComponent { .. } | Error::NotInSlice { .. } => 5,
                _ => 6,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Config(e) | Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn config(path: &PathBuf, tolerance: Option<f64>) -> Result<ActionConfig, Failure> {
    let mut config = load_config(path).map_err(Failure::Config)?;
    if let Some(t) = tolerance {
        config.settings.tolerance.match_eps = t;
        config.settings.tolerance.rank_eps = t / 10.0;
        config
            .settings
            .tolerance
            .validate()
            .map_err(|e| Failure::Usage(format!("--tolerance: {e}")))?;
    }
    Ok(config)
}

fn vector_arg(flag: &str, text: &str, n: usize) -> Result<DVector<f64>, Failure> {
    parse_vector(text, n).map_err(|e| Failure::Usage(format!("--{flag}: {e}")))
}

fn certificate(
    config: &ActionConfig,
    analysis: &PointAnalysis,
    v: &DVector<f64>,
    max_attempts: usize,
    seed: u64,
) -> Result<Value, Failure> {
    let tol = &config.settings.tolerance;
    let slice = &analysis.context.slice;
    let residual = slice.residual(v);
    if residual > tol.match_eps * (1.0 + v.norm()) {
        return Err(Error::NotInSlice { residual }.into());
    }
    let coords = slice.coordinates(v);
    let cert = relation_certificate(analysis, &coords, max_attempts, seed, tol)?;
    Ok(report::certificate_body(v, &coords, &cert, config))
}

fn run(cli: Cli) -> Result<Value, Failure> {
    match cli.command {
        Command::Analyze {
            config: path,
            point,
            oracle,
            certify,
        } => {
            let config = config(&path, cli.tolerance)?;
            let x = vector_arg("point", &point, config.dimension)?;
            let v = certify
                .map(|c| vector_arg("certify", &c, config.dimension))
                .transpose()?;
            let analysis = internal_tangent_space(&config.spec, &x, &config.settings)?;
            let seed = config.settings.haar.seed;
            let oracle = if oracle {
                Some(oracle_at(&analysis, seed, &config.settings.tolerance)?)
            } else {
                None
            };
            let cert = v
                .map(|v| certificate(&config, &analysis, &v, 10_000, seed))
                .transpose()?;
            Ok(report::analysis_report(
                &config,
                &analysis,
                oracle.as_ref(),
                cert.as_ref(),
            ))
        }
        Command::Stratify {
            config: path,
            points,
            grid,
            seed,
        } => {
            let mut config = config(&path, cli.tolerance)?;
            if let Some(seed) = seed {
                config.settings.haar.seed = seed;
            }
            let n = config.dimension;
            let pts = match (points, grid) {
                (Some(p), _) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| Failure::Usage(format!("--points {}: {e}", p.display())))?;
                    parse_points(&text, n).map_err(|e| Failure::Usage(format!("--points: {e}")))?
                }
                (None, Some(g)) => {
                    parse_grid(&g, n).map_err(|e| Failure::Usage(format!("--grid: {e}")))?
                }
                (None, None) => return Err(Failure::Usage("need --points or --grid".into())),
            };
            let rep = stratify(&config.spec, &pts, &config.settings)?;
            Ok(report::stratify_report(&config, &rep))
        }
        Command::Certify {
            config: path,
            point,
            vector,
            seed,
            max_attempts,
        } => {
            let config = config(&path, cli.tolerance)?;
            let x = vector_arg("point", &point, config.dimension)?;
            let v = vector_arg("vector", &vector, config.dimension)?;
            if max_attempts == 0 {
                return Err(Failure::Usage("--max-attempts must be positive".into()));
            }
            let analysis = internal_tangent_space(&config.spec, &x, &config.settings)?;
            let body = certificate(&config, &analysis, &v, max_attempts, seed)?;
            Ok(report::certificate_report(&config, &x, seed, body))
        }
        Command::Average { config: path } => {
            let config = config(&path, cli.tolerance)?;
            let (op, fixed) = group_average(&config.spec, &config.settings)?;
            Ok(report::average_report(&config, &op, &fixed))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out = cli.out.clone();
    let text = run(cli).and_then(|v| report::to_canonical_string(&v).map_err(Failure::Run));
    match text {
        Ok(text) => {
            let written = match &out {
                Some(path) => std::fs::write(path, text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: --out: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
