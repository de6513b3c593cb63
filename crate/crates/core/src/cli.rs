//! Subcommand implementations behind the `hyperroute` binary.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration or usage error,
//! 3 bad input data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::costing::Evaluation;
use crate::export::{self, GenomeFile, Report};
use crate::geometry::{self, G};
use crate::pipeline::{self, Optimized};
use crate::terrain::{parse_arcgrid, LocalFrame};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(m) => CliError::Usage(m),
            ConfigError::Data(m) => CliError::Data(m),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Internal(format!("{}: {e}", path.display()))
}

/// Parses an ArcGrid file and summarises it.
pub fn validate_dem(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let grid =
        parse_arcgrid(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (min_lat, min_lon, max_lat, max_lon) = grid.hull_latlon();
    let range = match grid.elevation_range() {
        Some((lo, hi)) => format!("[{lo},{hi}]"),
        None => "[]".to_string(),
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}×{}, range {range}, nodata {}",
        grid.ncols(),
        grid.nrows(),
        grid.nodata_count()
    );
    let _ = writeln!(out, "cellsize {} deg", grid.cellsize());
    let _ = writeln!(
        out,
        "node hull lat [{min_lat}, {max_lat}], lon [{min_lon}, {max_lon}]"
    );
    Ok(out)
}

pub struct OptimizeArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.ga.rng_seed = seed;
    }
    Ok(cfg)
}

/// Runs the optimiser and writes all five artifacts; returns the output
/// directory and the result.
pub fn optimize(args: &OptimizeArgs) -> Result<(PathBuf, Optimized), CliError> {
    let cfg = load_config(&args.config, args.seed)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let problem = cfg.problem()?;
    let result = pipeline::optimize(&problem, &cfg.ga, args.workers)
        .map_err(|e| CliError::Internal(e.to_string()))?;

    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    let ev = &result.evaluation;
    let path = out.join("best_genome.json");
    export::write_json(
        &path,
        &GenomeFile::new(&result.run.best, problem.frame, &cfg),
    )
    .map_err(io_err(&path))?;
    let path = out.join("history.csv");
    std::fs::write(&path, export::history_csv(&result.run.history)).map_err(io_err(&path))?;
    write_route(&out, &problem.frame, ev)?;
    let report = Report::new(&cfg, Some(cfg.ga.generations), ev.breakdown, ev.metrics);
    let path = out.join("report.json");
    export::write_json(&path, &report).map_err(io_err(&path))?;
    Ok((out, result))
}

fn write_route(out: &Path, frame: &LocalFrame, ev: &Evaluation) -> Result<(), CliError> {
    let path = out.join("profile.csv");
    std::fs::write(&path, export::profile_csv(&ev.samples)).map_err(io_err(&path))?;
    let path = out.join("route.geojson");
    export::write_json(
        &path,
        &export::route_geojson(&ev.samples, frame, &ev.breakdown),
    )
    .map_err(io_err(&path))
}

/// Scores one genome file; writes `report.json`, `profile.csv` and
/// `route.geojson`.
pub fn evaluate(
    config: &Path,
    genome: &Path,
    out: Option<&Path>,
) -> Result<(PathBuf, Report), CliError> {
    let cfg = load_config(config, None)?;
    let text = std::fs::read_to_string(genome)
        .map_err(|e| CliError::Usage(format!("{}: {e}", genome.display())))?;
    let file: GenomeFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", genome.display())))?;
    let problem = cfg.problem()?;
    let g = file
        .genome(&problem.endpoints)
        .map_err(|e| CliError::Usage(format!("{}: {e}", genome.display())))?;
    let ev = pipeline::evaluate_genome(&problem, &g, cfg.ga.n_samples)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    write_route(&out, &problem.frame, &ev)?;
    let report = Report::new(&cfg, None, ev.breakdown, ev.metrics);
    let path = out.join("report.json");
    export::write_json(&path, &report).map_err(io_err(&path))?;
    Ok((out, report))
}

/// Radius/speed conversion table at lateral acceleration `a_lat`.
pub fn speed(speed: Option<f64>, radius: Option<f64>, a_lat: f64) -> Result<String, CliError> {
    if !(a_lat > 0.0) {
        return Err(CliError::Usage(format!(
            "lateral acceleration must be positive, got {a_lat}"
        )));
    }
    let (v, r) = match (speed, radius) {
        (Some(v), None) => {
            if !(v >= 0.0) {
                return Err(CliError::Usage(format!(
                    "speed must be non-negative, got {v}"
                )));
            }
            let r = geometry::min_radius_for_speed(v, a_lat)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (v, r)
        }
        (None, Some(r)) => {
            let v = geometry::max_speed_for_radius(r, a_lat)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (v, r)
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --speed or --radius".into(),
            ))
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "a_lat_max  {a_lat} m/s² ({:.3} g)", a_lat / G);
    let _ = writeln!(out, "speed      {v:.1} m/s  {:.0} km/h", v * 3.6);
    let _ = writeln!(out, "radius     {r:.0} m  {:.2} km", r / 1000.0);
    Ok(out)
}
