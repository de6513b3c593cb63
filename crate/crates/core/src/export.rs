//! Output artifacts: best genome and report (JSON), run history and route
//! profile (CSV), and the route as a GeoJSON LineString.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::costing::{CostBreakdown, RouteMetrics, RouteSample};
use crate::evolution::RunHistory;
use crate::geometry::{self, Endpoints, Genome, GeometryError, Point3};
use crate::terrain::LocalFrame;

pub const HISTORY_HEADER: &str = "generation,best_total,median_total,feasible_count";
pub const PROFILE_HEADER: &str = "s,x,y,z,ground,class,height_or_depth,radius,grade,rate";

/// `best_genome.json`: control points in local metres plus enough context
/// to re-evaluate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenomeFile {
    pub degree: usize,
    /// `[x, y, z]` per control point, metres in the local frame.
    pub controls: Vec<[f64; 3]>,
    pub frame: LocalFrame,
    pub seed: u64,
    pub config: RunConfig,
}

impl GenomeFile {
    pub fn new(genome: &Genome, frame: LocalFrame, config: &RunConfig) -> Self {
        Self {
            degree: genome.degree(),
            controls: genome.controls().iter().map(|p| [p.x, p.y, p.z]).collect(),
            frame,
            seed: config.ga.rng_seed,
            config: config.clone(),
        }
    }

    /// Rebuilds the genome, checking it is anchored at `endpoints`.
    pub fn genome(&self, endpoints: &Endpoints) -> Result<Genome, GeometryError> {
        if self.controls.len() != self.degree + 1 {
            return Err(GeometryError::InvalidInput(format!(
                "degree {} needs {} control points, file has {}",
                self.degree,
                self.degree + 1,
                self.controls.len()
            )));
        }
        let controls = self
            .controls
            .iter()
            .map(|&[x, y, z]| Point3::new(x, y, z))
            .collect();
        Genome::new(controls, endpoints)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSummary {
    /// Fastest speed through the tightest curve at `a_lat_max`, m/s.
    pub max_speed_ms: f64,
    pub max_speed_kmh: f64,
}

/// `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    /// Generations run; `None` for a single evaluation.
    pub generations: Option<usize>,
    pub breakdown: CostBreakdown,
    pub metrics: RouteMetrics,
    pub speed: SpeedSummary,
    pub config: RunConfig,
}

impl Report {
    pub fn new(
        config: &RunConfig,
        generations: Option<usize>,
        breakdown: CostBreakdown,
        metrics: RouteMetrics,
    ) -> Self {
        let v =
            geometry::max_speed_for_radius(metrics.min_radius.max(0.0), config.limits.a_lat_max)
                .unwrap_or(0.0);
        Self {
            seed: config.ga.rng_seed,
            generations,
            breakdown,
            metrics,
            speed: SpeedSummary {
                max_speed_ms: v,
                max_speed_kmh: v * 3.6,
            },
            config: config.clone(),
        }
    }
}

pub fn history_csv(history: &RunHistory) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in &history.records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.generation, r.best_total, r.median_total, r.feasible_count
        );
    }
    out
}

pub fn profile_csv(samples: &[RouteSample]) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.s,
            s.x,
            s.y,
            s.z,
            s.ground,
            s.class.label(),
            s.class.magnitude(),
            s.radius,
            s.grade,
            s.rate
        );
    }
    out
}

/// GeoJSON Feature with a `[lon, lat, z]` LineString.
pub fn route_geojson(
    samples: &[RouteSample],
    frame: &LocalFrame,
    breakdown: &CostBreakdown,
) -> serde_json::Value {
    let coords: Vec<[f64; 3]> = samples
        .iter()
        .map(|s| {
            let (lat, lon) = frame.unproject(s.x, s.y);
            [lon, lat, s.z]
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "features": [{
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": {
                "total_cost": breakdown.total,
                "penalty_cost": breakdown.penalty_cost,
            }
        }]
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}
