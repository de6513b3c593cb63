//! Run configuration file (JSON) and its resolution into a [`Problem`].
//!
//! ```json
//! {
//!   "terrain": { "arcgrid": "n35w119.asc" },
//!   "endpoints": {
//!     "start": { "lat": 34.29, "lon": -118.47 },
//!     "end":   { "lat": 34.99, "lon": -118.95, "elevation": 450.0 }
//!   },
//!   "limits": { "v_max": 339.0, "a_lat_max": 4.905, "grade_max": 0.06 },
//!   "cost":   { "tunnel_rate": 310000.0 },
//!   "ga":     { "population_size": 200, "generations": 100, "rng_seed": 7 },
//!   "output_dir": "out"
//! }
//! ```
//!
//! A synthetic terrain replaces the `arcgrid` path with
//! `{ "synthetic": { "terrain": { "kind": "gaussian_ridge", ... },
//! "extent_m": 10000, "resolution": 101 } }`; it is centred on the
//! midpoint of the endpoints. Every section except `terrain` is optional.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costing::CostModel;
use crate::evolution::GaConfig;
use crate::geometry::KinematicLimits;
use crate::pipeline::{anchor_endpoints, PipelineError, Problem};
use crate::terrain::{
    parse_arcgrid, synth_terrain, DemGrid, LocalFrame, TerrainError, TerrainKind,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Problems with the configuration itself or files it names.
    #[error("{0}")]
    Invalid(String),
    /// The terrain data could not be used.
    #[error("{0}")]
    Data(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TerrainSource {
    Arcgrid(PathBuf),
    Synthetic(SyntheticTerrain),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTerrain {
    pub terrain: TerrainKind,
    pub extent_m: f64,
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    /// Metres above sea level; defaults to ground + minimum pylon height.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elevation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteEnds {
    pub start: GeoPoint,
    pub end: GeoPoint,
}

impl Default for RouteEnds {
    /// I5-I405 interchange near Granada Hills to Tejon Ranch.
    fn default() -> Self {
        Self {
            start: GeoPoint {
                lat: 34.29,
                lon: -118.47,
                elevation: None,
            },
            end: GeoPoint {
                lat: 34.99,
                lon: -118.95,
                elevation: None,
            },
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub terrain: TerrainSource,
    #[serde(default)]
    pub endpoints: RouteEnds,
    #[serde(default)]
    pub limits: KinematicLimits,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Invalid(format!("config: {e}")))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::Invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let TerrainSource::Arcgrid(p) = &mut cfg.terrain {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.limits.validate().map_err(|e| inv(&e))?;
        self.cost.validate().map_err(|e| inv(&e))?;
        self.ga.validate().map_err(|e| inv(&e))?;
        let (s, e) = (self.endpoints.start, self.endpoints.end);
        for p in [s, e] {
            if !(p.lat.is_finite() && p.lon.is_finite() && p.elevation.is_none_or(f64::is_finite)) {
                return Err(ConfigError::Invalid(format!("non-finite endpoint {p:?}")));
            }
        }
        if s.lat == e.lat && s.lon == e.lon {
            return Err(ConfigError::Invalid("endpoints must be distinct".into()));
        }
        match &self.terrain {
            TerrainSource::Arcgrid(p) if !p.is_file() => Err(ConfigError::Invalid(format!(
                "terrain file {} does not exist",
                p.display()
            ))),
            TerrainSource::Synthetic(s) if !(s.extent_m > 0.0) || s.resolution < 2 => {
                Err(ConfigError::Invalid(
                    "synthetic terrain needs extent_m > 0 and resolution >= 2".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn frame(&self) -> LocalFrame {
        let (s, e) = (self.endpoints.start, self.endpoints.end);
        LocalFrame::midpoint((s.lat, s.lon), (e.lat, e.lon))
    }

    pub fn load_terrain(&self) -> Result<DemGrid, ConfigError> {
        match &self.terrain {
            TerrainSource::Arcgrid(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ConfigError::Invalid(format!("cannot read {}: {e}", path.display()))
                })?;
                parse_arcgrid(&text)
                    .map_err(|e| ConfigError::Data(format!("{}: {e}", path.display())))
            }
            TerrainSource::Synthetic(s) => {
                synth_terrain(&s.terrain, s.extent_m, s.resolution, &self.frame())
                    .map_err(|e: TerrainError| ConfigError::Invalid(e.to_string()))
            }
        }
    }

    /// Loads the terrain and anchors the endpoints in the local frame.
    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let grid = self.load_terrain()?;
        let frame = self.frame();
        let local = |p: GeoPoint| -> Result<(f64, f64, Option<f64>), ConfigError> {
            let (x, y) = frame
                .project(p.lat, p.lon)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            Ok((x, y, p.elevation))
        };
        let endpoints = anchor_endpoints(
            &grid,
            &frame,
            local(self.endpoints.start)?,
            local(self.endpoints.end)?,
            self.cost.min_pylon_height,
        )
        .map_err(|e| match e {
            PipelineError::EndpointOffGrid(_) => ConfigError::Data(e.to_string()),
            _ => ConfigError::Invalid(e.to_string()),
        })?;
        Ok(Problem {
            grid,
            frame,
            endpoints,
            limits: self.limits,
            model: self.cost,
        })
    }
}
