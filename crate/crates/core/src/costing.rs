//! Structure classification, construction cost, constraint penalties and
//! route summary metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Genome, GeometryError, KinematicLimits, PathSampler, Point3};
use crate::terrain::{DemGrid, LocalFrame, LookupError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("invalid cost model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Unit prices and penalty weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// $/m per m² of pylon height.
    pub pylon_coeff: f64,
    /// $/m of tunnel.
    pub tunnel_rate: f64,
    /// $ per unit of relative violation, per violating sample.
    pub penalty_coeff: f64,
    /// $ per violating sample.
    pub penalty_fixed: f64,
    /// Heights below this are priced as if they were this tall, m.
    pub min_pylon_height: f64,
    pub curvature_violation: CurvatureViolation,
}

/// How far a sample tighter than `r_min` is from feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureViolation {
    /// `r_min / r - 1`: relative excess of lateral acceleration at `v_max`.
    /// Unbounded, so a cusp always costs more than a mild bend.
    #[default]
    LateralAcceleration,
    /// `(r_min - r) / r_min`: relative radius shortfall, at most 1.
    Radius,
}

impl CurvatureViolation {
    pub fn relative(self, radius: f64, r_min: f64) -> f64 {
        let v = match self {
            CurvatureViolation::LateralAcceleration => r_min / radius - 1.0,
            CurvatureViolation::Radius => (r_min - radius) / r_min,
        };
        v.min(MAX_RELATIVE_VIOLATION)
    }
}

/// Cap on a single sample's relative violation, keeping totals finite for
/// degenerate (cusped or vertically stacked) paths.
pub const MAX_RELATIVE_VIOLATION: f64 = 1e6;

impl Default for CostModel {
    fn default() -> Self {
        Self {
            pylon_coeff: 116.0,
            tunnel_rate: 310_000.0,
            penalty_coeff: 1e9,
            penalty_fixed: 1e7,
            min_pylon_height: 6.0,
            curvature_violation: CurvatureViolation::default(),
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), CostError> {
        let fields = [
            ("pylon_coeff", self.pylon_coeff),
            ("tunnel_rate", self.tunnel_rate),
            ("penalty_coeff", self.penalty_coeff),
            ("penalty_fixed", self.penalty_fixed),
            ("min_pylon_height", self.min_pylon_height),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CostError::InvalidModel(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.tunnel_rate > 0.0) {
            return Err(CostError::InvalidModel(
                "tunnel_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// How the guideway is carried at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureClass {
    Elevated { height: f64 },
    Tunneled { depth: f64 },
}

impl StructureClass {
    pub fn is_tunnel(&self) -> bool {
        matches!(self, StructureClass::Tunneled { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            StructureClass::Elevated { .. } => "elevated",
            StructureClass::Tunneled { .. } => "tunnel",
        }
    }

    /// Pylon height or tunnel depth.
    pub fn magnitude(&self) -> f64 {
        match *self {
            StructureClass::Elevated { height } => height,
            StructureClass::Tunneled { depth } => depth,
        }
    }
}

/// At or above ground is elevated; below ground is tunneled.
pub fn classify_sample(path_z: f64, ground_z: f64) -> StructureClass {
    if path_z >= ground_z {
        StructureClass::Elevated {
            height: path_z - ground_z,
        }
    } else {
        StructureClass::Tunneled {
            depth: ground_z - path_z,
        }
    }
}

/// Construction cost in $/m for one structure class.
pub fn cost_per_meter(class: StructureClass, model: &CostModel) -> f64 {
    match class {
        StructureClass::Elevated { height } => {
            let h = height.max(model.min_pylon_height);
            model.pylon_coeff * h * h
        }
        StructureClass::Tunneled { .. } => model.tunnel_rate,
    }
}

/// One row of the exported profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteSample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub ground: f64,
    pub class: StructureClass,
    pub radius: f64,
    pub grade: f64,
    pub rate: f64,
    /// False when the ground under this sample could not be looked up.
    pub ground_valid: bool,
}

impl RouteSample {
    pub fn point(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub pylon_cost: f64,
    pub tunnel_cost: f64,
    pub penalty_cost: f64,
    pub total: f64,
    pub curvature_violations: usize,
    pub grade_violations: usize,
    /// Samples whose ground lookup failed (outside the grid or next to nodata).
    pub terrain_violations: usize,
    /// Set when any sample fell outside the grid hull.
    pub out_of_bounds: bool,
}

impl CostBreakdown {
    pub fn is_feasible(&self) -> bool {
        self.penalty_cost == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RouteMetrics {
    pub min_radius: f64,
    pub max_abs_grade: f64,
    pub tunnel_length: f64,
    pub elevated_length: f64,
    pub mean_pylon_height: f64,
    pub max_depth: f64,
    pub total_length: f64,
}

/// Curvature and grade penalty over the interior samples.
///
/// Each violating sample costs `penalty_fixed + penalty_coeff * v`, where
/// `v` is the violation relative to its limit: see [`CurvatureViolation`]
/// for radius, `(|grade| - grade_max) / grade_max` for grade. Returns the
/// penalty and the curvature and grade violation counts.
pub fn penalty(
    samples: &[RouteSample],
    limits: &KinematicLimits,
    model: &CostModel,
) -> (f64, usize, usize) {
    let r_min = limits.r_min();
    let mut total = 0.0;
    let mut curvature = 0;
    let mut grade = 0;
    let interior = samples.len().saturating_sub(1);
    for s in samples.iter().take(interior).skip(1) {
        if s.radius < r_min {
            curvature += 1;
            total += model.penalty_fixed
                + model.penalty_coeff * model.curvature_violation.relative(s.radius, r_min);
        }
        if s.grade.abs() > limits.grade_max {
            grade += 1;
            let v =
                ((s.grade.abs() - limits.grade_max) / limits.grade_max).min(MAX_RELATIVE_VIOLATION);
            total += model.penalty_fixed + model.penalty_coeff * v;
        }
    }
    (total, curvature, grade)
}

/// Full result of evaluating one genome.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub breakdown: CostBreakdown,
    pub metrics: RouteMetrics,
    pub samples: Vec<RouteSample>,
}

/// Immutable evaluation context shared by every genome of a run.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    grid: &'a DemGrid,
    frame: LocalFrame,
    model: CostModel,
    limits: KinematicLimits,
    sampler: PathSampler,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        grid: &'a DemGrid,
        frame: LocalFrame,
        model: CostModel,
        limits: KinematicLimits,
        degree: usize,
        n_samples: usize,
    ) -> Result<Self, CostError> {
        model.validate()?;
        limits.validate()?;
        Ok(Self {
            grid,
            frame,
            model,
            limits,
            sampler: PathSampler::new(degree, n_samples)?,
        })
    }

    pub fn grid(&self) -> &DemGrid {
        self.grid
    }

    pub fn frame(&self) -> &LocalFrame {
        &self.frame
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn limits(&self) -> &KinematicLimits {
        &self.limits
    }

    pub fn degree(&self) -> usize {
        self.sampler.degree()
    }

    pub fn n_samples(&self) -> usize {
        self.sampler.n_samples()
    }

    /// Ground elevation at local coordinates.
    pub fn ground(&self, x: f64, y: f64) -> Result<f64, LookupError> {
        let (lat, lon) = self.frame.unproject(x, y);
        self.grid.elevation_at_latlon(lat, lon)
    }

    /// Samples, prices and measures one genome.
    ///
    /// Samples without a valid ground elevation are priced as ground-level
    /// track and each adds `penalty_fixed + penalty_coeff` to the penalty,
    /// so a bad genome stays comparable instead of aborting the run.
    pub fn evaluate(&self, genome: &Genome) -> Result<Evaluation, CostError> {
        let path = self.sampler.sample(genome)?;
        let points: Vec<Point3> = path.iter().map(|pp| pp.p).collect();
        let (radius, grade) = geometry::radius_and_grade(&points);

        let mut terrain_violations = 0;
        let mut out_of_bounds = false;
        let samples: Vec<RouteSample> = path
            .iter()
            .zip(radius.iter().zip(&grade))
            .map(|(pp, (&r, &g))| {
                let p = pp.p;
                let (ground, ground_valid) = match self.ground(p.x, p.y) {
                    Ok(z) => (z, true),
                    Err(e) => {
                        terrain_violations += 1;
                        out_of_bounds |= e == LookupError::OutOfBounds;
                        (p.z, false)
                    }
                };
                let class = classify_sample(p.z, ground);
                RouteSample {
                    s: pp.s,
                    x: p.x,
                    y: p.y,
                    z: p.z,
                    ground,
                    class,
                    radius: r,
                    grade: g,
                    rate: cost_per_meter(class, &self.model),
                    ground_valid,
                }
            })
            .collect();

        // trapezoid: each half segment takes the rate and class of its end
        let mut pylon_cost = 0.0;
        let mut tunnel_cost = 0.0;
        let mut tunnel_length = 0.0;
        let mut elevated_length = 0.0;
        let mut height_integral = 0.0;
        for w in samples.windows(2) {
            let half = 0.5 * (w[1].s - w[0].s);
            for s in w {
                match s.class {
                    StructureClass::Elevated { height } => {
                        pylon_cost += half * s.rate;
                        elevated_length += half;
                        height_integral += half * height;
                    }
                    StructureClass::Tunneled { .. } => {
                        tunnel_cost += half * s.rate;
                        tunnel_length += half;
                    }
                }
            }
        }

        let (mut penalty_cost, curvature_violations, grade_violations) =
            penalty(&samples, &self.limits, &self.model);
        penalty_cost +=
            terrain_violations as f64 * (self.model.penalty_fixed + self.model.penalty_coeff);

        let interior = &samples[1..samples.len() - 1];
        let metrics = RouteMetrics {
            min_radius: interior
                .iter()
                .map(|s| s.radius)
                .fold(f64::INFINITY, f64::min),
            max_abs_grade: interior.iter().map(|s| s.grade.abs()).fold(0.0, f64::max),
            tunnel_length,
            elevated_length,
            mean_pylon_height: if elevated_length > 0.0 {
                height_integral / elevated_length
            } else {
                0.0
            },
            max_depth: samples
                .iter()
                .filter_map(|s| match s.class {
                    StructureClass::Tunneled { depth } => Some(depth),
                    _ => None,
                })
                .fold(0.0, f64::max),
            total_length: samples.last().map_or(0.0, |s| s.s),
        };
        let breakdown = CostBreakdown {
            pylon_cost,
            tunnel_cost,
            penalty_cost,
            total: pylon_cost + tunnel_cost + penalty_cost,
            curvature_violations,
            grade_violations,
            terrain_violations,
            out_of_bounds,
        };
        Ok(Evaluation {
            breakdown,
            metrics,
            samples,
        })
    }
}

/// One-shot evaluation; build an [`Evaluator`] when scoring many genomes.
pub fn evaluate(
    genome: &Genome,
    grid: &DemGrid,
    frame: &LocalFrame,
    model: &CostModel,
    limits: &KinematicLimits,
    n_samples: usize,
) -> Result<Evaluation, CostError> {
    Evaluator::new(grid, *frame, *model, *limits, genome.degree(), n_samples)?.evaluate(genome)
}
