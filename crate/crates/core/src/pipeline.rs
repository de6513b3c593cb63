//! Glue between terrain, costing and evolution: search bounds, endpoint
//! anchoring and a full optimisation run.

use thiserror::Error;

use crate::costing::{CostError, CostModel, Evaluation, Evaluator};
use crate::evolution::{self, Bounds, EvolutionError, GaConfig, RunResult, SearchContext};
use crate::geometry::{Endpoints, Genome, KinematicLimits, Point3};
use crate::terrain::{DemGrid, LocalFrame, LookupError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("endpoint {0} is outside the terrain or on nodata")]
    EndpointOffGrid(&'static str),
    #[error("route endpoints coincide")]
    CoincidentEndpoints,
    #[error("terrain has no valid elevations")]
    EmptyTerrain,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

/// Everything needed to score a route, independent of GA settings.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: DemGrid,
    pub frame: LocalFrame,
    pub endpoints: Endpoints,
    pub limits: KinematicLimits,
    pub model: CostModel,
}

impl Problem {
    pub fn evaluator(&self, degree: usize, n_samples: usize) -> Result<Evaluator<'_>, CostError> {
        Evaluator::new(
            &self.grid,
            self.frame,
            self.model,
            self.limits,
            degree,
            n_samples,
        )
    }

    /// Search box for interior control points.
    ///
    /// Horizontally: the endpoint bounding box grown by `corridor_margin`
    /// times the endpoint separation, cut to the grid hull. Vertically: the
    /// terrain elevation range grown by `z_margin`, widened to hold both
    /// endpoints.
    pub fn bounds(&self, corridor_margin: f64, z_margin: f64) -> Result<Bounds, PipelineError> {
        let (s, e) = (self.endpoints.start, self.endpoints.end);
        let pad = corridor_margin * s.horizontal_distance(e);
        let (hx0, hy0, hx1, hy1) = self.grid.hull_local(&self.frame);
        let (lo, hi) = self
            .grid
            .elevation_range()
            .ok_or(PipelineError::EmptyTerrain)?;
        let min = Point3::new(
            (s.x.min(e.x) - pad).max(hx0),
            (s.y.min(e.y) - pad).max(hy0),
            (lo - z_margin).min(s.z).min(e.z),
        );
        let max = Point3::new(
            (s.x.max(e.x) + pad).min(hx1),
            (s.y.max(e.y) + pad).min(hy1),
            (hi + z_margin).max(s.z).max(e.z),
        );
        Ok(Bounds::new(min, max)?)
    }
}

/// Anchors the endpoints at `height` metres over the terrain unless an
/// explicit elevation is given.
pub fn anchor_endpoints(
    grid: &DemGrid,
    frame: &LocalFrame,
    start: (f64, f64, Option<f64>),
    end: (f64, f64, Option<f64>),
    height: f64,
) -> Result<Endpoints, PipelineError> {
    let anchor = |(x, y, z): (f64, f64, Option<f64>), which| -> Result<Point3, PipelineError> {
        let z = match z {
            Some(z) => z,
            None => {
                let (lat, lon) = frame.unproject(x, y);
                grid.elevation_at_latlon(lat, lon)
                    .map_err(|_: LookupError| PipelineError::EndpointOffGrid(which))?
                    + height
            }
        };
        Ok(Point3::new(x, y, z))
    };
    let endpoints = Endpoints {
        start: anchor(start, "start")?,
        end: anchor(end, "end")?,
    };
    if endpoints.start.horizontal_distance(endpoints.end) == 0.0 {
        return Err(PipelineError::CoincidentEndpoints);
    }
    Ok(endpoints)
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub run: RunResult,
    pub evaluation: Evaluation,
    pub bounds: Bounds,
}

/// Runs the GA on `problem` and fully evaluates the winner.
pub fn optimize(
    problem: &Problem,
    config: &GaConfig,
    workers: Option<usize>,
) -> Result<Optimized, PipelineError> {
    config.validate()?;
    let evaluator = problem.evaluator(config.degree, config.n_samples)?;
    let bounds = problem.bounds(config.corridor_margin, config.z_margin)?;
    let ctx = SearchContext {
        fitness: &evaluator,
        bounds,
        endpoints: problem.endpoints,
    };
    let run = evolution::run(config, &ctx, workers)?;
    let evaluation = evaluator.evaluate(&run.best)?;
    Ok(Optimized {
        run,
        evaluation,
        bounds,
    })
}

/// Scores a single genome with the problem's cost model.
pub fn evaluate_genome(
    problem: &Problem,
    genome: &Genome,
    n_samples: usize,
) -> Result<Evaluation, CostError> {
    problem
        .evaluator(genome.degree(), n_samples)?
        .evaluate(genome)
}
