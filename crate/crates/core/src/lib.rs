//! Evolutionary optimisation of smooth 3D transport alignments over a
//! terrain elevation model.
//!
//! A candidate route is a single Bezier curve whose interior control points
//! are evolved by a genetic algorithm. Each candidate is sampled, laid over
//! the terrain, split into elevated (pylon) and tunneled stretches, priced,
//! and penalised for violating the horizontal curvature and grade limits.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod costing;
pub mod evolution;
pub mod export;
pub mod geometry;
pub mod pipeline;
pub mod terrain;

pub use costing::{
    CostBreakdown, CostModel, Evaluation, Evaluator, RouteMetrics, RouteSample, StructureClass,
};
pub use evolution::{Bounds, GaConfig, RunHistory};
pub use geometry::{Endpoints, Genome, KinematicLimits, Point3};
pub use terrain::{DemGrid, LocalFrame, TerrainKind};
