//! Bezier genomes, path sampling and the finite-difference route metrics.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Radius reported for (numerically) straight horizontal segments.
pub const RADIUS_SENTINEL: f64 = 1e12;

/// Triangle area, in m², below which three points count as collinear.
pub const COLLINEAR_AREA: f64 = 1e-6;

/// Magnitude of the grade reported across vertically stacked samples.
pub const GRADE_SENTINEL: f64 = 1e6;

/// Standard gravity, m/s².
pub const G: f64 = 9.81;

/// Smallest sample count accepted by [`sample_path`].
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curve parameter t = {0} is outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("need at least {need} control points, got {got}")]
    TooFewControls { need: usize, got: usize },
    #[error("n_samples must be at least {MIN_SAMPLES}, got {0}")]
    TooFewSamples(usize),
    #[error("coincident points in horizontal projection")]
    CoincidentPoints,
    #[error("zero horizontal separation")]
    VerticalStack,
    #[error("genome endpoint does not match the configured {0} point")]
    EndpointMismatch(&'static str),
    #[error("non-finite control point coordinate")]
    NonFinite,
    #[error("{0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn horizontal_distance(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// `(1 - t) * self + t * other`, exact at both ends.
    pub fn lerp(self, other: Self, t: f64) -> Self {
        self * (1.0 - t) + other * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Point3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Fixed start and end of every candidate route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub start: Point3,
    pub end: Point3,
}

/// Control polygon of one candidate alignment.
///
/// The first and last control points are the route endpoints; only the
/// interior points are free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome {
    controls: Vec<Point3>,
}

impl Genome {
    /// Validates the control polygon against the configured endpoints.
    pub fn new(controls: Vec<Point3>, endpoints: &Endpoints) -> Result<Self, GeometryError> {
        if controls.len() < 4 {
            return Err(GeometryError::TooFewControls {
                need: 4,
                got: controls.len(),
            });
        }
        if !controls.iter().all(|p| p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if controls[0] != endpoints.start {
            return Err(GeometryError::EndpointMismatch("start"));
        }
        if controls[controls.len() - 1] != endpoints.end {
            return Err(GeometryError::EndpointMismatch("end"));
        }
        Ok(Self { controls })
    }

    /// Evenly spaced controls on the segment between the endpoints.
    pub fn straight(endpoints: &Endpoints, degree: usize) -> Self {
        let controls = (0..=degree)
            .map(|i| {
                if i == degree {
                    endpoints.end
                } else {
                    endpoints
                        .start
                        .lerp(endpoints.end, i as f64 / degree as f64)
                }
            })
            .collect();
        Self { controls }
    }

    /// Builds a genome without endpoint checks; callers keep the anchoring.
    pub(crate) fn from_controls_unchecked(controls: Vec<Point3>) -> Self {
        Self { controls }
    }

    pub fn controls(&self) -> &[Point3] {
        &self.controls
    }

    pub(crate) fn interior_mut(&mut self) -> &mut [Point3] {
        let n = self.controls.len();
        &mut self.controls[1..n - 1]
    }

    pub fn degree(&self) -> usize {
        self.controls.len() - 1
    }

    pub fn start(&self) -> Point3 {
        self.controls[0]
    }

    pub fn end(&self) -> Point3 {
        self.controls[self.controls.len() - 1]
    }
}

/// De Casteljau evaluation of a Bezier curve.
pub fn bezier_point(controls: &[Point3], t: f64) -> Result<Point3, GeometryError> {
    if controls.len() < 2 {
        return Err(GeometryError::TooFewControls {
            need: 2,
            got: controls.len(),
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::ParameterOutOfRange(t));
    }
    let mut work = controls.to_vec();
    for level in (1..work.len()).rev() {
        for i in 0..level {
            work[i] = work[i].lerp(work[i + 1], t);
        }
    }
    Ok(work[0])
}

/// A sampled point with its cumulative chordal arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub s: f64,
    pub p: Point3,
}

/// Bernstein basis table for a fixed degree and sample count, so that
/// sampling many genomes of the same shape costs one weighted sum per point.
#[derive(Debug, Clone)]
pub struct PathSampler {
    degree: usize,
    n_samples: usize,
    weights: Vec<f64>,
}

impl PathSampler {
    pub fn new(degree: usize, n_samples: usize) -> Result<Self, GeometryError> {
        if n_samples < MIN_SAMPLES {
            return Err(GeometryError::TooFewSamples(n_samples));
        }
        if degree < 1 {
            return Err(GeometryError::TooFewControls {
                need: 2,
                got: degree + 1,
            });
        }
        let binom: Vec<f64> = (0..=degree)
            .scan(1.0f64, |c, i| {
                let cur = *c;
                *c = *c * (degree - i) as f64 / (i + 1) as f64;
                Some(cur)
            })
            .collect();
        let mut weights = Vec::with_capacity(n_samples * (degree + 1));
        for k in 0..n_samples {
            let t = k as f64 / (n_samples - 1) as f64;
            let u = 1.0 - t;
            for (i, c) in binom.iter().enumerate() {
                weights.push(c * t.powi(i as i32) * u.powi((degree - i) as i32));
            }
        }
        Ok(Self {
            degree,
            n_samples,
            weights,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Samples uniformly in t; the first and last points are the genome
    /// endpoints exactly.
    pub fn sample(&self, genome: &Genome) -> Result<Vec<PathPoint>, GeometryError> {
        let controls = genome.controls();
        if controls.len() != self.degree + 1 {
            return Err(GeometryError::InvalidInput(format!(
                "sampler built for degree {}, genome has degree {}",
                self.degree,
                genome.degree()
            )));
        }
        let last = self.n_samples - 1;
        let mut out = Vec::with_capacity(self.n_samples);
        let mut s = 0.0;
        let mut prev: Option<Point3> = None;
        for (k, w) in self.weights.chunks_exact(self.degree + 1).enumerate() {
            let p = match k {
                0 => genome.start(),
                k if k == last => genome.end(),
                _ => controls
                    .iter()
                    .zip(w)
                    .fold(Point3::default(), |acc, (c, &wi)| acc + *c * wi),
            };
            if let Some(q) = prev {
                s += q.distance(p);
            }
            out.push(PathPoint { s, p });
            prev = Some(p);
        }
        Ok(out)
    }
}

/// Samples `n_samples` points uniformly in t with cumulative arc length.
pub fn sample_path(genome: &Genome, n_samples: usize) -> Result<Vec<PathPoint>, GeometryError> {
    PathSampler::new(genome.degree(), n_samples)?.sample(genome)
}

/// Circumradius of the horizontal projections of three points.
pub fn curvature_radius(prev: Point3, mid: Point3, next: Point3) -> Result<f64, GeometryError> {
    let a = prev.horizontal_distance(mid);
    let b = mid.horizontal_distance(next);
    let c = prev.horizontal_distance(next);
    if a == 0.0 || b == 0.0 || c == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    let (ux, uy) = (mid.x - prev.x, mid.y - prev.y);
    let (vx, vy) = (next.x - prev.x, next.y - prev.y);
    let area = 0.5 * (ux * vy - uy * vx).abs();
    if area < COLLINEAR_AREA {
        return Ok(RADIUS_SENTINEL);
    }
    Ok((a * b * c / (4.0 * area)).min(RADIUS_SENTINEL))
}

/// Signed grade from `prev` to `next`: rise over horizontal run.
pub fn grade_at(prev: Point3, next: Point3) -> Result<f64, GeometryError> {
    let run = prev.horizontal_distance(next);
    if run == 0.0 {
        return Err(GeometryError::VerticalStack);
    }
    Ok((next.z - prev.z) / run)
}

/// Lateral and vertical comfort limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicLimits {
    /// Design speed, m/s.
    pub v_max: f64,
    /// Maximum lateral acceleration, m/s².
    pub a_lat_max: f64,
    /// Maximum |grade| as a fraction.
    pub grade_max: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            v_max: 339.0,
            a_lat_max: 0.5 * G,
            grade_max: 0.06,
        }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = self.v_max > 0.0
            && self.v_max.is_finite()
            && self.a_lat_max > 0.0
            && self.a_lat_max.is_finite()
            && self.grade_max > 0.0
            && self.grade_max < 1.0;
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidInput(format!(
                "kinematic limits must be positive with grade_max < 1: {self:?}"
            )))
        }
    }

    /// Smallest admissible horizontal radius at `v_max`.
    pub fn r_min(&self) -> f64 {
        self.v_max * self.v_max / self.a_lat_max
    }
}

/// `v² / a`: tightest radius that keeps lateral acceleration at or below `a`.
pub fn min_radius_for_speed(v: f64, a_lat_max: f64) -> Result<f64, GeometryError> {
    if !(a_lat_max > 0.0) {
        return Err(GeometryError::InvalidInput(format!(
            "lateral acceleration must be positive, got {a_lat_max}"
        )));
    }
    if !(v >= 0.0) {
        return Err(GeometryError::InvalidInput(format!(
            "speed must be non-negative, got {v}"
        )));
    }
    Ok(v * v / a_lat_max)
}

/// `sqrt(r · a)`: fastest speed through radius `r` at lateral acceleration `a`.
pub fn max_speed_for_radius(r: f64, a_lat_max: f64) -> Result<f64, GeometryError> {
    if !(r >= 0.0) {
        return Err(GeometryError::InvalidInput(format!(
            "radius must be non-negative, got {r}"
        )));
    }
    if !(a_lat_max > 0.0) {
        return Err(GeometryError::InvalidInput(format!(
            "lateral acceleration must be positive, got {a_lat_max}"
        )));
    }
    Ok((r * a_lat_max).sqrt())
}

/// Per-sample horizontal radius and grade from a single pass over the path.
///
/// Interior radii come from the circumcircle of each sample and its two
/// neighbours; the endpoints carry [`RADIUS_SENTINEL`]. Grades are central
/// differences, one-sided at the ends. Degenerate triples (coincident or
/// vertically stacked samples) are reported as maximally violating: a
/// radius of `f64::MIN_POSITIVE` and a grade of ±[`GRADE_SENTINEL`].
pub fn radius_and_grade(points: &[Point3]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len();
    let mut radius = vec![RADIUS_SENTINEL; n];
    let mut grade = vec![0.0; n];
    if n < 2 {
        return (radius, grade);
    }
    let grade_or_worst = |a: Point3, b: Point3| match grade_at(a, b) {
        Ok(g) => g,
        Err(_) => GRADE_SENTINEL.copysign(b.z - a.z),
    };
    for i in 1..n - 1 {
        radius[i] =
            curvature_radius(points[i - 1], points[i], points[i + 1]).unwrap_or(f64::MIN_POSITIVE);
        grade[i] = grade_or_worst(points[i - 1], points[i + 1]);
    }
    grade[0] = grade_or_worst(points[0], points[1]);
    grade[n - 1] = grade_or_worst(points[n - 2], points[n - 1]);
    (radius, grade)
}
