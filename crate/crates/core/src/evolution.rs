//! Generational genetic algorithm over Bezier genomes.
//!
//! Every generation keeps the `elite_count` best members unchanged, injects
//! `immigrant_count` freshly drawn random genomes and fills the remaining
//! slots with tournament-selected parents combined by extended blend
//! crossover followed by Gaussian mutation.
//!
//! # Random streams
//!
//! All randomness derives from `GaConfig::rng_seed`. The member built in
//! population slot `i` of generation `g` draws from its own ChaCha8 stream
//! (see [`slot_rng`]), so the result does not depend on how slots are
//! spread across worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costing::{CostBreakdown, Evaluator};
use crate::geometry::{Endpoints, Genome, Point3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate search bounds: {0}")]
    DegenerateBounds(String),
    #[error("parents differ in degree ({0} vs {1})")]
    DegreeMismatch(usize, usize),
    #[error("parents have different endpoints")]
    EndpointMismatch,
    #[error("cannot select from an empty population")]
    EmptyPopulation,
    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
}

/// Axis-aligned box holding every interior control point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point3,
    pub max: Point3,
}

impl Bounds {
    pub fn new(min: Point3, max: Point3) -> Result<Self, EvolutionError> {
        let ok = [min.x, min.y, min.z, max.x, max.y, max.z]
            .iter()
            .all(|v| v.is_finite())
            && max.x > min.x
            && max.y > min.y
            && max.z > min.z;
        if !ok {
            return Err(EvolutionError::DegenerateBounds(format!(
                "{min:?} .. {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: Point3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }

    pub fn clamp(&self, p: Point3) -> Point3 {
        Point3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    /// Horizontal diagonal length.
    pub fn diagonal_xy(&self) -> f64 {
        (self.max.x - self.min.x).hypot(self.max.y - self.min.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub elite_count: usize,
    pub immigrant_count: usize,
    pub tournament_size: usize,
    /// Horizontal mutation sigma in metres; `None` means 2% of the search
    /// box diagonal.
    pub mutation_sigma_xy: Option<f64>,
    pub mutation_sigma_z: f64,
    pub mutation_rate: f64,
    pub crossover_alpha_range: [f64; 2],
    pub rng_seed: u64,
    pub degree: usize,
    pub n_samples: usize,
    /// Horizontal slack around the endpoint bounding box, as a fraction of
    /// the endpoint separation.
    pub corridor_margin: f64,
    /// Vertical slack below the lowest and above the highest ground, m.
    pub z_margin: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 200,
            generations: 100,
            elite_count: 2,
            immigrant_count: 4,
            tournament_size: 3,
            mutation_sigma_xy: None,
            mutation_sigma_z: 50.0,
            mutation_rate: 0.1,
            crossover_alpha_range: [-0.25, 1.25],
            rng_seed: 0,
            degree: 10,
            n_samples: 512,
            corridor_margin: 0.25,
            z_margin: 100.0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let fail = |m: String| Err(EvolutionError::InvalidConfig(m));
        if self.population_size == 0 {
            return fail("population_size must be positive".into());
        }
        if self.elite_count + self.immigrant_count >= self.population_size {
            return fail(format!(
                "elite_count + immigrant_count ({}) must be below population_size ({})",
                self.elite_count + self.immigrant_count,
                self.population_size
            ));
        }
        if self.tournament_size < 2 || self.tournament_size > self.population_size {
            return fail(format!(
                "tournament_size must be in 2..=population_size, got {}",
                self.tournament_size
            ));
        }
        if let Some(s) = self.mutation_sigma_xy {
            if !(s >= 0.0 && s.is_finite()) {
                return fail(format!("mutation_sigma_xy must be non-negative, got {s}"));
            }
        }
        if !(self.mutation_sigma_z >= 0.0 && self.mutation_sigma_z.is_finite()) {
            return fail(format!(
                "mutation_sigma_z must be non-negative, got {}",
                self.mutation_sigma_z
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return fail(format!(
                "mutation_rate must be in [0, 1], got {}",
                self.mutation_rate
            ));
        }
        let [lo, hi] = self.crossover_alpha_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return fail(format!(
                "crossover_alpha_range must be an ordered interval, got [{lo}, {hi}]"
            ));
        }
        if self.degree < 3 {
            return fail(format!("degree must be at least 3, got {}", self.degree));
        }
        if self.n_samples < crate::geometry::MIN_SAMPLES {
            return fail(format!(
                "n_samples must be at least {}",
                crate::geometry::MIN_SAMPLES
            ));
        }
        if !(self.corridor_margin >= 0.0 && self.corridor_margin.is_finite()) {
            return fail("corridor_margin must be non-negative".into());
        }
        if !(self.z_margin >= 0.0 && self.z_margin.is_finite()) {
            return fail("z_margin must be non-negative".into());
        }
        Ok(())
    }

    pub fn mutation_params(&self, bounds: &Bounds) -> MutationParams {
        MutationParams {
            sigma_xy: self
                .mutation_sigma_xy
                .unwrap_or(0.02 * bounds.diagonal_xy()),
            sigma_z: self.mutation_sigma_z,
            rate: self.mutation_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationParams {
    pub sigma_xy: f64,
    pub sigma_z: f64,
    pub rate: f64,
}

/// Scores genomes; lower totals are better.
pub trait Fitness: Sync {
    fn score(&self, genome: &Genome) -> CostBreakdown;
}

impl Fitness for Evaluator<'_> {
    fn score(&self, genome: &Genome) -> CostBreakdown {
        match self.evaluate(genome) {
            Ok(ev) => ev.breakdown,
            // only a sampler/genome shape mismatch lands here
            Err(_) => CostBreakdown {
                penalty_cost: f64::MAX,
                total: f64::MAX,
                ..Default::default()
            },
        }
    }
}

/// How a member entered its population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Initial,
    Elite,
    Immigrant,
    Offspring,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub genome: Genome,
    pub cost: CostBreakdown,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Member>,
    pub generation: usize,
    pub best_ever: (Genome, CostBreakdown),
}

impl Population {
    /// Index of the lowest total, ties going to the lowest index.
    pub fn best_index(&self) -> usize {
        best_index(&self.members)
    }

    /// Member indices ordered by (total, index).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.members.len()).collect();
        idx.sort_by(|&a, &b| {
            self.members[a]
                .cost
                .total
                .total_cmp(&self.members[b].cost.total)
                .then(a.cmp(&b))
        });
        idx
    }

    pub fn record(&self) -> GenerationRecord {
        let mut totals: Vec<f64> = self.members.iter().map(|m| m.cost.total).collect();
        totals.sort_by(f64::total_cmp);
        let n = totals.len();
        let median = if n % 2 == 1 {
            totals[n / 2]
        } else {
            0.5 * (totals[n / 2 - 1] + totals[n / 2])
        };
        GenerationRecord {
            generation: self.generation,
            best_total: totals[0],
            median_total: median,
            feasible_count: self.members.iter().filter(|m| m.cost.is_feasible()).count(),
        }
    }
}

fn best_index(members: &[Member]) -> usize {
    members
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.cost.total.total_cmp(&b.cost.total).then(i.cmp(j)))
        .map(|(i, _)| i)
        .expect("population is never empty")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_total: f64,
    pub median_total: f64,
    pub feasible_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunHistory {
    pub records: Vec<GenerationRecord>,
}

/// Search space and scoring shared by all operators of one run.
pub struct SearchContext<'a, F: Fitness> {
    pub fitness: &'a F,
    pub bounds: Bounds,
    pub endpoints: Endpoints,
}

/// Independent stream for population slot `slot` in generation `generation`.
///
/// The key is the run seed; the 64-bit stream id is
/// `generation << 32 | slot`.
pub fn slot_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

/// Genome whose interior control points are uniform in `bounds`.
pub fn random_genome<R: Rng + ?Sized>(
    bounds: &Bounds,
    endpoints: &Endpoints,
    degree: usize,
    rng: &mut R,
) -> Result<Genome, EvolutionError> {
    if degree < 3 {
        return Err(EvolutionError::InvalidConfig(format!(
            "degree must be at least 3, got {degree}"
        )));
    }
    Bounds::new(bounds.min, bounds.max)?;
    let mut controls = Vec::with_capacity(degree + 1);
    controls.push(endpoints.start);
    for _ in 1..degree {
        controls.push(Point3::new(
            rng.random_range(bounds.min.x..=bounds.max.x),
            rng.random_range(bounds.min.y..=bounds.max.y),
            rng.random_range(bounds.min.z..=bounds.max.z),
        ));
    }
    controls.push(endpoints.end);
    Ok(Genome::from_controls_unchecked(controls))
}

/// Index of the winner of one tournament among `k` distinct members drawn
/// uniformly; ties go to the lower index.
pub fn tournament_select<R: Rng + ?Sized>(
    members: &[Member],
    k: usize,
    rng: &mut R,
) -> Result<usize, EvolutionError> {
    if members.is_empty() {
        return Err(EvolutionError::EmptyPopulation);
    }
    if k == 0 || k > members.len() {
        return Err(EvolutionError::InvalidConfig(format!(
            "tournament size {k} outside 1..={}",
            members.len()
        )));
    }
    let winner = rand::seq::index::sample(rng, members.len(), k)
        .into_iter()
        .min_by(|&a, &b| {
            members[a]
                .cost
                .total
                .total_cmp(&members[b].cost.total)
                .then(a.cmp(&b))
        })
        .expect("k >= 1");
    Ok(winner)
}

/// Blends interior point `i` as `alpha(i) * a + (1 - alpha(i)) * b`.
fn blend(a: &Genome, b: &Genome, mut alpha: impl FnMut() -> f64) -> Result<Genome, EvolutionError> {
    if a.degree() != b.degree() {
        return Err(EvolutionError::DegreeMismatch(a.degree(), b.degree()));
    }
    if a.start() != b.start() || a.end() != b.end() {
        return Err(EvolutionError::EndpointMismatch);
    }
    let n = a.controls().len();
    let controls = a
        .controls()
        .iter()
        .zip(b.controls())
        .enumerate()
        .map(|(i, (&pa, &pb))| {
            if i == 0 || i == n - 1 {
                pa
            } else {
                let w = alpha();
                pa * w + pb * (1.0 - w)
            }
        })
        .collect();
    Ok(Genome::from_controls_unchecked(controls))
}

/// Blend `alpha * a + (1 - alpha) * b` with one weight for every point;
/// endpoints stay anchored.
pub fn crossover(a: &Genome, b: &Genome, alpha: f64) -> Result<Genome, EvolutionError> {
    blend(a, b, || alpha)
}

/// Extended blend crossover: each interior point draws its own weight
/// uniformly from `alpha_range`.
pub fn crossover_random<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    alpha_range: [f64; 2],
    rng: &mut R,
) -> Result<Genome, EvolutionError> {
    let [lo, hi] = alpha_range;
    blend(a, b, || {
        if lo < hi {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    })
}

/// Perturbs each interior point with probability `rate` by zero-mean
/// Gaussian noise.
pub fn mutate<R: Rng + ?Sized>(genome: &Genome, params: &MutationParams, rng: &mut R) -> Genome {
    let mut child = genome.clone();
    let nxy =
        (params.sigma_xy > 0.0).then(|| Normal::new(0.0, params.sigma_xy).expect("finite sigma"));
    let nz =
        (params.sigma_z > 0.0).then(|| Normal::new(0.0, params.sigma_z).expect("finite sigma"));
    for p in child.interior_mut() {
        if !rng.random_bool(params.rate) {
            continue;
        }
        if let Some(d) = &nxy {
            p.x += d.sample(rng);
            p.y += d.sample(rng);
        }
        if let Some(d) = &nz {
            p.z += d.sample(rng);
        }
    }
    child
}

fn clamp_interior(genome: &mut Genome, bounds: &Bounds) {
    for p in genome.interior_mut() {
        *p = bounds.clamp(*p);
    }
}

/// Random, evaluated initial population.
pub fn init_population<F: Fitness>(
    config: &GaConfig,
    ctx: &SearchContext<'_, F>,
) -> Result<Population, EvolutionError> {
    config.validate()?;
    let members = (0..config.population_size)
        .into_par_iter()
        .map(|slot| {
            let mut rng = slot_rng(config.rng_seed, 0, slot);
            let genome = random_genome(&ctx.bounds, &ctx.endpoints, config.degree, &mut rng)?;
            let cost = ctx.fitness.score(&genome);
            Ok(Member {
                genome,
                cost,
                origin: Origin::Initial,
            })
        })
        .collect::<Result<Vec<_>, EvolutionError>>()?;
    let b = best_index(&members);
    let best_ever = (members[b].genome.clone(), members[b].cost);
    Ok(Population {
        members,
        generation: 0,
        best_ever,
    })
}

/// Builds and evaluates the next generation.
pub fn step_generation<F: Fitness>(
    population: &Population,
    config: &GaConfig,
    ctx: &SearchContext<'_, F>,
) -> Result<Population, EvolutionError> {
    let generation = population.generation + 1;
    let ranking = population.ranking();
    let mutation = config.mutation_params(&ctx.bounds);
    let elites = config.elite_count;
    let immigrants_end = elites + config.immigrant_count;

    let mut members: Vec<Member> = ranking[..elites]
        .iter()
        .map(|&i| Member {
            origin: Origin::Elite,
            ..population.members[i].clone()
        })
        .collect();
    let fresh = (elites..config.population_size)
        .into_par_iter()
        .map(|slot| {
            let mut rng = slot_rng(config.rng_seed, generation, slot);
            let (genome, origin) = if slot < immigrants_end {
                (
                    random_genome(&ctx.bounds, &ctx.endpoints, config.degree, &mut rng)?,
                    Origin::Immigrant,
                )
            } else {
                let pa = tournament_select(&population.members, config.tournament_size, &mut rng)?;
                let pb = tournament_select(&population.members, config.tournament_size, &mut rng)?;
                let child = crossover_random(
                    &population.members[pa].genome,
                    &population.members[pb].genome,
                    config.crossover_alpha_range,
                    &mut rng,
                )?;
                let mut child = mutate(&child, &mutation, &mut rng);
                clamp_interior(&mut child, &ctx.bounds);
                (child, Origin::Offspring)
            };
            let cost = ctx.fitness.score(&genome);
            Ok(Member {
                genome,
                cost,
                origin,
            })
        })
        .collect::<Result<Vec<_>, EvolutionError>>()?;
    members.extend(fresh);

    let b = best_index(&members);
    let best_ever = if members[b].cost.total < population.best_ever.1.total {
        (members[b].genome.clone(), members[b].cost)
    } else {
        population.best_ever.clone()
    };
    Ok(Population {
        members,
        generation,
        best_ever,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best: Genome,
    pub best_cost: CostBreakdown,
    pub history: RunHistory,
    pub population: Population,
}

/// Runs `config.generations` steps on `workers` threads (`None` uses the
/// global rayon pool). Results do not depend on the worker count.
pub fn run<F: Fitness>(
    config: &GaConfig,
    ctx: &SearchContext<'_, F>,
    workers: Option<usize>,
) -> Result<RunResult, EvolutionError> {
    config.validate()?;
    Bounds::new(ctx.bounds.min, ctx.bounds.max)?;
    let body = || {
        let mut pop = init_population(config, ctx)?;
        let mut history = RunHistory::default();
        history.records.push(pop.record());
        for _ in 0..config.generations {
            pop = step_generation(&pop, config, ctx)?;
            history.records.push(pop.record());
        }
        Ok(RunResult {
            best: pop.best_ever.0.clone(),
            best_cost: pop.best_ever.1,
            history,
            population: pop,
        })
    };
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| EvolutionError::WorkerPool(e.to_string()))?
            .install(body),
        None => body(),
    }
}
