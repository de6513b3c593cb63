use hyperroute::costing::{CostBreakdown, CostModel};
use hyperroute::evolution::{
    crossover, init_population, mutate, random_genome, step_generation, tournament_select, Bounds,
    GaConfig, Member, MutationParams, Origin, SearchContext,
};
use hyperroute::geometry::{Endpoints, Genome, KinematicLimits, Point3};
use hyperroute::pipeline::{anchor_endpoints, Problem};
use hyperroute::terrain::{synth_terrain, LocalFrame, TerrainKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ends() -> Endpoints {
    Endpoints {
        start: Point3::new(-4000.0, 0.0, 10.0),
        end: Point3::new(4000.0, 500.0, 30.0),
    }
}

fn member(total: f64) -> Member {
    Member {
        genome: Genome::straight(&ends(), 3),
        cost: CostBreakdown {
            total,
            ..Default::default()
        },
        origin: Origin::Initial,
    }
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn tournament_frequencies_match_exact_probabilities() {
    let (n, k, draws) = (10, 3, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    // costs in shuffled order so rank and index differ
    let mut totals: Vec<f64> = (0..n).map(|i| 100.0 + 7.0 * i as f64).collect();
    totals.shuffle(&mut rng);
    let members: Vec<Member> = totals.iter().map(|&t| member(t)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| totals[a].total_cmp(&totals[b]));

    let mut wins = vec![0usize; n];
    for _ in 0..draws {
        wins[tournament_select(&members, k, &mut rng).unwrap()] += 1;
    }
    let mut prev = f64::INFINITY;
    for (rank, &idx) in order.iter().enumerate() {
        // the rank-th best wins iff it is drawn and the other k-1 are all worse
        let p = binom(n - rank - 1, k - 1) / binom(n, k);
        let freq = wins[idx] as f64 / draws as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!(
            (freq - p).abs() <= 4.0 * se + 1e-12,
            "rank {rank}: {freq} vs {p}"
        );
        assert!(p <= prev);
        prev = p;
    }
}

#[test]
fn exhaustive_and_trivial_tournaments() {
    let members: Vec<Member> = [5.0, 3.0, 9.0, 3.0].iter().map(|&t| member(t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        assert_eq!(tournament_select(&members, 4, &mut rng).unwrap(), 1);
    }
    let mut seen = [0usize; 4];
    for _ in 0..4000 {
        seen[tournament_select(&members, 1, &mut rng).unwrap()] += 1;
    }
    assert!(seen.iter().all(|&c| (850..1150).contains(&c)), "{seen:?}");
}

#[test]
fn gaussian_mutation_moments() {
    let params = MutationParams {
        sigma_xy: 120.0,
        sigma_z: 50.0,
        rate: 1.0,
    };
    let g = Genome::straight(&ends(), 3);
    let origin = g.controls()[1];
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let n = 10_000;
    let mut dx = Vec::with_capacity(n);
    let mut dz = Vec::with_capacity(n);
    for _ in 0..n {
        let m = mutate(&g, &params, &mut rng);
        assert_eq!(m.start(), g.start());
        assert_eq!(m.end(), g.end());
        let d = m.controls()[1] - origin;
        dx.push(d.x);
        dz.push(d.z);
    }
    for (d, sigma) in [(dx, 120.0), (dz, 50.0)] {
        let mean = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() <= 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        assert!((sd - sigma).abs() / sigma < 0.05, "sd {sd}");
    }
}

#[test]
fn crossover_blend_examples() {
    let e = ends();
    let mut a = Genome::straight(&e, 4).controls().to_vec();
    let mut b = a.clone();
    a[2] = Point3::new(0.0, 0.0, 0.0);
    b[2] = Point3::new(10.0, 20.0, 30.0);
    let a = Genome::new(a, &e).unwrap();
    let b = Genome::new(b, &e).unwrap();
    assert_eq!(
        crossover(&a, &b, 0.5).unwrap().controls()[2],
        Point3::new(5.0, 10.0, 15.0)
    );
    assert_eq!(crossover(&a, &b, 1.0).unwrap(), a);
    for alpha in [-0.25, 0.3, 1.25] {
        assert_eq!(crossover(&a, &a, alpha).unwrap(), a);
    }
}

#[test]
fn random_genomes_fill_bounds() {
    let bounds = Bounds::new(
        Point3::new(-5000.0, -2000.0, -100.0),
        Point3::new(5000.0, 2500.0, 800.0),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let g = random_genome(&bounds, &ends(), 10, &mut rng).unwrap();
        assert_eq!(g.controls().len(), 11);
        assert_eq!((g.start(), g.end()), (ends().start, ends().end));
        assert!(g.controls()[1..10].iter().all(|&p| bounds.contains(p)));
    }
    let a = random_genome(&bounds, &ends(), 10, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let b = random_genome(&bounds, &ends(), 10, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn generations_keep_size_anchoring_and_elites_on_mountains() {
    let frame = LocalFrame::new(34.6, -118.7);
    let terrain = TerrainKind::GaussianRidge {
        base: 200.0,
        amplitude: 1500.0,
        sigma: 700.0,
        angle_deg: 80.0,
    };
    let grid = synth_terrain(&terrain, 10_000.0, 81, &frame).unwrap();
    let endpoints = anchor_endpoints(
        &grid,
        &frame,
        (-4000.0, -300.0, None),
        (4000.0, 600.0, None),
        6.0,
    )
    .unwrap();
    let problem = Problem {
        grid,
        frame,
        endpoints,
        limits: KinematicLimits::default(),
        model: CostModel::default(),
    };
    let config = GaConfig {
        population_size: 40,
        n_samples: 128,
        rng_seed: 5,
        ..Default::default()
    };
    let evaluator = problem.evaluator(config.degree, config.n_samples).unwrap();
    let ctx = SearchContext {
        fitness: &evaluator,
        bounds: problem
            .bounds(config.corridor_margin, config.z_margin)
            .unwrap(),
        endpoints,
    };
    let mut pop = init_population(&config, &ctx).unwrap();
    assert_eq!(pop.members.len(), 40);
    assert!(pop.members.iter().all(|m| m.cost.total.is_finite()));
    assert!(pop.members.iter().any(|m| m.cost.penalty_cost > 0.0));
    for _ in 0..15 {
        let before = pop.best_ever.1.total;
        let elites: Vec<Genome> = pop.ranking()[..2]
            .iter()
            .map(|&i| pop.members[i].genome.clone())
            .collect();
        pop = step_generation(&pop, &config, &ctx).unwrap();
        assert_eq!(pop.members.len(), 40);
        assert!(pop.best_ever.1.total <= before);
        for e in &elites {
            assert!(pop
                .members
                .iter()
                .any(|m| m.origin == Origin::Elite && &m.genome == e));
        }
        assert_eq!(
            pop.members
                .iter()
                .filter(|m| m.origin == Origin::Immigrant)
                .count(),
            4
        );
        for m in &pop.members {
            assert_eq!(m.genome.start(), endpoints.start);
            assert_eq!(m.genome.end(), endpoints.end);
            assert!(m.genome.controls().iter().all(|&p| ctx.bounds.contains(p)));
        }
    }
}
