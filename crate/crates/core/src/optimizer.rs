//! Derivative-free box-constrained search: a real-coded genetic algorithm
//! followed by a Nelder-Mead polish, with exterior penalties for
//! constraints.

use std::collections::HashMap;
use std::sync::Mutex;

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumResult;
use crate::error::PricingError;
use crate::metrics::MetricsReport;
use crate::pricing::{evaluate_prices, objective, Bounds, DesignProblem, Evaluation, PriceVector};

/// Constraint violations up to this size (euro/h) count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Violations enter the penalty in thousands of euro.
const PENALTY_UNIT: f64 = 1000.0;

/// Objective value and constraint violation at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub value: f64,
    pub violation: f64,
}

impl Scored {
    pub fn feasible(&self) -> bool {
        self.value.is_finite() && self.violation <= FEASIBILITY_TOL
    }

    pub fn penalized(&self, coefficient: f64) -> f64 {
        if !self.value.is_finite() {
            return f64::INFINITY;
        }
        let v = self.violation / PENALTY_UNIT;
        self.value + coefficient * v * v
    }

    /// Feasible beats infeasible; then lower value, or lower violation.
    fn better_than(&self, other: &Scored) -> bool {
        match (self.feasible(), other.feasible()) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.value < other.value,
            (false, false) => (self.violation, self.value) < (other.violation, other.value),
        }
    }
}

/// A box-constrained problem the optimizer can drive.
pub trait Problem: Sync {
    fn dimension(&self) -> usize;
    fn bounds(&self) -> Bounds;
    fn score(&self, x: &[f64]) -> Scored;
}

impl Problem for DesignProblem {
    fn dimension(&self) -> usize {
        DesignProblem::dimension(self)
    }

    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn score(&self, x: &[f64]) -> Scored {
        match objective(self, x) {
            Ok(e) => Scored {
                value: e.value,
                violation: e.slack.map_or(0.0, |s| s.violation()),
            },
            Err(_) => Scored {
                value: f64::INFINITY,
                violation: f64::INFINITY,
            },
        }
    }
}

/// Closure-backed problem, mainly for tests and surrogates.
pub struct FnProblem<F> {
    pub dimension: usize,
    pub bounds: Bounds,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Scored + Sync> Problem for FnProblem<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn score(&self, x: &[f64]) -> Scored {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of the box width.
    pub mutation_scale: f64,
    /// BLX-alpha extension of the parents' interval.
    pub blend_alpha: f64,
    pub tournament: usize,
    pub elite: usize,
    /// Evaluation budget of the simplex polish.
    pub polish_evals: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Initial penalty coefficient per squared thousand euro of violation;
    /// doubled after every restart that ends infeasible.
    pub penalty: f64,
    /// Stop after this many objective evaluations (cache hits excluded).
    pub max_evals: Option<usize>,
    /// Worker threads for population evaluation; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            population: 60,
            generations: 250,
            crossover_rate: 0.9,
            mutation_rate: 0.15,
            mutation_scale: 0.05,
            blend_alpha: 0.5,
            tournament: 3,
            elite: 2,
            polish_evals: 500,
            restarts: 3,
            seed: 1,
            penalty: 1e3,
            max_evals: None,
            threads: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), PricingError> {
        let bad = |m: &str| Err(PricingError::InvalidProblem(m.into()));
        if self.population < 10 {
            return bad("population must be at least 10");
        }
        if self.restarts == 0 {
            return bad("at least one restart is required");
        }
        if self.tournament == 0 || self.elite >= self.population {
            return bad("tournament must be positive and elite below the population size");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("rates must lie in [0, 1]");
        }
        if !(self.penalty > 0.0) {
            return bad("penalty coefficient must be positive");
        }
        Ok(())
    }
}

/// One row of the search trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub restart: usize,
    /// Generation index; the polish phase is logged as `generations`.
    pub generation: usize,
    /// Incumbent objective value so far.
    pub best: f64,
    /// Mean finite penalized fitness of the population (absent for the polish).
    pub mean: Option<f64>,
    pub feasible_fraction: Option<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub score: Scored,
    pub feasible: bool,
    pub seed: u64,
    pub evaluations: usize,
    pub cache_hits: usize,
    pub penalty: f64,
    pub trace: Vec<TraceRow>,
}

/// Memoized, batch-parallel scorer.
struct Evaluator<'a, P: Problem> {
    problem: &'a P,
    cache: Mutex<HashMap<Vec<i64>, Scored>>,
    evaluations: usize,
    hits: usize,
    pool: Option<rayon::ThreadPool>,
}

fn key(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * 1e6).round() as i64).collect()
}

impl<'a, P: Problem> Evaluator<'a, P> {
    fn new(problem: &'a P, threads: Option<usize>) -> Self {
        let pool = threads.map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .expect("thread pool")
        });
        Evaluator {
            problem,
            cache: Mutex::new(HashMap::new()),
            evaluations: 0,
            hits: 0,
            pool,
        }
    }

    fn batch(&mut self, xs: &[Vec<f64>]) -> Vec<Scored> {
        let keys: Vec<Vec<i64>> = xs.iter().map(|x| key(x)).collect();
        let mut todo: Vec<usize> = Vec::new();
        {
            let cache = self.cache.lock().unwrap();
            for (i, k) in keys.iter().enumerate() {
                if !cache.contains_key(k) && !todo.iter().any(|&j| keys[j] == *k) {
                    todo.push(i);
                }
            }
        }
        let problem = self.problem;
        let run = || todo.par_iter().map(|&i| problem.score(&xs[i])).collect::<Vec<_>>();
        let scored = match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        };
        self.evaluations += todo.len();
        self.hits += xs.len() - todo.len();
        let mut cache = self.cache.lock().unwrap();
        for (&i, s) in todo.iter().zip(scored) {
            cache.insert(keys[i].clone(), s);
        }
        keys.iter().map(|k| cache[k]).collect()
    }

    fn one(&mut self, x: &[f64]) -> Scored {
        self.batch(&[x.to_vec()])[0]
    }
}

struct Incumbent {
    x: Vec<f64>,
    score: Scored,
}

impl Incumbent {
    fn offer(&mut self, x: &[f64], s: Scored) {
        if s.better_than(&self.score) {
            self.x = x.to_vec();
            self.score = s;
        }
    }

    fn reported(&self) -> f64 {
        self.score.value
    }
}

fn project(x: &mut [f64], b: Bounds) {
    for v in x.iter_mut() {
        *v = b.clamp(*v);
    }
}

/// Minimize `problem` from the box, with `seeds` injected into the first
/// generation.
pub fn minimize<P: Problem>(problem: &P, config: &OptimizerConfig, seeds: &[Vec<f64>]) -> Result<OptimResult, PricingError> {
    config.validate()?;
    let n = problem.dimension();
    let bounds = problem.bounds();
    for s in seeds {
        if s.len() != n {
            return Err(PricingError::Dimension { expected: n, got: s.len() });
        }
    }
    let width = bounds.width();
    let mutation = Normal::new(0.0, config.mutation_scale * width).expect("finite mutation scale");
    let mut ev = Evaluator::new(problem, config.threads);
    let mut penalty = config.penalty;
    let mut trace = Vec::new();
    let mut best = Incumbent {
        x: vec![bounds.clamp(0.0); n],
        score: Scored {
            value: f64::INFINITY,
            violation: f64::INFINITY,
        },
    };
    let budget_left = |ev: &Evaluator<P>| config.max_evals.map_or(true, |m| ev.evaluations < m);

    for restart in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);

        let mut pop: Vec<Vec<f64>> = Vec::with_capacity(config.population);
        if restart == 0 {
            for s in seeds.iter().take(config.population) {
                let mut x = s.clone();
                project(&mut x, bounds);
                pop.push(x);
            }
        } else if best.score.value.is_finite() {
            pop.push(best.x.clone());
        }
        while pop.len() < config.population {
            pop.push((0..n).map(|_| rng.gen_range(bounds.lb..=bounds.ub)).collect());
        }
        let mut scores = ev.batch(&pop);

        for generation in 0..config.generations {
            for (x, s) in pop.iter().zip(&scores) {
                best.offer(x, *s);
            }
            let fitness: Vec<f64> = scores.iter().map(|s| s.penalized(penalty)).collect();
            let finite: Vec<f64> = fitness.iter().copied().filter(|f| f.is_finite()).collect();
            trace.push(TraceRow {
                restart,
                generation,
                best: best.reported(),
                mean: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
                feasible_fraction: Some(scores.iter().filter(|s| s.feasible()).count() as f64 / scores.len() as f64),
                evaluations: ev.evaluations,
            });
            if !budget_left(&ev) {
                break;
            }

            let mut order: Vec<usize> = (0..pop.len()).collect();
            order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
            let mut next: Vec<Vec<f64>> = order.iter().take(config.elite).map(|&i| pop[i].clone()).collect();
            let tournament = |rng: &mut ChaCha8Rng| {
                let mut w = rng.gen_range(0..pop.len());
                for _ in 1..config.tournament {
                    let c = rng.gen_range(0..pop.len());
                    if fitness[c] < fitness[w] {
                        w = c;
                    }
                }
                w
            };
            while next.len() < config.population {
                let a = tournament(&mut rng);
                let b = tournament(&mut rng);
                let mut child: Vec<f64> = if rng.gen::<f64>() < config.crossover_rate {
                    pop[a]
                        .iter()
                        .zip(&pop[b])
                        .map(|(&u, &v)| {
                            let (lo, hi) = (u.min(v), u.max(v));
                            let ext = config.blend_alpha * (hi - lo);
                            rng.gen_range(lo - ext..=hi + ext)
                        })
                        .collect()
                } else {
                    pop[a].clone()
                };
                for g in child.iter_mut() {
                    if rng.gen::<f64>() < config.mutation_rate {
                        *g += mutation.sample(&mut rng);
                    }
                }
                project(&mut child, bounds);
                next.push(child);
            }
            pop = next;
            scores = ev.batch(&pop);
        }
        for (x, s) in pop.iter().zip(&scores) {
            best.offer(x, *s);
        }

        if config.polish_evals > 0 && budget_left(&ev) {
            let start = best.x.clone();
            nelder_mead(&mut ev, &mut best, &start, bounds, penalty, config.polish_evals);
            trace.push(TraceRow {
                restart,
                generation: config.generations,
                best: best.reported(),
                mean: None,
                feasible_fraction: None,
                evaluations: ev.evaluations,
            });
        }
        debug!(
            "restart {restart}: incumbent {:.6} (violation {:.3e}) after {} evaluations",
            best.score.value, best.score.violation, ev.evaluations
        );
        if !best.score.feasible() {
            penalty *= 2.0;
        }
        if !budget_left(&ev) {
            break;
        }
    }
    info!(
        "search finished: objective {:.6}, feasible {}, {} evaluations ({} cache hits)",
        best.score.value,
        best.score.feasible(),
        ev.evaluations,
        ev.hits
    );
    Ok(OptimResult {
        feasible: best.score.feasible(),
        x: best.x,
        score: best.score,
        seed: config.seed,
        evaluations: ev.evaluations,
        cache_hits: ev.hits,
        penalty,
        trace,
    })
}

/// Bounded Nelder-Mead on the penalized objective, feeding every point it
/// scores to the incumbent.
fn nelder_mead<P: Problem>(ev: &mut Evaluator<P>, best: &mut Incumbent, start: &[f64], bounds: Bounds, penalty: f64, budget: usize) {
    let n = start.len();
    if n == 0 {
        return;
    }
    let step = 0.1 * bounds.width();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] = if x[i] + step <= bounds.ub { x[i] + step } else { x[i] - step };
        simplex.push(x);
    }
    let scored = ev.batch(&simplex);
    let mut used = scored.len();
    for (x, s) in simplex.iter().zip(&scored) {
        best.offer(x, *s);
    }
    let mut f: Vec<f64> = scored.iter().map(|s| s.penalized(penalty)).collect();
    let eval = |x: &mut Vec<f64>, ev: &mut Evaluator<P>, best: &mut Incumbent, used: &mut usize| {
        project(x, bounds);
        let s = ev.one(x);
        *used += 1;
        best.offer(x, s);
        s.penalized(penalty)
    };

    while used < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        f = order.iter().map(|&i| f[i]).collect();
        if (f[n] - f[0]).abs() <= 1e-12 * (1.0 + f[0].abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };
        let mut xr = along(1.0);
        let fr = eval(&mut xr, ev, best, &mut used);
        if fr < f[0] {
            let mut xe = along(2.0);
            let fe = eval(&mut xe, ev, best, &mut used);
            if fe < fr {
                simplex[n] = xe;
                f[n] = fe;
            } else {
                simplex[n] = xr;
                f[n] = fr;
            }
        } else if fr < f[n - 1] {
            simplex[n] = xr;
            f[n] = fr;
        } else {
            let mut xc = if fr < f[n] { along(0.5) } else { along(-0.5) };
            let fc = eval(&mut xc, ev, best, &mut used);
            if fc < f[n].min(fr) {
                simplex[n] = xc;
                f[n] = fc;
            } else {
                for i in 1..=n {
                    let mut x: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    f[i] = eval(&mut x, ev, best, &mut used);
                    simplex[i] = x;
                }
            }
        }
    }
}

/// A finished pricing design.
#[derive(Debug, Clone)]
pub struct Design {
    pub prices: PriceVector,
    pub evaluation: Evaluation,
    pub equilibrium: EquilibriumResult,
    pub report: MetricsReport,
    pub search: OptimResult,
}

/// Optimize `problem`, injecting `warm` decision vectors (e.g. a road
/// design mapped to trip prices) into the first generation.
pub fn design(problem: &DesignProblem, config: &OptimizerConfig, warm: &[Vec<f64>]) -> Result<Design, PricingError> {
    let mut seeds = vec![vec![problem.bounds.clamp(0.0); problem.dimension()]];
    seeds.extend(warm.iter().cloned());
    let search = minimize(problem, config, &seeds)?;
    let prices = problem.prices(&search.x)?;
    let (evaluation, equilibrium, report) =
        evaluate_prices(problem, &prices).map_err(|e| PricingError::InvalidProblem(format!("final equilibrium: {e}")))?;
    Ok(Design {
        prices,
        evaluation,
        equilibrium,
        report,
        search,
    })
}

/// Outcome of repeated searches from different seeds.
#[derive(Debug, Clone)]
pub struct Agreement {
    /// Fraction of runs whose objective is within 1% of the best, measured
    /// against at least one unit so near-zero optima do not demand exact ties.
    pub rate: f64,
    pub values: Vec<f64>,
    pub best: OptimResult,
}

pub fn multi_start_agreement<P: Problem>(problem: &P, config: &OptimizerConfig, seeds: &[u64]) -> Result<Agreement, PricingError> {
    if seeds.len() < 2 {
        return Err(PricingError::InvalidProblem("multi-start needs at least two seeds".into()));
    }
    let runs: Vec<OptimResult> = seeds
        .iter()
        .map(|&seed| minimize(problem, &OptimizerConfig { seed, ..*config }, &[]))
        .collect::<Result<_, _>>()?;
    let best = runs
        .iter()
        .min_by(|a, b| {
            if a.score.better_than(&b.score) {
                std::cmp::Ordering::Less
            } else if b.score.better_than(&a.score) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
        .expect("at least two runs")
        .clone();
    let values: Vec<f64> = runs.iter().map(|r| r.score.value).collect();
    let tol = 0.01 * best.score.value.abs().max(1.0);
    let agree = values.iter().filter(|&&v| (v - best.score.value).abs() <= tol).count();
    Ok(Agreement {
        rate: agree as f64 / values.len() as f64,
        values,
        best,
    })
}
