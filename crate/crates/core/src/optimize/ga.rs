//! Generational genetic algorithm on allocation vectors: binary tournaments,
//! single-point crossover with duplicate repair, one-position mutation and a
//! single elite carried over unchanged.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{random_allocation, repair_duplicates, replace_one, Evaluator, OptResult, PlacementProblem};
use crate::cost::AllocationVector;
use crate::error::{Error, Result};
use crate::seed::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig { population: 20, generations: 28, crossover_rate: 0.9, mutation_rate: 0.1, seed: 0 }
    }
}

impl GaConfig {
    /// Spends at most `budget` evaluations: `population` for the first
    /// generation and `population - 1` per later one. Small budgets shrink the
    /// population to half the budget so at least one generation evolves.
    pub fn matched(budget: usize, seed: u64) -> Self {
        let population = 20.min(budget / 2).max(2);
        let generations = budget.saturating_sub(population) / (population - 1);
        GaConfig { population, generations, seed, ..Default::default() }
    }

    pub fn evaluation_budget(&self) -> usize {
        self.population + self.generations * (self.population - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParams(format!("GA population must be >= 2, got {}", self.population)));
        }
        for (name, p) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

struct Individual {
    vector: AllocationVector,
    cost: f64,
}

fn tournament<'a, R: Rng + ?Sized>(pop: &'a [Individual], rng: &mut R) -> &'a Individual {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if b.cost < a.cost {
        b
    } else {
        a
    }
}

fn fittest(pop: &[Individual]) -> &Individual {
    pop.iter().fold(&pop[0], |best, x| if x.cost < best.cost { x } else { best })
}

pub fn ga_optimize(problem: &PlacementProblem<'_>, cfg: &GaConfig) -> Result<OptResult> {
    cfg.validate()?;
    let mut rng = Stream::seed_from_u64(cfg.seed);
    let initial = (0..cfg.population).map(|_| random_allocation(problem, &mut rng)).collect::<Result<Vec<_>>>()?;
    evolve(problem, cfg, initial, &mut rng)
}

/// Runs the GA from a caller-supplied first generation.
pub fn ga_optimize_from(problem: &PlacementProblem<'_>, cfg: &GaConfig, initial: Vec<AllocationVector>) -> Result<OptResult> {
    cfg.validate()?;
    if initial.len() != cfg.population {
        return Err(Error::InvalidParams(format!(
            "initial population has {} members, config says {}",
            initial.len(),
            cfg.population
        )));
    }
    if let Some(bad) = initial.iter().find(|v| !problem.is_feasible(v)) {
        return Err(Error::InvalidAllocation(format!("{:?} is not feasible for this problem", bad.ids())));
    }
    let mut rng = Stream::seed_from_u64(cfg.seed);
    evolve(problem, cfg, initial, &mut rng)
}

fn evolve(
    problem: &PlacementProblem<'_>,
    cfg: &GaConfig,
    initial: Vec<AllocationVector>,
    rng: &mut Stream,
) -> Result<OptResult> {
    let r = problem.replicas();
    let mut eval = Evaluator::new(problem);
    let mut pop: Vec<Individual> = initial
        .into_iter()
        .map(|vector| {
            let cost = eval.eval(&vector);
            Individual { vector, cost }
        })
        .collect();

    let mut trace = vec![fittest(&pop).cost];
    for _ in 0..cfg.generations {
        let elite = fittest(&pop);
        let mut next = vec![Individual { vector: elite.vector.clone(), cost: elite.cost }];
        while next.len() < cfg.population {
            let a = tournament(&pop, rng).vector.ids();
            let b = tournament(&pop, rng).vector.ids();
            let mut child = if r > 1 && rng.gen_bool(cfg.crossover_rate) {
                let cut = rng.gen_range(1..r);
                let mut c: Vec<usize> = a[..cut].iter().chain(&b[cut..]).copied().collect();
                repair_duplicates(&mut c, problem.feasible(), rng)?;
                c
            } else {
                a.to_vec()
            };
            if rng.gen_bool(cfg.mutation_rate) {
                replace_one(&mut child, problem.feasible(), rng);
            }
            let vector = AllocationVector::from_distinct(child);
            let cost = eval.eval(&vector);
            next.push(Individual { vector, cost });
        }
        pop = next;
        trace.push(fittest(&pop).cost);
    }

    let best = fittest(&pop);
    Ok(OptResult { best: best.vector.clone(), best_cost: best.cost, trace, evaluations: eval.count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, DataItem};
    use crate::optimize::testutil::random_topology;
    use crate::optimize::{exhaustive_best, DEFAULT_ENUMERATION_LIMIT};

    #[test]
    fn matched_budgets() {
        for budget in [3usize, 15, 20, 40, 210, 560] {
            let c = GaConfig::matched(budget, 0);
            assert!(c.evaluation_budget() <= budget, "{budget}: {c:?}");
            assert!(c.generations >= 1, "{budget}: {c:?}");
        }
        assert_eq!(GaConfig::matched(560, 0).population, 20);
        assert_eq!(GaConfig::matched(15, 0).population, 7);
    }

    #[test]
    fn unique_vector() {
        let t = fixtures::with_clouds(2, 100);
        let d = fixtures::datum(5, 2);
        let p = PlacementProblem::new(&t, &d).unwrap();
        let res = ga_optimize(&p, &GaConfig { generations: 5, seed: 3, ..Default::default() }).unwrap();
        assert_eq!(res.best.sorted(), vec![0, 1]);
    }

    #[test]
    fn no_variation_keeps_best_constant() {
        let mut rng = Stream::seed_from_u64(4);
        let t = random_topology(&mut rng, 2, 8);
        let d = fixtures::datum(50, 3);
        let p = PlacementProblem::new(&t, &d).unwrap();
        let v = AllocationVector::new(vec![5, 1, 6], 8).unwrap();
        // crossover of identical parents reproduces them; no mutation
        let cfg = GaConfig { population: 6, generations: 10, crossover_rate: 1.0, mutation_rate: 0.0, seed: 1 };
        let res = ga_optimize_from(&p, &cfg, vec![v.clone(); 6]).unwrap();
        let c = p.evaluate(&v);
        assert!(res.trace.iter().all(|&x| x == c));
        assert_eq!(res.best, v);
        assert_eq!(res.evaluations as usize, cfg.evaluation_budget());
    }

    #[test]
    fn rejects_bad_config() {
        let t = fixtures::with_clouds(3, 100);
        let d = fixtures::datum(5, 2);
        let p = PlacementProblem::new(&t, &d).unwrap();
        assert!(ga_optimize(&p, &GaConfig { population: 1, ..Default::default() }).is_err());
        assert!(ga_optimize(&p, &GaConfig { mutation_rate: 1.5, ..Default::default() }).is_err());
        let v = AllocationVector::new(vec![0, 1], 3).unwrap();
        assert!(ga_optimize_from(&p, &GaConfig { population: 2, ..Default::default() }, vec![v]).is_err());
    }

    #[test]
    fn usually_optimal_with_560_evaluations() {
        let mut rng = Stream::seed_from_u64(12);
        let mut hits = 0;
        for seed in 0..100 {
            let t = random_topology(&mut rng, 4, 8);
            let d = DataItem { id: 0, size: rng.gen_range(20..=100), source_gateway: 1, replica_count: 3, arrival_timestep: 1 };
            let p = PlacementProblem::new(&t, &d).unwrap();
            let oracle = exhaustive_best(&p, DEFAULT_ENUMERATION_LIMIT).unwrap();
            let res = ga_optimize(&p, &GaConfig::matched(560, seed)).unwrap();
            assert!(res.best_cost >= oracle.best_cost);
            assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(res.evaluations <= 560);
            hits += usize::from(res.best_cost == oracle.best_cost);
        }
        assert!(hits > 50, "{hits}/100");
    }
}
