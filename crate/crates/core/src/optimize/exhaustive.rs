use itertools::Itertools;

use super::{Evaluator, OptResult, PlacementProblem};
use crate::cost::AllocationVector;
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_LIMIT: u128 = 100_000;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Evaluates every `r`-subset of the feasible clouds in lexicographic order.
/// Ties keep the lexicographically smallest subset.
pub fn exhaustive_best(problem: &PlacementProblem<'_>, limit: u128) -> Result<OptResult> {
    let m = problem.feasible().len();
    let r = problem.replicas();
    if m < r {
        return Err(Error::Infeasible { required: r, available: m });
    }
    let size = binomial(m, r);
    if size > limit {
        return Err(Error::SearchSpaceTooLarge { size, limit });
    }

    let mut eval = Evaluator::new(problem);
    let mut best: Option<(AllocationVector, f64)> = None;
    let mut trace = Vec::with_capacity(size as usize);
    for subset in problem.feasible().iter().copied().combinations(r) {
        let v = AllocationVector::from_distinct(subset);
        let cost = eval.eval(&v);
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((v, cost));
        }
        trace.push(best.as_ref().unwrap().1);
    }
    let (best, best_cost) = best.expect("at least one subset");
    Ok(OptResult { best, best_cost, trace, evaluations: eval.count })
}
