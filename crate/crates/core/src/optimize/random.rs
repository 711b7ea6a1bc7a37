use rand::Rng;

use super::{random_allocation, Evaluator, OptResult, PlacementProblem};
use crate::error::{Error, Result};

/// Best of `budget` independent uniform draws.
pub fn random_search<R: Rng + ?Sized>(problem: &PlacementProblem<'_>, budget: usize, rng: &mut R) -> Result<OptResult> {
    if budget == 0 {
        return Err(Error::InvalidParams("random search needs a budget of at least one evaluation".into()));
    }
    let mut eval = Evaluator::new(problem);
    let mut best = None;
    let mut trace = Vec::with_capacity(budget);
    for _ in 0..budget {
        let v = random_allocation(problem, rng)?;
        let cost = eval.eval(&v);
        match &best {
            Some((_, c)) if !(cost < *c) => {}
            _ => best = Some((v, cost)),
        }
        trace.push(best.as_ref().map(|b| b.1).unwrap());
    }
    let (best, best_cost) = best.unwrap();
    Ok(OptResult { best, best_cost, trace, evaluations: eval.count })
}
