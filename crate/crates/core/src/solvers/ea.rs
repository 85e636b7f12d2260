use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{finish, initial_population, sort_by_cost, SolveError, SolveResult, SolverConfig, Tracker};
use crate::instance::Instance;
use crate::operators::Objective;

/// Survivors kept by rank out of a population of `size`.
pub fn elite_count(size: usize, elitist_fraction: f64) -> usize {
    // the epsilon stops 0.7 * 10 = 7.000000000000001 from rounding up to 8
    ((size as f64 * elitist_fraction) - 1e-9).ceil().clamp(0.0, size as f64) as usize
}

/// Mutation-only generational EA. Each parent yields one offspring; the
/// pooled parents and offspring are ranked, the elite fraction survives by
/// rank and the rest of the next population is drawn uniformly without
/// replacement from the remaining candidates.
pub fn ea_solve(inst: &Instance, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> Result<SolveResult, SolveError> {
    let mut tracker = Tracker::new(inst, cfg.budget_for(inst));
    let mut pop = initial_population(inst, cfg.population_size, rng, &mut tracker)?;
    let rules = cfg.move_rules();
    let size = pop.len();
    let elite = elite_count(size, cfg.elitist_fraction);
    let mut generations = 0;
    'run: while !tracker.exhausted() {
        let before = tracker.evaluations();
        let mut pooled = pop.clone();
        for (parent, cost) in &pop {
            if rng.random_bool(cfg.mutation_probability) {
                let child = rules.successor(parent, inst, rng);
                let c = tracker.evaluate(&child);
                pooled.push((child, c));
                if tracker.exhausted() {
                    generations += 1;
                    break 'run;
                }
            } else {
                pooled.push((parent.clone(), *cost));
            }
        }
        generations += 1;
        if tracker.evaluations() == before {
            break;
        }
        sort_by_cost(&mut pooled);
        let rest = pooled.split_off(elite);
        let mut drawn = sample(rng, rest.len(), size - elite).into_vec();
        drawn.sort_unstable();
        let mut rest: Vec<Option<_>> = rest.into_iter().map(Some).collect();
        pooled.extend(drawn.into_iter().map(|k| rest[k].take().expect("indices are distinct")));
        pop = pooled;
    }
    Ok(finish(cfg, tracker, generations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elite_split() {
        assert_eq!(elite_count(100, 0.7), 70);
        assert_eq!(elite_count(10, 0.7), 7);
        assert_eq!(elite_count(25, 0.7), 18);
        assert_eq!(elite_count(3, 0.7), 3);
        assert_eq!(elite_count(1, 0.7), 1);
        assert_eq!(elite_count(20, 0.0), 0);
        assert_eq!(elite_count(20, 1.0), 20);
    }
}
