use rand_chacha::ChaCha8Rng;

use super::{finish, initial_population, sort_by_cost, SolveError, SolveResult, SolverConfig, Tracker};
use crate::instance::Instance;
use crate::operators::{hamming_distance, move_firefly, movement_length, MoveParams, Objective};

/// Discrete firefly algorithm. In each generation every firefly `i` moves
/// once for each brighter (cheaper) firefly `j`, taking `n` successors with
/// `n` drawn from its Hamming distance to `j`. Costs update in place, so later
/// comparisons in the same sweep see the moved fireflies.
pub fn dfa_solve(inst: &Instance, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> Result<SolveResult, SolveError> {
    let mut tracker = Tracker::new(inst, cfg.budget_for(inst));
    let mut pop = initial_population(inst, cfg.population_size, rng, &mut tracker)?;
    sort_by_cost(&mut pop);
    let rules = cfg.move_rules();
    let mut generation: u32 = 1;
    let mut generations = 0;
    'run: while !tracker.exhausted() {
        let before = tracker.evaluations();
        for i in 0..pop.len() {
            for j in 0..pop.len() {
                if pop[j].1 >= pop[i].1 {
                    continue;
                }
                let r = hamming_distance(&pop[i].0, &pop[j].0, inst).expect("population shares the instance");
                let params = MoveParams {
                    gamma: cfg.gamma,
                    generation,
                };
                let n = movement_length(r, params, rng);
                pop[i] = move_firefly(&pop[i].0, n, inst, &rules, rng, &mut tracker);
                if tracker.exhausted() {
                    generations += 1;
                    break 'run;
                }
            }
        }
        generations += 1;
        // no brighter neighbour anywhere: every firefly has the same cost
        if tracker.evaluations() == before {
            break;
        }
        sort_by_cost(&mut pop);
        generation = generation.saturating_add(1);
    }
    Ok(finish(cfg, tracker, generations))
}
