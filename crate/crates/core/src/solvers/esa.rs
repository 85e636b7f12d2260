use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{finish, initial_population, SolveError, SolveResult, SolverConfig, Tracker};
use crate::instance::Instance;
use crate::operators::Objective;

/// Starting temperature `-(worst - best) / ln(p)` of a population's costs.
pub fn esa_initial_temperature(costs: &[f64], p: f64) -> f64 {
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if costs.is_empty() || worst <= best {
        return 0.0;
    }
    -(worst - best) / p.ln()
}

/// Metropolis rule: improvements and ties always pass, a worsening `delta`
/// passes with probability `exp(-delta / t)`, never at zero temperature.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, t: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if t <= 0.0 {
        return false;
    }
    rng.random::<f64>() < (-delta / t).exp()
}

/// Evolutionary simulated annealing: one Metropolis chain per individual,
/// all cooled geometrically under a shared temperature.
pub fn esa_solve(inst: &Instance, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> Result<SolveResult, SolveError> {
    let mut tracker = Tracker::new(inst, cfg.budget_for(inst));
    let mut pop = initial_population(inst, cfg.population_size, rng, &mut tracker)?;
    let rules = cfg.move_rules();
    let costs: Vec<f64> = pop.iter().map(|p| p.1).collect();
    let mut t = esa_initial_temperature(&costs, cfg.acceptance_p);
    let mut generations = 0;
    'run: while !tracker.exhausted() {
        for (x, cost) in pop.iter_mut() {
            let candidate = rules.successor(x, inst, rng);
            let c = tracker.evaluate(&candidate);
            if metropolis_accept(c - *cost, t, rng) {
                *x = candidate;
                *cost = c;
            }
            if tracker.exhausted() {
                generations += 1;
                break 'run;
            }
        }
        generations += 1;
        t *= cfg.cooling_constant;
    }
    Ok(finish(cfg, tracker, generations))
}
