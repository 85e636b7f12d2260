//! Evaluation counting, the no-improvement budget and convergence records.

use std::time::{Duration, Instant};

use crate::evaluation::solution_cost;
use crate::instance::Instance;
use crate::operators::Objective;
use crate::solution::Solution;

/// Evaluations without a strict improvement of the global best that end a
/// run on an instance with `n` customers: `n + n(n+1)/2`.
pub fn termination_budget(n: usize) -> u64 {
    let n = n as u64;
    n + n * (n + 1) / 2
}

/// Wraps the objective for one run. Every evaluation counts; a strict
/// improvement of the best cost resets the stale counter.
pub struct Tracker<'a> {
    inst: &'a Instance,
    budget: u64,
    evaluations: u64,
    stale: u64,
    best: Option<(Solution, f64)>,
    history: Vec<(u64, f64)>,
    started: Instant,
    convergence_evaluation: u64,
    convergence_time: Duration,
}

impl<'a> Tracker<'a> {
    pub fn new(inst: &'a Instance, budget: u64) -> Self {
        Self {
            inst,
            budget,
            evaluations: 0,
            stale: 0,
            best: None,
            history: Vec::new(),
            started: Instant::now(),
            convergence_evaluation: 0,
            convergence_time: Duration::ZERO,
        }
    }

    /// Clears the stale counter once the initial population is evaluated,
    /// so the budget measures search effort only.
    pub fn start_search(&mut self) {
        self.stale = 0;
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn stale(&self) -> u64 {
        self.stale
    }

    pub fn best(&self) -> Option<&(Solution, f64)> {
        self.best.as_ref()
    }

    pub fn history(&self) -> &[(u64, f64)] {
        &self.history
    }

    pub fn convergence_evaluation(&self) -> u64 {
        self.convergence_evaluation
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn convergence_time(&self) -> Duration {
        self.convergence_time
    }
}

impl Objective for Tracker<'_> {
    fn evaluate(&mut self, sol: &Solution) -> f64 {
        let cost = solution_cost(sol, self.inst).expect("solver candidates use instance ids");
        self.evaluations += 1;
        if self.best.as_ref().is_none_or(|(_, b)| cost < *b) {
            debug_assert!(crate::evaluation::check_feasible(sol, self.inst).feasible);
            self.best = Some((sol.clone(), cost));
            self.history.push((self.evaluations, cost));
            self.stale = 0;
            self.convergence_evaluation = self.evaluations;
            self.convergence_time = self.started.elapsed();
        } else {
            self.stale += 1;
        }
        cost
    }

    fn exhausted(&self) -> bool {
        self.stale >= self.budget
    }
}

/// Seconds truncated to whole milliseconds.
pub fn millis_s(d: Duration) -> f64 {
    d.as_millis() as f64 / 1000.0
}
