//! Discrete firefly algorithm and the evolutionary baselines, all stopped by
//! the same no-improvement evaluation budget.

mod dfa;
mod ea;
mod esa;
mod tracker;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::Instance;
use crate::operators::{random_solution, ConstructionError, MoveRules, MoveStyle, Objective};
use crate::solution::Solution;

pub use dfa::dfa_solve;
pub use ea::{ea_solve, elite_count};
pub use esa::{esa_initial_temperature, esa_solve, metropolis_accept};
pub use tracker::{millis_s, termination_budget, Tracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dfa,
    Ea,
    Esa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Dfa, Algorithm::Ea, Algorithm::Esa];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dfa => "dfa",
            Self::Ea => "ea",
            Self::Esa => "esa",
        }
    }

    /// Upper-case label used in tables.
    pub fn label(&self) -> &'static str {
        match self {
            Self::Dfa => "DFA",
            Self::Ea => "EA",
            Self::Esa => "ESA",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dfa" => Ok(Self::Dfa),
            "ea" => Ok(Self::Ea),
            "esa" => Ok(Self::Esa),
            other => Err(format!("unknown algorithm {other:?} (expected dfa, ea or esa)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub gamma: f64,
    pub mutation_probability: f64,
    pub elitist_fraction: f64,
    pub random_fraction: f64,
    pub cooling_constant: f64,
    pub acceptance_p: f64,
    pub seed: u64,
    pub enable_cluster_relocation: bool,
    pub move_style: MoveStyle,
    /// Overrides the no-improvement budget derived from the customer count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stale_budget: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Dfa,
            population_size: 100,
            gamma: 0.95,
            mutation_probability: 1.0,
            elitist_fraction: 0.7,
            random_fraction: 0.3,
            cooling_constant: 0.95,
            acceptance_p: 0.95,
            seed: 0,
            enable_cluster_relocation: false,
            move_style: MoveStyle::Pool,
            stale_budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("population_size must be at least 1")]
    EmptyPopulation,
    #[error("{field} = {value} is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("stale_budget must be at least 1")]
    EmptyBudget,
    #[error("elitist_fraction + random_fraction = {0}, expected 1")]
    FractionsDoNotSum(f64),
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size == 0 {
            return Err(ConfigError::EmptyPopulation);
        }
        let open_unit = |field, value: f64| {
            if value > 0.0 && value < 1.0 {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { field, value, range: "(0, 1)" })
            }
        };
        let unit = |field, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { field, value, range: "[0, 1]" })
            }
        };
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ConfigError::OutOfRange {
                field: "gamma",
                value: self.gamma,
                range: "(0, 1]",
            });
        }
        unit("mutation_probability", self.mutation_probability)?;
        unit("elitist_fraction", self.elitist_fraction)?;
        unit("random_fraction", self.random_fraction)?;
        open_unit("cooling_constant", self.cooling_constant)?;
        open_unit("acceptance_p", self.acceptance_p)?;
        if self.stale_budget == Some(0) {
            return Err(ConfigError::EmptyBudget);
        }
        let sum = self.elitist_fraction + self.random_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::FractionsDoNotSum(sum));
        }
        Ok(())
    }

    /// Evaluations without improvement that end a run on `inst`.
    pub fn budget_for(&self, inst: &Instance) -> u64 {
        self.stale_budget.unwrap_or_else(|| termination_budget(inst.customer_count()))
    }

    pub fn move_rules(&self) -> MoveRules {
        MoveRules {
            cluster_relocation: self.enable_cluster_relocation,
            style: self.move_style,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub best_solution: Solution,
    pub best_cost: f64,
    pub evaluations_total: u64,
    /// Evaluation index of the last improvement of the best cost.
    pub convergence_evaluation: u64,
    pub generations: u64,
    pub wall_time_s: f64,
    pub convergence_time_s: f64,
    /// `(evaluation index, best cost)` at every improvement.
    pub cost_history: Vec<(u64, f64)>,
}

impl SolveResult {
    /// Copy without wall-clock fields, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            convergence_time_s: 0.0,
            ..self.clone()
        }
    }

    /// At most `points` history entries, always keeping the first and last.
    pub fn downsampled_history(&self, points: usize) -> Vec<(u64, f64)> {
        let h = &self.cost_history;
        if h.len() <= points || points < 2 {
            return h.clone();
        }
        let step = (h.len() - 1) as f64 / (points - 1) as f64;
        (0..points).map(|k| h[((k as f64 * step).round() as usize).min(h.len() - 1)]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error("instance has no customers")]
    NoCustomers,
}

/// Runs the configured algorithm with a generator seeded from `cfg.seed`.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    cfg.validate()?;
    if inst.customer_count() == 0 {
        return Err(SolveError::NoCustomers);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.algorithm {
        Algorithm::Dfa => dfa_solve(inst, cfg, &mut rng),
        Algorithm::Ea => ea_solve(inst, cfg, &mut rng),
        Algorithm::Esa => esa_solve(inst, cfg, &mut rng),
    }
}

/// Random initial population, each member evaluated once.
fn initial_population(
    inst: &Instance,
    size: usize,
    rng: &mut ChaCha8Rng,
    tracker: &mut Tracker<'_>,
) -> Result<Vec<(Solution, f64)>, ConstructionError> {
    let pop = (0..size)
        .map(|_| {
            let sol = random_solution(inst, rng)?;
            let cost = tracker.evaluate(&sol);
            Ok((sol, cost))
        })
        .collect();
    tracker.start_search();
    pop
}

fn finish(cfg: &SolverConfig, tracker: Tracker<'_>, generations: u64) -> SolveResult {
    let wall = tracker.elapsed();
    let (best_solution, best_cost) = tracker.best().cloned().expect("population evaluated");
    SolveResult {
        algorithm: cfg.algorithm,
        seed: cfg.seed,
        best_solution,
        best_cost,
        evaluations_total: tracker.evaluations(),
        convergence_evaluation: tracker.convergence_evaluation(),
        generations,
        wall_time_s: millis_s(wall),
        convergence_time_s: millis_s(tracker.convergence_time()).min(millis_s(wall)),
        cost_history: tracker.history().to_vec(),
    }
}

fn sort_by_cost(pop: &mut [(Solution, f64)]) {
    pop.sort_by(|a, b| a.1.total_cmp(&b.1));
}
