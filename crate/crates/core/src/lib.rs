//! Clustered, asymmetric, time-dependent vehicle routing with simultaneous
//! pickup and delivery and forbidden arcs: instance model, evaluation, move
//! operators, three metaheuristics, a seeded benchmark generator and the
//! statistics used to compare solvers.

pub mod evaluation;
pub mod generator;
pub mod instance;
pub mod operators;
pub mod seed;
pub mod solution;
pub mod solvers;
pub mod stats;

pub use evaluation::{check_feasible, solution_cost, EvaluationReport, Violation};
pub use instance::{Instance, InstanceCheck, Node, ValidationReport};
pub use solution::Solution;
pub use solvers::{solve, Algorithm, SolveResult, SolverConfig};
