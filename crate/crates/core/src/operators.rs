//! Discrete firefly geometry and the move operators shared by all solvers.
//!
//! Distances between fireflies are cluster-wise Hamming distances: for each
//! cluster the visit-order subsequences of the two solutions are compared
//! position by position. Movement is an evolution-strategy step built on the
//! insertion function, which re-inserts one customer somewhere inside its own
//! cluster block.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{route_is_feasible, solution_cost};
use crate::instance::Instance;
use crate::solution::Solution;

/// Draw limit for operators that resample after a capacity or forbidden-arc breach.
pub const RESAMPLE_LIMIT: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("solutions do not cover the same customers of the instance")]
    InstanceMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructionError {
    #[error("cluster {0} admits no order that fits a vehicle and avoids forbidden arcs")]
    UnservableCluster(usize),
}

/// Light absorption and the current generation for the movement-length law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveParams {
    pub gamma: f64,
    pub generation: u32,
}

impl Default for MoveParams {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            generation: 1,
        }
    }
}

/// Visit order of each cluster's customers, indexed like [`Instance::clusters`].
pub fn cluster_sequences(sol: &Solution, inst: &Instance) -> Vec<Vec<usize>> {
    let mut seqs: Vec<Vec<usize>> = inst
        .clusters()
        .iter()
        .map(|c| Vec::with_capacity(c.members.len()))
        .collect();
    for id in sol.visits() {
        if let Some(c) = inst.cluster_of(id) {
            seqs[c].push(id);
        }
    }
    seqs
}

/// Number of positions at which two sequences differ. Unequal lengths count
/// the unmatched tail as mismatches.
pub fn sequence_hamming<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let common = a.iter().zip(b).filter(|(x, y)| x != y).count();
    common + a.len().abs_diff(b.len())
}

pub fn hamming_distance(a: &Solution, b: &Solution, inst: &Instance) -> Result<usize, OperatorError> {
    let (sa, sb) = (cluster_sequences(a, inst), cluster_sequences(b, inst));
    let mut total = 0;
    for ((x, y), cluster) in sa.iter().zip(&sb).zip(inst.clusters()) {
        if x.len() != cluster.members.len() || y.len() != cluster.members.len() {
            return Err(OperatorError::InstanceMismatch);
        }
        total += sequence_hamming(x, y);
    }
    Ok(total)
}

/// Movement length `n`, uniform on `[2, max(2, floor(r * gamma^g))]`.
pub fn movement_length<R: Rng + ?Sized>(distance: usize, params: MoveParams, rng: &mut R) -> usize {
    rng.random_range(2..=movement_upper_bound(distance, params))
}

pub fn movement_upper_bound(distance: usize, params: MoveParams) -> usize {
    let scaled = distance as f64 * params.gamma.powi(params.generation.min(i32::MAX as u32) as i32);
    // the epsilon keeps exact products such as 20 * 0.95 from flooring to 18
    let upper = (scaled + 1e-9).floor();
    if upper < 2.0 {
        2
    } else {
        upper as usize
    }
}

/// Extent of the contiguous cluster block around `pos` in `route`.
fn block_around(route: &[usize], pos: usize, inst: &Instance) -> (usize, usize) {
    let cluster = inst.cluster_of(route[pos]);
    let mut start = pos;
    while start > 0 && inst.cluster_of(route[start - 1]) == cluster {
        start -= 1;
    }
    let mut end = pos + 1;
    while end < route.len() && inst.cluster_of(route[end]) == cluster {
        end += 1;
    }
    (start, end)
}

fn locate(sol: &Solution, mut k: usize) -> (usize, usize) {
    for (r, route) in sol.routes().iter().enumerate() {
        if k < route.len() {
            return (r, k);
        }
        k -= route.len();
    }
    unreachable!("customer index out of range")
}

/// Extracts one uniformly chosen customer and re-inserts it at a uniformly
/// chosen slot of its own cluster block. Breaching draws are redrawn up to
/// [`RESAMPLE_LIMIT`] times, after which the input is returned unchanged.
pub fn insertion_move<R: Rng + ?Sized>(sol: &Solution, inst: &Instance, rng: &mut R) -> Solution {
    let total = sol.customer_count();
    if total == 0 {
        return sol.clone();
    }
    for _ in 0..RESAMPLE_LIMIT {
        let (r, pos) = locate(sol, rng.random_range(0..total));
        let route = &sol.routes()[r];
        let (start, end) = block_around(route, pos, inst);
        if end - start == 1 {
            return sol.clone();
        }
        let slot = start + rng.random_range(0..end - start);
        let mut moved = route.clone();
        let customer = moved.remove(pos);
        moved.insert(slot, customer);
        if route_is_feasible(&moved, inst) {
            let mut out = sol.clone();
            out.routes_mut()[r] = moved;
            return out;
        }
    }
    sol.clone()
}

/// Cluster blocks of a solution as `(route, start, end)`.
fn blocks(sol: &Solution, inst: &Instance) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (r, route) in sol.routes().iter().enumerate() {
        let mut start = 0;
        while start < route.len() {
            let (_, end) = block_around(route, start, inst);
            out.push((r, start, end));
            start = end;
        }
    }
    out
}

/// Moves one whole cluster block to a block boundary of another route, or
/// to a new route. Intra-block order is kept.
pub fn cluster_relocation<R: Rng + ?Sized>(sol: &Solution, inst: &Instance, rng: &mut R) -> Solution {
    let all = blocks(sol, inst);
    if all.len() < 2 {
        return sol.clone();
    }
    for _ in 0..RESAMPLE_LIMIT {
        let (source, start, end) = all[rng.random_range(0..all.len())];
        let source_blocks = all.iter().filter(|b| b.0 == source).count();
        let others: Vec<usize> = (0..sol.route_count()).filter(|&r| r != source).collect();
        let targets = others.len() + usize::from(source_blocks > 1);
        if targets == 0 {
            continue;
        }
        let pick = rng.random_range(0..targets);
        let mut routes = sol.routes().to_vec();
        let block: Vec<usize> = routes[source].drain(start..end).collect();
        let target = if pick < others.len() {
            let target = others[pick];
            let boundaries: Vec<usize> = std::iter::once(0)
                .chain(all.iter().filter(|b| b.0 == target).map(|b| b.2))
                .collect();
            let at = boundaries[rng.random_range(0..boundaries.len())];
            routes[target].splice(at..at, block);
            target
        } else {
            routes.push(block);
            routes.len() - 1
        };
        if !route_is_feasible(&routes[target], inst) || !route_is_feasible(&routes[source], inst) && !routes[source].is_empty() {
            continue;
        }
        routes.retain(|r| !r.is_empty());
        return Solution::new(routes);
    }
    sol.clone()
}

/// How successors are generated for the three solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveStyle {
    /// `n` independent successors of the current firefly; the best is taken.
    #[default]
    Pool,
    /// `n` successive insertions, each applied to the previous result; the
    /// best intermediate is taken.
    Chain,
}

/// Successor generation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MoveRules {
    /// When set, half of the successor draws relocate a whole cluster block
    /// instead of re-inserting a single customer.
    pub cluster_relocation: bool,
    pub style: MoveStyle,
}

impl MoveRules {
    pub fn successor<R: Rng + ?Sized>(&self, sol: &Solution, inst: &Instance, rng: &mut R) -> Solution {
        if self.cluster_relocation && rng.random_bool(0.5) {
            cluster_relocation(sol, inst, rng)
        } else {
            insertion_move(sol, inst, rng)
        }
    }
}

/// Something that prices candidate solutions and may run out of budget.
pub trait Objective {
    fn evaluate(&mut self, sol: &Solution) -> f64;

    fn exhausted(&self) -> bool {
        false
    }
}

/// Plain cost function without budget accounting.
pub struct CostOf<'a>(pub &'a Instance);

impl Objective for CostOf<'_> {
    fn evaluate(&mut self, sol: &Solution) -> f64 {
        solution_cost(sol, self.0).expect("solution ids belong to the instance")
    }
}

/// Evolution-strategy move: generates `n` successors of `current` and
/// returns the cheapest (first generated on ties) with its cost. Stops early
/// if the objective runs out of budget; at least one successor is evaluated.
pub fn move_firefly<R: Rng + ?Sized>(
    current: &Solution,
    n: usize,
    inst: &Instance,
    rules: &MoveRules,
    rng: &mut R,
    objective: &mut dyn Objective,
) -> (Solution, f64) {
    let mut best: Option<(Solution, f64)> = None;
    let mut base = current.clone();
    for _ in 0..n.max(1) {
        let candidate = rules.successor(&base, inst, rng);
        debug_assert!(crate::evaluation::check_feasible(&candidate, inst).feasible);
        let cost = objective.evaluate(&candidate);
        if rules.style == MoveStyle::Chain {
            base = candidate.clone();
        }
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((candidate, cost));
        }
        if objective.exhausted() {
            break;
        }
    }
    best.expect("at least one successor")
}

/// Random feasible construction: clusters are shuffled and packed greedily
/// into the current route while a random intra-cluster order keeps it
/// feasible; otherwise a new route is opened.
pub fn random_solution<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Result<Solution, ConstructionError> {
    let mut order: Vec<usize> = (0..inst.clusters().len()).collect();
    order.shuffle(rng);
    let mut routes = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut members = Vec::new();
    for c in order {
        let cluster = &inst.clusters()[c];
        members.clone_from(&cluster.members);
        let mut placed = false;
        if !current.is_empty() {
            let keep = current.len();
            for _ in 0..RESAMPLE_LIMIT {
                members.shuffle(rng);
                current.extend_from_slice(&members);
                if route_is_feasible(&current, inst) {
                    placed = true;
                    break;
                }
                current.truncate(keep);
            }
            if !placed {
                routes.push(std::mem::take(&mut current));
            }
        }
        if !placed {
            for _ in 0..RESAMPLE_LIMIT {
                members.shuffle(rng);
                if route_is_feasible(&members, inst) {
                    current.clone_from(&members);
                    placed = true;
                    break;
                }
            }
        }
        if !placed {
            let mut rng_dyn = RngAdapter(rng);
            current = inst
                .servable_order(&cluster.members, Some(&mut rng_dyn as &mut dyn RngCore))
                .ok_or(ConstructionError::UnservableCluster(cluster.id))?;
        }
    }
    if !current.is_empty() {
        routes.push(current);
    }
    let sol = Solution::new(routes);
    debug_assert!(crate::evaluation::check_feasible(&sol, inst).feasible);
    Ok(sol)
}

/// Lets a possibly unsized `Rng` be handed out as `&mut dyn RngCore`.
struct RngAdapter<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
}
