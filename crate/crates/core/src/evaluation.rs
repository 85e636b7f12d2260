//! Time-dependent route pricing, load simulation and the feasibility report.
//!
//! Every vehicle leaves the depot at the start of the day. An arc is priced
//! from the peak matrix when the departure from its origin falls inside the
//! peak window, otherwise from the off-peak matrix. Service time is zero and
//! travel time equals arc cost.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, Tariff, DEPOT};
use crate::solution::Solution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("route {0} is empty")]
    EmptyRoute(usize),
}

/// One departure along a route: the node left, when, and the arc price paid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineStep {
    pub node: usize,
    pub departure_s: f64,
    pub arc_cost: f64,
    pub tariff: Tariff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    /// Starts with the depot departure; the last step is the return arc.
    pub steps: Vec<TimelineStep>,
    pub return_s: f64,
}

impl Timeline {
    pub fn cost(&self) -> f64 {
        self.steps.iter().map(|s| s.arc_cost).sum()
    }
}

fn positions(route: &[usize], inst: &Instance) -> Result<Vec<usize>, EvalError> {
    route
        .iter()
        .map(|&id| inst.index_of(id).ok_or(EvalError::UnknownNode(id)))
        .collect()
}

pub fn route_timeline(route: &[usize], inst: &Instance) -> Result<Timeline, EvalError> {
    if route.is_empty() {
        return Err(EvalError::EmptyRoute(0));
    }
    let depot = inst.index_of(DEPOT).ok_or(EvalError::UnknownNode(DEPOT))?;
    let stops = positions(route, inst)?;
    let schedule = inst.schedule();
    let mut t = f64::from(schedule.day_start_s);
    let mut steps = Vec::with_capacity(stops.len() + 1);
    let mut from = depot;
    for &to in stops.iter().chain(std::iter::once(&depot)) {
        let tariff = schedule.tariff_at(t);
        let arc_cost = inst.arc_cost_pos(from, to, tariff);
        steps.push(TimelineStep {
            node: inst.nodes()[from].id,
            departure_s: t,
            arc_cost,
            tariff,
        });
        t += arc_cost;
        from = to;
    }
    Ok(Timeline { steps, return_s: t })
}

/// Returns `(cost, return time)` of a route without allocating.
#[inline]
pub(crate) fn price_route(route: &[usize], inst: &Instance) -> Result<(f64, f64), EvalError> {
    let depot = inst.index_of(DEPOT).ok_or(EvalError::UnknownNode(DEPOT))?;
    let schedule = inst.schedule();
    let mut t = f64::from(schedule.day_start_s);
    let mut cost = 0.0;
    let mut from = depot;
    for &id in route {
        let to = inst.index_of(id).ok_or(EvalError::UnknownNode(id))?;
        let c = inst.arc_cost_pos(from, to, schedule.tariff_at(t));
        cost += c;
        t += c;
        from = to;
    }
    let c = inst.arc_cost_pos(from, depot, schedule.tariff_at(t));
    Ok((cost + c, t + c))
}

pub fn route_cost(route: &[usize], inst: &Instance) -> Result<f64, EvalError> {
    if route.is_empty() {
        return Err(EvalError::EmptyRoute(0));
    }
    price_route(route, inst).map(|(cost, _)| cost)
}

/// Objective value: the sum of all route costs, in seconds.
pub fn solution_cost(sol: &Solution, inst: &Instance) -> Result<f64, EvalError> {
    sol.routes()
        .iter()
        .enumerate()
        .map(|(k, route)| {
            if route.is_empty() {
                Err(EvalError::EmptyRoute(k))
            } else {
                price_route(route, inst).map(|(cost, _)| cost)
            }
        })
        .sum()
}

/// Vehicle load when leaving the depot and after each visit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub initial_load: u32,
    pub loads: Vec<u32>,
}

impl LoadProfile {
    pub fn max_load(&self) -> u32 {
        self.loads.iter().copied().fold(self.initial_load, u32::max)
    }

    pub fn final_load(&self) -> u32 {
        self.loads.last().copied().unwrap_or(self.initial_load)
    }

    /// First profile position above `capacity`; 0 is the depot departure,
    /// `k` is the load after the `k`-th visit.
    pub fn first_excess(&self, capacity: u32) -> Option<(usize, u32)> {
        std::iter::once(self.initial_load)
            .chain(self.loads.iter().copied())
            .enumerate()
            .find(|&(_, load)| load > capacity)
    }
}

pub fn load_profile(route: &[usize], inst: &Instance) -> Result<LoadProfile, EvalError> {
    let demands = route
        .iter()
        .map(|&id| inst.node(id).map(|n| (n.delivery, n.pickup)).ok_or(EvalError::UnknownNode(id)))
        .collect::<Result<Vec<_>, _>>()?;
    let initial_load: u32 = demands.iter().map(|&(d, _)| d).sum();
    let mut load = initial_load;
    let loads = demands
        .iter()
        .map(|&(d, p)| {
            load = load - d + p;
            load
        })
        .collect();
    Ok(LoadProfile { initial_load, loads })
}

/// Maximum load along a route, or `None` if an id is unknown.
#[inline]
pub(crate) fn max_route_load(route: &[usize], inst: &Instance) -> Option<u32> {
    let nodes = inst.nodes();
    let mut initial = 0u32;
    for &id in route {
        initial += nodes[inst.index_of(id)?].delivery;
    }
    let mut load = initial;
    let mut max = initial;
    for &id in route {
        let node = &nodes[inst.index_of(id)?];
        load = load - node.delivery + node.pickup;
        max = max.max(load);
    }
    Some(max)
}

/// True when a route respects capacity and uses no forbidden arc.
#[inline]
pub(crate) fn route_is_feasible(route: &[usize], inst: &Instance) -> bool {
    if max_route_load(route, inst).is_none_or(|m| m > inst.capacity()) {
        return false;
    }
    route
        .windows(2)
        .all(|w| match (inst.index_of(w[0]), inst.index_of(w[1])) {
            (Some(a), Some(b)) => !inst.is_forbidden_pos(a, b),
            _ => false,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum Violation {
    UnknownCustomer { route: usize, position: usize, id: usize },
    EmptyRoute { route: usize },
    VisitCount { customer: usize, count: usize },
    ClusterSplit { cluster: usize, routes: Vec<usize> },
    ClusterNoncontiguous { cluster: usize, route: usize },
    CapacityExceeded { route: usize, position: usize, load: u32, capacity: u32 },
    ForbiddenArcUsed { route: usize, from: usize, to: usize },
}

impl Violation {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::UnknownCustomer { .. } => "unknown-customer",
            Self::EmptyRoute { .. } => "empty-route",
            Self::VisitCount { .. } => "visit-count",
            Self::ClusterSplit { .. } => "cluster-split",
            Self::ClusterNoncontiguous { .. } => "cluster-noncontiguous",
            Self::CapacityExceeded { .. } => "capacity-exceeded",
            Self::ForbiddenArcUsed { .. } => "forbidden-arc-used",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub customers: Vec<usize>,
    pub cost: Option<f64>,
    pub return_s: Option<f64>,
    pub initial_load: Option<u32>,
    pub max_load: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// `None` when some route cannot be priced (unknown ids or empty routes).
    pub total_cost: Option<f64>,
    pub routes: Vec<RouteReport>,
    pub feasible: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    pub fn has(&self, tag: &str) -> bool {
        self.violations.iter().any(|v| v.tag() == tag)
    }
}

/// Checks a candidate against every constraint and prices it.
///
/// Degree and flow conservation hold by construction of the route
/// representation; what can break is visit counts, cluster integrity,
/// capacity along the exact load profile and forbidden arcs.
pub fn check_feasible(sol: &Solution, inst: &Instance) -> EvaluationReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let mut routes = Vec::with_capacity(sol.route_count());
    let mut visits: BTreeMap<usize, usize> = inst.customers().map(|id| (id, 0)).collect();
    // cluster position -> routes that enter it
    let mut cluster_routes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let capacity = inst.capacity();
    let day_end = f64::from(inst.schedule().day_end_s);

    for (r, route) in sol.routes().iter().enumerate() {
        if route.is_empty() {
            violations.push(Violation::EmptyRoute { route: r });
        }
        let mut known = true;
        for (position, &id) in route.iter().enumerate() {
            match visits.get_mut(&id) {
                Some(count) => *count += 1,
                None => {
                    known = false;
                    violations.push(Violation::UnknownCustomer { route: r, position, id });
                }
            }
        }

        // contiguous blocks per cluster within this route
        let mut blocks: BTreeMap<usize, usize> = BTreeMap::new();
        let mut previous = None;
        for &id in route {
            let cluster = inst.cluster_of(id);
            if cluster != previous {
                if let Some(c) = cluster {
                    *blocks.entry(c).or_default() += 1;
                }
                previous = cluster;
            }
        }
        for (&c, &count) in &blocks {
            cluster_routes.entry(c).or_default().push(r);
            if count > 1 {
                violations.push(Violation::ClusterNoncontiguous {
                    cluster: inst.clusters()[c].id,
                    route: r,
                });
            }
        }

        for w in route.windows(2) {
            if inst.is_forbidden(w[0], w[1]) {
                violations.push(Violation::ForbiddenArcUsed { route: r, from: w[0], to: w[1] });
            }
        }

        let mut report = RouteReport {
            customers: route.clone(),
            cost: None,
            return_s: None,
            initial_load: None,
            max_load: None,
        };
        if known && !route.is_empty() {
            let (cost, return_s) = price_route(route, inst).expect("ids checked");
            let profile = load_profile(route, inst).expect("ids checked");
            if let Some((position, load)) = profile.first_excess(capacity) {
                violations.push(Violation::CapacityExceeded { route: r, position, load, capacity });
            }
            if return_s > day_end {
                warnings.push(format!(
                    "route {r} returns at {return_s:.2} s, after the end of the working day ({day_end} s)"
                ));
            }
            report.cost = Some(cost);
            report.return_s = Some(return_s);
            report.initial_load = Some(profile.initial_load);
            report.max_load = Some(profile.max_load());
        }
        routes.push(report);
    }

    for (&customer, &count) in &visits {
        if count != 1 {
            violations.push(Violation::VisitCount { customer, count });
        }
    }
    for (&c, serving) in &cluster_routes {
        if serving.len() > 1 {
            violations.push(Violation::ClusterSplit {
                cluster: inst.clusters()[c].id,
                routes: serving.clone(),
            });
        }
    }

    let total_cost = routes.iter().map(|r| r.cost).sum::<Option<f64>>();
    EvaluationReport {
        total_cost,
        routes,
        feasible: violations.is_empty(),
        violations,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Cluster, CostMatrix, InstanceParts, Node, Schedule};
    use std::collections::BTreeSet;

    /// Depot plus three customers in one cluster. Off-peak costs are
    /// hand-picked so that a route crosses 7200 s mid-way; peak = 2 x off-peak.
    fn hand_instance() -> Instance {
        let node = |id, delivery, pickup, cluster| Node {
            id,
            x: id as f64,
            y: 0.0,
            delivery,
            pickup,
            cluster,
        };
        let nodes = vec![node(0, 0, 0, 0), node(1, 10, 5, 1), node(2, 10, 0, 1), node(3, 5, 3, 1)];
        #[rustfmt::skip]
        let off = vec![
            0.0,    3000.0, 3100.0, 3200.0,
            3300.0, 0.0,    4000.0, 4100.0,
            3400.0, 4200.0, 0.0,    500.0,
            3500.0, 4300.0, 600.0,  0.0,
        ];
        let peak = off.iter().map(|c| c * 2.0).collect();
        Instance::from_parts(InstanceParts {
            name: "hand".into(),
            clusters: vec![Cluster { id: 1, members: vec![1, 2, 3] }],
            nodes,
            capacity: 25,
            cost_offpeak: CostMatrix::from_row_major(4, off).unwrap(),
            cost_peak: CostMatrix::from_row_major(4, peak).unwrap(),
            forbidden: BTreeSet::from([(2, 1)]),
            schedule: Schedule::default(),
        })
    }

    #[test]
    fn timeline_matches_hand_simulation() {
        let inst = hand_instance();
        let tl = route_timeline(&[1, 2, 3], &inst).unwrap();
        // 0 -> 1 departs 0 (off 3000), 1 -> 2 departs 3000 (off 4000),
        // 2 -> 3 departs 7000 (off 500), 3 -> 0 departs 7500 (peak 2 * 3500)
        let expected = [
            (0, 0.0, 3000.0, Tariff::Offpeak),
            (1, 3000.0, 4000.0, Tariff::Offpeak),
            (2, 7000.0, 500.0, Tariff::Offpeak),
            (3, 7500.0, 7000.0, Tariff::Peak),
        ];
        assert_eq!(tl.steps.len(), expected.len());
        for (step, &(node, dep, cost, tariff)) in tl.steps.iter().zip(&expected) {
            assert_eq!(step.node, node);
            assert!((step.departure_s - dep).abs() < 1e-6);
            assert!((step.arc_cost - cost).abs() < 1e-6);
            assert_eq!(step.tariff, tariff);
        }
        assert!((tl.return_s - 14500.0).abs() < 1e-6);
        assert!((tl.cost() - 14500.0).abs() < 1e-6);
        assert!((route_cost(&[1, 2, 3], &inst).unwrap() - 14500.0).abs() < 1e-6);
    }

    #[test]
    fn peak_boundary_is_half_open() {
        let mut parts = hand_instance().into_parts();
        // first arc lands exactly on / just before the window start
        parts.cost_offpeak.set(0, 1, 7200.0);
        let inst = Instance::from_parts(parts.clone());
        let tl = route_timeline(&[1], &inst).unwrap();
        assert_eq!(tl.steps[1].tariff, Tariff::Peak);
        assert!((tl.steps[1].arc_cost - 6600.0).abs() < 1e-9);

        parts.cost_offpeak.set(0, 1, 7199.0);
        let inst = Instance::from_parts(parts);
        let tl = route_timeline(&[1], &inst).unwrap();
        assert_eq!(tl.steps[1].tariff, Tariff::Offpeak);
        assert!((tl.steps[1].arc_cost - 3300.0).abs() < 1e-9);
    }

    #[test]
    fn short_route_is_priced_off_peak() {
        let inst = hand_instance();
        let tl = route_timeline(&[3, 2], &inst).unwrap();
        assert!(tl.steps.iter().all(|s| s.tariff == Tariff::Offpeak));
        // 3200 + 600 + 3400
        assert!((tl.cost() - 7200.0).abs() < 1e-9);
    }

    #[test]
    fn two_customer_cost_is_sum_of_timeline_arcs() {
        let inst = hand_instance();
        // 0 -> 1 (3000, off), 1 -> 3 departs 3000 (4100, off), 3 -> 0 departs 7100 (3500, off)
        let cost = route_cost(&[1, 3], &inst).unwrap();
        assert!((cost - 10600.0).abs() < 1e-6);
    }

    #[test]
    fn load_profile_follows_deliveries_and_pickups() {
        let inst = hand_instance();
        let profile = load_profile(&[1, 2, 3], &inst).unwrap();
        assert_eq!(profile.initial_load, 25);
        assert_eq!(profile.loads, vec![20, 10, 8]);
        assert_eq!(profile.max_load(), 25);
        assert_eq!(profile.final_load(), 8);
        assert_eq!(profile.first_excess(25), None);
        assert_eq!(profile.first_excess(24), Some((0, 25)));
    }

    #[test]
    fn zero_pickup_route_load_is_non_increasing() {
        let inst = hand_instance();
        let profile = load_profile(&[2], &inst).unwrap();
        assert_eq!(profile.initial_load, 10);
        assert_eq!(profile.loads, vec![0]);
    }

    #[test]
    fn report_flags_forbidden_arc_and_capacity() {
        let inst = hand_instance();
        let bad = Solution::new(vec![vec![2, 1, 3]]);
        let report = check_feasible(&bad, &inst);
        assert!(report.has("forbidden-arc-used"));
        assert!(!report.feasible);

        let mut parts = inst.clone().into_parts();
        parts.capacity = 20;
        let tight = Instance::from_parts(parts);
        let report = check_feasible(&Solution::new(vec![vec![1, 2, 3]]), &tight);
        assert_eq!(
            report.violations,
            vec![Violation::CapacityExceeded { route: 0, position: 0, load: 25, capacity: 20 }]
        );

        let ok = check_feasible(&Solution::new(vec![vec![1, 2, 3]]), &inst);
        assert!(ok.feasible, "{:?}", ok.violations);
        assert!((ok.total_cost.unwrap() - 14500.0).abs() < 1e-6);
    }

    #[test]
    fn report_flags_split_and_visit_counts() {
        let inst = hand_instance();
        let split = Solution::new(vec![vec![1], vec![2, 3]]);
        let report = check_feasible(&split, &inst);
        assert_eq!(report.violations, vec![Violation::ClusterSplit { cluster: 1, routes: vec![0, 1] }]);

        let dup = Solution::new(vec![vec![1, 2, 1], vec![]]);
        let report = check_feasible(&dup, &inst);
        assert!(report.has("visit-count"));
        assert!(report.has("empty-route"));
        assert!(report.total_cost.is_none());

        let unknown = check_feasible(&Solution::new(vec![vec![1, 2, 3, 9]]), &inst);
        assert!(unknown.has("unknown-customer"));
    }

    #[test]
    fn unknown_ids_are_errors() {
        let inst = hand_instance();
        assert_eq!(route_timeline(&[1, 9], &inst).unwrap_err(), EvalError::UnknownNode(9));
        assert_eq!(load_profile(&[9], &inst).unwrap_err(), EvalError::UnknownNode(9));
        assert!(solution_cost(&Solution::new(vec![vec![9]]), &inst).is_err());
    }
}
