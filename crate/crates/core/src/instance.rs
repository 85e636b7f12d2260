//! Problem data: nodes, clusters, dual cost matrices, forbidden arcs and the
//! JSON file schema used to exchange instances.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Node id of the depot.
pub const DEPOT: usize = 0;

/// Cluster label carried by the depot.
pub const DEPOT_CLUSTER: usize = 0;

/// A depot or customer location.
///
/// Coordinates are planar and expressed in travel-seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub delivery: u32,
    pub pickup: u32,
    pub cluster: usize,
}

impl Node {
    pub fn is_depot(&self) -> bool {
        self.id == DEPOT
    }

    pub fn distance_to(&self, other: &Node) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A group of customers that must be served contiguously by one vehicle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<usize>,
}

/// Dense square matrix indexed by node position (not node id).
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![0.0; size * size],
        }
    }

    /// Builds a matrix from a row-major slice; `None` when the length is not a square.
    pub fn from_row_major(size: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == size * size).then_some(Self { size, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.size + to]
    }

    #[inline]
    pub fn set(&mut self, from: usize, to: usize, value: f64) {
        self.data[from * self.size + to] = value;
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }
}

/// Which matrix prices an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tariff {
    Offpeak,
    Peak,
}

/// Working-day clock, in seconds after 06:00.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub day_start_s: u32,
    /// Half-open `[start, end)` window priced from the peak matrix.
    pub peak_window_s: [u32; 2],
    pub day_end_s: u32,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            day_start_s: 0,
            peak_window_s: [7200, 14400],
            day_end_s: 32400,
        }
    }
}

impl Schedule {
    #[inline]
    pub fn tariff_at(&self, departure_s: f64) -> Tariff {
        let [start, end] = self.peak_window_s;
        if departure_s >= f64::from(start) && departure_s < f64::from(end) {
            Tariff::Peak
        } else {
            Tariff::Offpeak
        }
    }
}

/// Raw ingredients of an [`Instance`]. Construction never validates; call
/// [`Instance::validate`] for that.
#[derive(Debug, Clone)]
pub struct InstanceParts {
    pub name: String,
    pub nodes: Vec<Node>,
    pub clusters: Vec<Cluster>,
    pub capacity: u32,
    pub cost_offpeak: CostMatrix,
    pub cost_peak: CostMatrix,
    pub forbidden: BTreeSet<(usize, usize)>,
    pub schedule: Schedule,
}

/// An immutable problem instance.
///
/// Node ids need not be dense: instances derived from a larger network keep
/// their original ids, and the position of a node in [`Instance::nodes`] is
/// its row/column in both cost matrices.
#[derive(Debug, Clone)]
pub struct Instance {
    parts: InstanceParts,
    index: Vec<Option<usize>>,
    cluster_of: Vec<Option<usize>>,
    forbidden_dense: Vec<bool>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (&self.parts, &other.parts);
        a.name == b.name
            && a.nodes == b.nodes
            && a.clusters == b.clusters
            && a.capacity == b.capacity
            && a.cost_offpeak == b.cost_offpeak
            && a.cost_peak == b.cost_peak
            && a.forbidden == b.forbidden
            && a.schedule == b.schedule
    }
}

impl Instance {
    pub fn from_parts(parts: InstanceParts) -> Self {
        let max_id = parts.nodes.iter().map(|n| n.id).max().unwrap_or(0);
        let mut index = vec![None; max_id + 1];
        for (pos, node) in parts.nodes.iter().enumerate() {
            index[node.id] = Some(pos);
        }
        let mut cluster_of = vec![None; max_id + 1];
        for (pos, cluster) in parts.clusters.iter().enumerate() {
            for &member in &cluster.members {
                if member <= max_id {
                    cluster_of[member] = Some(pos);
                }
            }
        }
        let n = parts.nodes.len();
        let mut forbidden_dense = vec![false; n * n];
        for &(from, to) in &parts.forbidden {
            if let (Some(Some(a)), Some(Some(b))) = (index.get(from), index.get(to)) {
                forbidden_dense[a * n + b] = true;
            }
        }
        Self {
            parts,
            index,
            cluster_of,
            forbidden_dense,
        }
    }

    pub fn into_parts(self) -> InstanceParts {
        self.parts
    }

    pub fn parts(&self) -> &InstanceParts {
        &self.parts
    }

    pub fn name(&self) -> &str {
        &self.parts.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.parts.nodes
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.parts.clusters
    }

    pub fn capacity(&self) -> u32 {
        self.parts.capacity
    }

    pub fn cost_offpeak(&self) -> &CostMatrix {
        &self.parts.cost_offpeak
    }

    pub fn cost_peak(&self) -> &CostMatrix {
        &self.parts.cost_peak
    }

    pub fn forbidden(&self) -> &BTreeSet<(usize, usize)> {
        &self.parts.forbidden
    }

    pub fn schedule(&self) -> &Schedule {
        &self.parts.schedule
    }

    /// Dense matrix position of a node id.
    #[inline]
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.index.get(id).copied().flatten()
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.index_of(id).map(|pos| &self.parts.nodes[pos])
    }

    /// Position in [`Instance::clusters`] of the cluster holding customer `id`.
    #[inline]
    pub fn cluster_of(&self, id: usize) -> Option<usize> {
        self.cluster_of.get(id).copied().flatten()
    }

    pub fn is_customer(&self, id: usize) -> bool {
        id != DEPOT && self.index_of(id).is_some()
    }

    /// Customer ids in node order.
    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        self.parts.nodes.iter().filter(|n| !n.is_depot()).map(|n| n.id)
    }

    pub fn customer_count(&self) -> usize {
        self.customers().count()
    }

    /// Forbidden check on dense positions.
    #[inline]
    pub fn is_forbidden_pos(&self, from: usize, to: usize) -> bool {
        self.forbidden_dense[from * self.parts.nodes.len() + to]
    }

    pub fn is_forbidden(&self, from: usize, to: usize) -> bool {
        self.parts.forbidden.contains(&(from, to))
    }

    #[inline]
    pub fn arc_cost_pos(&self, from: usize, to: usize, tariff: Tariff) -> f64 {
        match tariff {
            Tariff::Offpeak => self.parts.cost_offpeak.get(from, to),
            Tariff::Peak => self.parts.cost_peak.get(from, to),
        }
    }

    /// Finds an order of `members` that a fresh vehicle can serve as one
    /// block: no forbidden arc inside the block and the exact load profile
    /// stays within capacity. With an rng the search explores successors in
    /// random order, otherwise in the given order.
    pub fn servable_order(
        &self,
        members: &[usize],
        rng: Option<&mut dyn RngCore>,
    ) -> Option<Vec<usize>> {
        let demands: Option<Vec<(u32, u32)>> = members
            .iter()
            .map(|&id| self.node(id).map(|n| (n.delivery, n.pickup)))
            .collect();
        search_block_order(
            members,
            &demands?,
            Some(self.capacity()),
            |a, b| self.is_forbidden(a, b),
            rng,
        )
    }

    pub fn validate(&self) -> ValidationReport {
        validate_instance(self)
    }

    pub fn to_file(&self, include_costs: bool) -> InstanceFile {
        InstanceFile::from_instance(self, include_costs)
    }
}

/// Depth-first search for a Hamiltonian order of `members` that avoids
/// `forbidden` arcs and, when `capacity` is given, keeps every load of a
/// fresh-vehicle simulation within it. Dead `(visited set, last)` states are
/// memoised, so the cost is bounded by `2^m * m` expansions.
pub(crate) fn search_block_order(
    members: &[usize],
    demands: &[(u32, u32)],
    capacity: Option<u32>,
    forbidden: impl Fn(usize, usize) -> bool,
    mut rng: Option<&mut dyn RngCore>,
) -> Option<Vec<usize>> {
    let m = members.len();
    if m == 0 {
        return Some(Vec::new());
    }
    if m > 63 {
        return None;
    }
    let initial: i64 = demands.iter().map(|&(d, _)| i64::from(d)).sum();
    if let Some(q) = capacity {
        if initial > i64::from(q) {
            return None;
        }
    }
    // load after visiting a set S is initial - sum_S(d - p)
    let drop: Vec<i64> = demands
        .iter()
        .map(|&(d, p)| i64::from(d) - i64::from(p))
        .collect();

    struct Search<'a, F: Fn(usize, usize) -> bool> {
        members: &'a [usize],
        drop: &'a [i64],
        capacity: Option<i64>,
        forbidden: F,
        dead: HashSet<(u64, usize)>,
        path: Vec<usize>,
    }

    impl<F: Fn(usize, usize) -> bool> Search<'_, F> {
        fn extend(&mut self, mask: u64, last: usize, load: i64, rng: &mut Option<&mut dyn RngCore>) -> bool {
            let m = self.members.len();
            if self.path.len() == m {
                return true;
            }
            if self.dead.contains(&(mask, last)) {
                return false;
            }
            let mut next: Vec<usize> = (0..m).filter(|&k| mask & (1 << k) == 0).collect();
            if let Some(r) = rng.as_mut() {
                next.shuffle(&mut **r);
            }
            for k in next {
                if !self.path.is_empty() && (self.forbidden)(self.members[last], self.members[k]) {
                    continue;
                }
                let after = load - self.drop[k];
                if self.capacity.is_some_and(|q| after > q) {
                    continue;
                }
                self.path.push(k);
                if self.extend(mask | (1 << k), k, after, rng) {
                    return true;
                }
                self.path.pop();
            }
            if !self.path.is_empty() {
                self.dead.insert((mask, last));
            }
            false
        }
    }

    let mut search = Search {
        members,
        drop: &drop,
        capacity: capacity.map(i64::from),
        forbidden,
        dead: HashSet::new(),
        path: Vec::with_capacity(m),
    };
    if search.extend(0, 0, initial, &mut rng) {
        Some(search.path.iter().map(|&k| members[k]).collect())
    } else {
        None
    }
}

/// Named instance invariants reported by [`validate_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceCheck {
    DepotInvalid,
    DuplicateNodeId,
    CustomerDemandInvalid,
    CapacityInvalid,
    PeakWindowInvalid,
    EmptyCluster,
    ClusterUnknownNode,
    ClustersNotDisjoint,
    ClustersIncomplete,
    ClusterLabelMismatch,
    MatrixShape,
    MatrixNegative,
    AsymmetryViolated,
    ForbiddenArcUnknownNode,
    ForbiddenArcTouchesDepot,
    ForbiddenArcCrossesClusters,
    ClusterUnpathable,
    ClusterOverCapacity,
    ClusterUnservable,
}

impl InstanceCheck {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DepotInvalid => "depot-invalid",
            Self::DuplicateNodeId => "duplicate-node-id",
            Self::CustomerDemandInvalid => "customer-demand-invalid",
            Self::CapacityInvalid => "capacity-invalid",
            Self::PeakWindowInvalid => "peak-window-invalid",
            Self::EmptyCluster => "empty-cluster",
            Self::ClusterUnknownNode => "cluster-unknown-node",
            Self::ClustersNotDisjoint => "clusters-not-disjoint",
            Self::ClustersIncomplete => "clusters-incomplete",
            Self::ClusterLabelMismatch => "cluster-label-mismatch",
            Self::MatrixShape => "matrix-shape",
            Self::MatrixNegative => "matrix-negative",
            Self::AsymmetryViolated => "asymmetry-violated",
            Self::ForbiddenArcUnknownNode => "forbidden-arc-unknown-node",
            Self::ForbiddenArcTouchesDepot => "forbidden-arc-touches-depot",
            Self::ForbiddenArcCrossesClusters => "forbidden-arc-crosses-clusters",
            Self::ClusterUnpathable => "cluster-unpathable",
            Self::ClusterOverCapacity => "cluster-over-capacity",
            Self::ClusterUnservable => "cluster-unservable",
        }
    }
}

impl fmt::Display for InstanceCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceViolation {
    pub check: InstanceCheck,
    /// Offending node ids, cluster labels or matrix positions, depending on the check.
    pub at: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<InstanceViolation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn has(&self, check: InstanceCheck) -> bool {
        self.violations.iter().any(|v| v.check == check)
    }
}

/// Largest cluster for which the exact path searches are run during validation.
const MAX_SEARCHED_CLUSTER: usize = 20;

/// Checks every structural invariant of an instance. Violations are data.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let mut flag = |check, at: Vec<usize>| violations.push(InstanceViolation { check, at });
    let parts = inst.parts();
    let n = parts.nodes.len();

    match parts.nodes.first() {
        Some(d) if d.id == DEPOT && d.cluster == DEPOT_CLUSTER && d.delivery == 0 && d.pickup == 0 => {}
        _ => flag(InstanceCheck::DepotInvalid, vec![DEPOT]),
    }
    let mut seen = HashSet::new();
    for node in &parts.nodes {
        if !seen.insert(node.id) {
            flag(InstanceCheck::DuplicateNodeId, vec![node.id]);
        }
        if !node.is_depot() && node.delivery == 0 {
            flag(InstanceCheck::CustomerDemandInvalid, vec![node.id]);
        }
    }
    if parts.capacity == 0 {
        flag(InstanceCheck::CapacityInvalid, vec![]);
    }
    let s = parts.schedule;
    if !(s.day_start_s <= s.peak_window_s[0] && s.peak_window_s[0] < s.peak_window_s[1] && s.peak_window_s[1] <= s.day_end_s) {
        flag(InstanceCheck::PeakWindowInvalid, vec![]);
    }

    // cluster partition
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for cluster in &parts.clusters {
        if cluster.members.is_empty() {
            flag(InstanceCheck::EmptyCluster, vec![cluster.id]);
        }
        for &member in &cluster.members {
            if !inst.is_customer(member) {
                flag(InstanceCheck::ClusterUnknownNode, vec![cluster.id, member]);
                continue;
            }
            if let Some(&other) = owner.get(&member) {
                flag(InstanceCheck::ClustersNotDisjoint, vec![other, cluster.id, member]);
            } else {
                owner.insert(member, cluster.id);
            }
            if inst.node(member).is_some_and(|node| node.cluster != cluster.id) {
                flag(InstanceCheck::ClusterLabelMismatch, vec![cluster.id, member]);
            }
        }
    }
    for id in inst.customers() {
        if !owner.contains_key(&id) {
            flag(InstanceCheck::ClustersIncomplete, vec![id]);
        }
    }

    // matrices
    let shapes_ok = parts.cost_offpeak.size() == n && parts.cost_peak.size() == n;
    if !shapes_ok {
        flag(InstanceCheck::MatrixShape, vec![parts.cost_offpeak.size(), parts.cost_peak.size()]);
    } else {
        for matrix in [&parts.cost_offpeak, &parts.cost_peak] {
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let c = matrix.get(a, b);
                    if !(c.is_finite() && c >= 0.0) {
                        flag(InstanceCheck::MatrixNegative, vec![parts.nodes[a].id, parts.nodes[b].id]);
                    }
                    if a < b && c == matrix.get(b, a) {
                        flag(InstanceCheck::AsymmetryViolated, vec![parts.nodes[a].id, parts.nodes[b].id]);
                    }
                }
            }
        }
    }

    // forbidden arcs
    for &(from, to) in &parts.forbidden {
        if from == DEPOT || to == DEPOT {
            flag(InstanceCheck::ForbiddenArcTouchesDepot, vec![from, to]);
        } else if !inst.is_customer(from) || !inst.is_customer(to) {
            flag(InstanceCheck::ForbiddenArcUnknownNode, vec![from, to]);
        } else if inst.cluster_of(from) != inst.cluster_of(to) || inst.cluster_of(from).is_none() {
            flag(InstanceCheck::ForbiddenArcCrossesClusters, vec![from, to]);
        }
    }

    // per-cluster solvability
    for cluster in &parts.clusters {
        let members = &cluster.members;
        if members.is_empty() || members.iter().any(|&m| !inst.is_customer(m)) {
            continue;
        }
        if members.len() > MAX_SEARCHED_CLUSTER {
            warnings.push(format!(
                "cluster {} has {} customers; path and capacity searches skipped",
                cluster.id,
                members.len()
            ));
            continue;
        }
        let demands: Vec<(u32, u32)> = members
            .iter()
            .filter_map(|&id| inst.node(id).map(|n| (n.delivery, n.pickup)))
            .collect();
        let pathable = search_block_order(members, &demands, None, |a, b| inst.is_forbidden(a, b), None).is_some();
        let fits = search_block_order(members, &demands, Some(parts.capacity), |_, _| false, None).is_some();
        if !pathable {
            flag(InstanceCheck::ClusterUnpathable, vec![cluster.id]);
        }
        if !fits {
            flag(InstanceCheck::ClusterOverCapacity, vec![cluster.id]);
        }
        if pathable && fits && inst.servable_order(members, None).is_none() {
            flag(InstanceCheck::ClusterUnservable, vec![cluster.id]);
        }
    }

    ValidationReport {
        ok: violations.is_empty(),
        violations,
        warnings,
    }
}

/// Groups customers into clusters by their `cluster` label, ordered by label.
pub fn clusters_from_labels(nodes: &[Node]) -> Vec<Cluster> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for node in nodes.iter().filter(|n| !n.is_depot()) {
        groups.entry(node.cluster).or_default().push(node.id);
    }
    groups
        .into_iter()
        .map(|(id, members)| Cluster { id, members })
        .collect()
}

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("cannot read or write instance file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{matrix} has {len} entries, expected {expected}")]
    MatrixLength {
        matrix: &'static str,
        len: usize,
        expected: usize,
    },
}

/// On-disk instance schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub capacity: u32,
    pub peak_window_s: [u32; 2],
    pub day_start_s: u32,
    pub day_end_s: u32,
    pub nodes: Vec<Node>,
    pub forbidden: Vec<[usize; 2]>,
    /// Row-major, in `nodes` order. Recomputed from coordinates when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_offpeak: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_peak: Option<Vec<f64>>,
}

/// Rounds a cost to the two decimals used on disk.
pub fn round_cost(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, include_costs: bool) -> Self {
        let parts = inst.parts();
        let dump = |m: &CostMatrix| m.row_major().iter().copied().map(round_cost).collect();
        Self {
            name: parts.name.clone(),
            capacity: parts.capacity,
            peak_window_s: parts.schedule.peak_window_s,
            day_start_s: parts.schedule.day_start_s,
            day_end_s: parts.schedule.day_end_s,
            nodes: parts.nodes.clone(),
            forbidden: parts.forbidden.iter().map(|&(a, b)| [a, b]).collect(),
            cost_offpeak: include_costs.then(|| dump(&parts.cost_offpeak)),
            cost_peak: include_costs.then(|| dump(&parts.cost_peak)),
        }
    }

    pub fn into_instance(self) -> Result<Instance, InstanceFileError> {
        let n = self.nodes.len();
        let (offpeak, peak) = match (self.cost_offpeak, self.cost_peak) {
            (Some(off), Some(pk)) => (
                matrix_from("cost_offpeak", n, off)?,
                matrix_from("cost_peak", n, pk)?,
            ),
            _ => crate::generator::assign_costs(&self.nodes),
        };
        Ok(Instance::from_parts(InstanceParts {
            name: self.name,
            clusters: clusters_from_labels(&self.nodes),
            nodes: self.nodes,
            capacity: self.capacity,
            cost_offpeak: offpeak,
            cost_peak: peak,
            forbidden: self.forbidden.into_iter().map(|[a, b]| (a, b)).collect(),
            schedule: Schedule {
                day_start_s: self.day_start_s,
                peak_window_s: self.peak_window_s,
                day_end_s: self.day_end_s,
            },
        }))
    }
}

fn matrix_from(matrix: &'static str, n: usize, data: Vec<f64>) -> Result<CostMatrix, InstanceFileError> {
    let len = data.len();
    CostMatrix::from_row_major(n, data).ok_or(InstanceFileError::MatrixLength {
        matrix,
        len,
        expected: n * n,
    })
}

/// Serializes an instance (costs included, 2 decimals) as pretty JSON.
pub fn instance_to_json(inst: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&inst.to_file(true)).expect("instance serializes");
    text.push('\n');
    text
}

pub fn instance_from_json(text: &str) -> Result<Instance, InstanceFileError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.into_instance()
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceFileError> {
    instance_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance) -> Result<(), InstanceFileError> {
    std::fs::write(path, instance_to_json(inst))?;
    Ok(())
}
