//! Seeded benchmark generator: a 100-customer base network, the 15-row
//! derived suite, and small synthetic instances for exhaustive testing.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{
    search_block_order, Cluster, CostMatrix, Instance, InstanceParts, Node, Schedule, DEPOT, DEPOT_CLUSTER,
};
use crate::operators::random_solution;
use crate::seed::derive_seed;

pub const BOX_WIDTH: f64 = 20_000.0;
pub const BOX_HEIGHT: f64 = 16_000.0;
pub const CLUSTER_RADIUS: f64 = 1_500.0;
pub const DEPOT_XY: (f64, f64) = (10_000.0, 8_000.0);
pub const BASE_CLUSTERS: usize = 10;
pub const BASE_CLUSTER_SIZE: usize = 10;
/// Minimum spacing between cluster centres.
pub const CENTER_SEPARATION: f64 = 3_500.0;
/// Minimum spacing between any two nodes, depot included.
pub const NODE_SEPARATION: f64 = 1.0;
/// Whole-cluster resamples allowed when drawing forbidden arcs.
pub const FORBIDDEN_ATTEMPTS: usize = 10_000;

const OFFPEAK_ODD: f64 = 1.2;
const OFFPEAK_EVEN: f64 = 0.8;
const PEAK_FORWARD: f64 = 1.3;
const PEAK_ODD: f64 = 1.2;
const PEAK_EVEN: f64 = 1.4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("{instance}: no admissible forbidden-arc set for cluster {cluster} after {attempts} draws")]
    ForbiddenUnsatisfiable {
        instance: String,
        cluster: usize,
        attempts: usize,
    },
    #[error("{instance}: cluster {cluster} has {arcs} ordered arcs, cannot forbid {requested}")]
    TooManyForbidden {
        instance: String,
        cluster: usize,
        arcs: usize,
        requested: usize,
    },
    #[error("{instance}: derived {nodes} customers in {clusters} clusters, row expects {want_nodes} in {want_clusters}")]
    RowMismatch {
        instance: String,
        nodes: usize,
        clusters: usize,
        want_nodes: usize,
        want_clusters: usize,
    },
    #[error("no suite row named {0}")]
    UnknownRow(String),
}

/// Delivery and pickup of customer `id` by its residue mod 4.
pub fn demand_of(id: usize) -> (u32, u32) {
    match id % 4 {
        1 => (10, 5),
        2 => (10, 0),
        3 => (5, 3),
        _ => (5, 0),
    }
}

/// Customers and clusters before costs, capacity and forbidden arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseNetwork {
    pub seed: u64,
    /// Depot first, then customers 1..=100 in id order.
    pub nodes: Vec<Node>,
    pub clusters: Vec<Cluster>,
}

fn round_coord(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn depot() -> Node {
    Node {
        id: DEPOT,
        x: DEPOT_XY.0,
        y: DEPOT_XY.1,
        delivery: 0,
        pickup: 0,
        cluster: DEPOT_CLUSTER,
    }
}

/// Cluster centres uniform in the box (kept one radius inside the edges so
/// customers stay in it) with pairwise spacing of at least `separation`.
fn draw_centers(rng: &mut ChaCha8Rng, count: usize, separation: f64) -> Vec<(f64, f64)> {
    loop {
        let mut centers: Vec<(f64, f64)> = Vec::with_capacity(count);
        let mut tries = 0;
        while centers.len() < count && tries < 10_000 {
            tries += 1;
            let c = (
                rng.random_range(CLUSTER_RADIUS..BOX_WIDTH - CLUSTER_RADIUS),
                rng.random_range(CLUSTER_RADIUS..BOX_HEIGHT - CLUSTER_RADIUS),
            );
            if centers.iter().all(|o| (o.0 - c.0).hypot(o.1 - c.1) >= separation) {
                centers.push(c);
            }
        }
        if centers.len() == count {
            return centers;
        }
    }
}

/// Places `per_cluster` customers uniformly in a disc around each centre,
/// assigning ids cluster by cluster from 1.
fn place_customers(rng: &mut ChaCha8Rng, centers: &[(f64, f64)], per_cluster: usize) -> (Vec<Node>, Vec<Cluster>) {
    let mut nodes = vec![depot()];
    let mut clusters = Vec::with_capacity(centers.len());
    for (s, &(cx, cy)) in centers.iter().enumerate() {
        let label = s + 1;
        let mut members = Vec::with_capacity(per_cluster);
        for k in 0..per_cluster {
            let id = s * per_cluster + k + 1;
            let (x, y) = loop {
                let r = CLUSTER_RADIUS * rng.random::<f64>().sqrt();
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let p = (round_coord(cx + r * theta.cos()), round_coord(cy + r * theta.sin()));
                if nodes.iter().all(|n: &Node| (n.x - p.0).hypot(n.y - p.1) >= NODE_SEPARATION) {
                    break p;
                }
            };
            let (delivery, pickup) = demand_of(id);
            nodes.push(Node {
                id,
                x,
                y,
                delivery,
                pickup,
                cluster: label,
            });
            members.push(id);
        }
        clusters.push(Cluster { id: label, members });
    }
    (nodes, clusters)
}

/// The 100-customer base network every suite row is cut from.
pub fn generate_base(seed: u64) -> BaseNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = draw_centers(&mut rng, BASE_CLUSTERS, CENTER_SEPARATION);
    let (nodes, clusters) = place_customers(&mut rng, &centers, BASE_CLUSTER_SIZE);
    BaseNetwork { seed, nodes, clusters }
}

/// Off-peak and peak matrices, indexed by node position. For ids `i < j`
/// the forward arc costs the Euclidean distance `e` off-peak and `1.3 e` at
/// peak; the backward arc costs `1.2 e` / `1.44 e` when `j` is odd and
/// `0.8 e` / `1.12 e` when `j` is even.
pub fn assign_costs(nodes: &[Node]) -> (CostMatrix, CostMatrix) {
    let n = nodes.len();
    let mut offpeak = CostMatrix::zeros(n);
    let mut peak = CostMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            let (lo, hi) = (&nodes[a], &nodes[b]);
            if lo.id >= hi.id {
                continue;
            }
            let e = lo.distance_to(hi);
            let odd = hi.id % 2 == 1;
            let back = e * if odd { OFFPEAK_ODD } else { OFFPEAK_EVEN };
            offpeak.set(a, b, e);
            offpeak.set(b, a, back);
            peak.set(a, b, e * PEAK_FORWARD);
            peak.set(b, a, back * if odd { PEAK_ODD } else { PEAK_EVEN });
        }
    }
    (offpeak, peak)
}

/// Whether some order of `members` uses none of the `forbidden` arcs.
/// Subset dynamic programme over (visited set, last node).
pub fn cluster_path_exists(members: &[usize], forbidden: &BTreeSet<(usize, usize)>) -> bool {
    let m = members.len();
    if m <= 1 {
        return true;
    }
    if m > 20 {
        let free = vec![(0, 0); m];
        return search_block_order(members, &free, None, |a, b| forbidden.contains(&(a, b)), None).is_some();
    }
    // allowed[a] = set of b reachable from a in one step
    let allowed: Vec<u32> = (0..m)
        .map(|a| {
            (0..m)
                .filter(|&b| b != a && !forbidden.contains(&(members[a], members[b])))
                .fold(0u32, |acc, b| acc | 1 << b)
        })
        .collect();
    let full = (1usize << m) - 1;
    // ends[mask] = set of possible last nodes of a path covering mask
    let mut ends = vec![0u32; full + 1];
    for a in 0..m {
        ends[1 << a] = 1 << a;
    }
    for mask in 1..=full {
        let last = ends[mask];
        if last == 0 {
            continue;
        }
        for a in (0..m).filter(|&a| last & (1 << a) != 0) {
            let mut next = allowed[a] & !(mask as u32);
            while next != 0 {
                let b = next.trailing_zeros() as usize;
                next &= next - 1;
                ends[mask | 1 << b] |= 1 << b;
            }
        }
    }
    ends[full] != 0
}

/// Draws `per_cluster` distinct ordered intra-cluster arcs for every
/// cluster. A cluster's draw is repeated until some order of the cluster
/// avoids its arcs and fits a fresh vehicle; the finished instance must then
/// admit a random construction.
pub fn select_forbidden<R: Rng + ?Sized>(
    inst: &Instance,
    per_cluster: usize,
    rng: &mut R,
) -> Result<BTreeSet<(usize, usize)>, GenerateError> {
    let mut chosen = BTreeSet::new();
    for cluster in inst.clusters() {
        let members = &cluster.members;
        let arcs: Vec<(usize, usize)> = members
            .iter()
            .flat_map(|&a| members.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .collect();
        if per_cluster > arcs.len() {
            return Err(GenerateError::TooManyForbidden {
                instance: inst.name().to_string(),
                cluster: cluster.id,
                arcs: arcs.len(),
                requested: per_cluster,
            });
        }
        let demands: Vec<(u32, u32)> = members
            .iter()
            .map(|&id| inst.node(id).map_or((0, 0), |n| (n.delivery, n.pickup)))
            .collect();
        let mut accepted = None;
        for _ in 0..FORBIDDEN_ATTEMPTS {
            let draw: BTreeSet<(usize, usize)> = sample(rng, arcs.len(), per_cluster)
                .into_iter()
                .map(|k| arcs[k])
                .collect();
            if cluster_path_exists(members, &draw)
                && search_block_order(members, &demands, Some(inst.capacity()), |a, b| draw.contains(&(a, b)), None)
                    .is_some()
            {
                accepted = Some(draw);
                break;
            }
        }
        let draw = accepted.ok_or_else(|| GenerateError::ForbiddenUnsatisfiable {
            instance: inst.name().to_string(),
            cluster: cluster.id,
            attempts: FORBIDDEN_ATTEMPTS,
        })?;
        chosen.extend(draw);
    }
    let mut parts = inst.parts().clone();
    parts.forbidden = chosen.clone();
    let check = Instance::from_parts(parts);
    if let Err(crate::operators::ConstructionError::UnservableCluster(cluster)) = random_solution(&check, rng) {
        return Err(GenerateError::ForbiddenUnsatisfiable {
            instance: inst.name().to_string(),
            cluster,
            attempts: FORBIDDEN_ATTEMPTS,
        });
    }
    Ok(chosen)
}

/// Which part of the base network a suite row keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    OddClusters,
    EvenClusters,
    /// The first `k` customers (by id) of every cluster.
    FirstNodes(usize),
    /// The last `k` customers (by id) of every cluster.
    LastNodes(usize),
    FirstClusters(usize),
    All,
}

impl Selection {
    fn apply(&self, clusters: &[Cluster]) -> Vec<Cluster> {
        let pick = |c: &Cluster, members: Vec<usize>| Cluster { id: c.id, members };
        match *self {
            Self::OddClusters => clusters.iter().filter(|c| c.id % 2 == 1).cloned().collect(),
            Self::EvenClusters => clusters.iter().filter(|c| c.id % 2 == 0).cloned().collect(),
            Self::FirstNodes(k) => clusters
                .iter()
                .map(|c| pick(c, c.members.iter().take(k).copied().collect()))
                .collect(),
            Self::LastNodes(k) => clusters
                .iter()
                .map(|c| pick(c, c.members[c.members.len().saturating_sub(k)..].to_vec()))
                .collect(),
            Self::FirstClusters(k) => clusters.iter().take(k).cloned().collect(),
            Self::All => clusters.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub name: String,
    /// Customers kept.
    pub nodes: usize,
    pub clusters: usize,
    pub capacity: u32,
    pub forbidden_per_cluster: usize,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub rows: Vec<SuiteRow>,
}

impl SuiteSpec {
    /// The fifteen benchmark rows.
    pub fn standard() -> Self {
        use Selection::*;
        let table: [(&str, usize, usize, u32, usize, Selection); 15] = [
            ("Osaba_50_1_1", 50, 5, 240, 5, OddClusters),
            ("Osaba_50_1_2", 50, 5, 160, 10, OddClusters),
            ("Osaba_50_1_3", 50, 10, 240, 5, FirstNodes(5)),
            ("Osaba_50_1_4", 50, 10, 160, 10, FirstNodes(5)),
            ("Osaba_50_2_1", 50, 5, 240, 5, EvenClusters),
            ("Osaba_50_2_2", 50, 5, 160, 10, EvenClusters),
            ("Osaba_50_2_3", 50, 10, 240, 5, LastNodes(5)),
            ("Osaba_50_2_4", 50, 10, 160, 10, LastNodes(5)),
            ("Osaba_80_1", 80, 8, 240, 5, FirstClusters(8)),
            ("Osaba_80_2", 80, 8, 160, 10, FirstClusters(8)),
            ("Osaba_80_3", 80, 10, 240, 5, FirstNodes(8)),
            ("Osaba_80_4", 80, 10, 160, 10, FirstNodes(8)),
            ("Osaba_100_1", 100, 10, 140, 5, All),
            ("Osaba_100_2", 100, 10, 260, 10, All),
            ("Osaba_100_3", 100, 10, 320, 10, All),
        ];
        Self {
            rows: table
                .into_iter()
                .map(|(name, nodes, clusters, capacity, forbidden_per_cluster, selection)| SuiteRow {
                    name: name.to_string(),
                    nodes,
                    clusters,
                    capacity,
                    forbidden_per_cluster,
                    selection,
                })
                .collect(),
        }
    }

    pub fn row(&self, name: &str) -> Option<&SuiteRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub instance: Instance,
    pub seed: u64,
}

/// Seed of one suite row under a suite base seed.
pub fn instance_seed(base_seed: u64, name: &str) -> u64 {
    derive_seed(base_seed, &["instance", name], 0)
}

/// Cuts one row out of the base network: keeps the selected customers with
/// their original ids, recomputes both matrices and draws forbidden arcs.
pub fn derive_instance(base: &BaseNetwork, row: &SuiteRow, seed: u64) -> Result<GeneratedInstance, GenerateError> {
    let clusters = row.selection.apply(&base.clusters);
    let kept: BTreeSet<usize> = clusters.iter().flat_map(|c| c.members.iter().copied()).collect();
    if kept.len() != row.nodes || clusters.len() != row.clusters {
        return Err(GenerateError::RowMismatch {
            instance: row.name.clone(),
            nodes: kept.len(),
            clusters: clusters.len(),
            want_nodes: row.nodes,
            want_clusters: row.clusters,
        });
    }
    let nodes: Vec<Node> = base
        .nodes
        .iter()
        .filter(|n| n.is_depot() || kept.contains(&n.id))
        .cloned()
        .collect();
    let instance = build(row.name.clone(), nodes, clusters, row.capacity, row.forbidden_per_cluster, seed)?;
    Ok(GeneratedInstance { instance, seed })
}

fn build(
    name: String,
    nodes: Vec<Node>,
    clusters: Vec<Cluster>,
    capacity: u32,
    forbidden_per_cluster: usize,
    seed: u64,
) -> Result<Instance, GenerateError> {
    let (cost_offpeak, cost_peak) = assign_costs(&nodes);
    let mut parts = InstanceParts {
        name,
        nodes,
        clusters,
        capacity,
        cost_offpeak,
        cost_peak,
        forbidden: BTreeSet::new(),
        schedule: Schedule::default(),
    };
    if forbidden_per_cluster > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        parts.forbidden = select_forbidden(&Instance::from_parts(parts.clone()), forbidden_per_cluster, &mut rng)?;
    }
    Ok(Instance::from_parts(parts))
}

/// All rows of `spec`, each with the seed [`instance_seed`] gives it.
pub fn derive_suite(base: &BaseNetwork, spec: &SuiteSpec, base_seed: u64) -> Result<Vec<GeneratedInstance>, GenerateError> {
    spec.rows
        .iter()
        .map(|row| derive_instance(base, row, instance_seed(base_seed, &row.name)))
        .collect()
}

/// Base network and full standard suite from one seed.
pub fn generate_suite(base_seed: u64) -> Result<Vec<GeneratedInstance>, GenerateError> {
    derive_suite(&generate_base(base_seed), &SuiteSpec::standard(), base_seed)
}

/// Shape of a small instance with dense ids: cluster `s` holds ids
/// `(s-1)*per_cluster + 1 ..= s*per_cluster` and demands follow [`demand_of`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub clusters: usize,
    pub per_cluster: usize,
    pub capacity: u32,
    pub forbidden_per_cluster: usize,
    pub center_separation: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            clusters: 2,
            per_cluster: 3,
            capacity: 1000,
            forbidden_per_cluster: 0,
            center_separation: CENTER_SEPARATION,
        }
    }
}

pub fn synthetic_instance(spec: &SyntheticSpec, seed: u64) -> Result<Instance, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = draw_centers(&mut rng, spec.clusters, spec.center_separation);
    let (nodes, clusters) = place_customers(&mut rng, &centers, spec.per_cluster);
    let name = format!("synthetic_{}x{}_{seed}", spec.clusters, spec.per_cluster);
    build(name, nodes, clusters, spec.capacity, spec.forbidden_per_cluster, rng.random())
}
