//! Multi-run experiments over a suite, their aggregation and the text tables
//! printed from them.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate, average_ranks, friedman, friedman_from_ranks, holm, Aggregate, FriedmanResult, StatsError};
use crate::instance::Instance;
use crate::seed::derive_seed;
use crate::solvers::{solve, Algorithm, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    pub base_seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Shared solver parameters; algorithm and seed are set per run.
    pub solver: SolverConfig,
    pub alpha: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            runs: 20,
            base_seed: 0,
            jobs: 0,
            solver: SolverConfig::default(),
            alpha: 0.05,
        }
    }
}

/// Seed of one run of one algorithm on one instance.
pub fn run_seed(base_seed: u64, instance: &str, algorithm: Algorithm, run: usize) -> u64 {
    derive_seed(base_seed, &[instance, algorithm.as_str()], run as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    pub cost: Option<f64>,
    pub vehicles: Option<usize>,
    pub evaluations: Option<u64>,
    pub convergence_evaluation: Option<u64>,
    pub time_s: Option<f64>,
    pub convergence_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub instance: String,
    pub algorithm: Algorithm,
    pub runs_ok: usize,
    pub failures: usize,
    pub cost: Option<Aggregate>,
    pub best_cost: Option<f64>,
    pub mean_evaluations: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestFound {
    pub instance: String,
    pub cost: f64,
    pub vehicles: usize,
    pub algorithm: Algorithm,
    pub run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub instance: String,
    pub algorithm: Algorithm,
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmRow {
    pub algorithm: String,
    pub z: f64,
    pub p_unadjusted: f64,
    pub p_adjusted: f64,
    pub reject: bool,
}

/// Friedman omnibus test plus Holm post-hoc against a control, by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTests {
    pub algorithms: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub instances_used: usize,
    pub friedman_statistic: f64,
    pub df: usize,
    pub friedman_p: f64,
    pub control: String,
    pub alpha: f64,
    pub holm: Vec<HolmRow>,
}

impl RankTests {
    /// From an instances x algorithms matrix of mean costs.
    pub fn from_means(names: &[String], rows: &[Vec<f64>], control: Option<&str>, alpha: f64) -> Result<Self, StatsError> {
        let f = friedman(rows)?;
        Self::build(names, f, control, alpha)
    }

    /// From published or precomputed average ranks over `instances` problems.
    pub fn from_ranks(
        names: &[String],
        average_ranks: &[f64],
        instances: usize,
        control: Option<&str>,
        alpha: f64,
    ) -> Result<Self, StatsError> {
        if average_ranks.len() < 2 {
            return Err(StatsError::TooFew { what: "algorithms", need: 2, got: average_ranks.len() });
        }
        Self::build(names, friedman_from_ranks(average_ranks, instances), control, alpha)
    }

    fn build(names: &[String], f: FriedmanResult, control: Option<&str>, alpha: f64) -> Result<Self, StatsError> {
        let k = f.average_ranks.len();
        if names.len() != k {
            return Err(StatsError::Ragged { row: 0, got: names.len(), expected: k });
        }
        let best = (0..k)
            .min_by(|&a, &b| f.average_ranks[a].total_cmp(&f.average_ranks[b]))
            .unwrap_or(0);
        let control = match control {
            Some(c) => names
                .iter()
                .position(|n| n.eq_ignore_ascii_case(c))
                .ok_or(StatsError::ControlOutOfRange { control: k, k })?,
            None => names.iter().position(|n| n.eq_ignore_ascii_case("dfa")).unwrap_or(best),
        };
        let h = holm(&f.average_ranks, f.instances, control, alpha)?;
        Ok(Self {
            holm: h
                .comparisons
                .iter()
                .map(|c| HolmRow {
                    algorithm: names[c.index].clone(),
                    z: c.z,
                    p_unadjusted: c.p_unadjusted,
                    p_adjusted: c.p_adjusted,
                    reject: c.reject,
                })
                .collect(),
            control: names[control].clone(),
            algorithms: names.to_vec(),
            average_ranks: f.average_ranks,
            instances_used: f.instances,
            friedman_statistic: f.statistic,
            df: f.df,
            friedman_p: f.p_value,
            alpha,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellTiming {
    pub instance: String,
    pub algorithm: Option<Algorithm>,
    pub mean_time_s: Option<f64>,
    pub mean_convergence_s: Option<f64>,
}

/// Wall-clock aggregates, kept apart from the reproducible report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingSummary {
    pub cells: Vec<CellTiming>,
}

impl TimingSummary {
    pub fn cell(&self, instance: &str, algorithm: Algorithm) -> Option<&CellTiming> {
        self.cells
            .iter()
            .find(|c| c.instance == instance && c.algorithm == Some(algorithm))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub base_seed: u64,
    pub runs_per_cell: usize,
    pub algorithms: Vec<Algorithm>,
    pub instances: Vec<String>,
    pub solver: SolverConfig,
    pub cells: Vec<CellSummary>,
    pub best_found: Vec<BestFound>,
    pub rank_tests: Option<RankTests>,
    pub failures: Vec<CellFailure>,
    #[serde(skip)]
    pub runs: Vec<RunRecord>,
    #[serde(skip)]
    pub timing: TimingSummary,
}

impl ExperimentReport {
    pub fn cell(&self, instance: &str, algorithm: Algorithm) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.instance == instance && c.algorithm == algorithm)
    }

    /// Instances x algorithms matrix of mean costs; `None` where a cell has no successful run.
    pub fn mean_matrix(&self) -> Vec<Vec<Option<f64>>> {
        self.instances
            .iter()
            .map(|name| {
                self.algorithms
                    .iter()
                    .map(|&a| self.cell(name, a).and_then(|c| c.cost.map(|g| g.mean)))
                    .collect()
            })
            .collect()
    }

    pub fn all_failed(&self) -> bool {
        !self.runs.is_empty() && self.runs.iter().all(|r| r.cost.is_none())
    }
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
}

fn execute(inst: &Instance, cfg: &SolverConfig, run: usize) -> RunRecord {
    let record = RunRecord {
        instance: inst.name().to_string(),
        algorithm: cfg.algorithm,
        run,
        seed: cfg.seed,
        cost: None,
        vehicles: None,
        evaluations: None,
        convergence_evaluation: None,
        time_s: None,
        convergence_s: None,
        error: None,
    };
    match solve(inst, cfg) {
        Ok(r) => {
            log::debug!("{} {} run {} cost {:.2}", inst.name(), cfg.algorithm, run, r.best_cost);
            RunRecord {
                cost: Some(r.best_cost),
                vehicles: Some(r.best_solution.route_count()),
                evaluations: Some(r.evaluations_total),
                convergence_evaluation: Some(r.convergence_evaluation),
                time_s: Some(r.wall_time_s),
                convergence_s: Some(r.convergence_time_s),
                ..record
            }
        }
        Err(e) => {
            log::warn!("{} {} run {} failed: {e}", inst.name(), cfg.algorithm, run);
            RunRecord {
                error: Some(e.to_string()),
                ..record
            }
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    aggregate(&v).ok().map(|a| a.mean)
}

/// Runs every algorithm `cfg.runs` times on every instance, in parallel
/// across runs, then aggregates in a fixed order.
pub fn run_experiment(suite: &[Instance], cfg: &ExperimentConfig) -> ExperimentReport {
    let tasks: Vec<(usize, Algorithm, usize)> = (0..suite.len())
        .flat_map(|i| {
            cfg.algorithms
                .iter()
                .flat_map(move |&a| (0..cfg.runs).map(move |run| (i, a, run)))
        })
        .collect();
    log::info!("experiment: {} solver runs on {} threads", tasks.len(), cfg.jobs);
    let runs: Vec<RunRecord> = pool(cfg.jobs).install(|| {
        tasks
            .par_iter()
            .map(|&(i, algorithm, run)| {
                let inst = &suite[i];
                let solver = SolverConfig {
                    algorithm,
                    seed: run_seed(cfg.base_seed, inst.name(), algorithm, run),
                    ..cfg.solver.clone()
                };
                execute(inst, &solver, run)
            })
            .collect()
    });
    summarize(suite, cfg, runs)
}

fn summarize(suite: &[Instance], cfg: &ExperimentConfig, runs: Vec<RunRecord>) -> ExperimentReport {
    let instances: Vec<String> = suite.iter().map(|i| i.name().to_string()).collect();
    let mut cells = Vec::new();
    let mut timing = TimingSummary::default();
    let mut best_found = Vec::new();
    for name in &instances {
        let mut best: Option<BestFound> = None;
        for &algorithm in &cfg.algorithms {
            let cell: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| &r.instance == name && r.algorithm == algorithm)
                .collect();
            let costs: Vec<f64> = cell.iter().filter_map(|r| r.cost).collect();
            for r in &cell {
                if let (Some(cost), Some(vehicles)) = (r.cost, r.vehicles) {
                    if best.as_ref().is_none_or(|b| cost < b.cost) {
                        best = Some(BestFound {
                            instance: name.clone(),
                            cost,
                            vehicles,
                            algorithm,
                            run: r.run,
                        });
                    }
                }
            }
            cells.push(CellSummary {
                instance: name.clone(),
                algorithm,
                runs_ok: costs.len(),
                failures: cell.len() - costs.len(),
                cost: aggregate(&costs).ok(),
                best_cost: costs.iter().copied().reduce(f64::min),
                mean_evaluations: mean(cell.iter().filter_map(|r| r.evaluations.map(|e| e as f64))),
            });
            timing.cells.push(CellTiming {
                instance: name.clone(),
                algorithm: Some(algorithm),
                mean_time_s: mean(cell.iter().filter_map(|r| r.time_s)),
                mean_convergence_s: mean(cell.iter().filter_map(|r| r.convergence_s)),
            });
        }
        best_found.extend(best);
    }
    let failures = runs
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| CellFailure {
                instance: r.instance.clone(),
                algorithm: r.algorithm,
                run: r.run,
                error: e.clone(),
            })
        })
        .collect();
    let mut report = ExperimentReport {
        base_seed: cfg.base_seed,
        runs_per_cell: cfg.runs,
        algorithms: cfg.algorithms.clone(),
        instances,
        solver: cfg.solver.clone(),
        cells,
        best_found,
        rank_tests: None,
        failures,
        runs,
        timing,
    };
    report.rank_tests = rank_tests(&report, cfg.alpha);
    report
}

/// Friedman and Holm over instances where every algorithm has a mean.
/// The control is DFA when present, otherwise the best-ranked algorithm.
fn rank_tests(report: &ExperimentReport, alpha: f64) -> Option<RankTests> {
    let rows: Vec<Vec<f64>> = report
        .mean_matrix()
        .into_iter()
        .filter_map(|row| row.into_iter().collect::<Option<Vec<f64>>>())
        .collect();
    let names: Vec<String> = report.algorithms.iter().map(|a| a.label().to_string()).collect();
    RankTests::from_means(&names, &rows, None, alpha).ok()
}

/// Aligned plain-text table: first column left-aligned, the rest right-aligned.
/// Left-aligned first column, right-aligned rest, dashed rule under the header.
pub fn text_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width = vec![0; cols];
    for row in std::iter::once(headers).chain(rows.iter().map(Vec::as_slice)) {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |row: &[String]| {
        let mut s = String::new();
        for (k, cell) in row.iter().enumerate() {
            if k == 0 {
                let _ = write!(s, "{cell:<w$}", w = width[k]);
            } else {
                let _ = write!(s, "  {cell:>w$}", w = width[k]);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(headers);
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.decimals$}"))
}

/// Per-instance mean and standard deviation for each algorithm, with mean
/// runtime and convergence time columns when `timing` is given.
pub fn render_results(report: &ExperimentReport, timing: Option<&TimingSummary>) -> String {
    let mut headers = vec!["Instance".to_string()];
    for a in &report.algorithms {
        headers.push(format!("{} Avg.", a.label()));
        headers.push(format!("{} S. dev.", a.label()));
        if timing.is_some() {
            headers.push(format!("{} Time", a.label()));
            headers.push(format!("{} C. T.", a.label()));
        }
    }
    let rows: Vec<Vec<String>> = report
        .instances
        .iter()
        .map(|name| {
            let mut row = vec![name.clone()];
            for &a in &report.algorithms {
                let agg = report.cell(name, a).and_then(|c| c.cost);
                row.push(opt(agg.map(|g| g.mean), 1));
                row.push(opt(agg.map(|g| g.sd), 1));
                if let Some(t) = timing {
                    let cell = t.cell(name, a);
                    row.push(opt(cell.and_then(|c| c.mean_time_s), 3));
                    row.push(opt(cell.and_then(|c| c.mean_convergence_s), 3));
                }
            }
            row
        })
        .collect();
    text_table(&headers, &rows)
}

pub fn render_best_found(report: &ExperimentReport) -> String {
    let headers = ["Name", "Best Result", "Vehicles", "Technique"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .best_found
        .iter()
        .map(|b| {
            vec![
                b.instance.clone(),
                format!("{:.2}", b.cost),
                b.vehicles.to_string(),
                b.algorithm.label().to_string(),
            ]
        })
        .collect();
    text_table(&headers, &rows)
}

pub fn render_rank_tests(tests: &RankTests) -> String {
    let mut out = String::new();
    let headers = ["Algorithm", "Average rank"].map(String::from);
    let rows: Vec<Vec<String>> = tests
        .algorithms
        .iter()
        .zip(&tests.average_ranks)
        .map(|(a, r)| vec![a.clone(), format!("{r:.4}")])
        .collect();
    out.push_str(&text_table(&headers, &rows));
    let _ = writeln!(
        out,
        "\nFriedman statistic {:.4} (df {}, {} instances), p-value {:.6}\n",
        tests.friedman_statistic, tests.df, tests.instances_used, tests.friedman_p
    );
    let _ = writeln!(out, "Holm post-hoc, control {}, alpha {}", tests.control, tests.alpha);
    let headers = ["Algorithm", "z", "Unadjusted p", "Adjusted p", "Reject"].map(String::from);
    let rows: Vec<Vec<String>> = tests
        .holm
        .iter()
        .map(|h| {
            vec![
                h.algorithm.clone(),
                format!("{:.4}", h.z),
                format!("{:.6}", h.p_unadjusted),
                format!("{:.6}", h.p_adjusted),
                if h.reject { "yes" } else { "no" }.to_string(),
            ]
        })
        .collect();
    out.push_str(&text_table(&headers, &rows));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub jobs: usize,
    pub solver: SolverConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: vec![25, 50, 100, 150],
            runs: 20,
            base_seed: 0,
            jobs: 0,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub instances: Vec<String>,
    /// Mean cost per instance and size.
    pub means: Vec<Vec<f64>>,
    pub average_ranks: Vec<f64>,
    #[serde(skip)]
    pub mean_times: Vec<Vec<f64>>,
}

/// DFA at each population size on each instance; ranks sizes per instance
/// by mean cost.
pub fn population_sweep(suite: &[Instance], cfg: &SweepConfig) -> Result<SweepReport, StatsError> {
    if cfg.sizes.is_empty() {
        return Err(StatsError::TooFew { what: "population sizes", need: 1, got: 0 });
    }
    if cfg.runs == 0 {
        return Err(StatsError::TooFew { what: "runs", need: 1, got: 0 });
    }
    let tasks: Vec<(usize, usize, usize)> = (0..suite.len())
        .flat_map(|i| (0..cfg.sizes.len()).flat_map(move |s| (0..cfg.runs).map(move |run| (i, s, run))))
        .collect();
    let records: Vec<RunRecord> = pool(cfg.jobs).install(|| {
        tasks
            .par_iter()
            .map(|&(i, s, run)| {
                let inst = &suite[i];
                let size = cfg.sizes[s];
                let solver = SolverConfig {
                    algorithm: Algorithm::Dfa,
                    population_size: size,
                    seed: derive_seed(cfg.base_seed, &[inst.name(), "dfa", &format!("population-{size}")], run as u64),
                    ..cfg.solver.clone()
                };
                execute(inst, &solver, run)
            })
            .collect()
    });
    let mut means = Vec::new();
    let mut mean_times = Vec::new();
    for (i, chunk) in records.chunks(cfg.sizes.len() * cfg.runs).enumerate() {
        let mut row = Vec::new();
        let mut times = Vec::new();
        for cell in chunk.chunks(cfg.runs) {
            let costs: Vec<f64> = cell.iter().filter_map(|r| r.cost).collect();
            let agg = aggregate(&costs).map_err(|_| StatsError::NonFinite(i))?;
            row.push(agg.mean);
            times.push(mean(cell.iter().filter_map(|r| r.time_s)).unwrap_or(0.0));
        }
        means.push(row);
        mean_times.push(times);
    }
    let average_ranks = if means.is_empty() {
        vec![0.0; cfg.sizes.len()]
    } else {
        average_ranks(&means)?
    };
    Ok(SweepReport {
        sizes: cfg.sizes.clone(),
        runs: cfg.runs,
        base_seed: cfg.base_seed,
        instances: suite.iter().map(|i| i.name().to_string()).collect(),
        means,
        average_ranks,
        mean_times,
    })
}

pub fn render_sweep(report: &SweepReport, with_times: bool) -> String {
    let mut headers = vec!["Instance".to_string()];
    for size in &report.sizes {
        headers.push(format!("DFA_{size} Avg."));
        if with_times {
            headers.push(format!("DFA_{size} Time"));
        }
    }
    let mut rows: Vec<Vec<String>> = report
        .instances
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut row = vec![name.clone()];
            for s in 0..report.sizes.len() {
                row.push(format!("{:.1}", report.means[i][s]));
                if with_times {
                    row.push(opt(report.mean_times.get(i).and_then(|t| t.get(s)).copied(), 3));
                }
            }
            row
        })
        .collect();
    let mut ranking = vec!["Ranking".to_string()];
    for r in &report.average_ranks {
        ranking.push(format!("{r:.2}"));
        if with_times {
            ranking.push(String::new());
        }
    }
    rows.push(ranking);
    text_table(&headers, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{synthetic_instance, SyntheticSpec};

    fn tiny_suite() -> Vec<Instance> {
        (0..2)
            .map(|s| {
                synthetic_instance(&SyntheticSpec { clusters: 3, per_cluster: 4, capacity: 60, ..Default::default() }, s)
                    .unwrap()
            })
            .collect()
    }

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            runs: 2,
            base_seed: 5,
            jobs: 2,
            solver: SolverConfig { population_size: 6, ..SolverConfig::default() },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn cardinality_and_best_found() {
        let suite = tiny_suite();
        let report = run_experiment(&suite, &tiny_config());
        assert_eq!(report.runs.len(), 12);
        assert!(report.runs.iter().all(|r| r.cost.is_some()));
        assert_eq!(report.cells.len(), 6);
        for b in &report.best_found {
            let min = report
                .runs
                .iter()
                .filter(|r| r.instance == b.instance)
                .filter_map(|r| r.cost)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(b.cost, min);
        }
        let tests = report.rank_tests.as_ref().unwrap();
        assert_eq!(tests.control, "DFA");
        assert_eq!(tests.holm.len(), 2);
        assert!(render_rank_tests(tests).contains("Friedman statistic"));
        assert_eq!(render_results(&report, None).lines().count(), 4);
        assert_eq!(render_best_found(&report).lines().count(), 4);
    }

    #[test]
    fn report_is_reproducible_and_thread_independent() {
        let suite = tiny_suite();
        let a = run_experiment(&suite, &tiny_config());
        let b = run_experiment(&suite, &ExperimentConfig { jobs: 1, ..tiny_config() });
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let seeds: Vec<u64> = a.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, b.runs.iter().map(|r| r.seed).collect::<Vec<_>>());
    }

    #[test]
    fn failures_are_recorded_per_cell() {
        let suite = tiny_suite();
        let cfg = ExperimentConfig {
            solver: SolverConfig { population_size: 0, ..SolverConfig::default() },
            ..tiny_config()
        };
        let report = run_experiment(&suite, &cfg);
        assert!(report.all_failed());
        assert_eq!(report.failures.len(), 12);
        assert!(report.rank_tests.is_none());
        assert!(render_results(&report, None).contains(" -"));
    }

    #[test]
    fn sweep_single_cell_ranks_first() {
        let suite = tiny_suite();
        let cfg = SweepConfig { sizes: vec![4], runs: 1, base_seed: 1, jobs: 1, ..SweepConfig::default() };
        let report = population_sweep(&suite[..1], &cfg).unwrap();
        assert_eq!(report.average_ranks, vec![1.0]);
        assert!(render_sweep(&report, true).contains("Ranking"));
    }
}
