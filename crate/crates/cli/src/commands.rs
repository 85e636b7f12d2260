use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rvrp_core::generator::{derive_instance, generate_base, instance_seed, SuiteSpec};
use rvrp_core::instance::{instance_to_json, read_instance, validate_instance};
use rvrp_core::solvers::SolveError;
use rvrp_core::stats::{
    population_sweep, rank_discrepancies, render_best_found, render_rank_tests, render_results, render_sweep,
    run_experiment, text_table, ExperimentConfig, ExperimentReport, RankDiscrepancy, RankTests, SweepConfig,
};
use rvrp_core::{check_feasible, solve, Algorithm, Instance, Solution, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{ExperimentArgs, ExportArgs, GenerateArgs, SolveArgs, SolverArgs, StatsArgs, ValidateArgs};
use crate::error::CliError;
use crate::geojson::feature_collection;

pub const MANIFEST: &str = "suite-manifest.json";

/// Instances used by the population study when `--only` is not given.
pub const SWEEP_INSTANCES: [&str; 4] = ["Osaba_50_1_1", "Osaba_50_1_2", "Osaba_80_3", "Osaba_100_1"];

/// Tolerance when comparing recomputed average ranks with reference ones.
const RANK_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub base_seed: u64,
    pub instances: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub seed: u64,
}

/// What `solve` writes. Everything here is reproducible from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub instance: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config: SolverConfig,
    /// Flat giant-tour form with 0 separating routes.
    pub encoding: Vec<usize>,
    pub routes: Vec<Vec<usize>>,
    pub cost: f64,
    pub vehicles: usize,
    pub evaluations: u64,
    pub convergence_evaluation: u64,
    pub generations: u64,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_history: Option<Vec<(u64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTiming {
    pub wall_time_s: f64,
    pub convergence_time_s: f64,
}

fn header(command: &str, fields: &[(&str, String)]) {
    let mut line = format!("# rvrp {} {command}", env!("CARGO_PKG_VERSION"));
    for (k, v) in fields {
        line.push_str(&format!(" {k}={v}"));
    }
    println!("{line}");
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_instance(path: &Path) -> Result<Instance, CliError> {
    read_instance(path).map_err(|e| CliError::bad_input(path, e))
}

fn ensure_valid(inst: &Instance) -> Result<(), CliError> {
    let report = validate_instance(inst);
    if report.ok {
        return Ok(());
    }
    let checks: Vec<&str> = report.violations.iter().map(|v| v.check.as_str()).collect();
    Err(CliError::InvalidInstance { name: inst.name().to_string(), checks: checks.join(", ") })
}

/// Reads a solution given as a `solve` output, an object with `routes` or
/// `encoding`, or a bare list of routes.
pub fn load_solution(path: &Path, inst: &Instance) -> Result<Solution, CliError> {
    let value: Value = serde_json::from_str(&read_text(path)?).map_err(|e| CliError::bad_input(path, e))?;
    if let Some(name) = value.get("instance").and_then(Value::as_str) {
        if name != inst.name() {
            return Err(CliError::Mismatch(format!("solution is for {name}, instance is {}", inst.name())));
        }
    }
    let routes = value.get("routes").cloned().or_else(|| value.is_array().then(|| value.clone()));
    if let Some(routes) = routes {
        let routes: Vec<Vec<usize>> = serde_json::from_value(routes).map_err(|e| CliError::bad_input(path, e))?;
        return Ok(Solution::new(routes));
    }
    if let Some(flat) = value.get("encoding") {
        let flat: Vec<usize> = serde_json::from_value(flat.clone()).map_err(|e| CliError::bad_input(path, e))?;
        return Solution::decode(&flat, inst).map_err(|e| CliError::Mismatch(e.to_string()));
    }
    Err(CliError::bad_input(path, "expected `routes`, `encoding` or a list of routes"))
}

fn solver_config(args: &SolverArgs, algorithm: Algorithm, seed: u64) -> SolverConfig {
    let mut cfg = SolverConfig::new(algorithm, seed);
    if let Some(v) = args.population {
        cfg.population_size = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.mutation_probability {
        cfg.mutation_probability = v;
    }
    if let Some(v) = args.elitist_fraction {
        cfg.elitist_fraction = v;
        cfg.random_fraction = 1.0 - v;
    }
    if let Some(v) = args.cooling_constant {
        cfg.cooling_constant = v;
    }
    if let Some(v) = args.acceptance_p {
        cfg.acceptance_p = v;
    }
    cfg.enable_cluster_relocation = args.enable_cluster_relocation;
    if let Some(s) = args.move_style {
        cfg.move_style = s.into();
    }
    cfg.stale_budget = args.stale_budget;
    cfg
}

fn checked_config(args: &SolverArgs, algorithm: Algorithm, seed: u64) -> Result<SolverConfig, CliError> {
    let cfg = solver_config(args, algorithm, seed);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or_else(rand::random);
    header("generate", &[("seed", seed.to_string()), ("out", args.out.display().to_string())]);
    let spec = SuiteSpec::standard();
    for name in &args.only {
        if spec.row(name).is_none() {
            return Err(CliError::Usage(format!("unknown instance {name}")));
        }
    }
    let base = generate_base(seed);
    let mut manifest = Manifest { base_seed: seed, instances: Vec::new() };
    let mut rows = Vec::new();
    for row in spec.rows.iter().filter(|r| args.only.is_empty() || args.only.contains(&r.name)) {
        let generated = derive_instance(&base, row, instance_seed(seed, &row.name))?;
        let inst = &generated.instance;
        let file = format!("{}.json", row.name);
        write_text(&args.out.join(&file), &instance_to_json(inst))?;
        info!("wrote {}", args.out.join(&file).display());
        rows.push(vec![
            row.name.clone(),
            inst.nodes().len().to_string(),
            inst.clusters().len().to_string(),
            inst.capacity().to_string(),
            inst.forbidden().len().to_string(),
            generated.seed.to_string(),
        ]);
        manifest.instances.push(ManifestEntry { name: row.name.clone(), file, seed: generated.seed });
    }
    write_json(&args.out.join(MANIFEST), &manifest)?;
    let headers = ["Name", "Nodes", "Clusters", "Capacity", "Forbidden", "Seed"].map(String::from);
    print!("{}", text_table(&headers, &rows));
    Ok(())
}

pub fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let instance_report = validate_instance(&inst);
    let solution_report = match &args.solution {
        Some(path) if instance_report.ok => Some(check_feasible(&load_solution(path, &inst)?, &inst)),
        _ => None,
    };
    let mut out = serde_json::json!({ "instance": inst.name(), "instance_report": instance_report });
    if let Some(r) = &solution_report {
        out["solution_report"] = serde_json::to_value(r).expect("serializable");
    }
    match &args.out {
        Some(path) => write_json(path, &out)?,
        None => println!("{}", serde_json::to_string_pretty(&out).expect("serializable")),
    }
    ensure_valid(&inst)?;
    if let Some(r) = solution_report.filter(|r| !r.feasible) {
        let tags: Vec<&str> = r.violations.iter().map(|v| v.tag()).collect();
        return Err(CliError::Infeasible(tags.join(", ")));
    }
    Ok(())
}

pub fn solve_command(args: &SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    ensure_valid(&inst)?;
    let algorithm: Algorithm = args.algorithm.into();
    let seed = args.seed.unwrap_or_else(rand::random);
    let cfg = checked_config(&args.solver, algorithm, seed)?;
    let out = args.out.clone().unwrap_or_else(|| {
        let stem = args.instance.file_stem().map_or_else(|| inst.name().to_string(), |s| s.to_string_lossy().into());
        PathBuf::from(format!("{stem}.{}.{seed}.json", algorithm.as_str()))
    });
    header(
        "solve",
        &[
            ("instance", inst.name().to_string()),
            ("algorithm", algorithm.label().to_string()),
            ("seed", seed.to_string()),
            ("population", cfg.population_size.to_string()),
        ],
    );
    let result = solve(&inst, &cfg).map_err(|e| match e {
        SolveError::Construction(c) => CliError::Construction(c.to_string()),
        SolveError::Config(c) => CliError::Usage(c.to_string()),
        SolveError::NoCustomers => CliError::InvalidInstance { name: inst.name().to_string(), checks: e.to_string() },
    })?;
    let report = check_feasible(&result.best_solution, &inst);
    let history = args.history.then(|| match args.history_points {
        Some(p) => result.downsampled_history(p),
        None => result.cost_history.clone(),
    });
    let file = SolutionFile {
        instance: inst.name().to_string(),
        algorithm,
        seed,
        config: cfg,
        encoding: result.best_solution.encode(),
        routes: result.best_solution.routes().to_vec(),
        cost: result.best_cost,
        vehicles: result.best_solution.route_count(),
        evaluations: result.evaluations_total,
        convergence_evaluation: result.convergence_evaluation,
        generations: result.generations,
        feasible: report.feasible,
        cost_history: history,
    };
    write_json(&out, &file)?;
    write_json(
        &timing_path(&out),
        &SolveTiming { wall_time_s: result.wall_time_s, convergence_time_s: result.convergence_time_s },
    )?;
    println!(
        "{} {} {:.2} {} {:.3} {:.3} {}",
        inst.name(),
        algorithm.label(),
        result.best_cost,
        file.vehicles,
        result.wall_time_s,
        result.convergence_time_s,
        seed
    );
    if !report.feasible {
        let tags: Vec<&str> = report.violations.iter().map(|v| v.tag()).collect();
        return Err(CliError::Infeasible(tags.join(", ")));
    }
    Ok(())
}

/// `<out>.timing.json` next to a solution file.
pub fn timing_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".timing.json");
    out.with_file_name(name)
}

fn load_suite(dir: &Path, only: &[String]) -> Result<Vec<Instance>, CliError> {
    let path = dir.join(MANIFEST);
    let manifest: Manifest =
        serde_json::from_str(&read_text(&path)?).map_err(|e| CliError::bad_input(&path, e))?;
    for name in only {
        if !manifest.instances.iter().any(|e| &e.name == name) {
            return Err(CliError::Usage(format!("{name} is not in {}", path.display())));
        }
    }
    let mut suite = Vec::new();
    for entry in manifest.instances.iter().filter(|e| only.is_empty() || only.contains(&e.name)) {
        let inst = load_instance(&dir.join(&entry.file))?;
        if inst.name() != entry.name {
            return Err(CliError::Mismatch(format!("{} holds {}, manifest says {}", entry.file, inst.name(), entry.name)));
        }
        ensure_valid(&inst)?;
        suite.push(inst);
    }
    Ok(suite)
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Serialize)]
struct RunRow<'a> {
    instance: &'a str,
    algorithm: &'a str,
    run: usize,
    seed: u64,
    cost: Option<f64>,
    vehicles: Option<usize>,
    evaluations: Option<u64>,
    convergence_evaluation: Option<u64>,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct RunTimingRow<'a> {
    instance: &'a str,
    algorithm: &'a str,
    run: usize,
    seed: u64,
    time_s: Option<f64>,
    convergence_s: Option<f64>,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::bad_input(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::bad_input(path, e))?;
    write_text(path, &String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn experiment(args: &ExperimentArgs) -> Result<(), CliError> {
    let suite = if args.sweep && args.only.is_empty() {
        let all = load_suite(&args.suite, &[])?;
        all.into_iter().filter(|i| SWEEP_INSTANCES.contains(&i.name())).collect()
    } else {
        load_suite(&args.suite, &args.only)?
    };
    if suite.is_empty() {
        return Err(CliError::Usage("no instances selected".into()));
    }
    let seed = args.seed.unwrap_or_else(rand::random);
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    if args.sweep {
        return sweep(args, &suite, seed, jobs);
    }
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for a in &args.algorithms {
        let a: Algorithm = (*a).into();
        if !algorithms.contains(&a) {
            algorithms.push(a);
        }
    }
    let solver = checked_config(&args.solver, Algorithm::Dfa, 0)?;
    header(
        "experiment",
        &[
            ("suite", args.suite.display().to_string()),
            ("seed", seed.to_string()),
            ("runs", args.runs.to_string()),
            ("jobs", jobs.to_string()),
            ("algorithms", algorithms.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(",")),
        ],
    );
    let cfg = ExperimentConfig { algorithms, runs: args.runs, base_seed: seed, jobs, solver, alpha: 0.05 };
    let report = run_experiment(&suite, &cfg);
    write_experiment(&args.out, &report)?;
    print!("{}", render_results(&report, Some(&report.timing)));
    println!();
    print!("{}", render_best_found(&report));
    if let Some(tests) = &report.rank_tests {
        println!();
        print!("{}", render_rank_tests(tests));
    }
    for f in &report.failures {
        warn!("{} {} run {}: {}", f.instance, f.algorithm.label(), f.run, f.error);
    }
    if report.all_failed() {
        return Err(CliError::AllRunsFailed);
    }
    Ok(())
}

fn write_experiment(out: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    write_json(&out.join("report.json"), report)?;
    write_csv(
        &out.join("runs.csv"),
        report.runs.iter().map(|r| RunRow {
            instance: &r.instance,
            algorithm: r.algorithm.as_str(),
            run: r.run,
            seed: r.seed,
            cost: r.cost,
            vehicles: r.vehicles,
            evaluations: r.evaluations,
            convergence_evaluation: r.convergence_evaluation,
            error: r.error.as_deref(),
        }),
    )?;
    write_csv(
        &out.join("runs_timing.csv"),
        report.runs.iter().map(|r| RunTimingRow {
            instance: &r.instance,
            algorithm: r.algorithm.as_str(),
            run: r.run,
            seed: r.seed,
            time_s: r.time_s,
            convergence_s: r.convergence_s,
        }),
    )?;
    write_json(&out.join("timing.json"), &report.timing)?;
    let mut tables = render_results(report, None);
    tables.push('\n');
    tables.push_str(&render_best_found(report));
    if let Some(tests) = &report.rank_tests {
        tables.push('\n');
        tables.push_str(&render_rank_tests(tests));
    }
    write_text(&out.join("tables.txt"), &tables)
}

fn sweep(args: &ExperimentArgs, suite: &[Instance], seed: u64, jobs: usize) -> Result<(), CliError> {
    let solver = checked_config(&args.solver, Algorithm::Dfa, 0)?;
    if args.sizes.contains(&0) {
        return Err(CliError::Usage("population sizes must be at least 1".into()));
    }
    header(
        "experiment",
        &[
            ("suite", args.suite.display().to_string()),
            ("sweep", args.sizes.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")),
            ("seed", seed.to_string()),
            ("runs", args.runs.to_string()),
            ("jobs", jobs.to_string()),
        ],
    );
    let cfg = SweepConfig { sizes: args.sizes.clone(), runs: args.runs, base_seed: seed, jobs, solver };
    let report = population_sweep(suite, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    write_json(&args.out.join("sweep.json"), &report)?;
    write_json(
        &args.out.join("sweep_timing.json"),
        &serde_json::json!({ "instances": report.instances, "sizes": report.sizes, "mean_time_s": report.mean_times }),
    )?;
    write_text(&args.out.join("sweep.txt"), &render_sweep(&report, false))?;
    print!("{}", render_sweep(&report, true));
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsOutput {
    pub tests: RankTests,
    pub reference_ranks: Option<Vec<f64>>,
    pub discrepancies: Vec<NamedDiscrepancy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDiscrepancy {
    pub algorithm: String,
    pub recomputed: f64,
    pub reference: f64,
}

/// Header `instance,<name>,...`, one row of means per instance.
pub fn read_means(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::bad_input(path, e))?;
    let headers = reader.headers().map_err(|e| CliError::bad_input(path, e))?.clone();
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::bad_input(path, e))?;
        let row = record
            .iter()
            .skip(1)
            .map(|cell| cell.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::bad_input(path, format!("row {}: {e}", k + 1)))?;
        rows.push(row);
    }
    Ok((names, rows))
}

pub fn stats(args: &StatsArgs) -> Result<(), CliError> {
    let usage = |e: rvrp_core::stats::StatsError| CliError::Usage(e.to_string());
    let tests = if let Some(path) = &args.means {
        let (names, rows) = read_means(path)?;
        RankTests::from_means(&names, &rows, args.control.as_deref(), args.alpha).map_err(usage)?
    } else if !args.ranks.is_empty() {
        let names = if args.names.is_empty() {
            (1..=args.ranks.len()).map(|k| format!("A{k}")).collect()
        } else {
            args.names.clone()
        };
        let instances = args.instances.unwrap_or(0);
        RankTests::from_ranks(&names, &args.ranks, instances, args.control.as_deref(), args.alpha).map_err(usage)?
    } else {
        return Err(CliError::Usage("give --means or --ranks".into()));
    };
    if let Some(c) = &args.control {
        if !tests.control.eq_ignore_ascii_case(c) {
            return Err(CliError::Usage(format!("unknown control {c}")));
        }
    }
    let discrepancies: Vec<NamedDiscrepancy> = if args.reference_ranks.is_empty() {
        Vec::new()
    } else {
        if args.reference_ranks.len() != tests.average_ranks.len() {
            return Err(CliError::Usage(format!(
                "{} reference ranks for {} algorithms",
                args.reference_ranks.len(),
                tests.average_ranks.len()
            )));
        }
        rank_discrepancies(&tests.average_ranks, &args.reference_ranks, RANK_TOLERANCE)
            .into_iter()
            .map(|RankDiscrepancy { index, recomputed, reference }| NamedDiscrepancy {
                algorithm: tests.algorithms[index].clone(),
                recomputed,
                reference,
            })
            .collect()
    };
    print!("{}", render_rank_tests(&tests));
    for d in &discrepancies {
        println!("warning: {} average rank recomputed {:.4}, reference {:.4}", d.algorithm, d.recomputed, d.reference);
    }
    if let Some(out) = &args.out {
        let reference_ranks = (!args.reference_ranks.is_empty()).then(|| args.reference_ranks.clone());
        write_json(out, &StatsOutput { tests, reference_ranks, discrepancies })?;
    }
    Ok(())
}

pub fn export_geojson(args: &ExportArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.instance)?;
    let sol = load_solution(&args.solution, &inst)?;
    if let Some(id) = sol.visits().find(|&id| !inst.is_customer(id)) {
        return Err(CliError::Mismatch(format!("unknown customer id {id}")));
    }
    let value = feature_collection(&inst, &sol)?;
    write_json(&args.out, &value)?;
    println!("{}", args.out.display());
    Ok(())
}
