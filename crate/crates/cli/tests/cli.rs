mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rvrp_core::generator::{synthetic_instance, SyntheticSpec};
use rvrp_core::instance::{instance_to_json, read_instance};
use serde_json::Value;

fn rvrp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvrp")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = rvrp(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Two clusters of three customers, 25 delivery units each, capacity 30.
fn two_route_instance(dir: &Path) -> std::path::PathBuf {
    let spec = SyntheticSpec { clusters: 2, per_cluster: 3, capacity: 30, ..Default::default() };
    let inst = synthetic_instance(&spec, 3).unwrap();
    let path = dir.join("small.json");
    fs::write(&path, instance_to_json(&inst)).unwrap();
    path
}

#[test]
fn generate_writes_suite_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["generate", "--seed", "7", "--out", "bench"]);
    assert!(stdout.starts_with("# rvrp ") && stdout.contains("seed=7"));
    let files = fs::read_dir(dir.path().join("bench")).unwrap().count();
    assert_eq!(files, 16);
    let manifest = json(&dir.path().join("bench/suite-manifest.json"));
    assert_eq!(manifest["base_seed"], 7);
    assert_eq!(manifest["instances"].as_array().unwrap().len(), 15);
    for entry in manifest["instances"].as_array().unwrap() {
        let inst = read_instance(dir.path().join("bench").join(entry["file"].as_str().unwrap())).unwrap();
        assert_eq!(inst.name(), entry["name"].as_str().unwrap());
        assert!(inst.validate().ok);
    }
}

#[test]
fn generate_only_filters() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--seed", "7", "--out", "one", "--only", "Osaba_100_3"]);
    let mut names: Vec<String> =
        fs::read_dir(dir.path().join("one")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["Osaba_100_3.json", "suite-manifest.json"]);

    // a filtered instance equals the same row of the full suite
    ok(dir.path(), &["generate", "--seed", "7", "--out", "all"]);
    let a = fs::read(dir.path().join("one/Osaba_100_3.json")).unwrap();
    let b = fs::read(dir.path().join("all/Osaba_100_3.json")).unwrap();
    assert_eq!(a, b);

    let out = rvrp(dir.path(), &["generate", "--seed", "7", "--only", "Osaba_7"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn generate_without_seed_prints_a_reproducible_one() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["generate", "--out", "a", "--only", "Osaba_50_1_1"]);
    let seed = stdout.split_whitespace().find_map(|w| w.strip_prefix("seed=")).unwrap().to_string();
    ok(dir.path(), &["generate", "--seed", &seed, "--out", "b", "--only", "Osaba_50_1_1"]);
    assert_eq!(
        fs::read(dir.path().join("a/Osaba_50_1_1.json")).unwrap(),
        fs::read(dir.path().join("b/Osaba_50_1_1.json")).unwrap()
    );
}

#[test]
fn solve_then_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--seed", "7", "--out", "bench", "--only", "Osaba_50_2_4"]);
    let stdout = ok(
        dir.path(),
        &["solve", "bench/Osaba_50_2_4.json", "--algorithm", "ea", "--seed", "11", "--out", "s.json", "--history"],
    );
    let summary = stdout.lines().last().unwrap();
    let fields: Vec<&str> = summary.split_whitespace().collect();
    assert_eq!(fields.len(), 7);
    assert_eq!((fields[0], fields[1], fields[6]), ("Osaba_50_2_4", "EA", "11"));

    let sol = json(&dir.path().join("s.json"));
    let routes = sol["routes"].as_array().unwrap();
    assert_eq!(sol["vehicles"].as_u64().unwrap() as usize, routes.len());
    assert_eq!(sol["feasible"], true);
    assert_eq!(fields[3].parse::<usize>().unwrap(), routes.len());
    let zeros = sol["encoding"].as_array().unwrap().iter().filter(|v| v.as_u64() == Some(0)).count();
    assert_eq!(zeros, routes.len() - 1);
    let history = sol["cost_history"].as_array().unwrap();
    assert_eq!(history.last().unwrap()[1], sol["cost"]);
    assert!(dir.path().join("s.timing.json").exists());

    let report = ok(dir.path(), &["validate", "bench/Osaba_50_2_4.json", "--solution", "s.json"]);
    let report: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["solution_report"]["feasible"], true);
    let total = report["solution_report"]["total_cost"].as_f64().unwrap();
    assert!((total - sol["cost"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn solve_is_deterministic_and_default_name_carries_seed() {
    let dir = tempfile::tempdir().unwrap();
    let inst = two_route_instance(dir.path());
    let inst = inst.to_str().unwrap();
    ok(dir.path(), &["solve", inst, "--seed", "5"]);
    let first = fs::read(dir.path().join("small.dfa.5.json")).unwrap();
    ok(dir.path(), &["solve", inst, "--seed", "5"]);
    assert_eq!(first, fs::read(dir.path().join("small.dfa.5.json")).unwrap());
}

#[test]
fn solve_rejects_bad_config_and_invalid_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = two_route_instance(dir.path());
    let out = rvrp(dir.path(), &["solve", inst.to_str().unwrap(), "--seed", "1", "--gamma", "1.5"]);
    assert_eq!(code(&out), 2);

    let mut v = json(&inst);
    v["forbidden"] = serde_json::json!([[0, 1]]);
    fs::write(dir.path().join("bad.json"), v.to_string()).unwrap();
    let out = rvrp(dir.path(), &["solve", "bad.json", "--seed", "1"]);
    assert_eq!(code(&out), 2);
    let out = rvrp(dir.path(), &["validate", "bad.json"]);
    assert_eq!(code(&out), 2);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["instance_report"]["violations"][0]["check"], "forbidden-arc-touches-depot");

    fs::write(dir.path().join("junk.json"), "{ not json").unwrap();
    assert_eq!(code(&rvrp(dir.path(), &["validate", "junk.json"])), 2);
    assert_eq!(code(&rvrp(dir.path(), &["validate", "missing.json"])), 2);
}

#[test]
fn validate_flags_infeasible_solution() {
    let dir = tempfile::tempdir().unwrap();
    let inst = two_route_instance(dir.path());
    // both clusters in one route exceed capacity 30 (deliveries 25 + 25)
    fs::write(dir.path().join("merged.json"), "[[1, 2, 3, 4, 5, 6]]").unwrap();
    let out = rvrp(dir.path(), &["validate", inst.to_str().unwrap(), "--solution", "merged.json"]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let tags: Vec<&str> = report["solution_report"]["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["tag"].as_str().unwrap())
        .collect();
    assert!(tags.contains(&"capacity-exceeded"), "{tags:?}");

    fs::write(dir.path().join("twice.json"), "[[1, 2, 3], [4, 5, 6, 1]]").unwrap();
    let out = rvrp(dir.path(), &["validate", inst.to_str().unwrap(), "--solution", "twice.json"]);
    assert_eq!(code(&out), 1);

    fs::write(dir.path().join("split.json"), "{\"encoding\": [1, 2, 3, 0, 4, 5, 6]}").unwrap();
    ok(dir.path(), &["validate", inst.to_str().unwrap(), "--solution", "split.json"]);
}

#[test]
fn geojson_shape() {
    let dir = tempfile::tempdir().unwrap();
    let inst = two_route_instance(dir.path());
    fs::write(dir.path().join("sol.json"), "[[1, 2, 3], [6, 5, 4]]").unwrap();
    ok(dir.path(), &["export-geojson", inst.to_str().unwrap(), "sol.json", "--out", "out.geojson"]);
    let fc = json(&dir.path().join("out.geojson"));
    assert_eq!(fc["type"], "FeatureCollection");
    let features = fc["features"].as_array().unwrap();
    let points: Vec<&Value> = features.iter().filter(|f| f["geometry"]["type"] == "Point").collect();
    let lines: Vec<&Value> = features.iter().filter(|f| f["geometry"]["type"] == "LineString").collect();
    assert_eq!((points.len(), lines.len()), (7, 2));
    let depot = points.iter().find(|p| p["properties"]["id"] == 0).unwrap();
    assert_eq!(depot["properties"]["is_depot"], true);
    assert_eq!(depot["properties"]["cluster"], 0);
    for l in &lines {
        let coords = l["geometry"]["coordinates"].as_array().unwrap();
        assert_eq!(coords.len(), 3 + 2);
        assert_eq!(coords.first(), coords.last());
        assert!(l["properties"]["max_load"].as_u64().unwrap() <= 30);
    }
    assert_eq!(fc["properties"]["vehicles"], 2);

    fs::write(dir.path().join("alien.json"), "[[1, 2, 3], [4, 5, 6, 99]]").unwrap();
    let out = rvrp(dir.path(), &["export-geojson", inst.to_str().unwrap(), "alien.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn experiment_outputs_and_k1_guard() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--seed", "7", "--out", "bench"]);
    let base = ["experiment", "bench", "--runs", "2", "--seed", "3", "--population", "10", "--only", "Osaba_50_1_1", "--only", "Osaba_50_1_2"];
    let stdout = ok(dir.path(), &[&base[..], &["--out", "r3", "--jobs", "2"]].concat());
    assert!(stdout.contains("Friedman statistic"));
    let runs = fs::read_to_string(dir.path().join("r3/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 3 * 2);
    assert!(runs.starts_with("instance,algorithm,run,seed,cost,vehicles,evaluations,convergence_evaluation,error"));
    let report = json(&dir.path().join("r3/report.json"));
    assert_eq!(report["rank_tests"]["algorithms"].as_array().unwrap().len(), 3);
    assert_eq!(report["best_found"].as_array().unwrap().len(), 2);
    let tables = fs::read_to_string(dir.path().join("r3/tables.txt")).unwrap();
    assert!(tables.contains("Best Result") && !tables.contains("Time"));

    // thread count does not change the reproducible outputs
    ok(dir.path(), &[&base[..], &["--out", "r3b", "--jobs", "1"]].concat());
    for f in ["report.json", "runs.csv", "tables.txt"] {
        assert_eq!(fs::read(dir.path().join("r3").join(f)).unwrap(), fs::read(dir.path().join("r3b").join(f)).unwrap());
    }

    let stdout = ok(dir.path(), &[&base[..], &["--out", "r1", "--algorithms", "dfa"]].concat());
    assert!(!stdout.contains("Friedman"));
    assert!(json(&dir.path().join("r1/report.json"))["rank_tests"].is_null());

    let out = rvrp(dir.path(), &["experiment", "nowhere"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--seed", "7", "--out", "bench"]);
    let stdout = ok(dir.path(), &["experiment", "bench", "--sweep", "--sizes", "5,10", "--runs", "2", "--out", "sw"]);
    assert!(stdout.contains("DFA_5") && stdout.contains("DFA_10"));
    let sweep = json(&dir.path().join("sw/sweep.json"));
    assert_eq!(sweep["instances"].as_array().unwrap().len(), 4);
    let ranks: f64 = sweep["average_ranks"].as_array().unwrap().iter().map(|r| r.as_f64().unwrap()).sum();
    assert!((ranks - 3.0).abs() < 1e-9);
}

#[test]
fn stats_from_ranks_and_means() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(
        dir.path(),
        &["stats", "--ranks", "1.2,2.0667,2.7333", "--instances", "15", "--names", "DFA,ESA,EA", "--out", "s.json"],
    );
    assert!(stdout.contains("17.73"));
    let s = json(&dir.path().join("s.json"));
    assert_eq!(s["tests"]["control"], "DFA");

    fs::write(
        dir.path().join("means.csv"),
        "instance,DFA,EA,ESA\na,1,2,3\nb,1,3,2\nc,2,1,3\nd,1,2,3\n",
    )
    .unwrap();
    let stdout = ok(dir.path(), &["stats", "--means", "means.csv", "--reference-ranks", "1.25,2,2.75", "--control", "ea"]);
    assert!(stdout.contains("control EA"));
    assert!(!stdout.contains("warning"));
    let stdout = ok(dir.path(), &["stats", "--means", "means.csv", "--reference-ranks", "1.0,2,2.75"]);
    assert!(stdout.contains("warning: DFA"));

    assert_eq!(code(&rvrp(dir.path(), &["stats"])), 2);
    assert_eq!(code(&rvrp(dir.path(), &["stats", "--means", "means.csv", "--control", "XYZ"])), 2);
    fs::write(dir.path().join("bad.csv"), "instance,A,B\nx,1,oops\n").unwrap();
    assert_eq!(code(&rvrp(dir.path(), &["stats", "--means", "bad.csv"])), 2);
}
