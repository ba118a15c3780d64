//! File formats: JSON build specs, histories and schedule reports; CSV traces
//! and benchmark rows; seeded synthetic builds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::RunHistory;
use crate::ga::{EvolutionTrace, FitnessValue, FitnessWeights};
use crate::model::{validate_build, Build, Instance, Job, MachineAllocation, MachineType};
use crate::simulator::{verify_schedule, Assignment, ScheduleResult};
use crate::time::{ms_to_secs, secs_to_ms, Millis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobDoc {
    pub name: String,
    #[serde(default)]
    pub deps: Vec<String>,
    pub machine_type: String,
    #[serde(default)]
    pub run_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineTypeDoc {
    pub name: String,
    pub max_count: u32,
}

/// `{"jobs": [...], "machine_types": [...]}`; job order is the original
/// priority list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildSpecDocument {
    pub jobs: Vec<JobDoc>,
    pub machine_types: Vec<MachineTypeDoc>,
}

impl BuildSpecDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("build spec (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn to_build(&self) -> Build {
        Build {
            jobs: self
                .jobs
                .iter()
                .map(|j| Job {
                    name: j.name.clone(),
                    deps: j.deps.clone(),
                    machine_type: j.machine_type.clone(),
                    declared_run_time: j.run_time,
                })
                .collect(),
            machine_types: self
                .machine_types
                .iter()
                .map(|t| MachineType::new(t.name.clone(), t.max_count))
                .collect(),
        }
    }

    pub fn from_build(build: &Build) -> Self {
        BuildSpecDocument {
            jobs: build
                .jobs
                .iter()
                .map(|j| JobDoc {
                    name: j.name.clone(),
                    deps: j.deps.clone(),
                    machine_type: j.machine_type.clone(),
                    run_time: j.declared_run_time,
                })
                .collect(),
            machine_types: build
                .machine_types
                .iter()
                .map(|t| MachineTypeDoc {
                    name: t.name.clone(),
                    max_count: t.max_count,
                })
                .collect(),
        }
    }
}

/// Parses and validates a build spec.
pub fn load_build_spec(text: &str) -> Result<Build> {
    let build = BuildSpecDocument::parse(text)?.to_build();
    validate_build(&build).into_result()?;
    Ok(build)
}

pub fn load_build_spec_file(path: &Path) -> Result<Build> {
    load_build_spec(&read(path)?)
}

pub fn save_build_spec(build: &Build) -> String {
    BuildSpecDocument::from_build(build).to_json()
}

/// `{"job": [seconds, ...], ...}`. A blank document is an empty history.
pub fn load_history(text: &str) -> Result<RunHistory> {
    if text.trim().is_empty() {
        return Ok(RunHistory::new());
    }
    let map: BTreeMap<String, Vec<f64>> = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: format!("history (line {}, column {})", e.line(), e.column()),
        message: e.to_string(),
    })?;
    RunHistory::from_map(map)
}

pub fn save_history(history: &RunHistory) -> String {
    serde_json::to_string_pretty(history.samples()).expect("history serializes") + "\n"
}

/// One name per line; blank lines and `#` comments are ignored.
pub fn load_priority_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub job: String,
    pub machine_type: String,
    pub machine_index: u32,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub alpha: f64,
    pub beta: f64,
    pub total: f64,
}

impl From<FitnessValue> for FitnessRecord {
    fn from(f: FitnessValue) -> Self {
        FitnessRecord {
            alpha: f.alpha,
            beta: f.beta,
            total: f.total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub w_rt: f64,
    pub w_mc: f64,
    pub scaling: crate::ga::Scaling,
}

impl ConfigEcho {
    pub fn new(seed: u64, weights: &FitnessWeights) -> Self {
        ConfigEcho {
            seed,
            w_rt: weights.w_rt,
            w_mc: weights.w_mc,
            scaling: weights.scaling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    /// In start order (ties by job order in the build).
    pub assignments: Vec<AssignmentRecord>,
    pub makespan_s: f64,
    pub allocation: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<FitnessRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
}

impl ScheduleReport {
    pub fn new(
        inst: &Instance,
        schedule: &ScheduleResult,
        fitness: Option<FitnessValue>,
        config: Option<ConfigEcho>,
    ) -> Self {
        let types = inst.machine_types();
        let mut order: Vec<&Assignment> = schedule.assignments.iter().collect();
        order.sort_by_key(|a| (a.start, a.job));
        ScheduleReport {
            assignments: order
                .into_iter()
                .map(|a| AssignmentRecord {
                    job: inst.job(a.job).name.clone(),
                    machine_type: types[a.machine_type].name.clone(),
                    machine_index: a.machine_index,
                    start_s: ms_to_secs(a.start),
                    end_s: ms_to_secs(a.end),
                })
                .collect(),
            makespan_s: ms_to_secs(schedule.makespan),
            allocation: schedule.allocation.named(types),
            fitness: fitness.map(Into::into),
            config,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("schedule report (line {}, column {})", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Rebuilds the index-based schedule against `inst`.
    pub fn to_schedule(&self, inst: &Instance) -> Result<ScheduleResult> {
        let types = inst.machine_types();
        let allocation = MachineAllocation::from_named(&self.allocation, types)?;
        let mut slots: Vec<Option<Assignment>> = vec![None; inst.n_jobs()];
        for rec in &self.assignments {
            let job = inst
                .job_index(&rec.job)
                .ok_or_else(|| Error::contract(format!("report names unknown job `{}`", rec.job)))?;
            let machine_type = types
                .iter()
                .position(|t| t.name == rec.machine_type)
                .ok_or_else(|| {
                    Error::contract(format!("report names unknown machine type `{}`", rec.machine_type))
                })?;
            if slots[job].is_some() {
                return Err(Error::contract(format!("job `{}` assigned twice", rec.job)));
            }
            slots[job] = Some(Assignment {
                job,
                machine_type,
                machine_index: rec.machine_index,
                start: secs_to_ms(rec.start_s),
                end: secs_to_ms(rec.end_s),
            });
        }
        let assignments = slots
            .into_iter()
            .enumerate()
            .map(|(j, a)| a.ok_or_else(|| Error::contract(format!("job `{}` missing from report", inst.job(j).name))))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScheduleResult {
            assignments,
            makespan: secs_to_ms(self.makespan_s),
            allocation,
        })
    }

    /// Re-checks every schedule invariant against the build and run times.
    pub fn check(&self, inst: &Instance, run_times: &[Millis]) -> Result<()> {
        let sched = self.to_schedule(inst)?;
        verify_schedule(inst, &sched, run_times).map_err(Error::Contract)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub build_id: String,
    pub baseline_makespan_s: f64,
    pub ga_makespan_s: f64,
    pub ga_machines: u32,
    pub baseline_machines: u32,
    pub improvement_pct: f64,
    pub search_wall_time_s: f64,
    pub seed: u64,
}

pub const BENCHMARK_HEADER: [&str; 8] = [
    "build_id",
    "baseline_makespan_s",
    "ga_makespan_s",
    "ga_machines",
    "baseline_machines",
    "improvement_pct",
    "search_wall_time_s",
    "seed",
];

pub const TRACE_HEADER: [&str; 5] = [
    "generation",
    "best_fitness",
    "best_makespan",
    "best_machines",
    "elapsed_s",
];

pub fn improvement_pct(baseline: f64, ga: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        100.0 * (baseline - ga) / baseline
    }
}

impl BenchmarkRow {
    pub fn new(
        build_id: impl Into<String>,
        baseline_makespan_s: f64,
        ga_makespan_s: f64,
        baseline_machines: u32,
        ga_machines: u32,
        search_wall_time_s: f64,
        seed: u64,
    ) -> Self {
        BenchmarkRow {
            build_id: build_id.into(),
            baseline_makespan_s,
            ga_makespan_s,
            ga_machines,
            baseline_machines,
            improvement_pct: improvement_pct(baseline_makespan_s, ga_makespan_s),
            search_wall_time_s,
            seed,
        }
    }

    /// `improvement_pct` agrees with the two makespans to `rel_tol`.
    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        let expected = improvement_pct(self.baseline_makespan_s, self.ga_makespan_s);
        (self.improvement_pct - expected).abs() <= rel_tol * expected.abs().max(1.0)
    }
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(BENCHMARK_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

pub fn parse_benchmark_csv(data: &[u8]) -> Result<Vec<BenchmarkRow>> {
    let mut r = csv::Reader::from_reader(data);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != BENCHMARK_HEADER {
        return Err(Error::Parse {
            context: "benchmark csv".into(),
            message: format!("unexpected header {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn trace_csv(trace: &EvolutionTrace) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for e in &trace.entries {
        w.write_record([
            e.generation.to_string(),
            e.best_fitness.to_string(),
            e.best_makespan_s.to_string(),
            e.best_machines.to_string(),
            e.elapsed_s.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

pub const SCHEDULE_FILE: &str = "schedule.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const BENCHMARK_FILE: &str = "benchmark.csv";

/// Writes whichever outputs are given into `dir` and returns the paths.
pub fn write_reports(
    dir: &Path,
    report: Option<&ScheduleReport>,
    trace: Option<&EvolutionTrace>,
    rows: Option<&[BenchmarkRow]>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(r) = report {
        written.push(write(&dir.join(SCHEDULE_FILE), r.to_json().as_bytes())?);
    }
    if let Some(t) = trace {
        written.push(write(&dir.join(TRACE_FILE), &trace_csv(t)?)?);
    }
    if let Some(rows) = rows {
        written.push(write(&dir.join(BENCHMARK_FILE), &benchmark_csv(rows)?)?);
    }
    Ok(written)
}

pub fn write(path: &Path, data: &[u8]) -> Result<PathBuf> {
    fs::write(path, data).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n_jobs: usize,
    pub edge_prob: f64,
    pub n_types: usize,
    /// One bound per type; a shorter list repeats its last entry.
    pub max_counts: Vec<u32>,
    /// Whole-second run time range, inclusive.
    pub runtime_range: (u64, u64),
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            n_jobs: 20,
            edge_prob: 0.1,
            n_types: 3,
            max_counts: vec![4],
            runtime_range: (30, 600),
            seed: 0,
        }
    }
}

const TYPE_NAMES: [&str; 3] = ["linux", "windows", "suse"];

/// A random DAG build. Jobs are listed in a random topological order (edges
/// only run from earlier to later entries); names carry no order information.
pub fn generate_synthetic_build(params: &SyntheticParams) -> Result<BuildSpecDocument> {
    let SyntheticParams {
        n_jobs,
        edge_prob,
        n_types,
        ref max_counts,
        runtime_range: (lo, hi),
        seed,
    } = *params;
    if n_jobs == 0 || n_types == 0 || max_counts.is_empty() {
        return Err(Error::contract("synthetic build needs jobs, types and max counts"));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::contract(format!("edge_prob {edge_prob} outside [0, 1]")));
    }
    if lo == 0 || lo > hi {
        return Err(Error::contract("runtime range must satisfy 0 < lo <= hi"));
    }
    if max_counts.contains(&0) {
        return Err(Error::contract("max counts must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let machine_types: Vec<MachineTypeDoc> = (0..n_types)
        .map(|t| MachineTypeDoc {
            name: TYPE_NAMES
                .get(t)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("type{t}")),
            max_count: *max_counts.get(t).unwrap_or(max_counts.last().expect("non-empty")),
        })
        .collect();
    let mut ids: Vec<usize> = (0..n_jobs).collect();
    ids.shuffle(&mut rng);
    let width = n_jobs.to_string().len().max(3);
    let names: Vec<String> = ids.iter().map(|i| format!("job{i:0width$}")).collect();
    let mut jobs = Vec::with_capacity(n_jobs);
    for pos in 0..n_jobs {
        let deps = (0..pos)
            .filter(|_| rng.random::<f64>() < edge_prob)
            .map(|d| names[d].clone())
            .collect();
        let machine_type = machine_types[rng.random_range(0..n_types)].name.clone();
        let run_time = rng.random_range(lo..=hi) as f64;
        jobs.push(JobDoc {
            name: names[pos].clone(),
            deps,
            machine_type,
            run_time: Some(run_time),
        });
    }
    Ok(BuildSpecDocument {
        jobs,
        machine_types,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "jobs": [{"name": "compile", "deps": [], "machine_type": "linux", "run_time": 12.5}],
        "machine_types": [{"name": "linux", "max_count": 2}]
    }"#;

    #[test]
    fn minimal_document() {
        let b = load_build_spec(MINIMAL).unwrap();
        assert_eq!(b.jobs.len(), 1);
        assert_eq!(b.jobs[0].declared_run_time, Some(12.5));
        assert_eq!(b.machine_types[0].max_count, 2);
    }

    #[test]
    fn optional_fields_default() {
        let b = load_build_spec(
            r#"{"jobs":[{"name":"a","machine_type":"l"}],"machine_types":[{"name":"l","max_count":1}]}"#,
        )
        .unwrap();
        assert!(b.jobs[0].deps.is_empty());
        assert_eq!(b.jobs[0].declared_run_time, None);
    }

    #[test]
    fn cycle_is_named() {
        let doc = r#"{"jobs":[
            {"name":"a","deps":["b"],"machine_type":"l","run_time":null},
            {"name":"b","deps":["a"],"machine_type":"l","run_time":null}],
            "machine_types":[{"name":"l","max_count":1}]}"#;
        let err = load_build_spec(doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cycle") && msg.contains('a') && msg.contains('b'), "{msg}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = load_build_spec("{\n \"jobs\": [,]\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = load_build_spec(r#"{"jobs":[],"machine_types":[],"extra":1}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = load_build_spec(
            r#"{"jobs":[],"machine_types":[{"name":"l","max_count":-1}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn histories() {
        let h = load_history(r#"{"A":[10,12]}"#).unwrap();
        assert_eq!(h.get("A").unwrap(), &[10.0, 12.0]);
        assert!(load_history(r#"{"A":[0]}"#).is_err());
        assert!(load_history("").unwrap().is_empty());
        assert!(load_history("{}").unwrap().is_empty());
        assert_eq!(load_history(&save_history(&h)).unwrap(), h);
    }

    #[test]
    fn benchmark_rows() {
        assert_eq!(
            benchmark_csv(&[]).unwrap(),
            b"build_id,baseline_makespan_s,ga_makespan_s,ga_machines,baseline_machines,improvement_pct,search_wall_time_s,seed\n"
        );
        let row = BenchmarkRow::new("b0", 100.0, 80.0, 6, 4, 0.5, 7);
        assert_eq!(row.improvement_pct, 20.0);
        assert!(row.is_consistent(1e-9));
        let data = benchmark_csv(std::slice::from_ref(&row)).unwrap();
        assert_eq!(parse_benchmark_csv(&data).unwrap(), vec![row]);
    }

    #[test]
    fn write_reports_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![BenchmarkRow::new("b", 10.0, 9.0, 2, 1, 0.25, 1)];
        let trace = EvolutionTrace::default();
        let a = write_reports(dir.path(), None, Some(&trace), Some(&rows)).unwrap();
        let first: Vec<Vec<u8>> = a.iter().map(|p| fs::read(p).unwrap()).collect();
        let b = write_reports(dir.path(), None, Some(&trace), Some(&rows)).unwrap();
        let second: Vec<Vec<u8>> = b.iter().map(|p| fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
        assert_eq!(
            String::from_utf8(first[0].clone()).unwrap(),
            "generation,best_fitness,best_makespan,best_machines,elapsed_s\n"
        );
    }

    #[test]
    fn priority_list_text() {
        let l = load_priority_list("# order\nb\n\n  a \n");
        assert_eq!(l, vec!["b", "a"]);
    }

    #[test]
    fn synthetic_examples() {
        let one = generate_synthetic_build(&SyntheticParams {
            n_jobs: 1,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(one.jobs.len(), 1);
        assert!(one.jobs[0].deps.is_empty());

        let flat = generate_synthetic_build(&SyntheticParams {
            n_jobs: 30,
            edge_prob: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert!(flat.jobs.iter().all(|j| j.deps.is_empty()));

        let p = SyntheticParams {
            n_jobs: 40,
            edge_prob: 0.2,
            seed: 77,
            ..Default::default()
        };
        let a = generate_synthetic_build(&p).unwrap();
        assert_eq!(a, generate_synthetic_build(&p).unwrap());
        assert_eq!(a.to_json(), generate_synthetic_build(&p).unwrap().to_json());
        assert!(validate_build(&a.to_build()).is_ok());
        assert!(a.jobs.iter().any(|j| !j.deps.is_empty()));
        assert!(generate_synthetic_build(&SyntheticParams {
            edge_prob: 2.0,
            ..Default::default()
        })
        .is_err());
    }
}
