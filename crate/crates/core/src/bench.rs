//! GA-versus-baseline experiments on synthetic builds, plus an exhaustive
//! oracle for tiny instances.
//!
//! The baseline is the build's own job order (repaired so it is
//! deadlock-free) on every machine the build allows.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_ms, EstimatorConfig, RunHistory};
use crate::ga::fitness::{score, FitnessValue, FitnessWeights};
use crate::ga::{evolve, repair_priority_list, AllocationMode, EvolveOutcome, GaConfig};
use crate::io::{generate_synthetic_build, improvement_pct, BenchmarkRow, SyntheticParams};
use crate::model::{Build, Instance, MachineAllocation};
use crate::simulator::{simulate, ScheduleResult};
use crate::time::{ms_to_secs, Millis};

pub const BRUTE_FORCE_MAX_JOBS: usize = 8;
pub const BRUTE_FORCE_MAX_ALLOCATIONS: usize = 10_000;

/// Simulates the build's input order, repaired, on `alloc`.
pub fn baseline_evaluate(inst: &Instance, run_times: &[Millis], alloc: &MachineAllocation) -> Result<ScheduleResult> {
    let order = repair_priority_list(inst, &inst.original_order())?;
    simulate(inst, &order, alloc, run_times)?
        .into_schedule()
        .ok_or_else(|| Error::Internal("repaired baseline deadlocked".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOptimum {
    pub fitness: FitnessValue,
    pub priority: Vec<usize>,
    pub allocation: MachineAllocation,
    pub makespan: Millis,
    /// Maxima over every (order, allocation) candidate.
    pub max_run_time_s: f64,
    pub max_machines: f64,
    pub orders_enumerated: usize,
}

/// Exhaustive search over every topological order and every allocation.
pub fn brute_force_optimum(
    inst: &Instance,
    run_times: &[Millis],
    weights: &FitnessWeights,
) -> Result<BruteForceOptimum> {
    weights.check()?;
    let n = inst.n_jobs();
    if n > BRUTE_FORCE_MAX_JOBS {
        return Err(Error::TooLarge(format!("{n} jobs (limit {BRUTE_FORCE_MAX_JOBS})")));
    }
    let choices: u128 = inst
        .machine_types()
        .iter()
        .map(|t| t.max_count as u128)
        .product();
    if choices > BRUTE_FORCE_MAX_ALLOCATIONS as u128 {
        return Err(Error::TooLarge(format!(
            "{choices} allocations (limit {BRUTE_FORCE_MAX_ALLOCATIONS})"
        )));
    }
    if !inst.is_acyclic() {
        return Err(Error::contract("brute force requires an acyclic build"));
    }
    let orders = topological_orders(inst);
    let allocations = MachineAllocation::enumerate(inst.machine_types());

    // Best order (first found) and its makespan for each allocation.
    let mut per_alloc = Vec::with_capacity(allocations.len());
    let mut max_rt: Millis = 0;
    for alloc in &allocations {
        let mut best: Option<(Millis, usize)> = None;
        for (k, order) in orders.iter().enumerate() {
            let m = simulate(inst, order, alloc, run_times)?
                .into_schedule()
                .ok_or_else(|| Error::Internal("topological order deadlocked".into()))?
                .makespan;
            max_rt = max_rt.max(m);
            if best.is_none_or(|(b, _)| m < b) {
                best = Some((m, k));
            }
        }
        per_alloc.push(best.expect("at least one order"));
    }
    let max_mc = allocations.iter().map(|a| a.total()).max().unwrap_or(0) as f64;
    let max_rt_s = ms_to_secs(max_rt);

    let mut winner: Option<(FitnessValue, usize)> = None;
    for (i, alloc) in allocations.iter().enumerate() {
        let f = score(ms_to_secs(per_alloc[i].0), alloc.total() as f64, max_rt_s, max_mc, weights);
        if winner.is_none_or(|(w, _)| f.total < w.total) {
            winner = Some((f, i));
        }
    }
    let (fitness, i) = winner.expect("at least one allocation");
    Ok(BruteForceOptimum {
        fitness,
        priority: orders[per_alloc[i].1].clone(),
        allocation: allocations[i].clone(),
        makespan: per_alloc[i].0,
        max_run_time_s: max_rt_s,
        max_machines: max_mc,
        orders_enumerated: orders.len(),
    })
}

/// Every topological order of the instance, by backtracking.
pub fn topological_orders(inst: &Instance) -> Vec<Vec<usize>> {
    fn go(inst: &Instance, waiting: &mut [usize], used: &mut [bool], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let n = used.len();
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for j in 0..n {
            if used[j] || waiting[j] > 0 {
                continue;
            }
            used[j] = true;
            cur.push(j);
            for &d in inst.dependents(j) {
                waiting[d] -= 1;
            }
            go(inst, waiting, used, cur, out);
            for &d in inst.dependents(j) {
                waiting[d] += 1;
            }
            cur.pop();
            used[j] = false;
        }
    }
    let n = inst.n_jobs();
    let mut waiting: Vec<usize> = (0..n).map(|j| inst.deps(j).len()).collect();
    let mut out = Vec::new();
    go(inst, &mut waiting, &mut vec![false; n], &mut Vec::with_capacity(n), &mut out);
    out
}

/// One build prepared for benchmarking.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub build_id: String,
    pub instance: Instance,
    pub run_times: Vec<Millis>,
}

impl BenchCase {
    pub fn from_build(
        build_id: impl Into<String>,
        build: Build,
        history: &RunHistory,
        estimator: &EstimatorConfig,
    ) -> Result<Self> {
        let run_times = estimate_ms(&build, history, estimator)?;
        Ok(BenchCase {
            build_id: build_id.into(),
            instance: Instance::validated(build)?,
            run_times,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchSettings {
    /// `allocation` is overridden per build when `pin_baseline` is set.
    pub ga: GaConfig,
    pub weights: FitnessWeights,
    /// Evolve priorities only, on the baseline allocation.
    pub pin_baseline: bool,
}

/// Baseline and GA result for one build and seed.
pub fn run_case(case: &BenchCase, settings: &BenchSettings, seed: u64) -> Result<(BenchmarkRow, EvolveOutcome)> {
    let inst = &case.instance;
    let base_alloc = MachineAllocation::max_of(inst.machine_types());
    let baseline = baseline_evaluate(inst, &case.run_times, &base_alloc)?;
    let mut config = settings.ga.clone();
    config.rng_seed = seed;
    if settings.pin_baseline {
        config.allocation = AllocationMode::Pinned(base_alloc.clone());
    }
    let started = Instant::now();
    let outcome = evolve(inst, &case.run_times, &settings.weights, &config)?;
    let search = started.elapsed().as_secs_f64();
    let row = BenchmarkRow::new(
        case.build_id.clone(),
        ms_to_secs(baseline.makespan),
        ms_to_secs(outcome.schedule.makespan),
        base_alloc.total(),
        outcome.allocation.total(),
        search,
        seed,
    );
    Ok((row, outcome))
}

/// GA against baseline on every build of a suite. Rows keep suite order.
pub fn run_test_case_one(cases: &[BenchCase], settings: &BenchSettings) -> Result<Vec<BenchmarkRow>> {
    cases
        .par_iter()
        .map(|c| run_case(c, settings, settings.ga.rng_seed).map(|(row, _)| row))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub min_makespan_s: f64,
    pub max_makespan_s: f64,
    /// `(max - min) / min`.
    pub relative_spread: f64,
}

impl Dispersion {
    pub fn of(rows: &[BenchmarkRow]) -> Option<Self> {
        let min = rows.iter().map(|r| r.ga_makespan_s).reduce(f64::min)?;
        let max = rows.iter().map(|r| r.ga_makespan_s).reduce(f64::max)?;
        Some(Dispersion {
            min_makespan_s: min,
            max_makespan_s: max,
            relative_spread: if min > 0.0 { (max - min) / min } else { 0.0 },
        })
    }
}

#[derive(Debug, Clone)]
pub struct TestCaseTwo {
    pub rows: Vec<BenchmarkRow>,
    pub dispersion: Dispersion,
}

/// The same build evolved once per seed.
pub fn run_test_case_two(case: &BenchCase, seeds: &[u64], settings: &BenchSettings) -> Result<TestCaseTwo> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let rows: Vec<BenchmarkRow> = seeds
        .par_iter()
        .map(|&s| run_case(case, settings, s).map(|(row, _)| row))
        .collect::<Result<_>>()?;
    let dispersion = Dispersion::of(&rows).expect("non-empty rows");
    Ok(TestCaseTwo { rows, dispersion })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedRow {
    pub build_id: String,
    pub baseline_makespan_s: f64,
    pub ga_makespan_s: f64,
    pub search_wall_time_s: f64,
    /// `ga_makespan_s + search_wall_time_s`.
    pub combined_s: f64,
    pub combined_improvement_pct: f64,
}

impl CombinedRow {
    pub fn from_row(row: &BenchmarkRow) -> Self {
        let combined = row.ga_makespan_s + row.search_wall_time_s;
        CombinedRow {
            build_id: row.build_id.clone(),
            baseline_makespan_s: row.baseline_makespan_s,
            ga_makespan_s: row.ga_makespan_s,
            search_wall_time_s: row.search_wall_time_s,
            combined_s: combined,
            combined_improvement_pct: improvement_pct(row.baseline_makespan_s, combined),
        }
    }

    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs()).max(1.0);
        close(self.combined_s, self.ga_makespan_s + self.search_wall_time_s)
            && close(
                self.combined_improvement_pct,
                improvement_pct(self.baseline_makespan_s, self.combined_s),
            )
    }
}

pub const UNITS_NOTE: &str = "makespans are simulated build seconds; search_wall_time_s is \
host wall-clock time spent in the GA; combined_s adds the two";

#[derive(Debug, Clone)]
pub struct TestCaseThree {
    pub rows: Vec<BenchmarkRow>,
    pub combined: Vec<CombinedRow>,
    pub units_note: &'static str,
}

/// Like test case one, but also charges the search time to the GA.
pub fn run_test_case_three(cases: &[BenchCase], settings: &BenchSettings) -> Result<TestCaseThree> {
    let rows = run_test_case_one(cases, settings)?;
    let combined = rows.iter().map(CombinedRow::from_row).collect();
    Ok(TestCaseThree {
        rows,
        combined,
        units_note: UNITS_NOTE,
    })
}

pub fn combined_csv(rows: &[CombinedRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "build_id",
        "baseline_makespan_s",
        "ga_makespan_s",
        "search_wall_time_s",
        "combined_s",
        "combined_improvement_pct",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

/// Parameters of a synthetic benchmark suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub builds: usize,
    /// Inclusive job-count range.
    pub jobs: (usize, usize),
    /// Everything except `n_jobs` and `seed`, which vary per build.
    pub template: SyntheticParams,
    pub seed: u64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            builds: 100,
            jobs: (30, 80),
            template: SyntheticParams {
                edge_prob: 0.08,
                n_types: 3,
                max_counts: vec![2, 2, 2],
                runtime_range: (30, 600),
                ..Default::default()
            },
            seed: 2024,
        }
    }
}

/// Build `k` of the suite uses seed `seed * 1_000_003 + k`.
pub fn synthetic_suite(params: &SuiteParams) -> Result<Vec<BenchCase>> {
    let (lo, hi) = params.jobs;
    if lo == 0 || lo > hi {
        return Err(Error::contract("job range must satisfy 0 < lo <= hi"));
    }
    (0..params.builds)
        .map(|k| {
            let seed = params.seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
            let span = (hi - lo + 1) as u64;
            let n_jobs = lo + (splitmix(seed) % span) as usize;
            let doc = generate_synthetic_build(&SyntheticParams {
                n_jobs,
                seed,
                ..params.template.clone()
            })?;
            BenchCase::from_build(
                format!("build{k:03}"),
                doc.to_build(),
                &RunHistory::new(),
                &EstimatorConfig::default(),
            )
        })
        .collect()
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
