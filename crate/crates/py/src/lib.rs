//! Python bindings: build specs, estimation, simulation, repair and the GA.

use std::collections::{BTreeMap, HashMap};

use gasched_core::estimator::{estimate_all, EstimatorConfig, RunHistory};
use gasched_core::ga::{self, CrossoverKind, FitnessWeights, GaConfig, InitKind, PopulationMetrics, Scaling};
use gasched_core::io::{generate_synthetic_build, BuildSpecDocument, ScheduleReport, SyntheticParams};
use gasched_core::model::{validate_build, Instance, MachineAllocation};
use gasched_core::simulator::{simulate_named, SimVerdict};
use gasched_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(gasched, InvalidInputError, PyValueError, "Malformed or structurally invalid input.");
create_exception!(gasched, ContractError, PyValueError, "An argument broke an operation's precondition.");

fn to_py(e: Error) -> PyErr {
    if e.is_input_error() {
        InvalidInputError::new_err(e.to_string())
    } else {
        ContractError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// A validated, acyclic build.
#[pyclass(frozen, module = "gasched")]
pub struct Build {
    inst: Instance,
}

#[pymethods]
impl Build {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let build = gasched_core::io::load_build_spec(text).map_err(to_py)?;
        Ok(Build {
            inst: Instance::validated(build).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let build = gasched_core::io::load_build_spec_file(&path).map_err(to_py)?;
        Ok(Build {
            inst: Instance::validated(build).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n_jobs, edge_prob=0.08, n_types=3, max_counts=vec![2], runtime_range=(30, 600), seed=0))]
    fn synthetic(
        n_jobs: usize,
        edge_prob: f64,
        n_types: usize,
        max_counts: Vec<u32>,
        runtime_range: (u64, u64),
        seed: u64,
    ) -> PyResult<Self> {
        let doc = generate_synthetic_build(&SyntheticParams {
            n_jobs,
            edge_prob,
            n_types,
            max_counts,
            runtime_range,
            seed,
        })
        .map_err(to_py)?;
        Ok(Build {
            inst: Instance::validated(doc.to_build()).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        BuildSpecDocument::from_build(self.inst.build()).to_json()
    }

    #[getter]
    fn job_names(&self) -> Vec<String> {
        self.inst.names_of(&self.inst.original_order())
    }

    #[getter]
    fn machine_types(&self) -> Vec<(String, u32)> {
        self.inst
            .machine_types()
            .iter()
            .map(|t| (t.name.clone(), t.max_count))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inst.n_jobs()
    }

    fn __repr__(&self) -> String {
        format!(
            "Build(jobs={}, machine_types={})",
            self.inst.n_jobs(),
            self.inst.n_types()
        )
    }
}

/// Problems found in a build spec document; empty when it is valid.
#[pyfunction]
fn validate(text: &str) -> PyResult<Vec<String>> {
    let build = BuildSpecDocument::parse(text).map_err(to_py)?.to_build();
    Ok(validate_build(&build).issues.iter().map(|i| i.to_string()).collect())
}

fn estimator(quantile: f64, seed: u64) -> EstimatorConfig {
    EstimatorConfig {
        quantile_q: quantile,
        rng_seed: seed,
        ..Default::default()
    }
}

fn history_of(history: Option<BTreeMap<String, Vec<f64>>>) -> PyResult<RunHistory> {
    RunHistory::from_map(history.unwrap_or_default()).map_err(to_py)
}

/// Run-time estimate in seconds for every job.
#[pyfunction]
#[pyo3(signature = (build, history=None, quantile=0.75, seed=0))]
fn estimate(
    build: &Build,
    history: Option<BTreeMap<String, Vec<f64>>>,
    quantile: f64,
    seed: u64,
) -> PyResult<BTreeMap<String, f64>> {
    estimate_all(build.inst.build(), &history_of(history)?, &estimator(quantile, seed)).map_err(to_py)
}

/// A simulated schedule.
#[pyclass(frozen, module = "gasched")]
pub struct Schedule {
    report: ScheduleReport,
}

#[pymethods]
impl Schedule {
    #[getter]
    fn makespan(&self) -> f64 {
        self.report.makespan_s
    }

    #[getter]
    fn allocation(&self) -> BTreeMap<String, u32> {
        self.report.allocation.clone()
    }

    /// `(job, machine_type, machine_index, start_s, end_s)` in start order.
    #[getter]
    fn assignments(&self) -> Vec<(String, String, u32, f64, f64)> {
        self.report
            .assignments
            .iter()
            .map(|a| (a.job.clone(), a.machine_type.clone(), a.machine_index, a.start_s, a.end_s))
            .collect()
    }

    fn to_json(&self) -> String {
        self.report.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Schedule(makespan={}, jobs={})", self.report.makespan_s, self.report.assignments.len())
    }
}

fn allocation_of(inst: &Instance, alloc: Option<BTreeMap<String, u32>>) -> PyResult<MachineAllocation> {
    let types = inst.machine_types();
    let mut named = MachineAllocation::max_of(types).named(types);
    for (k, v) in alloc.unwrap_or_default() {
        match named.get_mut(&k) {
            Some(slot) => *slot = v,
            None => return Err(ContractError::new_err(format!("unknown machine type `{k}`"))),
        }
    }
    MachineAllocation::from_named(&named, types).map_err(to_py)
}

/// Simulates `priority` (job names). Missing allocation entries default to
/// the type's maximum; run times default to estimates.
#[pyfunction]
#[pyo3(signature = (build, priority=None, allocation=None, run_times=None))]
fn simulate(
    build: &Build,
    priority: Option<Vec<String>>,
    allocation: Option<BTreeMap<String, u32>>,
    run_times: Option<HashMap<String, f64>>,
) -> PyResult<Schedule> {
    let inst = &build.inst;
    let names = priority.unwrap_or_else(|| inst.names_of(&inst.original_order()));
    let alloc = allocation_of(inst, allocation)?;
    let rt = match run_times {
        Some(r) => r,
        None => gasched_core::estimator::as_hash_map(
            &estimate_all(inst.build(), &RunHistory::new(), &EstimatorConfig::default()).map_err(to_py)?,
        ),
    };
    match simulate_named(inst, &names, &alloc, &rt).map_err(to_py)? {
        SimVerdict::Scheduled(s) => Ok(Schedule {
            report: ScheduleReport::new(inst, &s, None, None),
        }),
        SimVerdict::Deadlock { unscheduled } => Err(ContractError::new_err(format!(
            "deadlock; never started: {}",
            unscheduled.join(", ")
        ))),
    }
}

/// Moves every job that precedes one of its dependencies to just after it.
#[pyfunction]
fn repair(build: &Build, priority: Vec<String>) -> PyResult<Vec<String>> {
    let inst = &build.inst;
    let order = inst.resolve_priority(&priority).map_err(to_py)?;
    let fixed = ga::repair_priority_list(inst, &order).map_err(to_py)?;
    Ok(inst.names_of(&fixed))
}

#[pyfunction]
fn is_deadlock_free(build: &Build, priority: Vec<String>) -> PyResult<bool> {
    let order = build.inst.resolve_priority(&priority).map_err(to_py)?;
    Ok(gasched_core::simulator::is_deadlock_free(&build.inst, &order))
}

/// Weighted fitness totals for a population (lower is better).
#[pyfunction]
#[pyo3(signature = (run_times, machine_counts, w_rt=1.0, w_mc=0.5, scaling="normalized"))]
fn fitness(run_times: Vec<f64>, machine_counts: Vec<f64>, w_rt: f64, w_mc: f64, scaling: &str) -> PyResult<Vec<f64>> {
    let weights = FitnessWeights::new(w_rt, w_mc, parse::<Scaling>(scaling)?).map_err(to_py)?;
    let metrics = PopulationMetrics::new(run_times, machine_counts).map_err(to_py)?;
    Ok(ga::fitness(&metrics, &weights)
        .map_err(to_py)?
        .into_iter()
        .map(|f| f.total)
        .collect())
}

/// Outcome of [`evolve`].
#[pyclass(frozen, module = "gasched")]
pub struct EvolveResult {
    #[pyo3(get)]
    priority: Vec<String>,
    #[pyo3(get)]
    fitness: (f64, f64, f64),
    #[pyo3(get)]
    generations_run: usize,
    /// `(generation, best_fitness, best_makespan_s, best_machines)`.
    #[pyo3(get)]
    trace: Vec<(usize, f64, f64, u32)>,
    #[pyo3(get)]
    baseline_makespan: f64,
    schedule: Py<Schedule>,
}

#[pymethods]
impl EvolveResult {
    #[getter]
    fn schedule(&self, py: Python<'_>) -> Py<Schedule> {
        self.schedule.clone_ref(py)
    }

    #[getter]
    fn makespan(&self) -> f64 {
        self.schedule.get().report.makespan_s
    }

    #[getter]
    fn allocation(&self) -> BTreeMap<String, u32> {
        self.schedule.get().report.allocation.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "EvolveResult(makespan={}, fitness={}, generations_run={})",
            self.makespan(),
            self.fitness.2,
            self.generations_run
        )
    }
}

/// Runs the genetic algorithm. Results depend only on the arguments, not on
/// `workers`.
#[pyfunction]
#[pyo3(signature = (
    build, history=None, *, seed=0, generations=300, population=None, stagnation=60,
    w_rt=1.0, w_mc=0.5, scaling="normalized", crossover="ox", init="repair",
    quantile=0.75, workers=1, pinned=None
))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    build: &Build,
    history: Option<BTreeMap<String, Vec<f64>>>,
    seed: u64,
    generations: usize,
    population: Option<usize>,
    stagnation: usize,
    w_rt: f64,
    w_mc: f64,
    scaling: &str,
    crossover: &str,
    init: &str,
    quantile: f64,
    workers: usize,
    pinned: Option<BTreeMap<String, u32>>,
) -> PyResult<EvolveResult> {
    let inst = &build.inst;
    let weights = FitnessWeights::new(w_rt, w_mc, parse::<Scaling>(scaling)?).map_err(to_py)?;
    let allocation = match pinned {
        Some(p) => ga::AllocationMode::Pinned(allocation_of(inst, Some(p))?),
        None => ga::AllocationMode::Free,
    };
    let config = GaConfig {
        population_size: population,
        max_generations: generations,
        stagnation_limit: stagnation,
        crossover_kind: parse::<CrossoverKind>(crossover)?,
        init_kind: parse::<InitKind>(init)?,
        rng_seed: seed,
        workers,
        allocation,
        ..Default::default()
    };
    let history = history_of(history)?;
    let est = estimator(quantile, seed);
    let (inst, out, baseline) = py
        .detach(|| {
            let (inst, rt, out) = ga::evolve_build(inst.build(), &history, &est, &weights, &config)?;
            let base = gasched_core::bench::baseline_evaluate(
                &inst,
                &rt,
                &MachineAllocation::max_of(inst.machine_types()),
            )?;
            Ok::<_, Error>((inst, out, base))
        })
        .map_err(to_py)?;
    let report = ScheduleReport::new(&inst, &out.schedule, Some(out.fitness), None);
    Ok(EvolveResult {
        priority: inst.names_of(&out.best.priority),
        fitness: (out.fitness.alpha, out.fitness.beta, out.fitness.total),
        generations_run: out.generations_run,
        trace: out
            .trace
            .entries
            .iter()
            .map(|e| (e.generation, e.best_fitness, e.best_makespan_s, e.best_machines))
            .collect(),
        baseline_makespan: gasched_core::time::ms_to_secs(baseline.makespan),
        schedule: Py::new(py, Schedule { report })?,
    })
}

#[pymodule]
pub fn gasched(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Build>()?;
    m.add_class::<Schedule>()?;
    m.add_class::<EvolveResult>()?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(repair, m)?)?;
    m.add_function(wrap_pyfunction!(is_deadlock_free, m)?)?;
    m.add_function(wrap_pyfunction!(fitness, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add("InvalidInputError", m.py().get_type::<InvalidInputError>())?;
    m.add("ContractError", m.py().get_type::<ContractError>())?;
    Ok(())
}
