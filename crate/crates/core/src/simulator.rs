//! Event-driven list scheduling of a priority list on typed machine pools.
//!
//! Each round scans the pending list front to back and starts every job whose
//! dependencies have completed and whose machine type has a free machine
//! (lowest free index first). Time then jumps to the earliest completion;
//! every job finishing at that instant completes before the next scan. If a
//! scan starts nothing and nothing is running while jobs remain, the list is
//! deadlocked.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::model::{is_permutation, Instance, MachineAllocation};
use crate::time::{secs_to_ms, Millis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub job: usize,
    pub machine_type: usize,
    pub machine_index: u32,
    pub start: Millis,
    pub end: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleResult {
    /// Indexed by job.
    pub assignments: Vec<Assignment>,
    pub makespan: Millis,
    pub allocation: MachineAllocation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimVerdict {
    Scheduled(ScheduleResult),
    Deadlock { unscheduled: Vec<String> },
}

impl SimVerdict {
    pub fn schedule(&self) -> Option<&ScheduleResult> {
        match self {
            SimVerdict::Scheduled(s) => Some(s),
            SimVerdict::Deadlock { .. } => None,
        }
    }

    pub fn into_schedule(self) -> Option<ScheduleResult> {
        match self {
            SimVerdict::Scheduled(s) => Some(s),
            SimVerdict::Deadlock { .. } => None,
        }
    }

    pub fn is_deadlock(&self) -> bool {
        matches!(self, SimVerdict::Deadlock { .. })
    }
}

/// Simulates `priority` (job indices) with per-job run times in milliseconds.
pub fn simulate(
    inst: &Instance,
    priority: &[usize],
    alloc: &MachineAllocation,
    run_times: &[Millis],
) -> Result<SimVerdict> {
    let n = inst.n_jobs();
    if !is_permutation(priority, n) {
        return Err(Error::contract(
            "priority list is not a permutation of the build's jobs",
        ));
    }
    alloc.check(inst.machine_types())?;
    if run_times.len() != n {
        return Err(Error::contract(format!(
            "{} run times for {n} jobs",
            run_times.len()
        )));
    }
    if let Some(j) = (0..n).find(|&j| run_times[j] == 0) {
        return Err(Error::contract(format!(
            "job `{}` has no positive run time",
            inst.job(j).name
        )));
    }
    Ok(run(inst, priority, alloc, run_times))
}

/// Name-keyed front end: `run_times_s` maps job name to seconds.
pub fn simulate_named<S: AsRef<str>>(
    inst: &Instance,
    priority: &[S],
    alloc: &MachineAllocation,
    run_times_s: &HashMap<String, f64>,
) -> Result<SimVerdict> {
    let order = inst.resolve_priority(priority)?;
    let mut rt = Vec::with_capacity(inst.n_jobs());
    for job in &inst.build().jobs {
        let secs = run_times_s
            .get(&job.name)
            .copied()
            .ok_or_else(|| Error::contract(format!("missing run time for job `{}`", job.name)))?;
        rt.push(secs_to_ms(secs));
    }
    simulate(inst, &order, alloc, &rt)
}

/// True iff `priority` drains completely with unit run times and a single
/// machine per type.
pub fn is_deadlock_free(inst: &Instance, priority: &[usize]) -> bool {
    if !is_permutation(priority, inst.n_jobs()) {
        return false;
    }
    let alloc = MachineAllocation::min_of(inst.machine_types());
    let unit = vec![1; inst.n_jobs()];
    !run(inst, priority, &alloc, &unit).is_deadlock()
}

// Preconditions checked by callers.
fn run(
    inst: &Instance,
    priority: &[usize],
    alloc: &MachineAllocation,
    run_times: &[Millis],
) -> SimVerdict {
    let n = inst.n_jobs();
    let mut pending: Vec<usize> = priority.to_vec();
    let mut waiting_on: Vec<usize> = (0..n).map(|j| inst.deps(j).len()).collect();
    let mut free: Vec<BinaryHeap<Reverse<u32>>> = alloc
        .counts
        .iter()
        .map(|&c| (0..c).map(Reverse).collect())
        .collect();
    let mut free_total: usize = free.iter().map(BinaryHeap::len).sum();
    let mut running: BinaryHeap<Reverse<(Millis, usize)>> = BinaryHeap::new();
    let mut assignments: Vec<Option<Assignment>> = vec![None; n];
    let mut now: Millis = 0;

    while !pending.is_empty() {
        // One front-to-back pass, compacting the pending list in place.
        let mut keep = 0;
        let mut scan = 0;
        while scan < pending.len() && free_total > 0 {
            let j = pending[scan];
            scan += 1;
            let t = inst.job_type(j);
            if waiting_on[j] == 0 {
                if let Some(Reverse(m)) = free[t].pop() {
                    free_total -= 1;
                    let end = now + run_times[j];
                    assignments[j] = Some(Assignment {
                        job: j,
                        machine_type: t,
                        machine_index: m,
                        start: now,
                        end,
                    });
                    running.push(Reverse((end, j)));
                    continue;
                }
            }
            pending[keep] = j;
            keep += 1;
        }
        pending.copy_within(scan.., keep);
        pending.truncate(keep + (pending.len() - scan));

        if pending.is_empty() {
            break;
        }
        let Some(&Reverse((t_next, _))) = running.peek() else {
            return SimVerdict::Deadlock {
                unscheduled: inst.names_of(&pending),
            };
        };
        now = t_next;
        while let Some(&Reverse((end, j))) = running.peek() {
            if end != now {
                break;
            }
            running.pop();
            let a = assignments[j].expect("running job has an assignment");
            free[a.machine_type].push(Reverse(a.machine_index));
            free_total += 1;
            for &d in inst.dependents(j) {
                waiting_on[d] -= 1;
            }
        }
    }

    let assignments: Vec<Assignment> = assignments
        .into_iter()
        .map(|a| a.expect("every job scheduled"))
        .collect();
    let makespan = assignments.iter().map(|a| a.end).max().unwrap_or(0);
    SimVerdict::Scheduled(ScheduleResult {
        assignments,
        makespan,
        allocation: alloc.clone(),
    })
}

/// Checks every schedule invariant: durations, precedence, machine exclusivity,
/// allocation bounds, and the makespan. Returns the first violation found.
pub fn verify_schedule(
    inst: &Instance,
    sched: &ScheduleResult,
    run_times: &[Millis],
) -> std::result::Result<(), String> {
    let n = inst.n_jobs();
    if sched.assignments.len() != n {
        return Err(format!("{} assignments for {n} jobs", sched.assignments.len()));
    }
    for (j, a) in sched.assignments.iter().enumerate() {
        if a.job != j {
            return Err(format!("assignment slot {j} holds job {}", a.job));
        }
        if a.machine_type != inst.job_type(j) {
            return Err(format!("job `{}` on wrong machine type", inst.job(j).name));
        }
        if a.machine_index >= sched.allocation.counts[a.machine_type] {
            return Err(format!("job `{}` on unallocated machine", inst.job(j).name));
        }
        if a.end != a.start + run_times[j] {
            return Err(format!("job `{}` end != start + run time", inst.job(j).name));
        }
        for &d in inst.deps(j) {
            if a.start < sched.assignments[d].end {
                return Err(format!(
                    "job `{}` starts before dependency `{}` ends",
                    inst.job(j).name,
                    inst.job(d).name
                ));
            }
        }
    }
    let mut by_machine: HashMap<(usize, u32), Vec<(Millis, Millis)>> = HashMap::new();
    for a in &sched.assignments {
        by_machine
            .entry((a.machine_type, a.machine_index))
            .or_default()
            .push((a.start, a.end));
    }
    for ((t, m), mut spans) in by_machine {
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(format!("overlap on machine type {t} index {m}"));
            }
        }
    }
    let max_end = sched.assignments.iter().map(|a| a.end).max().unwrap_or(0);
    if max_end != sched.makespan {
        return Err(format!("makespan {} != max end {max_end}", sched.makespan));
    }
    Ok(())
}
