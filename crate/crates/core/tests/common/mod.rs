//! Reference implementations used as oracles by the integration tests. None of
//! this shares code with the library beyond its data types.

#![allow(dead_code)]

use gasched_core::model::{Build, Instance, Job, MachineAllocation, MachineType};
use gasched_core::time::Millis;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub machine: u32,
    pub start: Millis,
    pub end: Millis,
}

/// Straightforward time-stepping list scheduler. `None` on deadlock.
pub fn reference_schedule(
    inst: &Instance,
    priority: &[usize],
    counts: &[u32],
    run_times: &[Millis],
) -> Option<Vec<Slot>> {
    let n = inst.n_jobs();
    let mut slots: Vec<Option<Slot>> = vec![None; n];
    let mut done = vec![false; n];
    let mut busy: Vec<Vec<Option<usize>>> = counts.iter().map(|&c| vec![None; c as usize]).collect();
    let mut pending: Vec<usize> = priority.to_vec();
    let mut t: Millis = 0;
    loop {
        let mut still = Vec::new();
        for &j in &pending {
            let ready = inst.deps(j).iter().all(|&d| done[d]);
            let ty = inst.job_type(j);
            let free = busy[ty].iter().position(Option::is_none);
            match (ready, free) {
                (true, Some(m)) => {
                    busy[ty][m] = Some(j);
                    slots[j] = Some(Slot {
                        machine: m as u32,
                        start: t,
                        end: t + run_times[j],
                    });
                }
                _ => still.push(j),
            }
        }
        pending = still;
        let running: Vec<usize> = busy.iter().flatten().flatten().copied().collect();
        if running.is_empty() {
            return if pending.is_empty() {
                Some(slots.into_iter().map(Option::unwrap).collect())
            } else {
                None
            };
        }
        t = running.iter().map(|&j| slots[j].unwrap().end).min().unwrap();
        for machines in busy.iter_mut() {
            for m in machines.iter_mut() {
                if let Some(j) = *m {
                    if slots[j].unwrap().end == t {
                        done[j] = true;
                        *m = None;
                    }
                }
            }
        }
    }
}

/// Feasibility of a schedule given as per-job slots, checked from scratch.
pub fn feasible(inst: &Instance, slots: &[Slot], counts: &[u32], run_times: &[Millis]) -> Result<(), String> {
    for j in 0..inst.n_jobs() {
        let s = slots[j];
        if s.end - s.start != run_times[j] {
            return Err(format!("job {j} has wrong duration"));
        }
        if s.machine >= counts[inst.job_type(j)] {
            return Err(format!("job {j} on machine {} beyond allocation", s.machine));
        }
        for &d in inst.deps(j) {
            if slots[d].end > s.start {
                return Err(format!("job {j} starts before dep {d} ends"));
            }
        }
        for (k, o) in slots.iter().enumerate().take(j) {
            if inst.job_type(k) == inst.job_type(j) && o.machine == s.machine && o.start < s.end && s.start < o.end {
                return Err(format!("jobs {k} and {j} overlap on one machine"));
            }
        }
    }
    Ok(())
}

pub fn critical_path(inst: &Instance, run_times: &[Millis]) -> Millis {
    let n = inst.n_jobs();
    let mut memo: Vec<Option<Millis>> = vec![None; n];
    fn finish(j: usize, inst: &Instance, rt: &[Millis], memo: &mut [Option<Millis>]) -> Millis {
        if let Some(v) = memo[j] {
            return v;
        }
        let start = inst
            .deps(j)
            .iter()
            .map(|&d| finish(d, inst, rt, memo))
            .max()
            .unwrap_or(0);
        memo[j] = Some(start + rt[j]);
        start + rt[j]
    }
    (0..n).map(|j| finish(j, inst, run_times, &mut memo)).max().unwrap_or(0)
}

/// Largest per-type work divided by that type's machine count.
pub fn load_bound(inst: &Instance, run_times: &[Millis], counts: &[u32]) -> f64 {
    let mut work = vec![0u64; counts.len()];
    for j in 0..inst.n_jobs() {
        work[inst.job_type(j)] += run_times[j];
    }
    work.iter()
        .zip(counts)
        .map(|(&w, &c)| w as f64 / c as f64)
        .fold(0.0, f64::max)
}

/// Acyclicity by repeatedly peeling jobs with no unfinished dependency.
pub fn peel_acyclic(build: &Build) -> bool {
    let mut left: Vec<&Job> = build.jobs.iter().collect();
    let mut gone: Vec<String> = Vec::new();
    loop {
        let before = left.len();
        left.retain(|j| {
            if j.deps.iter().all(|d| gone.contains(d)) {
                gone.push(j.name.clone());
                false
            } else {
                true
            }
        });
        if left.is_empty() {
            return true;
        }
        if left.len() == before {
            return false;
        }
    }
}

pub fn is_topological(inst: &Instance, order: &[usize]) -> bool {
    let mut pos = vec![usize::MAX; inst.n_jobs()];
    for (i, &j) in order.iter().enumerate() {
        pos[j] = i;
    }
    (0..inst.n_jobs()).all(|j| inst.deps(j).iter().all(|&d| pos[d] < pos[j]))
}

/// Random DAG build listed in a shuffled (generally non-topological) order.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, n_types: usize, edge_prob: f64, max_count: u32) -> Build {
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);
    let mut jobs = Vec::with_capacity(n);
    for i in 0..n {
        let deps: Vec<String> = (0..n)
            .filter(|&k| rank[k] < rank[i] && rng.random::<f64>() < edge_prob)
            .map(|k| format!("j{k}"))
            .collect();
        let ty = format!("t{}", rng.random_range(0..n_types));
        jobs.push(Job::new(format!("j{i}"), ty).with_deps(deps));
    }
    let types = (0..n_types)
        .map(|t| MachineType::new(format!("t{t}"), rng.random_range(1..=max_count)))
        .collect();
    Build::new(jobs, types)
}

pub fn random_run_times<R: Rng>(rng: &mut R, n: usize, hi_ms: Millis) -> Vec<Millis> {
    (0..n).map(|_| rng.random_range(1..=hi_ms)).collect()
}

pub fn random_allocation<R: Rng>(rng: &mut R, inst: &Instance) -> MachineAllocation {
    MachineAllocation::new(
        inst.machine_types()
            .iter()
            .map(|t| rng.random_range(1..=t.max_count))
            .collect(),
    )
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
