//! Priority-list repair and initial population creation.
//!
//! Two ways to get deadlock-free priority lists: shuffle and retry until the
//! simulator accepts the list ([`init_population_rejection`]), or shuffle once
//! and move every job that precedes one of its dependencies to just after the
//! latest such dependency ([`repair_priority_list`], used by
//! [`init_population_repair`]).

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ga::{AllocationMode, GaConfig};
use crate::model::{is_permutation, Chromosome, Instance, MachineAllocation, MachineBits};
use crate::simulator::is_deadlock_free;

/// Repeatedly moves each job (in build order) that sits before its
/// latest-placed dependency to the slot right after that dependency, until a
/// full pass moves nothing.
///
/// On a DAG, jobs of dependency depth `k` stop moving after `k + 1` passes, so
/// the pass count is bounded by the number of jobs.
pub fn repair_priority_list(inst: &Instance, priority: &[usize]) -> Result<Vec<usize>> {
    let n = inst.n_jobs();
    if !is_permutation(priority, n) {
        return Err(Error::contract(
            "priority list is not a permutation of the build's jobs",
        ));
    }
    if !inst.is_acyclic() {
        return Err(Error::contract("repair requires an acyclic build"));
    }
    let mut list = OrderedList::new(priority, n);
    let max_passes = n + 1;
    for _ in 0..max_passes {
        let mut moved = false;
        for job in 0..n {
            let deps = inst.deps(job);
            let Some((&first, rest)) = deps.split_first() else {
                continue;
            };
            let (mut latest, mut latest_label) = (first, list.label[first]);
            for &d in rest {
                if list.label[d] > latest_label {
                    latest = d;
                    latest_label = list.label[d];
                }
            }
            if list.label[job] < latest_label {
                list.move_after(job, latest);
                moved = true;
            }
        }
        if !moved {
            return Ok(list.to_vec());
        }
    }
    Err(Error::Internal(format!(
        "priority repair did not converge within {max_passes} passes"
    )))
}

/// Doubly linked list over job indices with order labels, so that "is `a`
/// before `b`" and "move `a` after `b`" are both O(1) amortized.
struct OrderedList {
    next: Vec<usize>,
    prev: Vec<usize>,
    label: Vec<u64>,
    head: usize,
    tail: usize,
}

impl OrderedList {
    fn new(order: &[usize], n: usize) -> Self {
        let head = n;
        let tail = n + 1;
        let step = u64::MAX / (n as u64 + 2);
        let mut next = vec![tail; n + 2];
        let mut prev = vec![head; n + 2];
        let mut label = vec![0; n + 2];
        let mut last = head;
        for (k, &j) in order.iter().enumerate() {
            next[last] = j;
            prev[j] = last;
            label[j] = (k as u64 + 1) * step;
            last = j;
        }
        next[last] = tail;
        prev[tail] = last;
        label[tail] = u64::MAX;
        OrderedList {
            next,
            prev,
            label,
            head,
            tail,
        }
    }

    fn relabel(&mut self) {
        let n = self.label.len() - 2;
        let step = u64::MAX / (n as u64 + 1);
        let mut cur = self.head;
        let mut l = 0u64;
        while cur != self.tail {
            self.label[cur] = l;
            l += step;
            cur = self.next[cur];
        }
        self.label[self.tail] = u64::MAX;
    }

    fn move_after(&mut self, item: usize, anchor: usize) {
        let (p, nx) = (self.prev[item], self.next[item]);
        self.next[p] = nx;
        self.prev[nx] = p;

        let after = self.next[anchor];
        self.next[anchor] = item;
        self.prev[item] = anchor;
        self.next[item] = after;
        self.prev[after] = item;

        let (lo, hi) = (self.label[anchor], self.label[after]);
        if hi - lo < 2 {
            self.relabel();
        } else {
            self.label[item] = lo + (hi - lo) / 2;
        }
    }

    fn to_vec(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.label.len() - 2);
        let mut cur = self.next[self.head];
        while cur != self.tail {
            out.push(cur);
            cur = self.next[cur];
        }
        out
    }
}

pub(crate) fn random_bits<R: Rng>(inst: &Instance, mode: &AllocationMode, rng: &mut R) -> Result<MachineBits> {
    let types = inst.machine_types();
    let alloc = match mode {
        AllocationMode::Pinned(a) => a.clone(),
        AllocationMode::Free => MachineAllocation::new(
            types.iter().map(|t| rng.random_range(1..=t.max_count)).collect(),
        ),
    };
    MachineBits::encode(&alloc, types)
}

fn shuffled<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

fn check_preconditions(inst: &Instance, config: &GaConfig) -> Result<()> {
    if !inst.is_acyclic() {
        return Err(Error::contract("population init requires an acyclic build"));
    }
    if let AllocationMode::Pinned(a) = &config.allocation {
        a.check(inst.machine_types())?;
    }
    Ok(())
}

/// Shuffle-and-retry: keeps drawing shuffles until one passes
/// [`is_deadlock_free`].
pub fn init_population_rejection<R: Rng>(
    inst: &Instance,
    config: &GaConfig,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    check_preconditions(inst, config)?;
    let size = config.population_for(inst.n_jobs());
    let mut pop = Vec::with_capacity(size);
    while pop.len() < size {
        let priority = loop {
            let p = shuffled(inst.n_jobs(), rng);
            if is_deadlock_free(inst, &p) {
                break p;
            }
        };
        let machine_bits = random_bits(inst, &config.allocation, rng)?;
        pop.push(Chromosome {
            priority,
            machine_bits,
        });
    }
    Ok(pop)
}

/// Shuffle-and-repair: every shuffle is made valid by [`repair_priority_list`].
pub fn init_population_repair<R: Rng>(
    inst: &Instance,
    config: &GaConfig,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    check_preconditions(inst, config)?;
    let size = config.population_for(inst.n_jobs());
    let mut pop = Vec::with_capacity(size);
    while pop.len() < size {
        let raw = shuffled(inst.n_jobs(), rng);
        let priority = repair_priority_list(inst, &raw)?;
        let machine_bits = random_bits(inst, &config.allocation, rng)?;
        pop.push(Chromosome {
            priority,
            machine_bits,
        });
    }
    Ok(pop)
}
