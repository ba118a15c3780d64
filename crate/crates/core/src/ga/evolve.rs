//! The generational loop: evaluate, select, recombine, mutate, keep elites.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{estimate_ms, EstimatorConfig, RunHistory};
use crate::ga::crossover::{machine_segment_crossover, ordered_crossover, pmx_crossover, random_cuts, random_pivots};
use crate::ga::fitness::{score, FitnessValue, FitnessWeights};
use crate::ga::init::{init_population_rejection, init_population_repair, repair_priority_list};
use crate::ga::mutation::mutate;
use crate::ga::selection::select_parents;
use crate::ga::{AllocationMode, CrossoverKind, FitnessReference, GaConfig, InitKind};
use crate::model::{Build, Chromosome, Instance, MachineAllocation, MachineBits};
use crate::simulator::{simulate, ScheduleResult, SimVerdict};
use crate::time::{ms_to_secs, Millis};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_makespan_s: f64,
    pub best_machines: u32,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvolutionTrace {
    pub entries: Vec<TraceEntry>,
}

impl EvolutionTrace {
    /// True when the best total never increases from one generation to the next.
    pub fn is_monotone(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness)
    }
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: Chromosome,
    pub allocation: MachineAllocation,
    pub schedule: ScheduleResult,
    pub fitness: FitnessValue,
    pub trace: EvolutionTrace,
    /// Maxima the fitness terms were scaled by.
    pub reference_max_run_time_s: f64,
    pub reference_max_machines: f64,
    /// Generation-0 fitness of the individual seeded from the build's own order.
    pub seeded_fitness: FitnessValue,
    pub seeded_makespan: Millis,
    pub generations_run: usize,
}

#[derive(Debug, Clone)]
struct Scored {
    chromosome: Chromosome,
    makespan: Millis,
    machines: u32,
    fitness: FitnessValue,
}

/// Runs the GA on an acyclic instance with run times in milliseconds.
pub fn evolve(
    inst: &Instance,
    run_times: &[Millis],
    weights: &FitnessWeights,
    config: &GaConfig,
) -> Result<EvolveOutcome> {
    let started = Instant::now();
    config.check()?;
    weights.check()?;
    if let Some(cycle) = inst.find_cycle() {
        return Err(Error::InvalidBuild(vec![crate::model::BuildIssue::Cycle(cycle)]));
    }
    if run_times.len() != inst.n_jobs() || run_times.contains(&0) {
        return Err(Error::contract("every job needs a positive run time"));
    }
    let types = inst.machine_types();
    let n = inst.n_jobs();
    let pop_size = config.population_for(n);
    let elites = config.elites_for(pop_size);
    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?,
        )
    } else {
        None
    };
    let eval = |pop: Vec<Chromosome>| evaluate(inst, run_times, pop, pool.as_ref());

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut initial = match config.init_kind {
        InitKind::Rejection => init_population_rejection(inst, config, &mut rng)?,
        InitKind::Repair => init_population_repair(inst, config, &mut rng)?,
    };
    let seeded_alloc = match &config.allocation {
        AllocationMode::Pinned(a) => a.clone(),
        AllocationMode::Free => MachineAllocation::max_of(types),
    };
    initial[0] = Chromosome {
        priority: repair_priority_list(inst, &inst.original_order())?,
        machine_bits: MachineBits::encode(&seeded_alloc, types)?,
    };

    let evaluated = eval(initial)?;
    let (max_rt, max_mc) = match config.reference {
        FitnessReference::InitialPopulation => evaluated.iter().fold((0.0f64, 0.0f64), |(r, m), e| {
            (r.max(ms_to_secs(e.1)), m.max(e.2 as f64))
        }),
        FitnessReference::Fixed {
            max_run_time_s,
            max_machines,
        } => (max_run_time_s, max_machines),
    };
    let to_scored = |(chromosome, makespan, machines): (Chromosome, Millis, u32)| Scored {
        fitness: score(ms_to_secs(makespan), machines as f64, max_rt, max_mc, weights),
        chromosome,
        makespan,
        machines,
    };
    let mut population: Vec<Scored> = evaluated.into_iter().map(to_scored).collect();
    let seeded_fitness = population[0].fitness;
    let seeded_makespan = population[0].makespan;

    let mut best = population[argmin(&population)].clone();
    let mut trace = EvolutionTrace::default();
    trace.entries.push(entry(0, &best, &started));

    let mut stagnant = 0;
    let mut generations_run = 0;
    for generation in 1..=config.max_generations {
        if stagnant >= config.stagnation_limit {
            break;
        }
        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| {
            population[a]
                .fitness
                .total
                .total_cmp(&population[b].fitness.total)
                .then(a.cmp(&b))
        });
        let mut next: Vec<Scored> = ranked[..elites].iter().map(|&i| population[i].clone()).collect();

        let totals: Vec<f64> = population.iter().map(|s| s.fitness.total).collect();
        let mut children = Vec::with_capacity(pop_size - elites);
        while next.len() + children.len() < pop_size {
            let (a, b) = select_parents(&totals, config.tournament_size, &mut rng);
            let (pa, pb) = (&population[a].chromosome, &population[b].chromosome);
            let (c1, c2) = if rng.random::<f64>() < config.crossover_rate {
                recombine(inst, pa, pb, config, &mut rng)?
            } else {
                (pa.clone(), pb.clone())
            };
            children.push(mutate(&c1, inst, config, &mut rng)?);
            if next.len() + children.len() < pop_size {
                children.push(mutate(&c2, inst, config, &mut rng)?);
            }
        }
        next.extend(eval(children)?.into_iter().map(to_scored));
        population = next;
        generations_run = generation;

        let gen_best = &population[argmin(&population)];
        if gen_best.fitness.total < best.fitness.total {
            best = gen_best.clone();
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        trace.entries.push(entry(generation, gen_best, &started));
    }

    let allocation = best.chromosome.allocation(types)?;
    let schedule = simulate(inst, &best.chromosome.priority, &allocation, run_times)?
        .into_schedule()
        .ok_or_else(|| Error::Internal("best individual deadlocked".into()))?;
    Ok(EvolveOutcome {
        allocation,
        schedule,
        fitness: best.fitness,
        best: best.chromosome,
        trace,
        reference_max_run_time_s: max_rt,
        reference_max_machines: max_mc,
        seeded_fitness,
        seeded_makespan,
        generations_run,
    })
}

/// Estimates run times for `build` and evolves it.
pub fn evolve_build(
    build: &Build,
    history: &RunHistory,
    estimator: &EstimatorConfig,
    weights: &FitnessWeights,
    config: &GaConfig,
) -> Result<(Instance, Vec<Millis>, EvolveOutcome)> {
    let inst = Instance::validated(build.clone())?;
    let run_times = estimate_ms(build, history, estimator)?;
    let outcome = evolve(&inst, &run_times, weights, config)?;
    Ok((inst, run_times, outcome))
}

fn recombine<R: Rng>(
    inst: &Instance,
    pa: &Chromosome,
    pb: &Chromosome,
    config: &GaConfig,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    let n = pa.priority.len();
    let (p1, p2) = if n >= 2 {
        let pivots = random_pivots(n, rng);
        let (c1, c2) = match config.crossover_kind {
            CrossoverKind::Ox => (
                ordered_crossover(&pa.priority, &pb.priority, pivots),
                ordered_crossover(&pb.priority, &pa.priority, pivots),
            ),
            CrossoverKind::Pmx => pmx_crossover(&pa.priority, &pb.priority, pivots),
        };
        (repair_priority_list(inst, &c1)?, repair_priority_list(inst, &c2)?)
    } else {
        (pa.priority.clone(), pb.priority.clone())
    };
    let (b1, b2) = match config.allocation {
        AllocationMode::Free => {
            let cuts = random_cuts(&pa.machine_bits, rng);
            (
                machine_segment_crossover(&pa.machine_bits, &pb.machine_bits, &cuts)?,
                machine_segment_crossover(&pb.machine_bits, &pa.machine_bits, &cuts)?,
            )
        }
        AllocationMode::Pinned(_) => (pa.machine_bits.clone(), pb.machine_bits.clone()),
    };
    Ok((
        Chromosome {
            priority: p1,
            machine_bits: b1,
        },
        Chromosome {
            priority: p2,
            machine_bits: b2,
        },
    ))
}

fn evaluate(
    inst: &Instance,
    run_times: &[Millis],
    pop: Vec<Chromosome>,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<(Chromosome, Millis, u32)>> {
    let one = |c: Chromosome| -> Result<(Chromosome, Millis, u32)> {
        let alloc = c.allocation(inst.machine_types())?;
        match simulate(inst, &c.priority, &alloc, run_times)? {
            SimVerdict::Scheduled(s) => {
                let total = alloc.total();
                Ok((c, s.makespan, total))
            }
            SimVerdict::Deadlock { unscheduled } => Err(Error::Internal(format!(
                "individual deadlocked on {} jobs",
                unscheduled.len()
            ))),
        }
    };
    match pool {
        Some(pool) => pool.install(|| pop.into_par_iter().map(one).collect()),
        None => pop.into_iter().map(one).collect(),
    }
}

fn argmin(pop: &[Scored]) -> usize {
    let mut best = 0;
    for (i, s) in pop.iter().enumerate().skip(1) {
        if s.fitness.total < pop[best].fitness.total {
            best = i;
        }
    }
    best
}

fn entry(generation: usize, s: &Scored, started: &Instant) -> TraceEntry {
    TraceEntry {
        generation,
        best_fitness: s.fitness.total,
        best_makespan_s: ms_to_secs(s.makespan),
        best_machines: s.machines,
        elapsed_s: started.elapsed().as_secs_f64(),
    }
}
