//! The genetic algorithm over priority lists and machine counts.

pub mod crossover;
pub mod evolve;
pub mod fitness;
pub mod init;
pub mod mutation;
pub mod selection;

pub use crossover::{machine_segment_crossover, ordered_crossover, pmx_crossover};
pub use evolve::{evolve, evolve_build, EvolutionTrace, EvolveOutcome, TraceEntry};
pub use fitness::{fitness, score, FitnessValue, FitnessWeights, PopulationMetrics, Scaling};
pub use init::{init_population_rejection, init_population_repair, repair_priority_list};
pub use mutation::mutate;
pub use selection::{select_parents, tournament};

use crate::error::{Error, Result};
use crate::model::MachineAllocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossoverKind {
    #[default]
    Ox,
    Pmx,
}

impl std::str::FromStr for CrossoverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ox" => Ok(CrossoverKind::Ox),
            "pmx" => Ok(CrossoverKind::Pmx),
            other => Err(Error::Parse {
                context: "crossover".into(),
                message: format!("expected `ox` or `pmx`, got `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitKind {
    Rejection,
    #[default]
    Repair,
}

impl std::str::FromStr for InitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rejection" => Ok(InitKind::Rejection),
            "repair" => Ok(InitKind::Repair),
            other => Err(Error::Parse {
                context: "init".into(),
                message: format!("expected `rejection` or `repair`, got `{other}`"),
            }),
        }
    }
}

/// Whether the machine-count half of the chromosome evolves.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AllocationMode {
    #[default]
    Free,
    /// Every individual uses this allocation; only priorities evolve.
    Pinned(MachineAllocation),
}

/// Which maxima the fitness terms are scaled by during a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FitnessReference {
    /// Maxima of the initial population, held for the whole run so that
    /// totals are comparable across generations.
    #[default]
    InitialPopulation,
    Fixed { max_run_time_s: f64, max_machines: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    /// `None` means twice the number of jobs.
    pub population_size: Option<usize>,
    pub max_generations: usize,
    /// Stop after this many generations without a strictly better best.
    pub stagnation_limit: usize,
    pub crossover_rate: f64,
    pub permutation_mutation_rate: f64,
    /// Per-bit flip probability; `None` means one over the total bit count.
    pub bit_flip_rate: Option<f64>,
    pub tournament_size: usize,
    pub elite_count: usize,
    pub crossover_kind: CrossoverKind,
    pub init_kind: InitKind,
    pub rng_seed: u64,
    /// Threads for fitness evaluation. Results do not depend on this.
    pub workers: usize,
    pub allocation: AllocationMode,
    pub reference: FitnessReference,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: None,
            max_generations: 300,
            stagnation_limit: 60,
            crossover_rate: 0.9,
            permutation_mutation_rate: 0.1,
            bit_flip_rate: None,
            tournament_size: 3,
            elite_count: 2,
            crossover_kind: CrossoverKind::Ox,
            init_kind: InitKind::Repair,
            rng_seed: 0,
            workers: 1,
            allocation: AllocationMode::Free,
            reference: FitnessReference::InitialPopulation,
        }
    }
}

impl GaConfig {
    pub fn population_for(&self, n_jobs: usize) -> usize {
        self.population_size.unwrap_or(2 * n_jobs).max(2)
    }

    pub fn bit_rate_for(&self, total_bits: usize) -> f64 {
        match self.bit_flip_rate {
            Some(r) => r,
            None if total_bits == 0 => 0.0,
            None => 1.0 / total_bits as f64,
        }
    }

    /// Elite count capped below the population size.
    pub fn elites_for(&self, population: usize) -> usize {
        self.elite_count.min(population - 1)
    }

    pub fn check(&self) -> Result<()> {
        let rate = |name: &str, r: f64| {
            if (0.0..=1.0).contains(&r) {
                Ok(())
            } else {
                Err(Error::contract(format!("{name} {r} outside [0, 1]")))
            }
        };
        rate("crossover_rate", self.crossover_rate)?;
        rate("permutation_mutation_rate", self.permutation_mutation_rate)?;
        if let Some(r) = self.bit_flip_rate {
            rate("bit_flip_rate", r)?;
        }
        if self.population_size.is_some_and(|p| p < 2) {
            return Err(Error::contract("population_size must be at least 2"));
        }
        if let Some(p) = self.population_size {
            if self.elite_count >= p {
                return Err(Error::contract("elite_count must be below population_size"));
            }
        }
        if self.tournament_size == 0 {
            return Err(Error::contract("tournament_size must be positive"));
        }
        if self.workers == 0 {
            return Err(Error::contract("workers must be positive"));
        }
        if let FitnessReference::Fixed {
            max_run_time_s,
            max_machines,
        } = self.reference
        {
            if !(max_run_time_s >= 0.0 && max_machines >= 0.0) {
                return Err(Error::contract("fixed fitness reference must be non-negative"));
            }
        }
        Ok(())
    }
}
