use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gasched_core::ga::{CrossoverKind, FitnessWeights, GaConfig, InitKind, Scaling};
use gasched_core::estimator::EstimatorConfig;
use gasched_core::Result;

#[derive(Parser, Debug)]
#[command(name = "gasched", version, about = "Optimize CI build job priorities and machine counts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a build spec for structural problems.
    Validate {
        #[arg(long)]
        build: PathBuf,
    },
    /// Print the run-time estimate used for every job.
    Estimate {
        #[arg(long)]
        build: PathBuf,
        #[command(flatten)]
        est: EstimateArgs,
        /// Also write estimates.json here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Search priorities and machine counts with the genetic algorithm.
    Schedule {
        #[arg(long)]
        build: PathBuf,
        #[command(flatten)]
        est: EstimateArgs,
        #[command(flatten)]
        ga: GaArgs,
        /// Directory for schedule.json and trace.csv.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Simulate one priority list on one allocation.
    Simulate {
        #[arg(long)]
        build: PathBuf,
        /// One job name per line; defaults to the build's own order.
        #[arg(long)]
        priority: Option<PathBuf>,
        /// Machine counts as `type=count,...`; missing types get their maximum.
        #[arg(long)]
        alloc: Option<String>,
        #[command(flatten)]
        est: EstimateArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Make a priority list deadlock-free and print it.
    Repair {
        #[arg(long)]
        build: PathBuf,
        /// One job name per line; defaults to the build's own order.
        #[arg(long)]
        priority: Option<PathBuf>,
    },
    /// Generate a random acyclic build spec.
    Gen {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 40)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the GA against the original-order baseline on a synthetic suite.
    Bench {
        /// 1: GA vs. baseline per build; 2: one build, many seeds;
        /// 3: like 1 with search time added to the GA makespan.
        #[arg(long, value_enum, default_value_t = BenchCase::One)]
        case: BenchCase,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value_t = 100)]
        builds: usize,
        #[arg(long, default_value_t = 30)]
        min_jobs: usize,
        #[arg(long, default_value_t = 80)]
        max_jobs: usize,
        #[arg(long, default_value_t = 2024)]
        suite_seed: u64,
        /// Number of GA seeds for case 2 (starting at --seed).
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Keep the baseline allocation and evolve priorities only.
        #[arg(long)]
        pin: bool,
        #[command(flatten)]
        ga: GaArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchCase {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

#[derive(Args, Debug, Clone)]
pub struct EstimateArgs {
    /// JSON map of job name to past run times in seconds.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long, default_value_t = 0.75)]
    pub quantile: f64,
    /// Seconds range for jobs with neither history nor a declared run time.
    #[arg(long, default_value_t = 60.0)]
    pub unknown_min: f64,
    #[arg(long, default_value_t = 600.0)]
    pub unknown_max: f64,
    /// Seed for unseen-job estimates (defaults to --seed where present).
    #[arg(long)]
    pub estimate_seed: Option<u64>,
}

impl EstimateArgs {
    pub fn config(&self, fallback_seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            quantile_q: self.quantile,
            unknown_range: (self.unknown_min, self.unknown_max),
            rng_seed: self.estimate_seed.unwrap_or(fallback_seed),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GaArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub generations: usize,
    /// Defaults to twice the job count.
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long, default_value_t = 60)]
    pub stagnation: usize,
    #[arg(long, default_value_t = 1.0)]
    pub w_rt: f64,
    #[arg(long, default_value_t = 0.5)]
    pub w_mc: f64,
    #[arg(long, default_value = "normalized")]
    pub scaling: Scaling,
    #[arg(long, default_value = "ox")]
    pub crossover: CrossoverKind,
    #[arg(long, default_value = "repair")]
    pub init: InitKind,
    #[arg(long, default_value_t = 0.9)]
    pub crossover_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    pub mutation_rate: f64,
    /// Per-bit flip probability; defaults to one over the bit count.
    #[arg(long)]
    pub bit_flip_rate: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub tournament: usize,
    #[arg(long, default_value_t = 2)]
    pub elites: usize,
    /// Threads for fitness evaluation. Does not change results.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

impl GaArgs {
    pub fn config(&self) -> GaConfig {
        GaConfig {
            population_size: self.population,
            max_generations: self.generations,
            stagnation_limit: self.stagnation,
            crossover_rate: self.crossover_rate,
            permutation_mutation_rate: self.mutation_rate,
            bit_flip_rate: self.bit_flip_rate,
            tournament_size: self.tournament,
            elite_count: self.elites,
            crossover_kind: self.crossover,
            init_kind: self.init,
            rng_seed: self.seed,
            workers: self.workers,
            ..Default::default()
        }
    }

    pub fn weights(&self) -> Result<FitnessWeights> {
        FitnessWeights::new(self.w_rt, self.w_mc, self.scaling)
    }
}

/// Synthetic build shape shared by `gen` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct ShapeArgs {
    #[arg(long, default_value_t = 0.08)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 3)]
    pub types: usize,
    /// Comma-separated; the last value repeats for remaining types.
    #[arg(long, default_value = "2,2,2", value_delimiter = ',')]
    pub max_counts: Vec<u32>,
    /// Whole seconds.
    #[arg(long, default_value_t = 30)]
    pub min_runtime: u64,
    #[arg(long, default_value_t = 600)]
    pub max_runtime: u64,
}
