//! Job scheduling for CI builds with a genetic algorithm.
//!
//! A candidate solution is a two-part [`Chromosome`]: a priority list over the
//! build's jobs and one binary-encoded machine count per machine type. Candidates
//! are scored by list-scheduling them on typed machine pools ([`simulator`]) and
//! combining makespan and allocated machine count into a single weighted value
//! ([`ga::fitness`]).

pub mod bench;
pub mod error;
pub mod estimator;
pub mod ga;
pub mod io;
pub mod model;
pub mod simulator;
pub mod time;

pub use error::{Error, Result};
pub use model::{
    validate_build, Build, BuildIssue, Chromosome, Instance, Job, MachineAllocation,
    MachineBits, MachineType, ValidationReport,
};
pub use simulator::{simulate, Assignment, ScheduleResult, SimVerdict};
