//! Weighted-sum fitness over makespan and machine count.
//!
//! For individual `i` of a population with maximum run time `P_MRT` and
//! maximum machine count `P_MMC`:
//!
//! ```text
//! alpha_i = w_RT * P_MRT * RT_i        (literal)
//! beta_i  = w_MC * P_MMC * MC_i
//! total_i = alpha_i + beta_i
//! ```
//!
//! The literal form multiplies by the population maxima. [`Scaling::Normalized`]
//! divides by them instead, which keeps both terms in `[0, w]` and makes the
//! weights directly comparable. Lower totals are better under either scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    #[default]
    Normalized,
    Literal,
}

impl std::str::FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Scaling::Normalized),
            "literal" => Ok(Scaling::Literal),
            other => Err(Error::Parse {
                context: "scaling".into(),
                message: format!("expected `normalized` or `literal`, got `{other}`"),
            }),
        }
    }
}

impl std::fmt::Display for Scaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scaling::Normalized => "normalized",
            Scaling::Literal => "literal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessWeights {
    pub w_rt: f64,
    pub w_mc: f64,
    pub scaling: Scaling,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights {
            w_rt: 1.0,
            w_mc: 0.5,
            scaling: Scaling::Normalized,
        }
    }
}

impl FitnessWeights {
    pub fn new(w_rt: f64, w_mc: f64, scaling: Scaling) -> Result<Self> {
        let w = FitnessWeights {
            w_rt,
            w_mc,
            scaling,
        };
        w.check()?;
        Ok(w)
    }

    pub fn check(&self) -> Result<()> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if !ok(self.w_rt) || !ok(self.w_mc) || self.w_rt + self.w_mc <= 0.0 {
            return Err(Error::contract(format!(
                "weights must be non-negative with positive sum (w_rt={}, w_mc={})",
                self.w_rt, self.w_mc
            )));
        }
        Ok(())
    }
}

/// Per-individual makespan (seconds) and total machine count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PopulationMetrics {
    pub run_times: Vec<f64>,
    pub machine_counts: Vec<f64>,
}

impl PopulationMetrics {
    pub fn new(run_times: Vec<f64>, machine_counts: Vec<f64>) -> Result<Self> {
        if run_times.len() != machine_counts.len() {
            return Err(Error::contract("metric vectors differ in length"));
        }
        if run_times
            .iter()
            .chain(&machine_counts)
            .any(|&x| !(x >= 0.0 && x.is_finite()))
        {
            return Err(Error::contract("metrics must be finite and non-negative"));
        }
        Ok(PopulationMetrics {
            run_times,
            machine_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.run_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.run_times.is_empty()
    }

    pub fn max_run_time(&self) -> f64 {
        self.run_times.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_machine_count(&self) -> f64 {
        self.machine_counts.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitnessValue {
    pub alpha: f64,
    pub beta: f64,
    pub total: f64,
}

/// Fitness of every individual against its own population's maxima.
pub fn fitness(metrics: &PopulationMetrics, weights: &FitnessWeights) -> Result<Vec<FitnessValue>> {
    if metrics.is_empty() {
        return Err(Error::Empty("population metrics"));
    }
    weights.check()?;
    let max_rt = metrics.max_run_time();
    let max_mc = metrics.max_machine_count();
    Ok(metrics
        .run_times
        .iter()
        .zip(&metrics.machine_counts)
        .map(|(&rt, &mc)| score(rt, mc, max_rt, max_mc, weights))
        .collect())
}

/// Fitness of a single individual against given reference maxima.
pub fn score(rt: f64, mc: f64, max_rt: f64, max_mc: f64, weights: &FitnessWeights) -> FitnessValue {
    let (alpha, beta) = match weights.scaling {
        Scaling::Literal => (weights.w_rt * max_rt * rt, weights.w_mc * max_mc * mc),
        Scaling::Normalized => (
            ratio(weights.w_rt, rt, max_rt),
            ratio(weights.w_mc, mc, max_mc),
        ),
    };
    FitnessValue {
        alpha,
        beta,
        total: alpha + beta,
    }
}

fn ratio(w: f64, x: f64, max: f64) -> f64 {
    if max == 0.0 {
        0.0
    } else {
        w * x / max
    }
}
