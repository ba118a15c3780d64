//! Run-time estimates from historical samples.
//!
//! A job with a declared run time uses it. Otherwise the estimate is a
//! quantile of the job's history (upper quartile by default), and jobs never
//! seen before get a uniform draw from a per-job random stream.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Build;
use crate::time::{secs_to_ms, Millis};

/// Historical run-time samples (seconds) per job name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunHistory {
    samples: BTreeMap<String, Vec<f64>>,
}

impl RunHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_map(samples: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        for (job, s) in &samples {
            if let Some(bad) = s.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Parse {
                    context: format!("history for `{job}`"),
                    message: format!("sample {bad} is not a positive duration"),
                });
            }
        }
        Ok(RunHistory { samples })
    }

    pub fn get(&self, job: &str) -> Option<&[f64]> {
        self.samples.get(job).map(Vec::as_slice).filter(|s| !s.is_empty())
    }

    pub fn samples(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub quantile_q: f64,
    /// Seconds range for jobs with no history and no declared run time.
    pub unknown_range: (f64, f64),
    pub rng_seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            quantile_q: 0.75,
            unknown_range: (60.0, 600.0),
            rng_seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.quantile_q) {
            return Err(Error::contract(format!(
                "quantile {} outside [0, 1]",
                self.quantile_q
            )));
        }
        let (lo, hi) = self.unknown_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::contract(format!(
                "unknown-job range [{lo}, {hi}] must satisfy 0 < lo <= hi"
            )));
        }
        Ok(())
    }
}

/// Linear-interpolation quantile: rank `h = q * (n - 1)` over sorted samples.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("quantile samples"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::contract(format!("quantile {q} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Estimated run time in seconds for every job, keyed by name.
pub fn estimate_all(
    build: &Build,
    history: &RunHistory,
    config: &EstimatorConfig,
) -> Result<BTreeMap<String, f64>> {
    config.check()?;
    let mut out = BTreeMap::new();
    for job in &build.jobs {
        let secs = if let Some(rt) = job.declared_run_time {
            rt
        } else if let Some(s) = history.get(&job.name) {
            quantile(s, config.quantile_q)?
        } else {
            let mut rng = job_stream(config.rng_seed, &job.name);
            let (lo, hi) = config.unknown_range;
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        };
        out.insert(job.name.clone(), secs);
    }
    Ok(out)
}

/// Estimates as milliseconds aligned with `build.jobs`.
pub fn estimate_ms(build: &Build, history: &RunHistory, config: &EstimatorConfig) -> Result<Vec<Millis>> {
    let est = estimate_all(build, history, config)?;
    Ok(build
        .jobs
        .iter()
        .map(|j| secs_to_ms(est[&j.name]))
        .collect())
}

pub fn as_hash_map(est: &BTreeMap<String, f64>) -> HashMap<String, f64> {
    est.iter().map(|(k, &v)| (k.clone(), v)).collect()
}

fn job_stream(seed: u64, name: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}
