use rand::Rng;

use crate::error::Result;
use crate::ga::init::repair_priority_list;
use crate::ga::{AllocationMode, GaConfig};
use crate::model::{Chromosome, Instance};

/// Swap mutation on the priority list (followed by repair) and independent
/// bit flips on the machine segments. Pinned allocations are never flipped.
pub fn mutate<R: Rng>(
    chromosome: &Chromosome,
    inst: &Instance,
    config: &GaConfig,
    rng: &mut R,
) -> Result<Chromosome> {
    let mut out = chromosome.clone();
    let n = out.priority.len();
    if n >= 2 && rng.random::<f64>() < config.permutation_mutation_rate {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        out.priority.swap(a, b);
        out.priority = repair_priority_list(inst, &out.priority)?;
    }
    if matches!(config.allocation, AllocationMode::Free) {
        let rate = config.bit_rate_for(out.machine_bits.total_bits());
        if rate > 0.0 {
            for bit in out.machine_bits.segments.iter_mut().flatten() {
                if rng.random::<f64>() < rate {
                    *bit = !*bit;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Build, Job, MachineAllocation, MachineBits, MachineType};
    use crate::simulator::is_deadlock_free;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain() -> Instance {
        Instance::validated(Build::new(
            vec![
                Job::new("A", "l"),
                Job::new("B", "l").with_deps(["A"]),
                Job::new("C", "l").with_deps(["B"]),
                Job::new("D", "l"),
            ],
            vec![MachineType::new("l", 5)],
        ))
        .unwrap()
    }

    fn chromosome(inst: &Instance) -> Chromosome {
        Chromosome {
            priority: vec![0, 1, 2, 3],
            machine_bits: MachineBits::encode(&MachineAllocation::new(vec![3]), inst.machine_types()).unwrap(),
        }
    }

    #[test]
    fn zero_rates_are_identity() {
        let inst = chain();
        let c = chromosome(&inst);
        let cfg = GaConfig {
            permutation_mutation_rate: 0.0,
            bit_flip_rate: Some(0.0),
            ..GaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(mutate(&c, &inst, &cfg, &mut rng).unwrap(), c);
        }
    }

    #[test]
    fn swaps_are_repaired_and_reproducible() {
        let inst = chain();
        let c = chromosome(&inst);
        let cfg = GaConfig {
            permutation_mutation_rate: 1.0,
            bit_flip_rate: Some(0.5),
            ..GaConfig::default()
        };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100)
                .map(|_| mutate(&c, &inst, &cfg, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        let a = run(5);
        assert_eq!(a, run(5));
        for m in &a {
            assert!(is_deadlock_free(&inst, &m.priority));
            let pos = |j: usize| m.priority.iter().position(|&x| x == j).unwrap();
            assert!(pos(0) < pos(1) && pos(1) < pos(2));
            let alloc = m.allocation(inst.machine_types()).unwrap();
            assert!((1..=5).contains(&alloc.counts[0]));
        }
        assert!(a.iter().any(|m| m.machine_bits != c.machine_bits));
    }

    #[test]
    fn pinned_bits_never_flip() {
        let inst = chain();
        let c = chromosome(&inst);
        let cfg = GaConfig {
            bit_flip_rate: Some(1.0),
            allocation: AllocationMode::Pinned(MachineAllocation::new(vec![3])),
            ..GaConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(mutate(&c, &inst, &cfg, &mut rng).unwrap().machine_bits, c.machine_bits);
        }
    }
}
