//! Order-preserving crossover on priority lists and per-type one-point
//! crossover on machine-count segments.
//!
//! Pivots `(i, j)` are inclusive: the segment is `i..=j`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::MachineBits;

/// Two distinct-or-equal pivots with `i <= j < n`. `n` must be positive.
pub fn random_pivots<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let b = rng.random_range(0..n);
    (a.min(b), a.max(b))
}

fn check_pivots(len: usize, (i, j): (usize, usize)) {
    assert!(i <= j && j < len, "pivots ({i}, {j}) out of range for length {len}");
}

fn value_slots(p: &[usize]) -> usize {
    p.iter().copied().max().map_or(0, |m| m + 1)
}

/// Ordered crossover (OX). The child keeps `p1[i..=j]` in place; the other
/// slots are filled from position `j + 1` onward (wrapping) with `p2`'s genes
/// read from position `j + 1` onward (wrapping), skipping genes already
/// present.
pub fn ordered_crossover(p1: &[usize], p2: &[usize], pivots: (usize, usize)) -> Vec<usize> {
    let n = p1.len();
    assert_eq!(n, p2.len(), "parents differ in length");
    if n == 0 {
        return Vec::new();
    }
    check_pivots(n, pivots);
    let (i, j) = pivots;
    let mut present = vec![false; value_slots(p1).max(value_slots(p2))];
    let mut child = vec![usize::MAX; n];
    for k in i..=j {
        child[k] = p1[k];
        present[p1[k]] = true;
    }
    let mut write = (j + 1) % n;
    for step in 0..n {
        let gene = p2[(j + 1 + step) % n];
        if present[gene] {
            continue;
        }
        present[gene] = true;
        child[write] = gene;
        write = (write + 1) % n;
    }
    child
}

/// Partially mapped crossover (PMX). `child1` takes `p2[i..=j]` in place and
/// `p1` elsewhere; a gene outside the segment that collides with the segment
/// is replaced by following the `p2[k] -> p1[k]` mapping until it no longer
/// collides. `child2` is the mirror image.
pub fn pmx_crossover(p1: &[usize], p2: &[usize], pivots: (usize, usize)) -> (Vec<usize>, Vec<usize>) {
    let n = p1.len();
    assert_eq!(n, p2.len(), "parents differ in length");
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    check_pivots(n, pivots);
    let slots = value_slots(p1).max(value_slots(p2));
    (pmx_child(p1, p2, pivots, slots), pmx_child(p2, p1, pivots, slots))
}

fn pmx_child(base: &[usize], donor: &[usize], (i, j): (usize, usize), slots: usize) -> Vec<usize> {
    // map[v] = base gene displaced by segment gene v
    let mut map = vec![usize::MAX; slots];
    for k in i..=j {
        map[donor[k]] = base[k];
    }
    base.iter()
        .enumerate()
        .map(|(k, &g)| {
            if (i..=j).contains(&k) {
                donor[k]
            } else {
                let mut v = g;
                while map[v] != usize::MAX {
                    v = map[v];
                }
                v
            }
        })
        .collect()
}

/// For each machine type, `child = bits1[..cut] ++ bits2[cut..]`, with
/// `cuts[t]` in `0..=width`.
pub fn machine_segment_crossover(bits1: &MachineBits, bits2: &MachineBits, cuts: &[usize]) -> Result<MachineBits> {
    if bits1.segments.len() != bits2.segments.len() || cuts.len() != bits1.segments.len() {
        return Err(Error::Layout(
            "parents or cuts disagree on the number of machine types".into(),
        ));
    }
    let mut segments = Vec::with_capacity(cuts.len());
    for ((a, b), &cut) in bits1.segments.iter().zip(&bits2.segments).zip(cuts) {
        if a.len() != b.len() || cut > a.len() {
            return Err(Error::Layout(format!(
                "segment widths {} / {} with cut {cut}",
                a.len(),
                b.len()
            )));
        }
        segments.push(a[..cut].iter().chain(&b[cut..]).copied().collect());
    }
    Ok(MachineBits { segments })
}

pub fn random_cuts<R: Rng>(bits: &MachineBits, rng: &mut R) -> Vec<usize> {
    bits.segments
        .iter()
        .map(|s| rng.random_range(0..=s.len()))
        .collect()
}
