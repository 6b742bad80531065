//! Exact draws of the contact set under the polymer measure, by sequential
//! gap sampling on a [`PartitionTable`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::ReturnKernel;
use crate::partition::{Boundary, PartitionTable};

/// Identifier of the generator family written into output metadata.
pub const RNG_ID: &str = "ChaCha8Rng(seed_from_u64(base_seed), stream = replica)";

/// Largest `N` for which per-residual prefix tables are built.
pub const PREFIX_SEARCH_LIMIT: usize = 2048;

const CONSISTENCY_TOL: f64 = 1e-9;

/// Independent stream `replica` of the generator seeded by `base_seed`.
pub fn replica_rng(base_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replica);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContactSet {
    pub n: usize,
    /// Contacts in `(0,N]`, increasing; the epoch 0 is implicit.
    pub epochs: Vec<usize>,
}

impl ContactSet {
    pub fn count(&self) -> usize {
        self.epochs.len()
    }

    /// Last contact, 0 when there is none.
    pub fn last(&self) -> usize {
        self.epochs.last().copied().unwrap_or(0)
    }

    pub fn rescale(&self) -> RescaledSet {
        let n = self.n.max(1) as f64;
        let mut points = Vec::with_capacity(self.epochs.len() + 1);
        points.push(0.0);
        points.extend(self.epochs.iter().map(|&e| e as f64 / n));
        RescaledSet { points }
    }
}

/// Sorted points of `[0,1]`, always containing 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaledSet {
    pub points: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    /// Walk the gap weights from `n = 1`; cost proportional to the gap drawn.
    #[default]
    Linear,
    /// Binary search over cumulative weights per residual size, `O(N²)` memory.
    PrefixSearch,
}

pub struct ContactSampler {
    table: PartitionTable,
    prefix: Option<Vec<Vec<f64>>>,
}

impl ContactSampler {
    pub fn new(kernel: &ReturnKernel, beta: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Self::from_table(PartitionTable::build(kernel, beta, n, boundary)?, SearchStrategy::Linear)
    }

    pub fn from_table(table: PartitionTable, strategy: SearchStrategy) -> Result<Self> {
        let prefix = match strategy {
            SearchStrategy::Linear => None,
            SearchStrategy::PrefixSearch => {
                if table.n() > PREFIX_SEARCH_LIMIT {
                    return Err(crate::error::invalid(
                        "strategy",
                        format!("prefix search is limited to N <= {PREFIX_SEARCH_LIMIT}"),
                    ));
                }
                Some(build_prefix(&table))
            }
        };
        Ok(ContactSampler { table, prefix })
    }

    pub fn table(&self) -> &PartitionTable {
        &self.table
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ContactSet> {
        let n = self.table.n();
        let y = self.table.scaled();
        let p = self.table.gap_weights();
        let forcing = self.table.forcing();
        let mut epochs = Vec::new();
        let mut m = n;
        let mut pos = 0;
        while m > 0 {
            let total = y[m];
            let mut u = rng.random::<f64>() * total;
            if u < forcing[m] {
                break;
            }
            u -= forcing[m];
            let gap = match &self.prefix {
                Some(prefix) => {
                    let cum = &prefix[m];
                    let idx = cum.partition_point(|&c| c <= u);
                    if idx == cum.len() {
                        let leftover = u - cum.last().copied().unwrap_or(0.0);
                        check_leftover(m, leftover, total)?;
                        last_positive(p, y, m)
                    } else {
                        idx + 1
                    }
                }
                None => {
                    let upper = m.min(p.len() - 1);
                    let mut chosen = None;
                    for k in 1..=upper {
                        u -= p[k] * y[m - k];
                        if u < 0.0 {
                            chosen = Some(k);
                            break;
                        }
                    }
                    match chosen {
                        Some(k) => k,
                        None => {
                            check_leftover(m, u, total)?;
                            last_positive(p, y, m)
                        }
                    }
                }
            };
            pos += gap;
            epochs.push(pos);
            m -= gap;
        }
        Ok(ContactSet { n, epochs })
    }
}

fn check_leftover(m: usize, leftover: f64, total: f64) -> Result<()> {
    if leftover > CONSISTENCY_TOL * total {
        return Err(Error::Consistency {
            residual: m,
            total: 1.0 - leftover / total,
        });
    }
    Ok(())
}

fn last_positive(p: &[f64], y: &[f64], m: usize) -> usize {
    let upper = m.min(p.len() - 1);
    (1..=upper).rev().find(|&k| p[k] * y[m - k] > 0.0).unwrap_or(upper)
}

fn build_prefix(table: &PartitionTable) -> Vec<Vec<f64>> {
    let y = table.scaled();
    let p = table.gap_weights();
    (0..=table.n())
        .map(|m| {
            let upper = m.min(p.len() - 1);
            let mut acc = 0.0;
            (1..=upper)
                .map(|k| {
                    acc += p[k] * y[m - k];
                    acc
                })
                .collect()
        })
        .collect()
}

/// One row of replica output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicaSample {
    pub replica: usize,
    pub count: usize,
    pub count_over_bn: f64,
    pub last_over_n: f64,
}

/// Runs `f` on `n_replicas` independent draws; replica `r` uses
/// [`replica_rng`]`(base_seed, r)` and results come back in replica order.
pub fn replicate<T, F>(sampler: &ContactSampler, n_replicas: usize, base_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &ContactSet) -> T + Sync,
{
    (0..n_replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(base_seed, r as u64);
            let set = sampler.sample(&mut rng)?;
            Ok(f(r, &set))
        })
        .collect()
}

/// Contact counts normalized by `b̃_N` of the recurrent tilt of `kernel`,
/// together with the rescaled last contact.
pub fn replicate_statistics(
    kernel: &ReturnKernel,
    sampler: &ContactSampler,
    n_replicas: usize,
    base_seed: u64,
) -> Result<Vec<ReplicaSample>> {
    if n_replicas == 0 {
        return Err(crate::error::invalid("replicas", "must be at least 1"));
    }
    let n = sampler.table().n();
    let b_n = kernel.tilt_to_recurrent().b_of_n(n.max(1))?;
    replicate(sampler, n_replicas, base_seed, |replica, set| ReplicaSample {
        replica,
        count: set.count(),
        count_over_bn: set.count() as f64 / b_n,
        last_over_n: set.last() as f64 / n.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelMode, SlowlyVarying};
    use crate::partition::{brute_force, contact_moments};
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::HashMap;

    fn recurrent(n_max: usize) -> ReturnKernel {
        ReturnKernel::build(0.5, SlowlyVarying::Constant { value: 1.0 }, KernelMode::Recurrent, n_max).unwrap()
    }

    #[test]
    fn rescaling() {
        let set = ContactSet { n: 4, epochs: vec![2, 4] };
        assert_eq!(set.rescale().points, vec![0.0, 0.5, 1.0]);
        let empty = ContactSet { n: 4, epochs: vec![] };
        assert_eq!(empty.rescale().points, vec![0.0]);
    }

    #[test]
    fn strong_repulsion_gives_empty_sets() {
        let k = recurrent(200);
        let s = ContactSampler::new(&k, -50.0, 100, Boundary::FreeWithInfinity).unwrap();
        let empty = replicate(&s, 10_000, 1, |_, set| set.count() == 0).unwrap();
        let freq = empty.iter().filter(|&&e| e).count() as f64 / 1e4;
        assert!(freq >= 0.999);
    }

    /// Exact law of the contact set for `N ≤ 10` by enumeration.
    fn exact_law(k: &ReturnKernel, beta: f64, n: usize, boundary: Boundary) -> HashMap<u32, f64> {
        let log_z = brute_force(k, beta, n, boundary).unwrap().log_z;
        let mut law = HashMap::new();
        for mask in 0u32..(1 << n) {
            let mut w = 1.0;
            let mut last = 0;
            for i in 1..=n {
                if mask >> (i - 1) & 1 == 1 {
                    w *= beta.exp() * k.masses()[i - last];
                    last = i;
                }
            }
            w *= match (boundary, n - last) {
                (_, 0) => 1.0,
                (Boundary::FreeWithInfinity, m) => k.tail(m) + k.mass_infinity(),
                (Boundary::FreeFiniteTail, m) => k.tail(m),
                (Boundary::Constrained, _) => 0.0,
            };
            law.insert(mask, w / log_z.exp());
        }
        law
    }

    fn mask_of(set: &ContactSet) -> u32 {
        set.epochs.iter().fold(0, |acc, &e| acc | 1 << (e - 1))
    }

    #[test]
    fn total_variation_against_enumeration() {
        let k = ReturnKernel::build(0.5, SlowlyVarying::Constant { value: 1.0 }, KernelMode::Transient { sigma_k: 0.6 }, 50)
            .unwrap();
        for (strategy, boundary) in [
            (SearchStrategy::Linear, Boundary::FreeWithInfinity),
            (SearchStrategy::PrefixSearch, Boundary::FreeFiniteTail),
        ] {
            let beta = 0.4;
            let n = 8;
            let law = exact_law(&k, beta, n, boundary);
            let table = PartitionTable::build(&k, beta, n, boundary).unwrap();
            let s = ContactSampler::from_table(table, strategy).unwrap();
            let draws = 1_000_000;
            let masks = replicate(&s, draws, 7, |_, set| mask_of(set)).unwrap();
            let mut counts: HashMap<u32, usize> = HashMap::new();
            for m in masks {
                *counts.entry(m).or_default() += 1;
            }
            let tv: f64 = 0.5
                * law
                    .iter()
                    .map(|(m, p)| (p - *counts.get(m).unwrap_or(&0) as f64 / draws as f64).abs())
                    .sum::<f64>();
            assert!(tv <= 5e-3, "{strategy:?}: {tv}");

            // contact-count law, chi-square
            let mut expected = vec![0.0; n + 1];
            for (m, p) in &law {
                expected[m.count_ones() as usize] += p * draws as f64;
            }
            let mut observed = vec![0usize; n + 1];
            for (m, c) in &counts {
                observed[m.count_ones() as usize] += c;
            }
            let (mut stat, mut dof) = (0.0, 0usize);
            for (e, o) in expected.iter().zip(&observed) {
                if *e > 5.0 {
                    stat += (*o as f64 - e).powi(2) / e;
                    dof += 1;
                }
            }
            let p = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(stat);
            assert!(p > 0.001, "{strategy:?}: p = {p}");
        }
    }

    #[test]
    fn mean_count_matches_moments() {
        let k = recurrent(1000);
        let n = 1000;
        let s = ContactSampler::new(&k, 0.0, n, Boundary::FreeWithInfinity).unwrap();
        let counts = replicate(&s, 100_000, 3, |_, set| set.count() as f64).unwrap();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
        let exact = contact_moments(&k, 0.0, n, Boundary::FreeWithInfinity).unwrap();
        assert!((mean - exact.mean).abs() <= 4.0 * (var / counts.len() as f64).sqrt());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let k = recurrent(500);
        let s = ContactSampler::new(&k, 0.1, 500, Boundary::FreeWithInfinity).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| replicate_statistics(&k, &s, 200, 42).unwrap())
        };
        assert_eq!(run(1), run(3));
        assert_ne!(run(1), replicate_statistics(&k, &s, 200, 43).unwrap());
    }

    #[test]
    fn epochs_are_valid() {
        let k = ReturnKernel::excursion(400).unwrap();
        for boundary in [Boundary::FreeFiniteTail, Boundary::Constrained] {
            let s = ContactSampler::new(&k, 1.0, 400, boundary).unwrap();
            let sets = replicate(&s, 500, 9, |_, set| set.clone()).unwrap();
            for set in sets {
                assert!(set.epochs.windows(2).all(|w| w[0] < w[1]));
                assert!(set.epochs.iter().all(|&e| (1..=400).contains(&e) && e % 2 == 0));
                if boundary == Boundary::Constrained {
                    assert_eq!(set.last(), 400);
                }
                let r = set.rescale();
                assert!(r.points.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }
}
