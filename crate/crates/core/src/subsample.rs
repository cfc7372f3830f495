//! Seeded subsampling without replacement and allocation auditing.
//!
//! [`subsample`] draws a uniformly random `k`-subset of `0..n`. Up to
//! [`FISHER_YATES_MAX_N`] it runs a partial Fisher–Yates shuffle over an
//! index array; above that it switches to selection sampling (Knuth's
//! Algorithm S), which scans `0..n` once and keeps only the `k` chosen
//! indices in memory. Both are exactly uniform over all `C(n, k)` subsets.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::seed::{child_rng, derive_seed, rng_from_seed};

/// Largest population handled with an in-memory index array.
pub const FISHER_YATES_MAX_N: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Each draw is an independent uniform subsample.
    IndependentUniform,
    /// Draws are consecutive blocks of one random permutation, hence disjoint.
    DisjointPartition,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::IndependentUniform => "independent_uniform",
            Strategy::DisjointPartition => "disjoint_partition",
        }
    }
}

/// Sorted, duplicate-free index set drawn from `0..n` with `rng`.
pub fn subsample_with<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > n {
        return domain(format!("cannot draw {k} units from {n} without replacement"));
    }
    let mut chosen = if n <= FISHER_YATES_MAX_N {
        partial_fisher_yates(n, k, rng)
    } else {
        selection_sample(n, k, rng)
    };
    chosen.sort_unstable();
    Ok(chosen)
}

fn partial_fisher_yates<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

fn selection_sample<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k);
    for i in 0..n {
        let needed = k - chosen.len();
        if needed == 0 {
            break;
        }
        // keep i with probability needed / remaining
        if rng.random_range(0..n - i) < needed {
            chosen.push(i);
        }
    }
    chosen
}

/// `k` distinct indices from `0..n`, determined by `seed`.
pub fn subsample(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    subsample_with(n, k, &mut rng_from_seed(seed))
}

/// A set of draws from one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub dataset_size: usize,
    pub draws: Vec<Vec<usize>>,
    pub strategy: Strategy,
    pub master_seed: u64,
}

impl Allocation {
    /// Writes `draw_id,k,indices` rows; indices are comma-joined in one field.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fmt_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["draw_id", "k", "indices"]).map_err(fmt_err)?;
        for (id, draw) in self.draws.iter().enumerate() {
            let indices = draw
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(",");
            w.write_record([id.to_string(), draw.len().to_string(), indices])
                .map_err(fmt_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parses the output of [`Allocation::write_csv`].
    pub fn read_draws_csv(text: &str) -> Result<Vec<Vec<usize>>> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let fmt_err = |e: String| Error::Format(e);
        let mut draws = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| fmt_err(e.to_string()))?;
            let k: usize = record
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| fmt_err(format!("row {row}: bad k")))?;
            let field = record.get(2).unwrap_or("");
            let draw: Vec<usize> = if field.is_empty() {
                Vec::new()
            } else {
                field
                    .split(',')
                    .map(|s| s.parse().map_err(|_| fmt_err(format!("row {row}: bad index {s}"))))
                    .collect::<Result<_>>()?
            };
            if draw.len() != k {
                return Err(fmt_err(format!("row {row}: k={k} but {} indices", draw.len())));
            }
            draws.push(draw);
        }
        Ok(draws)
    }
}

/// Draws one subsample per entry of `sizes`.
///
/// Independent draws use child seeds `derive_seed(master_seed, i)`; a
/// disjoint partition carves consecutive blocks out of one permutation
/// seeded by `master_seed`.
pub fn allocate(
    n: usize,
    sizes: &[usize],
    strategy: Strategy,
    master_seed: u64,
) -> Result<Allocation> {
    let draws = match strategy {
        Strategy::IndependentUniform => sizes
            .iter()
            .enumerate()
            .map(|(i, &k)| subsample(n, k, derive_seed(master_seed, i as u64)))
            .collect::<Result<Vec<_>>>()?,
        Strategy::DisjointPartition => {
            let total: usize = sizes.iter().sum();
            if total > n {
                let k = sizes.iter().copied().max().unwrap_or(0).max(1);
                return Err(Error::Capacity(format!(
                    "disjoint allocation of {total} units exceeds the dataset size {n}; \
                     at most floor(n/k) = {} disjoint draws of size {k} fit",
                    n / k
                )));
            }
            let mut rng = rng_from_seed(master_seed);
            let permuted = partial_fisher_yates(n, total, &mut rng);
            let mut offset = 0;
            sizes
                .iter()
                .map(|&k| {
                    let mut block = permuted[offset..offset + k].to_vec();
                    block.sort_unstable();
                    offset += k;
                    block
                })
                .collect()
        }
    };
    Ok(Allocation {
        dataset_size: n,
        draws,
        strategy,
        master_seed,
    })
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Symmetric matrix of pairwise intersection sizes; the diagonal holds draw sizes.
pub fn overlap_matrix(allocation: &Allocation) -> Vec<Vec<usize>> {
    let draws = &allocation.draws;
    let c = draws.len();
    let mut m = vec![vec![0; c]; c];
    for i in 0..c {
        m[i][i] = draws[i].len();
        for j in i + 1..c {
            let v = sorted_intersection_len(&draws[i], &draws[j]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Largest pairwise overlap among `draws`, by counting co-occurrences per unit.
fn max_pairwise_overlap(n: usize, draws: &[Vec<usize>]) -> usize {
    let c = draws.len();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (d, draw) in draws.iter().enumerate() {
        for &u in draw {
            members[u].push(d as u32);
        }
    }
    let mut pair_counts = vec![0usize; c * c];
    let mut best = 0;
    for list in &members {
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                let slot = &mut pair_counts[i as usize * c + j as usize];
                *slot += 1;
                best = best.max(*slot);
            }
        }
    }
    best
}

/// Fraction of `trials` in which `studies` independent `k`-subsamples of
/// `0..n` have some pairwise overlap of at least `ell`.
///
/// Trial `t` uses child seed `derive_seed(master_seed, t)`, so the result does
/// not depend on the number of worker threads.
pub fn empirical_max_overlap(
    n: usize,
    k: usize,
    studies: usize,
    ell: usize,
    trials: usize,
    master_seed: u64,
) -> Result<f64> {
    if k > n {
        return domain(format!("cannot draw {k} units from {n} without replacement"));
    }
    if trials == 0 {
        return domain("trials must be >= 1");
    }
    if studies < 2 {
        return Ok(0.0);
    }
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = child_rng(master_seed, t as u64);
            let draws: Vec<Vec<usize>> = (0..studies)
                .map(|_| subsample_with(n, k, &mut rng).expect("k <= n checked"))
                .collect();
            usize::from(max_pairwise_overlap(n, &draws) >= ell)
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_cases() {
        assert_eq!(subsample(7, 7, 1).unwrap(), (0..7).collect::<Vec<_>>());
        assert!(subsample(7, 0, 1).unwrap().is_empty());
        assert!(subsample(3, 4, 1).is_err());
    }

    #[test]
    fn draws_are_sorted_distinct_in_range() {
        for seed in 0..50 {
            let s = subsample(100, 30, seed).unwrap();
            assert_eq!(s.len(), 30);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 100));
        }
        assert_eq!(subsample(1000, 10, 9).unwrap(), subsample(1000, 10, 9).unwrap());
    }

    #[test]
    fn selection_sampling_is_valid() {
        let mut rng = rng_from_seed(3);
        let mut hits = vec![0usize; 20];
        for _ in 0..20_000 {
            let s = selection_sample(20, 5, &mut rng);
            assert_eq!(s.len(), 5);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            for i in s {
                hits[i] += 1;
            }
        }
        // marginal inclusion 1/4 each; sd of a count is about 61
        for h in hits {
            assert!((h as f64 - 5_000.0).abs() < 300.0, "{h}");
        }
    }

    #[test]
    fn partition_allocations() {
        let a = allocate(100, &[50, 50], Strategy::DisjointPartition, 11).unwrap();
        let m = overlap_matrix(&a);
        assert_eq!(m, vec![vec![50, 0], vec![0, 50]]);
        let err = allocate(100, &[60, 60], Strategy::DisjointPartition, 11).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
        assert!(err.to_string().contains("floor(n/k) = 1"));
    }

    #[test]
    fn identical_draws_overlap_fully() {
        let draw: Vec<usize> = vec![1, 4, 6, 9];
        let a = Allocation {
            dataset_size: 10,
            draws: vec![draw.clone(), draw.clone(), draw],
            strategy: Strategy::IndependentUniform,
            master_seed: 0,
        };
        let m = overlap_matrix(&a);
        assert!(m.iter().flatten().all(|&v| v == 4));
        assert_eq!(max_pairwise_overlap(10, &a.draws), 4);
    }

    #[test]
    fn allocation_is_seed_deterministic() {
        let a = allocate(500, &[40, 70, 20], Strategy::IndependentUniform, 77).unwrap();
        let b = allocate(500, &[40, 70, 20], Strategy::IndependentUniform, 77).unwrap();
        assert_eq!(a, b);
        let c = allocate(500, &[40, 70, 20], Strategy::IndependentUniform, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn csv_export_round_trips() {
        let a = allocate(50, &[3, 0, 5], Strategy::IndependentUniform, 5).unwrap();
        let text = a.to_csv_string();
        assert!(text.starts_with("draw_id,k,indices\n"));
        assert_eq!(Allocation::read_draws_csv(&text).unwrap(), a.draws);
    }

    #[test]
    fn empirical_overlap_trivial_cases() {
        assert_eq!(empirical_max_overlap(50, 10, 1, 1, 20, 1).unwrap(), 0.0);
        assert_eq!(empirical_max_overlap(50, 10, 3, 0, 20, 1).unwrap(), 1.0);
        assert!(empirical_max_overlap(50, 10, 3, 0, 0, 1).is_err());
        // k > n/2 forces overlap of at least 2k - n
        assert_eq!(empirical_max_overlap(10, 8, 2, 6, 20, 1).unwrap(), 1.0);
    }
}
