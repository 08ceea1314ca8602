//! Exact uniform sampling from `S_{n, alpha}`.
//!
//! With `k` elements left, the cycle through a fixed fresh element has
//! length `j` with probability `(k-1)...(k-j+1) a_{k-j} / a_k`. Successive
//! probabilities differ by the factor `1 / r_{k-j}` where
//! `r_k = a_k / (k a_{k-1})`, so one table of ratios drives every step.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{CycleError, Result};
use crate::exact::{count_constrained, Constraint, CountTable};
use crate::saddle::{moments, MomentPair};
use crate::stats::{ks_sample_vs_normal, summarize, KsReport, MomentSummary};

/// Multiset of cycle lengths; `counts[j]` is the number of `j`-cycles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleType {
    n: usize,
    counts: Vec<usize>,
}

impl CycleType {
    pub fn from_lengths(lengths: &[usize]) -> Self {
        let max = lengths.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0; max + 1];
        for &l in lengths {
            counts[l] += 1;
        }
        CycleType {
            n: lengths.iter().sum(),
            counts,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self, j: usize) -> usize {
        self.counts.get(j).copied().unwrap_or(0)
    }

    pub fn total_cycles(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn longest(&self) -> usize {
        self.counts.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    /// Nonzero `(j, c_j)` pairs, increasing in `j`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (j, c))
    }
}

impl Serialize for CycleType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, usize> = self.iter().map(|(j, c)| (j.to_string(), c)).collect();
        map.serialize(serializer)
    }
}

/// Length of the next cycle when `k >= 1` elements remain.
fn draw_cycle_length<R: Rng + ?Sized>(table: &CountTable, k: usize, rng: &mut R) -> usize {
    let top = table.constraint().alpha().min(k);
    let target: f64 = rng.random();
    let mut p = 1.0 / (k as f64 * table.step_ratio(k));
    let mut cumulative = p;
    for j in 1..top {
        if target < cumulative {
            return j;
        }
        p /= table.step_ratio(k - j);
        cumulative += p;
    }
    top
}

pub fn sample_cycle_type<R: Rng + ?Sized>(table: &CountTable, rng: &mut R) -> CycleType {
    let alpha = table.constraint().alpha();
    let mut counts = vec![0; alpha + 1];
    let mut k = table.constraint().n();
    while k > 0 {
        let j = draw_cycle_length(table, k, rng);
        counts[j] += 1;
        k -= j;
    }
    CycleType {
        n: table.constraint().n(),
        counts,
    }
}

/// Just the number of cycles, without building the type.
pub fn sample_cycle_total<R: Rng + ?Sized>(table: &CountTable, rng: &mut R) -> usize {
    let mut k = table.constraint().n();
    let mut cycles = 0;
    while k > 0 {
        k -= draw_cycle_length(table, k, rng);
        cycles += 1;
    }
    cycles
}

/// A uniform element of `S_{n, alpha}` in one-line notation
/// (`perm[i]` is the image of `i`).
pub fn sample_permutation<R: Rng + ?Sized>(table: &CountTable, rng: &mut R) -> Vec<usize> {
    let n = table.constraint().n();
    let mut perm = vec![0; n];
    let mut free: Vec<usize> = (0..n).collect();
    while let Some(first) = free.pop() {
        let j = draw_cycle_length(table, free.len() + 1, rng);
        let mut current = first;
        for _ in 1..j {
            let next = free.swap_remove(rng.random_range(0..free.len()));
            perm[current] = next;
            current = next;
        }
        perm[current] = first;
    }
    perm
}

/// Generator for replicate `r`: stream `r` of the seeded ChaCha8 generator.
pub fn replicate_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRun {
    pub constraint: Constraint,
    pub seed: u64,
    pub replicates: usize,
    pub moments: MomentPair<f64>,
    /// `(C - m) / sqrt(v)` per draw, in replicate order.
    pub standardized_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n: usize,
    pub alpha: usize,
    pub seed: u64,
    pub replicates: usize,
    pub m: f64,
    pub v: f64,
    pub standardized: MomentSummary,
    pub ks: KsReport,
}

impl SampleRun {
    pub fn summary(&self) -> Result<SampleSummary> {
        Ok(SampleSummary {
            n: self.constraint.n(),
            alpha: self.constraint.alpha(),
            seed: self.seed,
            replicates: self.replicates,
            m: self.moments.m,
            v: self.moments.v,
            standardized: summarize(&self.standardized_values)?,
            ks: ks_sample_vs_normal(&self.standardized_values)?,
        })
    }

    /// Comment line with the run parameters, a `standardized` header, then
    /// one value per line.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# n={}, alpha={}, seed={}, m={}, v={}\nstandardized\n",
            self.constraint.n(),
            self.constraint.alpha(),
            self.seed,
            self.moments.m,
            self.moments.v
        );
        for v in &self.standardized_values {
            writeln!(out, "{v}").expect("writing to a String cannot fail");
        }
        out
    }
}

pub fn run_clt_experiment(c: &Constraint, replicates: usize, seed: u64) -> Result<SampleRun> {
    let pair = moments::<f64>(c)?;
    let table = count_constrained(c)?;
    run_clt_experiment_with(&table, pair, replicates, seed)
}

/// Draws `replicates` cycle counts in parallel and standardizes them by
/// the given moments.
pub fn run_clt_experiment_with(
    table: &CountTable,
    pair: MomentPair<f64>,
    replicates: usize,
    seed: u64,
) -> Result<SampleRun> {
    if replicates == 0 {
        return Err(CycleError::Domain("replicates must be positive".into()));
    }
    if !(pair.v > 0.0) {
        return Err(CycleError::Degenerate(format!(
            "predicted variance {} is not positive",
            pair.v
        )));
    }
    let sd = pair.v.sqrt();
    let standardized_values = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            (sample_cycle_total(table, &mut rng) as f64 - pair.m) / sd
        })
        .collect();
    Ok(SampleRun {
        constraint: *table.constraint(),
        seed,
        replicates,
        moments: pair,
        standardized_values,
    })
}
