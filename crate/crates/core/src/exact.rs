//! Exact counting of permutations whose cycles are all at most `alpha` long,
//! and the exact law of their total number of cycles.
//!
//! Counts are arbitrary-precision integers. The bivariate table behind the
//! cycle-count law is kept in floating point, one rescaled row per number
//! of elements, because only ratios within the last row are ever needed.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::error::{CycleError, Result};
use crate::scalar::CompensatedSum;

pub const DEFAULT_COUNT_CAP: usize = 100_000;
pub const DEFAULT_DISTRIBUTION_CAP: usize = 5_000;
/// Largest `n` the enumeration oracle accepts (9! = 362880 permutations).
pub const BRUTE_FORCE_MAX_N: usize = 9;
/// Environment variable overriding [`Limits::max_count_n`].
pub const MAX_N_ENV: &str = "CYCLECAP_MAX_N";

/// Hard caps on the size of exact computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub max_count_n: usize,
    pub max_distribution_n: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_count_n: DEFAULT_COUNT_CAP,
            max_distribution_n: DEFAULT_DISTRIBUTION_CAP,
        }
    }
}

impl Limits {
    /// Defaults, with the count cap taken from `CYCLECAP_MAX_N` when set.
    pub fn from_env() -> Result<Self> {
        let mut limits = Self::default();
        if let Ok(raw) = std::env::var(MAX_N_ENV) {
            limits.max_count_n = raw.trim().parse().map_err(|_| {
                CycleError::Domain(format!("{MAX_N_ENV}={raw:?} is not a non-negative integer"))
            })?;
        }
        Ok(limits)
    }

    fn check_count(&self, n: usize) -> Result<()> {
        if n > self.max_count_n {
            return Err(CycleError::Resource {
                what: "exact counts",
                n,
                cap: self.max_count_n,
            });
        }
        Ok(())
    }

    fn check_distribution(&self, n: usize) -> Result<()> {
        if n > self.max_distribution_n {
            return Err(CycleError::Resource {
                what: "exact cycle-count distribution",
                n,
                cap: self.max_distribution_n,
            });
        }
        Ok(())
    }
}

/// The pair `(n, alpha)`: permutations of `n` elements with every cycle of
/// length at most `alpha`.
///
/// `alpha > n` is stored as `alpha = n`; the original request is kept for
/// reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Constraint {
    n: usize,
    alpha: usize,
    requested_alpha: usize,
}

impl Constraint {
    pub fn new(n: usize, alpha: usize) -> Result<Self> {
        if n == 0 {
            return Err(CycleError::Domain("n must be at least 1".into()));
        }
        if alpha == 0 {
            return Err(CycleError::Domain("alpha must be at least 1".into()));
        }
        Ok(Self {
            n,
            alpha: alpha.min(n),
            requested_alpha: alpha,
        })
    }

    /// `alpha = ceil(n^a)` for `0 < a < 1`.
    pub fn with_exponent(n: usize, a: f64) -> Result<Self> {
        Self::new(n, alpha_from_exponent(n, a)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Effective cap `min(alpha, n)`.
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn requested_alpha(&self) -> usize {
        self.requested_alpha
    }

    /// `ceil(n / alpha)`, the fewest cycles any admissible permutation has.
    pub fn min_cycles(&self) -> usize {
        self.n.div_ceil(self.alpha)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, alpha={})", self.n, self.alpha)
    }
}

/// `ceil(n^a)`, with values within 1e-9 relative of an integer snapped to
/// that integer so that e.g. `(10^6)^0.5` gives exactly 1000.
pub fn alpha_from_exponent(n: usize, a: f64) -> Result<usize> {
    if !(a > 0.0 && a < 1.0) {
        return Err(CycleError::Domain(format!(
            "exponent a = {a} must lie in (0, 1)"
        )));
    }
    if n == 0 {
        return Err(CycleError::Domain("n must be at least 1".into()));
    }
    let raw = (n as f64).powf(a);
    let nearest = raw.round();
    let alpha = if (raw - nearest).abs() <= 1e-9 * raw {
        nearest
    } else {
        raw.ceil()
    };
    Ok((alpha as usize).max(1))
}

/// Yields `a_0, a_1, ...` with `a_k = |S_{k, min(alpha, k)}|`.
///
/// Uses `a_k = k a_{k-1} - (k-1)(k-2)...(k-alpha) a_{k-1-alpha}` for
/// `k > alpha` (and `a_k = k!` below), which follows from
/// `(1 - z) f'(z) = (1 - z^alpha) f(z)` for `f = exp(sum_{j<=alpha} z^j / j)`.
/// Only the last `alpha + 1` values are retained.
struct CountRecurrence {
    alpha: usize,
    k: usize,
    window: VecDeque<BigUint>,
    /// (k-1)(k-2)...(k-alpha) for the next k once k > alpha.
    falling: BigUint,
}

impl CountRecurrence {
    fn new(alpha: usize) -> Self {
        Self {
            alpha,
            k: 0,
            window: VecDeque::with_capacity(alpha + 2),
            falling: BigUint::one(),
        }
    }
}

impl Iterator for CountRecurrence {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        let k = self.k;
        let alpha = self.alpha;
        let value = if k == 0 {
            BigUint::one()
        } else {
            let prev = self.window.back().expect("a_{k-1} present");
            let mut v = prev * (k as u64);
            if k <= alpha {
                // falling ends up as alpha! when k = alpha + 1 comes round
                self.falling *= k as u64;
            } else {
                if k > alpha + 1 {
                    self.falling *= (k - 1) as u64;
                    self.falling /= (k - 1 - alpha) as u64;
                }
                let old = self.window.front().expect("a_{k-1-alpha} present");
                v -= &self.falling * old;
            }
            v
        };
        self.window.push_back(value.clone());
        if self.window.len() > alpha + 1 {
            self.window.pop_front();
        }
        self.k += 1;
        Some(value)
    }
}

/// Exact counts `a_0..a_n` for a fixed `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    constraint: Constraint,
    counts: Vec<BigUint>,
    /// `a_k / (k a_{k-1})` in floating point; index 0 holds 1.
    step_ratios: Vec<f64>,
}

impl CountTable {
    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// `a_k`; panics for `k > n`.
    pub fn count(&self, k: usize) -> &BigUint {
        &self.counts[k]
    }

    /// `a_n = |S_{n, alpha}|`.
    pub fn total(&self) -> &BigUint {
        self.counts.last().expect("table is never empty")
    }

    /// `a_k / (k a_{k-1})`, which lies in `(0, 1]`.
    pub fn step_ratio(&self, k: usize) -> f64 {
        self.step_ratios[k]
    }
}

impl Serialize for CountTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CountTable", 3)?;
        st.serialize_field("n", &self.constraint.n)?;
        st.serialize_field("alpha", &self.constraint.alpha)?;
        let counts: Vec<String> = self.counts.iter().map(|c| c.to_str_radix(10)).collect();
        st.serialize_field("counts", &counts)?;
        st.end()
    }
}

/// Full table `a_0..a_n` under the default caps.
pub fn count_constrained(c: &Constraint) -> Result<CountTable> {
    count_constrained_with(c, &Limits::default())
}

pub fn count_constrained_with(c: &Constraint, limits: &Limits) -> Result<CountTable> {
    limits.check_count(c.n)?;
    let counts: Vec<BigUint> = CountRecurrence::new(c.alpha).take(c.n + 1).collect();
    let mut step_ratios = Vec::with_capacity(counts.len());
    step_ratios.push(1.0);
    for k in 1..counts.len() {
        let den = &counts[k - 1] * (k as u64);
        step_ratios.push(big_ratio(&counts[k], &den));
    }
    Ok(CountTable {
        constraint: *c,
        counts,
        step_ratios,
    })
}

/// Just `a_n`, keeping only `alpha + 1` big integers alive.
pub fn count_exact(c: &Constraint) -> Result<BigUint> {
    count_exact_with(c, &Limits::default())
}

pub fn count_exact_with(c: &Constraint, limits: &Limits) -> Result<BigUint> {
    limits.check_count(c.n)?;
    Ok(CountRecurrence::new(c.alpha)
        .nth(c.n)
        .expect("recurrence is infinite"))
}

/// Natural logarithm of a positive big integer.
pub fn big_ln(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().expect("64-bit value");
    top.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// `num / den` as `f64`, valid even when both exceed the `f64` range.
pub fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    let bits = num.bits().max(den.bits());
    let shift = bits.saturating_sub(1000);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// Exact law of the total number of cycles `C` under the uniform measure on
/// `S_{n, alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleCountDistribution {
    constraint: Constraint,
    support_min: usize,
    /// `probs[i] = P(C = support_min + i)`, up to `support_max = n`.
    probs: Vec<f64>,
}

impl CycleCountDistribution {
    /// Builds a distribution from explicit atoms; atoms must lie in
    /// `[ceil(n/alpha), n]`, be non-negative and sum to 1 within 1e-9.
    pub fn from_atoms(
        constraint: Constraint,
        atoms: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        let support_min = constraint.min_cycles();
        let mut probs = vec![0.0; constraint.n - support_min + 1];
        for (k, p) in atoms {
            if k < support_min || k > constraint.n {
                return Err(CycleError::Domain(format!(
                    "atom {k} outside support [{support_min}, {}]",
                    constraint.n
                )));
            }
            if !(p >= 0.0) {
                return Err(CycleError::Domain(format!(
                    "negative probability {p} at {k}"
                )));
            }
            probs[k - support_min] += p;
        }
        let total: f64 = probs
            .iter()
            .copied()
            .collect::<CompensatedSum<f64>>()
            .value();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CycleError::Domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            constraint,
            support_min,
            probs,
        })
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn support_min(&self) -> usize {
        self.support_min
    }

    pub fn support_max(&self) -> usize {
        self.constraint.n
    }

    /// `P(C = k)`; zero outside the support.
    pub fn prob(&self, k: usize) -> f64 {
        k.checked_sub(self.support_min)
            .and_then(|i| self.probs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// `(k, P(C = k))` over the support, in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.support_min + i, p))
    }

    pub fn to_map(&self) -> BTreeMap<usize, f64> {
        self.iter().collect()
    }
}

struct ProbMap<'a>(&'a CycleCountDistribution);

impl Serialize for ProbMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.probs.len()))?;
        for (k, p) in self.0.iter() {
            map.serialize_entry(&k.to_string(), &p)?;
        }
        map.end()
    }
}

impl Serialize for CycleCountDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CycleCountDistribution", 5)?;
        st.serialize_field("n", &self.constraint.n)?;
        st.serialize_field("alpha", &self.constraint.alpha)?;
        st.serialize_field("support_min", &self.support_min)?;
        st.serialize_field("support_max", &self.constraint.n)?;
        st.serialize_field("probs", &ProbMap(self))?;
        st.end()
    }
}

/// A contiguous run of values `g[lo], g[lo+1], ...`, all scaled by
/// `exp(log_scale)`. An empty row is the zero row.
#[derive(Debug, Clone)]
struct ScaledRow {
    lo: usize,
    vals: Vec<f64>,
    log_scale: f64,
}

impl ScaledRow {
    fn unit(at: usize) -> Self {
        Self {
            lo: at,
            vals: vec![1.0],
            log_scale: 0.0,
        }
    }

    fn add_assign(&mut self, other: &ScaledRow) {
        if other.vals.is_empty() {
            return;
        }
        if self.vals.is_empty() {
            *self = other.clone();
            return;
        }
        let scale = self.log_scale.max(other.log_scale);
        let own = (self.log_scale - scale).exp();
        let theirs = (other.log_scale - scale).exp();
        let lo = self.lo.min(other.lo);
        let hi = (self.lo + self.vals.len()).max(other.lo + other.vals.len());
        if lo < self.lo || hi > self.lo + self.vals.len() {
            let mut vals = vec![0.0; hi - lo];
            let off = self.lo - lo;
            for (i, v) in self.vals.iter().enumerate() {
                vals[off + i] = v * own;
            }
            self.vals = vals;
            self.lo = lo;
        } else if own != 1.0 {
            self.vals.iter_mut().for_each(|v| *v *= own);
        }
        let off = other.lo - self.lo;
        for (i, v) in other.vals.iter().enumerate() {
            self.vals[off + i] += v * theirs;
        }
        self.log_scale = scale;
    }

    fn normalize(&mut self) {
        let max = self.vals.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            self.vals.iter_mut().for_each(|v| *v /= max);
            self.log_scale += max.ln();
        }
    }
}

/// Exact law of `C` under the default caps.
pub fn exact_cycle_count_distribution(c: &Constraint) -> Result<CycleCountDistribution> {
    exact_cycle_count_distribution_with(c, &Limits::default())
}

/// Row `k` holds `g_{k,m} = b_{k,m} / k!` where `b_{k,m}` counts admissible
/// permutations of `k` elements with `m` cycles; `k g_{k,m}` is the sum of
/// `g_{k-j, m-1}` over `j = 1..min(alpha, k)`. That window sum over the
/// previous `alpha` rows is assembled from block suffix and prefix sums, so
/// each row costs `O(k)` additions of non-negative terms.
pub fn exact_cycle_count_distribution_with(
    c: &Constraint,
    limits: &Limits,
) -> Result<CycleCountDistribution> {
    limits.check_distribution(c.n)?;
    let n = c.n;
    let alpha = c.alpha;

    let row0 = ScaledRow::unit(0);
    let mut block_start = 0usize;
    let mut keep_rows = block_start + alpha < n;
    let mut cur_rows: Vec<ScaledRow> = if keep_rows {
        vec![row0.clone()]
    } else {
        Vec::new()
    };
    let mut cur_prefix = row0.clone();
    let mut prev_suffix: Vec<ScaledRow> = Vec::new();
    let mut last = row0;

    for k in 1..=n {
        let start = k.saturating_sub(alpha);
        let mut window = if start == block_start {
            cur_prefix.clone()
        } else {
            let mut w = prev_suffix[start - (block_start - alpha)].clone();
            w.add_assign(&cur_prefix);
            w
        };
        // shift m -> m + 1 and divide by k
        window.lo += 1;
        window.log_scale -= (k as f64).ln();
        window.normalize();
        let row = window;

        if k % alpha == 0 {
            if keep_rows {
                let mut suffix = vec![
                    ScaledRow {
                        lo: 0,
                        vals: Vec::new(),
                        log_scale: 0.0
                    };
                    cur_rows.len()
                ];
                let mut acc = ScaledRow {
                    lo: 0,
                    vals: Vec::new(),
                    log_scale: 0.0,
                };
                for i in (0..cur_rows.len()).rev() {
                    acc.add_assign(&cur_rows[i]);
                    suffix[i] = acc.clone();
                }
                prev_suffix = suffix;
            }
            block_start = k;
            keep_rows = block_start + alpha < n;
            cur_rows = if keep_rows {
                vec![row.clone()]
            } else {
                Vec::new()
            };
            cur_prefix = row.clone();
        } else {
            if keep_rows {
                cur_rows.push(row.clone());
            }
            cur_prefix.add_assign(&row);
        }
        last = row;
    }

    let support_min = c.min_cycles();
    debug_assert_eq!(last.lo, support_min);
    debug_assert_eq!(last.lo + last.vals.len(), n + 1);
    let total = last
        .vals
        .iter()
        .copied()
        .collect::<CompensatedSum<f64>>()
        .value();
    let probs = last.vals.iter().map(|v| v / total).collect();
    Ok(CycleCountDistribution {
        constraint: *c,
        support_min,
        probs,
    })
}

/// `(mean, variance)` of a cycle-count law.
pub fn distribution_moments(d: &CycleCountDistribution) -> (f64, f64) {
    let mean = d
        .iter()
        .map(|(k, p)| k as f64 * p)
        .collect::<CompensatedSum<f64>>()
        .value();
    let var = d
        .iter()
        .map(|(k, p)| {
            let dk = k as f64 - mean;
            dk * dk * p
        })
        .collect::<CompensatedSum<f64>>()
        .value();
    (mean, var.max(0.0))
}

/// Lengths of the cycles of `perm` (one-line notation, `perm[i]` is the
/// image of `i`), in order of their smallest element.
pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        out.push(len);
    }
    out
}

/// Rearranges `p` into the next permutation in lexicographic order;
/// returns `false` after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Enumerates all `n!` permutations and tallies those whose cycles are all
/// at most `alpha` long. Only for `n <= 9`.
pub fn brute_force_oracle(c: &Constraint) -> Result<(BigUint, CycleCountDistribution)> {
    if c.n > BRUTE_FORCE_MAX_N {
        return Err(CycleError::Domain(format!(
            "brute-force enumeration is limited to n <= {BRUTE_FORCE_MAX_N}, got {}",
            c.n
        )));
    }
    let mut tally = vec![0u64; c.n + 1];
    let mut perm: Vec<usize> = (0..c.n).collect();
    loop {
        let lens = cycle_lengths(&perm);
        if lens.iter().all(|&l| l <= c.alpha) {
            tally[lens.len()] += 1;
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let total: u64 = tally.iter().sum();
    let support_min = c.min_cycles();
    let probs = tally[support_min..]
        .iter()
        .map(|&t| t as f64 / total as f64)
        .collect();
    Ok((
        BigUint::from(total),
        CycleCountDistribution {
            constraint: *c,
            support_min,
            probs,
        },
    ))
}
