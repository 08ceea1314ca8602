//! Normal CDF, Kolmogorov-Smirnov distances against it, and Pearson
//! chi-square goodness of fit.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::error::{CycleError, Result};
use crate::exact::CycleCountDistribution;
use crate::scalar::CompensatedSum;

/// Standard normal CDF.
pub fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    Exact,
    Draws(usize),
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::Exact => serializer.serialize_str("exact"),
            SampleSize::Draws(n) => serializer.serialize_u64(*n as u64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub distance: f64,
    pub sample_size: SampleSize,
    /// Point (on the standardized scale) where the sup is attained.
    pub location_of_max: f64,
}

/// Sup-distance between the CDF of `(C - m)/sqrt(v)` and `phi`, checking
/// both sides of every atom.
pub fn ks_exact_vs_normal(d: &CycleCountDistribution, m: f64, v: f64) -> Result<KsReport> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(CycleError::Degenerate(format!(
            "variance {v} is not positive"
        )));
    }
    let sd = v.sqrt();
    let mut below = CompensatedSum::<f64>::new();
    let mut best = (0.0f64, f64::NAN);
    for (k, p) in d.iter() {
        let z = (k as f64 - m) / sd;
        let normal = phi(z);
        let left = (below.value() - normal).abs();
        below.add(p);
        let right = (below.value().min(1.0) - normal).abs();
        let gap = left.max(right);
        if gap > best.0 || best.1.is_nan() {
            best = (gap, z);
        }
    }
    Ok(KsReport {
        distance: best.0.min(1.0),
        sample_size: SampleSize::Exact,
        location_of_max: best.1,
    })
}

/// One-sample KS statistic of `values` against `phi`.
pub fn ks_sample_vs_normal(values: &[f64]) -> Result<KsReport> {
    if values.is_empty() {
        return Err(CycleError::Empty);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(CycleError::Domain("sample contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut best = (0.0f64, sorted[0]);
    for (i, &x) in sorted.iter().enumerate() {
        let f = phi(x);
        let gap = ((i + 1) as f64 / n - f).max(f - i as f64 / n);
        if gap > best.0 {
            best = (gap, x);
        }
    }
    Ok(KsReport {
        distance: best.0,
        sample_size: SampleSize::Draws(values.len()),
        location_of_max: best.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance; 0 for a single value.
    pub variance: f64,
}

pub fn summarize(values: &[f64]) -> Result<MomentSummary> {
    if values.is_empty() {
        return Err(CycleError::Empty);
    }
    let n = values.len() as f64;
    let mean = values
        .iter()
        .copied()
        .collect::<CompensatedSum<f64>>()
        .value()
        / n;
    let ss = values
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<CompensatedSum<f64>>()
        .value();
    let variance = if values.len() > 1 {
        ss / (n - 1.0)
    } else {
        0.0
    };
    Ok(MomentSummary {
        count: values.len(),
        mean,
        variance,
    })
}

pub const DEFAULT_MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
}

impl ChiSquare {
    /// Whether the statistic stays below the tabulated critical value.
    pub fn passes(&self, significance: f64) -> Result<bool> {
        Ok(self.statistic <= chi_square_critical(self.dof, significance)?)
    }
}

pub fn chi_square_gof(
    observed: &BTreeMap<usize, u64>,
    expected: &BTreeMap<usize, f64>,
    total: u64,
) -> Result<ChiSquare> {
    chi_square_gof_with(observed, expected, total, DEFAULT_MIN_EXPECTED)
}

/// Pearson statistic after merging, in key order, consecutive bins until
/// each group's expected count reaches `min_expected`; a short tail group
/// joins the previous one. An observation in a bin of probability 0 gives
/// an infinite statistic.
pub fn chi_square_gof_with(
    observed: &BTreeMap<usize, u64>,
    expected: &BTreeMap<usize, f64>,
    total: u64,
    min_expected: f64,
) -> Result<ChiSquare> {
    let mass = expected
        .values()
        .copied()
        .collect::<CompensatedSum<f64>>()
        .value();
    if (mass - 1.0).abs() > 1e-9 || expected.values().any(|p| !(*p >= 0.0)) {
        return Err(CycleError::Domain(format!(
            "expected probabilities sum to {mass}, not 1"
        )));
    }
    if observed.values().sum::<u64>() != total {
        return Err(CycleError::Domain(
            "observed counts do not add up to total".into(),
        ));
    }
    let impossible = observed
        .iter()
        .any(|(k, &o)| o > 0 && expected.get(k).copied().unwrap_or(0.0) == 0.0);
    let mut keys: Vec<usize> = expected.keys().chain(observed.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();

    let total_f = total as f64;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut open = (0.0, 0.0);
    for k in keys {
        open.0 += observed.get(&k).copied().unwrap_or(0) as f64;
        open.1 += expected.get(&k).copied().unwrap_or(0.0) * total_f;
        if open.1 >= min_expected {
            groups.push(open);
            open = (0.0, 0.0);
        }
    }
    if open.0 > 0.0 || open.1 > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += open.0;
                last.1 += open.1;
            }
            None => groups.push(open),
        }
    }
    if groups.len() < 2 {
        return Err(CycleError::AllBinsMerged);
    }
    let dof = groups.len() - 1;
    if impossible {
        return Ok(ChiSquare {
            statistic: f64::INFINITY,
            dof,
        });
    }
    let statistic = groups
        .iter()
        .map(|(o, e)| (o - e) * (o - e) / e)
        .collect::<CompensatedSum<f64>>()
        .value();
    Ok(ChiSquare { statistic, dof })
}

pub const MAX_TABULATED_DOF: usize = 50;

/// Upper chi-square quantiles for dof 1..=50.
const CRITICAL_1E2: [f64; MAX_TABULATED_DOF] = [
    6.6348966, 9.2103404, 11.3448667, 13.2767041, 15.0862725, 16.8118938, 18.4753069, 20.090235,
    21.6659943, 23.2092512, 24.7249703, 26.2169673, 27.6882496, 29.1412377, 30.5779142, 31.9999269,
    33.4086636, 34.8053057, 36.1908691, 37.5662348, 38.9321727, 40.2893604, 41.6383981, 42.9798201,
    44.3141049, 45.6416827, 46.9629421, 48.2782358, 49.5878845, 50.8921813, 52.1913948, 53.4857718,
    54.7755398, 56.0609087, 57.3420734, 58.6192145, 59.8925, 61.1620868, 62.428121, 63.6907398,
    64.9500713, 66.2062363, 67.4593479, 68.709513, 69.9568321, 71.2014002, 72.4433074, 73.6826385,
    74.9194743, 76.1538912,
];
const CRITICAL_1E3: [f64; MAX_TABULATED_DOF] = [
    10.8275662, 13.8155106, 16.2662362, 18.466827, 20.5150057, 22.4577445, 24.3218863, 26.1244816,
    27.8771649, 29.5882984, 31.2641336, 32.9094904, 34.528179, 36.1232737, 37.6972982, 39.2523548,
    40.7902167, 42.3123963, 43.820196, 45.3147466, 46.797038, 48.2679423, 49.7282325, 51.1785978,
    52.6196558, 54.0519624, 55.4760202, 56.8922854, 58.3011735, 59.7030643, 61.0983061, 62.4872191,
    63.8700985, 65.2472175, 66.6188288, 67.9851676, 69.3464525, 70.7028874, 72.054663, 73.4019575,
    74.7449384, 76.0837627, 77.4185782, 78.7495242, 80.076732, 81.4003257, 82.7204225, 84.0371337,
    85.3505646, 86.6608152,
];
const CRITICAL_1E4: [f64; MAX_TABULATED_DOF] = [
    15.1367052, 18.4206807, 21.1075135, 23.5127424, 25.744832, 27.8563412, 29.8775039, 31.827628,
    33.7199484, 35.5640139, 37.3669864, 39.1344039, 40.870655, 42.579289, 44.2632249, 45.9248991,
    47.5663696, 49.1893945, 50.7954897, 52.3859733, 53.9620001, 55.5245888, 57.0746431, 58.6129697,
    60.1402919, 61.6572613, 63.1644674, 64.6624458, 66.1516846, 67.6326303, 69.1056923, 70.5712476,
    72.0296438, 73.4812025, 74.9262219, 76.364979, 77.7977317, 79.2247208, 80.6461713, 82.0622938,
    83.4732861, 84.8793338, 86.2806116, 87.6772843, 89.0695071, 90.457427, 91.8411829, 93.2209063,
    94.596722, 95.9687485,
];

/// Critical value at significance 1e-2, 1e-3 or 1e-4 for `1 <= dof <= 50`.
pub fn chi_square_critical(dof: usize, significance: f64) -> Result<f64> {
    let table = if significance == 1e-2 {
        &CRITICAL_1E2
    } else if significance == 1e-3 {
        &CRITICAL_1E3
    } else if significance == 1e-4 {
        &CRITICAL_1E4
    } else {
        return Err(CycleError::Domain(format!(
            "no table for significance {significance}"
        )));
    };
    if dof == 0 || dof > MAX_TABULATED_DOF {
        return Err(CycleError::Domain(format!(
            "dof {dof} outside 1..={MAX_TABULATED_DOF}"
        )));
    }
    Ok(table[dof - 1])
}
