//! Asymptotic toolkit: the scale `xi(u)` solving `e^xi = 1 + u xi`, the
//! integral `I(z) = int_0^z (e^t - 1)/t dt`, the correction integral
//! `T_K(z)`, and the large-`n/alpha` expansions of the mean and variance.

use serde::Serialize;

use crate::error::{CycleError, Result};
use crate::exact::Constraint;
use crate::quad;
use crate::scalar::{ln_expm1, CompensatedSum, Scalar};

const MAX_ITERATIONS: usize = 200;
/// Hard cap on the number of series terms searched for the optimal stop.
const MAX_TERMS: usize = 10_000;
const SMALL_ARG: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiValue<T> {
    pub u: T,
    pub xi: T,
}

impl<T: Scalar> XiValue<T> {
    /// `|e^xi - 1 - u xi| / (1 + u xi)`.
    pub fn residual(&self) -> T {
        let rhs = T::one() + self.u * self.xi;
        (self.xi.exp() - rhs).abs() / rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationReason {
    RequestedOrder,
    OptimalStop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionResult<T> {
    pub value: T,
    /// `terms[i]` is the term of index `first_index + i`.
    pub terms: Vec<T>,
    pub first_index: usize,
    /// Last included index; when no term is included it equals the
    /// requested order.
    pub truncation_index: usize,
    pub truncation_reason: TruncationReason,
    pub xi: T,
}

/// `ln((e^xi - 1)/xi)`.
fn ln_expm1_over<T: Scalar>(xi: T) -> T {
    if xi < T::lit(SMALL_ARG) {
        let q = xi
            * (T::lit(0.5)
                + xi * (T::one() / T::lit(6.0)
                    + xi * (T::one() / T::lit(24.0) + xi / T::lit(120.0))));
        q.ln_1p()
    } else {
        ln_expm1(xi) - xi.ln()
    }
}

/// Derivative of `ln((e^xi - 1)/xi)`.
fn ln_expm1_over_slope<T: Scalar>(xi: T) -> T {
    if xi < T::lit(SMALL_ARG) {
        T::lit(0.5) + xi / T::lit(12.0) - xi * xi * xi / T::lit(720.0)
    } else {
        T::one() / -(-xi).exp_m1() - xi.recip()
    }
}

/// The non-zero root of `e^xi = 1 + u xi`; `xi(1) = 0`.
pub fn solve_xi<T: Scalar>(u: T) -> Result<XiValue<T>> {
    if !(u >= T::one()) || !u.is_finite() {
        return Err(CycleError::Domain(format!(
            "xi(u) needs finite u >= 1, got {u}"
        )));
    }
    if u == T::one() {
        return Ok(XiValue { u, xi: T::zero() });
    }
    let target = u.ln();
    let mut lo = target;
    let mut hi = T::lit(2.0) * target;
    // psi is convex and increasing, so Newton from the right end is monotone
    let mut xi = hi;
    let eps = T::epsilon();
    for _ in 0..MAX_ITERATIONS {
        let g = ln_expm1_over(xi) - target;
        if g == T::zero() {
            break;
        }
        if g > T::zero() {
            hi = xi;
        } else {
            lo = xi;
        }
        let mut next = xi - g / ln_expm1_over_slope(xi);
        if !(next > lo && next <= hi) {
            next = T::lit(0.5) * (lo + hi);
        }
        let done = (next - xi).abs() <= T::lit(2.0) * eps * xi;
        xi = next;
        if done {
            return Ok(XiValue { u, xi });
        }
    }
    let value = XiValue { u, xi };
    if value.residual() <= T::root_tol() {
        Ok(value)
    } else {
        Err(CycleError::NoConvergence {
            iterations: MAX_ITERATIONS,
            residual: value.residual().to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// `ln u + ln ln(u + 2)`.
pub fn xi_two_term<T: Scalar>(u: T) -> Result<T> {
    if !(u > T::one()) {
        return Err(CycleError::Domain(format!(
            "two-term xi needs u > 1, got {u}"
        )));
    }
    Ok(u.ln() + (u + T::lit(2.0)).ln().ln())
}

/// Largest `z` for which `e^z` stays comfortably finite.
fn exp_limit<T: Scalar>() -> T {
    T::lit(700.0).min(T::max_value().ln() - T::lit(10.0))
}

/// `I(z) = sum_{k>=1} z^k / (k k!)`.
pub fn eval_i<T: Scalar>(z: T) -> Result<T> {
    if !(z >= T::zero()) {
        return Err(CycleError::Domain(format!("I(z) needs z >= 0, got {z}")));
    }
    if z > exp_limit::<T>() {
        return Err(CycleError::Overflow(format!(
            "I({z}) overflows; use the asymptotic form"
        )));
    }
    let mut sum = CompensatedSum::new();
    let mut power = T::one();
    let mut k = 1usize;
    loop {
        let kt = T::from_usize_lossy(k);
        power = power * z / kt;
        let term = power / kt;
        sum.add(term);
        if term <= T::lit(1e-16).min(T::epsilon()) * sum.value() || term == T::zero() {
            break;
        }
        k += 1;
    }
    Ok(sum.value())
}

/// `s e^s/(e^s - 1) - 1`.
fn bernoulli_excess<T: Scalar>(s: T) -> T {
    if s.abs() < T::lit(0.05) {
        let s2 = s * s;
        s / T::lit(2.0) + s2 / T::lit(12.0) - s2 * s2 / T::lit(720.0)
            + s2 * s2 * s2 / T::lit(30240.0)
    } else {
        s / -(-s).exp_m1() - T::one()
    }
}

fn t_domain<T: Scalar>(k: T, z: T) -> Result<()> {
    if !(k > T::zero()) || !k.is_finite() {
        return Err(CycleError::Domain(format!("T_K needs K > 0, got {k}")));
    }
    if !(z >= T::zero()) || z > T::PI() * k {
        return Err(CycleError::Domain(format!(
            "T_K(z) needs 0 <= z <= pi K, got z = {z}, K = {k}"
        )));
    }
    Ok(())
}

fn t_tolerance<T: Scalar>(k: T) -> T {
    T::lit(1e-10).max(T::lit(16.0) * T::epsilon()) / k
}

/// `T_K(z) = int_0^z (e^t - 1)/t * (g(t/K) - 1) dt` with
/// `g(s) = s e^s/(e^s - 1)`, for `0 <= z <= pi K`.
pub fn eval_t<T: Scalar>(k: T, z: T) -> Result<T> {
    t_domain(k, z)?;
    if z > exp_limit::<T>() {
        return Err(CycleError::Overflow(format!(
            "T_K({z}) overflows; use eval_t_scaled"
        )));
    }
    let f = |t: T| {
        if t == T::zero() {
            T::zero()
        } else {
            t.exp_m1() / t * bernoulli_excess(t / k)
        }
    };
    quad::integrate(f, T::zero(), z, t_tolerance(k) * z.exp())
}

/// `e^{-z} T_K(z)`, finite for every admissible `z`.
pub fn eval_t_scaled<T: Scalar>(k: T, z: T) -> Result<T> {
    t_domain(k, z)?;
    let decay = (-z).exp();
    let f = |t: T| {
        if t == T::zero() {
            T::zero()
        } else if t < T::one() {
            decay * t.exp_m1() / t * bernoulli_excess(t / k)
        } else {
            ((t - z).exp() - decay) / t * bernoulli_excess(t / k)
        }
    };
    quad::integrate(f, T::zero(), z, t_tolerance(k))
}

/// `u = n / alpha` with `u > e`.
fn expansion_scale<T: Scalar>(c: &Constraint) -> Result<T> {
    let u = T::from_usize_lossy(c.n()) / T::from_usize_lossy(c.alpha());
    if !(u > T::E()) {
        return Err(CycleError::Domain(format!(
            "expansion needs n/alpha > e, got {u} for {c}"
        )));
    }
    Ok(u)
}

/// Sums `term(k)` for `k = first, first + 1, ...`, either up to
/// `max_order` or up to the last strictly decreasing magnitude.
fn truncate<T: Scalar>(
    first: usize,
    max_order: Option<usize>,
    xi: T,
    mut term: impl FnMut(usize) -> T,
) -> ExpansionResult<T> {
    let mut terms = Vec::new();
    let (truncation_index, truncation_reason) = match max_order {
        Some(order) => {
            for k in first..=order {
                terms.push(term(k));
            }
            (order, TruncationReason::RequestedOrder)
        }
        None => {
            let mut k = first;
            terms.push(term(k));
            while k < first + MAX_TERMS {
                let next = term(k + 1);
                if next.abs() >= terms[terms.len() - 1].abs() || !next.is_finite() {
                    break;
                }
                terms.push(next);
                k += 1;
            }
            (k, TruncationReason::OptimalStop)
        }
    };
    let value = terms.iter().copied().collect::<CompensatedSum<T>>().value();
    ExpansionResult {
        value,
        terms,
        first_index: first,
        truncation_index,
        truncation_reason,
        xi,
    }
}

/// `(n/alpha) sum_{k>=0} k! / xi^k` with `xi = xi(n/alpha)`.
pub fn expand_m<T: Scalar>(c: &Constraint, max_order: Option<usize>) -> Result<ExpansionResult<T>> {
    let u = expansion_scale::<T>(c)?;
    let xi = solve_xi(u)?.xi;
    // k!/xi^k, built incrementally
    let mut ratio = T::one();
    let mut last = 0usize;
    Ok(truncate(0, max_order, xi, |k| {
        while last < k {
            last += 1;
            ratio = ratio * T::from_usize_lossy(last) / xi;
        }
        u * ratio
    }))
}

/// `(n/alpha) sum_{k>=2} (k! - 1) / xi^k`.
pub fn expand_v<T: Scalar>(c: &Constraint, max_order: Option<usize>) -> Result<ExpansionResult<T>> {
    let u = expansion_scale::<T>(c)?;
    let xi = solve_xi(u)?.xi;
    if matches!(max_order, Some(order) if order < 2) {
        return Ok(ExpansionResult {
            value: T::zero(),
            terms: Vec::new(),
            first_index: 2,
            truncation_index: max_order.unwrap_or(0),
            truncation_reason: TruncationReason::RequestedOrder,
            xi,
        });
    }
    let mut ratio = T::one();
    let mut inverse_power = T::one();
    let mut last = 0usize;
    Ok(truncate(2, max_order, xi, |k| {
        while last < k {
            last += 1;
            ratio = ratio * T::from_usize_lossy(last) / xi;
            inverse_power = inverse_power / xi;
        }
        u * (ratio - inverse_power)
    }))
}

/// `(e^x / x) sum_{k=0}^{order} k! / x^k`.
pub fn ei_asymptotic<T: Scalar>(x: T, order: usize) -> Result<T> {
    if !(x > T::one()) {
        return Err(CycleError::Domain(format!(
            "asymptotic Ei needs x > 1, got {x}"
        )));
    }
    let mut ratio = T::one();
    let mut sum = CompensatedSum::new();
    sum.add(ratio);
    for k in 1..=order {
        ratio = ratio * T::from_usize_lossy(k) / x;
        sum.add(ratio);
    }
    Ok(x.exp() / x * sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_xi(u: f64) -> f64 {
        let f = |x: f64| x.exp() - 1.0 - u * x;
        let (mut lo, mut hi) = (u.ln(), 2.0 * u.ln());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn xi_examples() {
        assert_eq!(solve_xi(1.0f64).unwrap().xi, 0.0);
        let v = solve_xi(10.0f64).unwrap();
        assert!((v.xi - 3.6150).abs() < 1e-3);
        assert!((v.xi - bisect_xi(10.0)).abs() < 1e-13);
        assert!(v.residual() < 1e-12);
        assert!(solve_xi(0.5f64).is_err());
    }

    #[test]
    fn xi_near_one() {
        for u in [1.0 + 1e-12, 1.0 + 1e-6, 1.001f64] {
            let v = solve_xi(u).unwrap();
            assert!(v.xi > u.ln() && v.xi <= 2.0 * u.ln(), "u = {u}: {}", v.xi);
            assert!(v.residual() < 1e-12);
            assert!((v.xi / (2.0 * (u - 1.0)) - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn two_term_examples() {
        assert!((xi_two_term(10.0f64).unwrap() - 3.2128).abs() < 1e-4);
        let big = 10f64.exp();
        assert!((xi_two_term(big).unwrap() - 12.3028).abs() < 1e-3);
        assert!(xi_two_term(1.0f64).is_err());
    }

    #[test]
    fn i_examples() {
        assert_eq!(eval_i(0.0f64).unwrap(), 0.0);
        let direct: f64 = (1..=10u32)
            .map(|k| 1.0 / (k as f64 * (1..=k).map(f64::from).product::<f64>()))
            .sum();
        let v = eval_i(1.0f64).unwrap();
        assert!((v - 1.3179022).abs() < 1e-7);
        assert!((v - direct).abs() < 1e-8);
        let quad: f64 = quad::integrate(
            |t: f64| if t == 0.0 { 1.0 } else { t.exp_m1() / t },
            0.0,
            1.0,
            1e-14,
        )
        .unwrap();
        assert!((v - quad).abs() < 1e-13);
        assert!(matches!(eval_i(701.0f64), Err(CycleError::Overflow(_))));
        assert!(matches!(eval_i(-1.0f64), Err(CycleError::Domain(_))));
    }

    #[test]
    fn t_examples() {
        assert_eq!(eval_t(10.0f64, 0.0).unwrap(), 0.0);
        let t = eval_t(10.0f64, 5.0).unwrap();
        assert!((t + 0.25).abs() <= 4.0 * 5f64.exp() / 10.0);
        let t = eval_t(50.0f64, 10.0).unwrap();
        assert!((t + 0.1).abs() <= 1762.0);
        let scaled = eval_t_scaled(50.0f64, 10.0).unwrap();
        assert!((scaled * 10f64.exp() - t).abs() <= 1e-9 * t.abs());
        assert!(matches!(eval_t(1.0f64, 3.2), Err(CycleError::Domain(_))));
    }

    #[test]
    fn small_k_matches_series_of_excess() {
        // for large K, g(t/K) - 1 ~ t/(2K), so T ~ (e^z - 1 - z)/(2K)
        let (k, z) = (1e6f64, 2.0);
        let t = eval_t(k, z).unwrap();
        let lead = (z.exp() - 1.0 - z) / (2.0 * k);
        assert!((t - lead).abs() < 1e-3 * lead);
    }

    #[test]
    fn expansion_first_terms() {
        let c = Constraint::new(1_000_000, 1000).unwrap();
        let m = expand_m::<f64>(&c, Some(1)).unwrap();
        let xi = solve_xi(1000.0f64).unwrap().xi;
        assert!((m.value - 1000.0 * (1.0 + 1.0 / xi)).abs() < 1e-9);
        assert_eq!(m.truncation_reason, TruncationReason::RequestedOrder);
        let v = expand_v::<f64>(&c, Some(2)).unwrap();
        assert!((v.value - 1000.0 / (xi * xi)).abs() < 1e-9);
        let v = expand_v::<f64>(&c, Some(1)).unwrap();
        assert!(v.terms.is_empty() && v.value == 0.0);
    }

    #[test]
    fn optimal_stop_invariant() {
        let c = Constraint::new(1_000_000, 1000).unwrap();
        let m = expand_m::<f64>(&c, None).unwrap();
        assert_eq!(m.truncation_reason, TruncationReason::OptimalStop);
        assert_eq!(m.truncation_index, m.first_index + m.terms.len() - 1);
        let k = m.truncation_index + 1;
        let next: f64 = 1000.0 * (1..=k).map(|j| j as f64 / m.xi).product::<f64>();
        assert!(next >= *m.terms.last().unwrap());
        assert!(m.terms.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn expansion_domain() {
        let c = Constraint::new(10, 4).unwrap();
        assert!(matches!(
            expand_m::<f64>(&c, None),
            Err(CycleError::Domain(_))
        ));
        assert!(matches!(
            expand_v::<f64>(&c, None),
            Err(CycleError::Domain(_))
        ));
    }

    #[test]
    fn ei_examples() {
        let x = 20.0f64;
        assert!((ei_asymptotic(x, 0).unwrap() - x.exp() / x).abs() < 1e-6);
        let want = x.exp() / x * (1.0 + 1.0 / 20.0 + 2.0 / 400.0 + 6.0 / 8000.0);
        assert!((ei_asymptotic(x, 3).unwrap() - want).abs() <= 1e-12 * want);
    }
}
