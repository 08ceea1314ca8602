//! Saddle point `x(w)` of `sum_{j<=alpha} x^j = n / w` and the quantities
//! built from it: predicted mean and variance of the cycle count, the
//! derivatives of the log generating function, and the saddle-point
//! approximation of `|S_{n, alpha}|`.
//!
//! The root is found in `y = ln x`, where the geometric sum has the closed
//! form `ln S = y + ln(e^{alpha y} - 1) - ln(e^y - 1)` and never overflows.

use serde::Serialize;

use crate::error::{CycleError, Result};
use crate::exact::Constraint;
use crate::scalar::{ln_expm1, ln_factorial, CompensatedSum, Scalar};

const MAX_ITERATIONS: usize = 200;
/// Below this `|x - 1|` the geometric closed form loses too many digits.
const GEOMETRIC_FORM_MIN_Y: f64 = 1e-8;
/// Step of the central difference used for `h'''`.
const H3_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleSolution<T> {
    #[serde(flatten)]
    pub constraint: Constraint,
    pub w: T,
    pub x: T,
    /// `ln x`, carried separately since `x - 1` is tiny for large `alpha`.
    pub log_x: T,
    pub x_prime: T,
    pub x_double_prime: T,
    /// Richardson-extrapolated finite-difference estimate of `x''`.
    pub x_double_prime_numeric: T,
    /// `|sum_j x^j - n/w| / (n/w)`.
    pub residual: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPair<T> {
    pub m: T,
    pub v: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HDerivatives<T> {
    pub h1: T,
    pub h2: T,
    pub h3_estimate: T,
}

/// `ln sum_{j=1}^{alpha} e^{j y}`.
pub fn ln_geometric_sum<T: Scalar>(y: T, alpha: usize) -> T {
    if alpha == 1 {
        return y;
    }
    let a = T::from_usize_lossy(alpha);
    if y.abs() >= T::lit(GEOMETRIC_FORM_MIN_Y) {
        if y > T::zero() {
            y + ln_expm1(a * y) - ln_expm1(y)
        } else {
            // x < 1: S = x (1 - x^alpha) / (1 - x)
            y + (-(a * y).exp_m1()).ln() - (-y.exp_m1()).ln()
        }
    } else {
        (1..=alpha)
            .map(|j| (T::from_usize_lossy(j) * y).exp())
            .collect::<CompensatedSum<T>>()
            .value()
            .ln()
    }
}

/// `d/dy ln S = J_1 / S`, the mean of `j` under weights `x^j`.
pub fn ln_geometric_sum_slope<T: Scalar>(y: T, alpha: usize) -> T {
    if alpha == 1 {
        return T::one();
    }
    let a = T::from_usize_lossy(alpha);
    if y.abs() >= T::lit(GEOMETRIC_FORM_MIN_Y) {
        T::one() + a / -(-a * y).exp_m1() - T::one() / -(-y).exp_m1()
    } else {
        let mut s = CompensatedSum::new();
        let mut j1 = CompensatedSum::new();
        for j in 1..=alpha {
            let jt = T::from_usize_lossy(j);
            let t = (jt * y).exp();
            s.add(t);
            j1.add(jt * t);
        }
        j1.value() / s.value()
    }
}

/// `n / (w alpha)`, required to exceed 1.
fn regime_ratio<T: Scalar>(c: &Constraint, w: T) -> Result<T> {
    if !(w > T::zero()) || !w.is_finite() {
        return Err(CycleError::Domain(format!(
            "w = {w} must be positive and finite"
        )));
    }
    let u = T::from_usize_lossy(c.n()) / (w * T::from_usize_lossy(c.alpha()));
    if !(u > T::one()) {
        return Err(CycleError::OutOfRegime(format!(
            "n/(w alpha) = {u} <= 1 for {c}, w = {w}"
        )));
    }
    Ok(u)
}

/// Solves for `y = ln x(w)`; returns `(y, relative residual)`.
///
/// Bracket `[ln u / alpha, 2 ln u / (alpha + 1)]` from the AM-GM bounds,
/// Newton from the right end (the target is convex and increasing in `y`,
/// so Newton from above is monotone), bisection whenever a step leaves the
/// bracket.
fn solve_log_saddle<T: Scalar>(c: &Constraint, w: T) -> Result<(T, T)> {
    let u = regime_ratio(c, w)?;
    let alpha = c.alpha();
    let a = T::from_usize_lossy(alpha);
    let target = (T::from_usize_lossy(c.n()) / w).ln();
    let mut lo = u.ln() / a;
    let mut hi = T::lit(2.0) * u.ln() / (a + T::one());
    if alpha == 1 {
        return Ok((lo, T::zero()));
    }
    let eps = T::epsilon();
    let g_tol = T::lit(4.0) * eps * target.abs().max(T::one());
    let mut y = hi;
    let mut g = ln_geometric_sum(y, alpha) - target;
    for _ in 0..MAX_ITERATIONS {
        if g.abs() <= g_tol {
            return Ok((y, g.exp_m1().abs()));
        }
        if g > T::zero() {
            hi = y;
        } else {
            lo = y;
        }
        let slope = ln_geometric_sum_slope(y, alpha);
        let mut next = y - g / slope;
        if !(next > lo && next < hi) {
            next = (lo + hi) / T::lit(2.0);
        }
        if (next - y).abs() <= T::lit(2.0) * eps * y.abs() {
            y = next;
            g = ln_geometric_sum(y, alpha) - target;
            return Ok((y, g.exp_m1().abs()));
        }
        y = next;
        g = ln_geometric_sum(y, alpha) - target;
    }
    Err(CycleError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: g.exp_m1().abs().to_f64().unwrap_or(f64::NAN),
    })
}

/// `x'(w) = (x - 1) x / (w (1 - alpha (x - 1) - w alpha x / n))`.
fn x_prime_closed<T: Scalar>(c: &Constraint, w: T, y: T) -> T {
    let a = T::from_usize_lossy(c.alpha());
    let n = T::from_usize_lossy(c.n());
    let x = y.exp();
    let xm1 = y.exp_m1();
    xm1 * x / (w * (T::one() - a * xm1 - w * a * x / n))
}

/// `x''(w)` by differentiating the closed form of `x'` along `x(w)`.
fn x_double_prime_closed<T: Scalar>(c: &Constraint, w: T, y: T, xp: T) -> T {
    let a = T::from_usize_lossy(c.alpha());
    let n = T::from_usize_lossy(c.n());
    let x = y.exp();
    let xm1 = y.exp_m1();
    let num = xm1 * x;
    let den = T::one() - a * xm1 - w * a * x / n;
    let d_num_dx = T::lit(2.0) * x - T::one();
    let d_den_dx = -a - w * a / n;
    let d_den_dw = -a * x / n;
    let df_dx = (d_num_dx * den - num * d_den_dx) / (w * den * den);
    let df_dw = -num * (den + w * d_den_dw) / (w * w * den * den);
    df_dx * xp + df_dw
}

/// Largest finite-difference step keeping `w +- 2h` comfortably inside
/// the regime.
fn difference_step<T: Scalar>(c: &Constraint, w: T, preferred: T) -> T {
    let cap = T::from_usize_lossy(c.n()) / T::from_usize_lossy(c.alpha());
    let room = (cap - w) / T::lit(4.0);
    preferred.min(room).min(w / T::lit(4.0))
}

/// `x''` from second differences of `x - 1 = expm1(y)`, with one
/// Richardson step.
fn x_double_prime_numeric<T: Scalar>(c: &Constraint, w: T, y0: T) -> Result<T> {
    let h = difference_step(c, w, T::lit(1e-2) * w);
    let xm1 = |ww: T| -> Result<T> { Ok(solve_log_saddle(c, ww)?.0.exp_m1()) };
    let center = y0.exp_m1();
    let second = |step: T| -> Result<T> {
        Ok((xm1(w + step)? - T::lit(2.0) * center + xm1(w - step)?) / (step * step))
    };
    let coarse = second(h)?;
    let fine = second(h / T::lit(2.0))?;
    Ok((T::lit(4.0) * fine - coarse) / T::lit(3.0))
}

/// Saddle point at `w`, with `x'` in closed form and `x''` computed both
/// analytically and numerically.
pub fn solve_saddle<T: Scalar>(c: &Constraint, w: T) -> Result<SaddleSolution<T>> {
    if !(w > T::lit(0.5) && w < T::lit(1.5)) {
        return Err(CycleError::Domain(format!(
            "w = {w} must lie in (0.5, 1.5)"
        )));
    }
    let (y, residual) = solve_log_saddle(c, w)?;
    let xp = x_prime_closed(c, w, y);
    let xpp = x_double_prime_closed(c, w, y, xp);
    let xpp_num = x_double_prime_numeric(c, w, y)?;
    let relative = (xpp_num - xpp).abs() / xpp.abs().max(T::min_positive_value());
    if relative > T::derivative_check_tol() {
        return Err(CycleError::DerivativeMismatch {
            numeric: xpp_num.to_f64().unwrap_or(f64::NAN),
            analytic: xpp.to_f64().unwrap_or(f64::NAN),
            relative: relative.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(SaddleSolution {
        constraint: *c,
        w,
        x: y.exp(),
        log_x: y,
        x_prime: xp,
        x_double_prime: xpp,
        x_double_prime_numeric: xpp_num,
        residual,
    })
}

impl<T: Scalar> SaddleSolution<T> {
    fn n(&self) -> T {
        T::from_usize_lossy(self.constraint.n())
    }

    fn alpha(&self) -> T {
        T::from_usize_lossy(self.constraint.alpha())
    }

    /// `x - 1` without cancellation.
    pub fn x_minus_one(&self) -> T {
        self.log_x.exp_m1()
    }

    /// `J_1 = sum_j j x^j`, as `(n / w) * d ln S / dy`.
    pub fn j1(&self) -> T {
        ln_geometric_sum(self.log_x, self.constraint.alpha()).exp()
            * ln_geometric_sum_slope(self.log_x, self.constraint.alpha())
    }

    /// `|p(x)| / n` for `p(x) = w x^{alpha+1} - (w + n) x + n`.
    pub fn polynomial_residual(&self) -> T {
        let n = self.n();
        let lead = self.w * ((self.alpha() + T::one()) * self.log_x).exp();
        (lead - (self.w + n) * self.x + n).abs() / n
    }

    /// Relative defect of `w (x^alpha - 1) = n (1 - 1/x)`; at `w = 1` this
    /// is `x^alpha = 1 + n (1 - 1/x)`.
    pub fn power_identity_residual(&self) -> T {
        let lhs = self.w * (self.alpha() * self.log_x).exp_m1();
        let rhs = self.n() * -(-self.log_x).exp_m1();
        (lhs - rhs).abs() / rhs.abs()
    }

    /// Relative defect of `sum_j j x^j = -n x / (x' w^2)`.
    pub fn derivative_identity_residual(&self) -> T {
        let j1 = self.j1();
        let other = -self.n() * self.x / (self.x_prime * self.w * self.w);
        (j1 - other).abs() / j1.abs()
    }

    /// Whether `(n/(w alpha))^{1/alpha} <= x <= (n/(w alpha))^{2/(alpha+1)}`,
    /// compared in log space with a few ulps of slack.
    pub fn within_bracket(&self) -> bool {
        let u = self.n() / (self.w * self.alpha());
        let slack = T::lit(8.0) * T::epsilon() * self.log_x.abs();
        let lo = u.ln() / self.alpha();
        let hi = T::lit(2.0) * u.ln() / (self.alpha() + T::one());
        self.log_x >= lo - slack && self.log_x <= hi + slack
    }

    /// Whether `alpha ln x / 2 <= ln(n/(w alpha)) <= alpha ln x`.
    pub fn log_sandwich_holds(&self) -> bool {
        let l = (self.n() / (self.w * self.alpha())).ln();
        let ax = self.alpha() * self.log_x;
        let slack = T::lit(8.0) * T::epsilon() * l.abs();
        ax / T::lit(2.0) <= l + slack && l <= ax + slack
    }

    /// `alpha x'/x + 1/w`, which tends to 0 when `alpha/n -> 0`.
    pub fn scaled_log_derivative_gap(&self) -> T {
        self.alpha() * self.x_prime / self.x + self.w.recip()
    }
}

/// `sum_{j=1}^{alpha} e^{j y} / j`, smallest terms first.
fn log_weighted_sum<T: Scalar>(y: T, alpha: usize) -> T {
    (1..=alpha)
        .map(|j| {
            let jt = T::from_usize_lossy(j);
            (jt * y).exp() / jt
        })
        .collect::<CompensatedSum<T>>()
        .value()
}

/// Predicted mean `m = sum_j x(1)^j / j` and variance `v = m + n x'(1)/x(1)`.
pub fn moments<T: Scalar>(c: &Constraint) -> Result<MomentPair<T>> {
    let w = T::one();
    let (y, _) = solve_log_saddle(c, w)?;
    let m = log_weighted_sum(y, c.alpha());
    let xp = x_prime_closed(c, w, y);
    let v = m + T::from_usize_lossy(c.n()) * xp / y.exp();
    Ok(MomentPair { m, v })
}

/// `n x'(w) / (w x(w))` at an arbitrary `w` in the regime.
fn h2_at<T: Scalar>(c: &Constraint, w: T) -> Result<T> {
    let (y, _) = solve_log_saddle(c, w)?;
    let xp = x_prime_closed(c, w, y);
    Ok(T::from_usize_lossy(c.n()) * xp / (w * y.exp()))
}

/// `h'(w)` (all terms), the leading part of `h''(w)`, and a finite
/// difference estimate of `h'''(w)`.
pub fn h_derivatives<T: Scalar>(c: &Constraint, w: T) -> Result<HDerivatives<T>> {
    let s = solve_saddle(c, w)?;
    let half = T::lit(0.5);
    let h1 = log_weighted_sum(s.log_x, c.alpha()) - half * s.x_prime / s.x
        + half * s.x_double_prime / s.x_prime
        + half / w;
    let h2 = T::from_usize_lossy(c.n()) * s.x_prime / (w * s.x);
    let h = difference_step(c, w, T::lit(H3_STEP));
    let slope = |step: T| -> Result<T> {
        Ok((h2_at(c, w + step)? - h2_at(c, w - step)?) / (T::lit(2.0) * step))
    };
    let coarse = slope(h)?;
    let fine = slope(h / T::lit(2.0))?;
    let h3_estimate = (T::lit(4.0) * fine - coarse) / T::lit(3.0);
    Ok(HDerivatives {
        h1,
        h2,
        h3_estimate,
    })
}

/// `ln |S_{n,alpha}| ~ ln n! + sum_j x^j/j - n ln x - ln(2 pi sum_j j x^j) / 2`
/// at `w = 1`.
pub fn saddle_point_count_approx<T: Scalar>(c: &Constraint) -> Result<T> {
    let (y, _) = solve_log_saddle(c, T::one())?;
    let n = T::from_usize_lossy(c.n());
    let m = log_weighted_sum(y, c.alpha());
    let j1 = n * ln_geometric_sum_slope(y, c.alpha());
    Ok(ln_factorial::<T>(c.n() as u64) + m
        - n * y
        - T::lit(0.5) * (T::lit(2.0) * T::PI() * j1).ln())
}

/// Largest `|h'''(w)| / (h'(1) + h''(1))^{3/2}` over a symmetric grid of
/// `w` in `[1 - delta, 1 + delta]`; tends to 0 when the CLT criterion holds.
pub fn third_derivative_ratio(c: &Constraint, delta: f64, points: usize) -> Result<f64> {
    let at_one = h_derivatives::<f64>(c, 1.0)?;
    let scale = (at_one.h1 + at_one.h2).powf(1.5);
    if !(scale > 0.0) {
        return Err(CycleError::Degenerate(format!(
            "h'(1) + h''(1) = {} is not positive",
            at_one.h1 + at_one.h2
        )));
    }
    let points = points.max(2);
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let w = 1.0 - delta + 2.0 * delta * i as f64 / (points - 1) as f64;
        let d = h_derivatives::<f64>(c, w)?;
        worst = worst.max(d.h3_estimate.abs() / scale);
    }
    Ok(worst)
}

/// The hypotheses of the CLT evaluated at a single `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub n: usize,
    pub alpha: usize,
    /// `(alpha/n) ln n (ln ln n)^2`.
    pub lhs: f64,
    /// `1 / (12 pi^2 e)`.
    pub bound: f64,
    pub alpha_at_least_four: bool,
    pub growth_below_bound: bool,
    pub hypothesis_satisfied: bool,
}

pub fn growth_bound() -> f64 {
    1.0 / (12.0 * std::f64::consts::PI.powi(2) * std::f64::consts::E)
}

pub fn regime_check(c: &Constraint) -> Result<RegimeReport> {
    if c.n() < 3 {
        return Err(CycleError::Domain(format!(
            "growth condition needs n >= 3 (ln ln n), got n = {}",
            c.n()
        )));
    }
    let n = c.n() as f64;
    let lhs = c.alpha() as f64 / n * n.ln() * n.ln().ln().powi(2);
    let bound = growth_bound();
    let alpha_ok = c.alpha() >= 4;
    let growth_ok = lhs < bound;
    Ok(RegimeReport {
        n: c.n(),
        alpha: c.alpha(),
        lhs,
        bound,
        alpha_at_least_four: alpha_ok,
        growth_below_bound: growth_ok,
        hypothesis_satisfied: alpha_ok && growth_ok,
    })
}
