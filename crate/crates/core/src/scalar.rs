//! Floating-point scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used by the saddle-point, asymptotic and quadrature code.
///
/// Implemented for `f32` and `f64`. Tolerances that only make sense at a
/// given precision are exposed here so generic code never hard-codes
/// double-precision constants.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Relative agreement required between the numerical and analytic
    /// second derivative of the saddle point.
    fn derivative_check_tol() -> Self;

    /// Relative residual accepted from the scalar root solvers.
    fn root_tol() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }
}

impl Scalar for f64 {
    fn derivative_check_tol() -> Self {
        1e-6
    }

    fn root_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn derivative_check_tol() -> Self {
        5e-2
    }

    fn root_tol() -> Self {
        1e-5
    }
}

/// Kahan–Babuška (Neumaier) compensated accumulator.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Float> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp = self.comp + ((self.sum - t) + v);
        } else {
            self.comp = self.comp + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Float> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// `ln(e^t - 1)` for `t > 0` without overflow for large `t`.
pub fn ln_expm1<T: Scalar>(t: T) -> T {
    if t > T::lit(30.0) {
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}

/// `ln(n!)`: exact summation for small `n`, Stirling series otherwise.
pub fn ln_factorial<T: Scalar>(n: u64) -> T {
    if n < 2 {
        return T::zero();
    }
    if n <= 20 {
        let mut p: u64 = 1;
        for k in 2..=n {
            p *= k;
        }
        return T::from_u64(p).unwrap().ln();
    }
    // Stirling series for ln Γ(n+1); truncation error < 1e-18 for n > 20.
    let x = T::from_u64(n).unwrap();
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 360.0)
                    - inv2 * (T::lit(1.0 / 1260.0) - inv2 * T::lit(1.0 / 1680.0))));
    x * x.ln() - x + T::lit(0.5) * (T::lit(2.0) * T::PI() * x).ln() + series
}
