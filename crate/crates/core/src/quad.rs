//! Adaptive Gauss-Kronrod (7, 15) quadrature on a finite interval.

#![allow(clippy::excessive_precision)]

use crate::error::{CycleError, Result};
use crate::scalar::{CompensatedSum, Scalar};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights at the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_SEGMENTS: usize = 100_000;

/// Returns `(kronrod estimate, |kronrod - gauss|)` on `[a, b]`.
fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = h * T::lit(XGK[i]);
        let pair = f(c - dx) + f(c + dx);
        kronrod = kronrod + T::lit(WGK[i]) * pair;
        if i % 2 == 1 {
            gauss = gauss + T::lit(WG[i / 2]) * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, bisecting the
/// segment with the largest error estimate until the total is below `tol`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let (v, e) = gk15(&f, a, b);
    let mut segments = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > tol {
        if segments.len() >= MAX_SEGMENTS {
            return Err(CycleError::NoConvergence {
                iterations: MAX_SEGMENTS,
                residual: total_err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (worst, _) =
            segments
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |best, (i, s)| {
                    if s.3 > best.1 {
                        (i, s.3)
                    } else {
                        best
                    }
                });
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = T::lit(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval exhausted at working precision
            break;
        }
        let left = gk15(&f, lo, mid);
        let right = gk15(&f, mid, hi);
        segments.push((lo, mid, left.0, left.1));
        segments.push((mid, hi, right.0, right.1));
        total_err = segments
            .iter()
            .map(|s| s.3)
            .collect::<CompensatedSum<T>>()
            .value();
    }
    Ok(segments
        .iter()
        .map(|s| s.2)
        .collect::<CompensatedSum<T>>()
        .value())
}
