#![allow(dead_code)]

use cyclecap::Constraint;

/// 200 low-discrepancy `(n, alpha, w)` triples with `n` in `[1e2, 1e8]`,
/// `alpha` in `[4, n^0.9]` and `w` cycling through `0.9, 1.0, 1.1`.
pub fn regime_grid() -> Vec<(Constraint, f64)> {
    let golden = 0.618_033_988_749_894_9;
    let plastic = 0.754_877_666_246_692_7;
    (0..200)
        .map(|i| {
            let s = (i as f64 * golden).fract();
            let t = (i as f64 * plastic).fract();
            let n = 10f64.powf(2.0 + 6.0 * s).round() as usize;
            let top = (n as f64).powf(0.9).floor();
            let alpha = (4f64 * (top / 4.0).powf(t)).round().clamp(4.0, top) as usize;
            let w = [0.9, 1.0, 1.1][i % 3];
            (Constraint::new(n, alpha).unwrap(), w)
        })
        .collect()
}

/// `ceil(n^a)` with the library's integer snapping.
pub fn alpha_pow(n: usize, a: f64) -> Constraint {
    Constraint::with_exponent(n, a).unwrap()
}
