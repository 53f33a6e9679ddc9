//! Standard normal tail probabilities.

use std::f64::consts::PI;

/// Complementary error function for `x >= 0`.
///
/// Below 3 it uses the all-positive series
/// `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (2n+1)!!`,
/// which has no cancellation. From 3 upwards it evaluates the Laplace
/// continued fraction bottom-up.
fn erfc_nonneg(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 3.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
        }
        1.0 - 2.0 / PI.sqrt() * (-x2).exp() * sum
    } else {
        let mut t = x;
        for k in (1..=120).rev() {
            t = x + (k as f64 / 2.0) / t;
        }
        (-x * x).exp() / PI.sqrt() / t
    }
}

pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        erfc_nonneg(x)
    } else {
        2.0 - erfc_nonneg(-x)
    }
}

/// `P(|Z| >= |z|)` for a standard normal `Z`. Results too small for an `f64`
/// are reported as the smallest positive normal value, so `p` stays in
/// `(0, 1]`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0)
}
