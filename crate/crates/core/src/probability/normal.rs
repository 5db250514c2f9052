//! Standard normal helpers. `libm` supplies `erf`/`erfc` to about one ulp;
//! the quantile starts from `statrs`' `erfc_inv` and takes one Newton step.

use libm::{erf, erfc};
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `Phi(b) - Phi(a)` without cancellation in either tail.
pub fn interval(a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let (sa, sb) = (a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2);
    let v = if a >= 0.0 {
        0.5 * (erfc(sa) - erfc(sb))
    } else if b <= 0.0 {
        0.5 * (erfc(-sb) - erfc(-sa))
    } else {
        0.5 * (erf(sb) - erf(sa))
    };
    v.max(0.0)
}

/// `Phi^{-1}(p)`, clamped away from 0 and 1.
pub fn quantile(p: f64) -> f64 {
    let p = p.clamp(1e-300, 1.0 - f64::EPSILON / 2.0);
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    let density = pdf(x);
    if density > 0.0 {
        x - (cdf(x) - p) / density
    } else {
        x
    }
}
