use std::f64::consts::PI;

use super::{soul_taylor, ScalarFunction, TestFunction};
use crate::error::{Error, Result};
use crate::exterior::{GrassmannElement, Registry};
use crate::quad::{integrate_half_line, QuadOptions};

/// Tolerance for both desk-scale checks.
pub const CHECK_TOLERANCE: f64 = 1e-8;

fn quad_options() -> QuadOptions {
    QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_intervals: 4000 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationReport {
    /// Superintegral of `F((Y^2 + Z^2 + 2 xi eta) / c)` over `R^{2|2}`.
    pub integral: f64,
    /// `F(0)`.
    pub expected: f64,
    pub residual: f64,
    pub quadrature_error: f64,
    pub passed: bool,
}

/// Integrates the Q-closed superfunction `f = F((Y^2+Z^2+2 xi eta)/c)` over
/// `R^{2|2}` with bosonic measure `dY dZ / (2 pi)` and compares with `F(0)`.
///
/// The Berezin part is taken in the exterior algebra at every radial node;
/// only the radial bosonic integral is numeric.
pub fn localization_check(f: &TestFunction, variance: f64) -> Result<LocalizationReport> {
    if variance <= 0.0 || !variance.is_finite() {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    f.check_decay()?;
    let registry = Registry::new(1)?;
    let integrand = |r: f64| -> f64 {
        let s = r * r / variance;
        let element = soul_taylor(f, s, 2.0 / variance, 0, registry).expect("pair 0 exists");
        // (1/2pi) * 2pi r dr after the angular integral
        element.integrate() * r
    };
    let q = integrate_half_line(integrand, quad_options());
    if !q.converged {
        return Err(Error::Numeric(format!(
            "radial quadrature did not converge: value {} error {} after {} evaluations",
            q.value, q.abs_error, q.evaluations
        )));
    }
    let expected = f.value(0.0);
    let residual = (q.value - expected).abs();
    Ok(LocalizationReport {
        integral: q.value,
        expected,
        residual,
        quadrature_error: q.abs_error,
        passed: residual <= CHECK_TOLERANCE,
    })
}

/// `E[F(X^2)]` for `X ~ N(0, variance)` by quadrature.
pub fn gaussian_square_expectation(f: &impl ScalarFunction, variance: f64) -> Result<(f64, f64)> {
    if variance <= 0.0 {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    let norm = (2.0 / (PI * variance)).sqrt();
    let q = integrate_half_line(|x| norm * (-x * x / (2.0 * variance)).exp() * f.value(x * x), quad_options());
    if !q.converged {
        return Err(Error::Numeric(format!("1D Gaussian quadrature error {}", q.abs_error)));
    }
    Ok((q.value, q.abs_error))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionReport {
    pub rate: f64,
    pub variance: f64,
    /// `E[F(X^2)]` over `R^{1|0}`.
    pub lhs: f64,
    /// Normalized superintegral of `F(R^2)` over `R^{3|2}`.
    pub rhs: f64,
    /// `(1 + 2 rate variance)^{-1/2}`.
    pub analytic: f64,
    pub passed: bool,
}

/// Compares `E[exp(-rate X^2)]` on `R^{1|0}` with the `R^{3|2}` superintegral
/// of `exp(-rate R^2)`, `R^2 = X^2+Y^2+Z^2+2 xi eta`, against the closed form.
pub fn reduction_check(rate: f64, variance: f64) -> Result<ReductionReport> {
    if rate < 0.0 {
        return Err(Error::Unsupported(format!("exponential rate {rate} < 0")));
    }
    if variance <= 0.0 {
        return Err(Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    let f = TestFunction::exponential(rate);
    let (lhs, _) = gaussian_square_expectation(&f, variance)?;

    let registry = Registry::new(1)?;
    // fermionic weight exp(-xi eta / c) from the action with precision 1/c
    let fermion_weight = GrassmannElement::pair(registry, 0).scale(&(-1.0 / variance)).exp()?;
    let bosonic_norm = 4.0 * PI * (2.0 * PI).powf(-1.5);
    let partition = variance.sqrt();
    let integrand = |r: f64| -> f64 {
        let b2 = r * r;
        let lifted = soul_taylor(&f, b2, 2.0, 0, registry).expect("pair 0 exists");
        let berezin = fermion_weight.try_mul(&lifted).expect("same registry").integrate();
        bosonic_norm * r * r * (-b2 / (2.0 * variance)).exp() * berezin / partition
    };
    let q = integrate_half_line(integrand, quad_options());
    if !q.converged {
        return Err(Error::Numeric(format!("3D radial quadrature error {}", q.abs_error)));
    }
    let rhs = q.value;
    let analytic = (1.0 + 2.0 * rate * variance).powf(-0.5);
    let passed = (lhs - analytic).abs() <= CHECK_TOLERANCE && (rhs - analytic).abs() <= CHECK_TOLERANCE;
    Ok(ReductionReport { rate, variance, lhs, rhs, analytic, passed })
}
