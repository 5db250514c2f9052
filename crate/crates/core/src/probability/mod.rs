//! Gaussian cube probabilities, their `tau`-derivatives, the correlation
//! inequality checks (Gaussian and half-integer Gamma), boundary slices of the
//! body density, and the Ward decomposition of `dP/dtau`.

mod boundary;
mod cube;
mod gamma;
pub(crate) mod gci;
pub mod normal;
pub mod qmc;

use std::fmt;

pub use boundary::{
    boundary_integral_estimate, boundary_integral_estimates, decomposition_check, BandwidthEstimate,
    BodyDensityEstimate, DecompositionOptions, DecompositionReport, DecompositionTerm, SliceOptions,
};
pub use cube::{cube_probability, cube_probability_cov, qmc_replicates, tau_derivative, DerivativeEstimate, Stencil};
pub use gamma::{
    gamma_decomposition_diagnostic, gamma_gci_check, gamma_probability, GammaConfig, GammaDiagnostic, GammaGciReport,
    GammaProfilePoint,
};
pub use gci::{gci_check, tau_grid, GciOptions, GciReport, ProfilePoint, ProfileViolation};

use crate::par::Execution;
use crate::quad::{integrate, QuadOptions};
use crate::super_calculus::ScalarFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Quadrature,
    QuasiMonteCarlo,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::QuasiMonteCarlo => "quasi-MC",
            Method::MonteCarlo => "MC",
        })
    }
}

/// Requested estimator; `Auto` picks quadrature for `n <= 3` and QMC up to `n = 12`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Fixed(Method),
}

impl MethodChoice {
    pub fn resolve(self, n: usize) -> crate::Result<Method> {
        match self {
            MethodChoice::Fixed(m) => Ok(m),
            MethodChoice::Auto if n <= 3 => Ok(Method::Quadrature),
            MethodChoice::Auto if n <= 12 => Ok(Method::QuasiMonteCarlo),
            MethodChoice::Auto => Err(crate::Error::Unsupported(format!("cube probability for n = {n} > 12"))),
        }
    }
}

/// Work limits and the root seed shared by all estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Budget {
    /// Absolute tolerance requested from the adaptive quadrature.
    pub quad_tol: f64,
    pub max_intervals: usize,
    /// Points per QMC randomization.
    pub qmc_points: usize,
    pub qmc_randomizations: usize,
    pub mc_samples: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            quad_tol: 1e-10,
            max_intervals: 2000,
            qmc_points: 1024,
            qmc_randomizations: 32,
            mc_samples: 1_000_000,
            seed: 0x5eed,
            execution: Execution::default(),
        }
    }
}

impl Budget {
    pub fn with_seed(self, seed: u64) -> Self {
        Budget { seed, ..self }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Budget { execution, ..self }
    }

    pub(crate) fn quad_options(&self) -> QuadOptions {
        QuadOptions { abs_tol: self.quad_tol, rel_tol: 0.0, max_intervals: self.max_intervals }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityEstimate {
    pub value: f64,
    /// Error bound (quadrature) or 3-sigma half-width (QMC/MC).
    pub abs_error: f64,
    /// Standard error of a stochastic estimate; 0 for quadrature.
    pub std_error: f64,
    pub method: Method,
    pub seed: Option<u64>,
    /// Integrand evaluations (quadrature) or total sample points.
    pub samples: usize,
    /// False when the budget ran out before the tolerance was met.
    pub converged: bool,
}

impl ProbabilityEstimate {
    pub fn exact(value: f64) -> Self {
        ProbabilityEstimate {
            value,
            abs_error: 0.0,
            std_error: 0.0,
            method: Method::Quadrature,
            seed: None,
            samples: 0,
            converged: true,
        }
    }

    /// Deterministic part of the error (quadrature bound), 0 for sampling.
    pub fn bound(&self) -> f64 {
        if self.method == Method::Quadrature {
            self.abs_error
        } else {
            0.0
        }
    }
}

/// Threshold below which a negative difference does not count as a violation:
/// twice the summed deterministic bounds plus three combined standard errors.
pub fn violation_threshold(bounds: &[f64], std_errors: &[f64]) -> f64 {
    2.0 * bounds.iter().sum::<f64>() + 3.0 * std_errors.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Mean and standard error of independent replicates.
pub(crate) fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Fixed chunking so MC streams do not depend on the thread count.
pub(crate) const MC_CHUNKS: usize = 64;

pub(crate) fn chunk_len(total: usize, chunk: usize) -> usize {
    total / MC_CHUNKS + usize::from(chunk < total % MC_CHUNKS)
}

/// `E[F(X^2)]` for `X ~ N(0, variance)` by quadrature in the whitened
/// variable on `[-40, 40]`.
pub fn square_expectation(f: &impl ScalarFunction, variance: f64, budget: &Budget) -> crate::Result<ProbabilityEstimate> {
    if variance <= 0.0 {
        return Err(crate::Error::InvalidArgument(format!("variance must be positive, got {variance}")));
    }
    let mut opts = budget.quad_options();
    opts.abs_tol = opts.abs_tol.min(1e-12);
    let q = integrate(|z| normal::pdf(z) * f.value(variance * z * z), -40.0, 40.0, opts);
    Ok(ProbabilityEstimate {
        value: q.value,
        abs_error: q.abs_error,
        std_error: 0.0,
        method: Method::Quadrature,
        seed: None,
        samples: q.evaluations,
        converged: q.converged,
    })
}
