//! Superfunction calculus: nilpotent Taylor expansion, the Heaviside/delta
//! boundary rule, the super-hypercube indicator expansion, the supersymmetry
//! derivation `Q`, and numeric checks of localization and dimensional reduction.

mod derivation;
mod expansion;
mod localization;

pub use derivation::{radius_combination, ward_seed, BosonPair, SuperDerivation};
pub use expansion::{
    evaluate_expansion, heaviside_expand, indicator_expand, smoothed_indicator_product, soul_taylor,
    BodyFactor, BoundaryArgument, BoundaryTerm, DeltaMarker, HeavisideExpansion, Smoothing,
};
pub use localization::{
    gaussian_square_expectation, localization_check, reduction_check, LocalizationReport,
    ReductionReport, CHECK_TOLERANCE,
};

use crate::error::{Error, Result};

/// A real function of one variable with a closed-form first derivative.
pub trait ScalarFunction {
    fn value(&self, s: f64) -> f64;
    fn derivative(&self, s: f64) -> f64;
}

/// Test functions used by the localization and reduction checks.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    /// `s -> exp(-rate * s)`
    Exponential { rate: f64 },
    /// `s -> sum_k coeffs[k] * s^k`
    Polynomial { coeffs: Vec<f64> },
    /// `s -> (1 + s)^(-power)`
    InversePower { power: f64 },
}

impl TestFunction {
    pub fn exponential(rate: f64) -> Self {
        TestFunction::Exponential { rate }
    }

    pub fn constant(c: f64) -> Self {
        TestFunction::Polynomial { coeffs: vec![c] }
    }

    /// Checks that `F(s) -> 0` as `s -> inf` fast enough for `int_0^inf F'(s) ds`
    /// to converge absolutely.
    pub fn check_decay(&self) -> Result<()> {
        match self {
            TestFunction::Exponential { rate } if *rate > 0.0 => Ok(()),
            TestFunction::Exponential { rate } => {
                Err(Error::NoDecay(format!("exponential with rate {rate}")))
            }
            TestFunction::InversePower { power } if *power > 0.0 => Ok(()),
            TestFunction::InversePower { power } => {
                Err(Error::NoDecay(format!("inverse power {power}")))
            }
            TestFunction::Polynomial { coeffs } => {
                if coeffs.iter().all(|&c| c == 0.0) {
                    Ok(())
                } else {
                    Err(Error::NoDecay("nonzero polynomial".into()))
                }
            }
        }
    }
}

impl ScalarFunction for TestFunction {
    fn value(&self, s: f64) -> f64 {
        match self {
            TestFunction::Exponential { rate } => (-rate * s).exp(),
            TestFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c),
            TestFunction::InversePower { power } => (1.0 + s).powf(-power),
        }
    }

    fn derivative(&self, s: f64) -> f64 {
        match self {
            TestFunction::Exponential { rate } => -rate * (-rate * s).exp(),
            TestFunction::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * s + k as f64 * c),
            TestFunction::InversePower { power } => -power * (1.0 + s).powf(-power - 1.0),
        }
    }
}
