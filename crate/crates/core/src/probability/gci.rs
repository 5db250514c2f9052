use super::cube::{cube_probability_cov, qmc_replicates};
use super::{mean_and_std_error, violation_threshold, Budget, Method, MethodChoice, ProbabilityEstimate};
use crate::covariance::CovarianceInterpolation;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GciOptions {
    /// Number of equally spaced `tau` values on `[0, 1]` (at least 2).
    pub grid_points: usize,
    pub method: MethodChoice,
    pub budget: Budget,
}

impl Default for GciOptions {
    fn default() -> Self {
        GciOptions { grid_points: 21, method: MethodChoice::Auto, budget: Budget::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePoint {
    pub tau: f64,
    pub estimate: ProbabilityEstimate,
}

/// A decrease between consecutive grid points that exceeds its threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileViolation {
    pub index: usize,
    pub drop: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GciReport {
    /// `P[max_i |X_i| <= 1]` under `C`.
    pub joint: ProbabilityEstimate,
    /// Cube probability of the `C11` marginal.
    pub first: ProbabilityEstimate,
    /// Cube probability of the `C22` marginal.
    pub second: ProbabilityEstimate,
    pub product: f64,
    /// `joint - first * second`.
    pub gap: f64,
    /// A negative gap counts only below `-gap_threshold`.
    pub gap_threshold: f64,
    pub inequality_holds: bool,
    /// `P(tau = 0) - first * second`.
    pub endpoint_residual: f64,
    pub profile: Vec<ProfilePoint>,
    pub violations: Vec<ProfileViolation>,
    pub passed: bool,
}

pub fn tau_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 / (points - 1) as f64).collect()
}

/// Correlation inequality `P_joint >= P_1 P_2` and the monotonicity of
/// `tau -> P(tau)` on an equally spaced grid.
pub fn gci_check(ci: &CovarianceInterpolation<f64>, opts: &GciOptions) -> Result<GciReport> {
    if opts.grid_points < 2 {
        return Err(Error::InvalidArgument("tau grid needs at least two points".into()));
    }
    if ci.n2() == 0 {
        return Err(Error::InvalidSplit { n1: ci.n1(), n: ci.n() });
    }
    let budget = &opts.budget;
    let method = opts.method.resolve(ci.n())?;
    let grid = tau_grid(opts.grid_points);
    let covs = grid.iter().map(|t| ci.interpolate(t)).collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    let profile: Vec<ProfilePoint> = if method == Method::QuasiMonteCarlo {
        // common randomizations across the grid; differences use paired replicates
        let reps = covs
            .iter()
            .map(|c| qmc_replicates(&c.cholesky()?, budget))
            .collect::<Result<Vec<_>>>()?;
        for k in 0..reps.len() - 1 {
            let diffs: Vec<f64> = reps[k].iter().zip(&reps[k + 1]).map(|(a, b)| a - b).collect();
            let (drop, se) = mean_and_std_error(&diffs);
            let threshold = violation_threshold(&[], &[se]);
            if drop > threshold {
                violations.push(ProfileViolation { index: k, drop, threshold });
            }
        }
        grid.iter()
            .zip(reps)
            .map(|(&tau, r)| {
                let (value, se) = mean_and_std_error(&r);
                ProfilePoint {
                    tau,
                    estimate: ProbabilityEstimate {
                        value,
                        abs_error: 3.0 * se,
                        std_error: se,
                        method,
                        seed: Some(budget.seed),
                        samples: budget.qmc_points * budget.qmc_randomizations,
                        converged: true,
                    },
                }
            })
            .collect()
    } else {
        let points = grid
            .iter()
            .zip(&covs)
            .map(|(&tau, c)| {
                cube_probability_cov(c, MethodChoice::Fixed(method), budget).map(|estimate| ProfilePoint { tau, estimate })
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, w) in points.windows(2).enumerate() {
            let (a, b) = (&w[0].estimate, &w[1].estimate);
            let drop = a.value - b.value;
            let threshold = violation_threshold(&[a.bound(), b.bound()], &[a.std_error, b.std_error]);
            if drop > threshold {
                violations.push(ProfileViolation { index: k, drop, threshold });
            }
        }
        points
    };

    let (c11, c22) = ci.marginals();
    let first = cube_probability_cov(&c11, MethodChoice::Auto, budget)?;
    let second = cube_probability_cov(&c22, MethodChoice::Auto, budget)?;
    let joint = profile.last().expect("grid has points").estimate.clone();
    let product = first.value * second.value;
    let gap = joint.value - product;
    let gap_threshold = violation_threshold(
        &[joint.bound(), second.value * first.bound(), first.value * second.bound()],
        &[joint.std_error, second.value * first.std_error, first.value * second.std_error],
    );
    let inequality_holds = gap >= -gap_threshold;
    let endpoint_residual = profile[0].estimate.value - product;
    let passed = inequality_holds && violations.is_empty();
    Ok(GciReport {
        joint,
        first,
        second,
        product,
        gap,
        gap_threshold,
        inequality_holds,
        endpoint_residual,
        profile,
        violations,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diagonal_has_zero_gap() {
        let ci = CovarianceInterpolation::from_rows(
            vec![vec![1.0, 0.3, 0.0], vec![0.3, 1.0, 0.0], vec![0.0, 0.0, 2.0]],
            2,
        )
        .unwrap();
        let r = gci_check(&ci, &GciOptions::default()).unwrap();
        assert!(r.gap.abs() < 1e-8, "{}", r.gap);
        assert!(r.passed);
    }

    #[test]
    fn positive_gap_two_by_two() {
        let ci = CovarianceInterpolation::from_rows(vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1).unwrap();
        let r = gci_check(&ci, &GciOptions::default()).unwrap();
        assert!(r.gap > 1e-3, "{r:?}");
        assert!(r.passed);
        assert!(r.endpoint_residual.abs() < 1e-8);
        assert_eq!(r.profile.len(), 21);
    }

    #[test]
    fn qmc_profile_six_dimensional() {
        let c = crate::ensemble::ensemble_member(6, 17, 0);
        let ci = CovarianceInterpolation::new(c, 3).unwrap();
        let opts = GciOptions { grid_points: 6, ..Default::default() };
        let r = gci_check(&ci, &opts).unwrap();
        assert_eq!(r.joint.method, Method::QuasiMonteCarlo);
        assert!(r.passed, "{r:?}");
    }
}
