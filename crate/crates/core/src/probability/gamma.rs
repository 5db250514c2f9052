use rand::Rng;
use rand_distr::StandardNormal;

use super::boundary::{boundary_integral_estimates, SliceOptions};
use super::cube::bernoulli_estimate;
use super::gci::tau_grid;
use super::{chunk_len, violation_threshold, Budget, ProbabilityEstimate, ProfileViolation, MC_CHUNKS};
use crate::covariance::{a_j_analytic, CovarianceInterpolation};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par::{map_indexed, stream_rng};

const GAMMA_STREAM: u64 = 0x47;

/// Half-integer multivariate Gamma vector `Gamma_i = 1/2 sum_{m<=k} (X_i^(m))^2`
/// built from `k` iid copies of `X ~ N(0, C(tau))`; the threshold is `1/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaConfig {
    k: usize,
    ci: CovarianceInterpolation<f64>,
}

impl GammaConfig {
    pub fn new(k: usize, ci: CovarianceInterpolation<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("Gamma shape needs k >= 1".into()));
        }
        Ok(GammaConfig { k, ci })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn covariance(&self) -> &CovarianceInterpolation<f64> {
        &self.ci
    }
}

/// Per-`tau` event counts from one shared set of draws.
#[derive(Clone, Debug, Default)]
struct Counts {
    joint: Vec<u64>,
    first: Vec<u64>,
    second: Vec<u64>,
    /// Paired differences `1{tau_{j+1}} - 1{tau_j}`: sum and sum of squares.
    diff: Vec<(i64, u64)>,
}

impl Counts {
    fn new(points: usize) -> Self {
        Counts {
            joint: vec![0; points],
            first: vec![0; points],
            second: vec![0; points],
            diff: vec![(0, 0); points.saturating_sub(1)],
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.joint.iter_mut().zip(other.joint) {
            *a += b;
        }
        for (a, b) in self.first.iter_mut().zip(other.first) {
            *a += b;
        }
        for (a, b) in self.second.iter_mut().zip(other.second) {
            *a += b;
        }
        for (a, b) in self.diff.iter_mut().zip(other.diff) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self
    }
}

fn scan(factors: &[Matrix<f64>], k: usize, n1: usize, budget: &Budget) -> Counts {
    let n = factors[0].rows();
    map_indexed(budget.execution, MC_CHUNKS, |c| {
        let mut rng = stream_rng(budget.seed, &[GAMMA_STREAM, c as u64]);
        let mut counts = Counts::new(factors.len());
        let mut z = vec![0.0; k * n];
        let mut s = vec![0.0; n];
        let mut prev = false;
        for _ in 0..chunk_len(budget.mc_samples, c) {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            for (t, l) in factors.iter().enumerate() {
                s.iter_mut().for_each(|v| *v = 0.0);
                for copy in z.chunks_exact(n) {
                    for (i, si) in s.iter_mut().enumerate() {
                        let x: f64 = l.row(i)[..=i].iter().zip(copy).map(|(a, b)| a * b).sum();
                        *si += x * x;
                    }
                }
                let a = s[..n1].iter().all(|&v| v <= 1.0);
                let b = s[n1..].iter().all(|&v| v <= 1.0);
                counts.first[t] += u64::from(a);
                counts.second[t] += u64::from(b);
                counts.joint[t] += u64::from(a && b);
                if t > 0 {
                    let d = i64::from(a && b) - i64::from(prev);
                    counts.diff[t - 1].0 += d;
                    counts.diff[t - 1].1 += d.unsigned_abs();
                }
                prev = a && b;
            }
        }
        counts
    })
    .into_iter()
    .reduce(Counts::merge)
    .expect("at least one chunk")
}

fn factors_at(ci: &CovarianceInterpolation<f64>, taus: &[f64]) -> Result<Vec<Matrix<f64>>> {
    taus.iter().map(|t| ci.interpolate(t)?.cholesky()).collect()
}

/// `P[max_i Gamma_i <= 1/2]` at `tau` by Monte Carlo.
pub fn gamma_probability(gc: &GammaConfig, tau: f64, budget: &Budget) -> Result<ProbabilityEstimate> {
    let factors = factors_at(&gc.ci, &[tau])?;
    let counts = scan(&factors, gc.k, gc.ci.n1(), budget);
    Ok(bernoulli_estimate(counts.joint[0], budget.mc_samples, budget.seed))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaProfilePoint {
    pub tau: f64,
    pub estimate: ProbabilityEstimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaGciReport {
    pub k: usize,
    pub joint: ProbabilityEstimate,
    pub first: ProbabilityEstimate,
    pub second: ProbabilityEstimate,
    /// `joint - first * second` from the same draws at `tau = 1`.
    pub gap: f64,
    /// Standard error of the gap from its influence function.
    pub gap_std_error: f64,
    pub inequality_holds: bool,
    pub profile: Vec<GammaProfilePoint>,
    pub violations: Vec<ProfileViolation>,
    pub passed: bool,
}

/// Gamma correlation inequality at 3 sigma plus a paired `tau`-profile.
pub fn gamma_gci_check(gc: &GammaConfig, grid_points: usize, budget: &Budget) -> Result<GammaGciReport> {
    if grid_points < 2 {
        return Err(Error::InvalidArgument("tau grid needs at least two points".into()));
    }
    if gc.ci.n2() == 0 {
        return Err(Error::InvalidSplit { n1: gc.ci.n1(), n: gc.ci.n() });
    }
    let grid = tau_grid(grid_points);
    let counts = scan(&factors_at(&gc.ci, &grid)?, gc.k, gc.ci.n1(), budget);
    let m = budget.mc_samples.max(1) as f64;
    let last = grid_points - 1;
    let (pa, pb, pab) = (
        counts.first[last] as f64 / m,
        counts.second[last] as f64 / m,
        counts.joint[last] as f64 / m,
    );
    let gap = pab - pa * pb;
    // influence function psi = 1_AB - p_B 1_A - p_A 1_B
    let second_moment = pab * (1.0 - 2.0 * pa - 2.0 * pb + 2.0 * pa * pb) + pb * pb * pa + pa * pa * pb;
    let mean = pab - 2.0 * pa * pb;
    let gap_std_error = ((second_moment - mean * mean).max(0.0) / m).sqrt();
    let inequality_holds = gap >= -3.0 * gap_std_error;

    let mut violations = Vec::new();
    for (j, &(s1, s2)) in counts.diff.iter().enumerate() {
        let d = s1 as f64 / m;
        let se = ((s2 as f64 / m - d * d).max(0.0) / m).sqrt();
        let threshold = violation_threshold(&[], &[se]);
        if -d > threshold {
            violations.push(ProfileViolation { index: j, drop: -d, threshold });
        }
    }
    let est = |hits: u64| bernoulli_estimate(hits, budget.mc_samples, budget.seed);
    let profile = grid
        .iter()
        .zip(&counts.joint)
        .map(|(&tau, &h)| GammaProfilePoint { tau, estimate: est(h) })
        .collect();
    let passed = inequality_holds && violations.is_empty();
    Ok(GammaGciReport {
        k: gc.k,
        joint: est(counts.joint[last]),
        first: est(counts.first[last]),
        second: est(counts.second[last]),
        gap,
        gap_std_error,
        inequality_holds,
        profile,
        violations,
        passed,
    })
}

/// Diagnostic comparison for the Gamma case (`n = 2`, `k <= 3`): a
/// common-random-number finite difference of `P(tau)` against
/// `k/2 sum_J 2^{|J|} a_J(tau) int h^{(k+2)}_tau(1_J, x_{J'}) dx_{J'}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaDiagnostic {
    pub k: usize,
    pub tau: f64,
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub rhs_std_error: f64,
    /// `|lhs - rhs|` in combined standard errors.
    pub z_score: f64,
    pub consistent: bool,
}

pub fn gamma_decomposition_diagnostic(
    gc: &GammaConfig,
    tau: f64,
    h: f64,
    budget: &Budget,
    slices: &SliceOptions,
) -> Result<GammaDiagnostic> {
    let ci = &gc.ci;
    if ci.n() != 2 || gc.k > 3 {
        return Err(Error::Unsupported("Gamma diagnostic is limited to n = 2, k <= 3".into()));
    }
    if !(tau - h >= 0.0 && tau + h <= 1.0 && h > 0.0) {
        return Err(Error::InvalidArgument(format!("stencil tau +- h = {tau} +- {h} leaves [0, 1]")));
    }
    let counts = scan(&factors_at(ci, &[tau - h, tau + h])?, gc.k, ci.n1(), budget);
    let m = budget.mc_samples.max(1) as f64;
    let (s1, s2) = counts.diff[0];
    let d = s1 as f64 / m;
    let lhs = d / (2.0 * h);
    let lhs_std_error = ((s2 as f64 / m - d * d).max(0.0) / m).sqrt() / (2.0 * h);

    let opts = SliceOptions { copies: gc.k + 2, ..slices.clone() };
    let estimates = boundary_integral_estimates(ci, tau, &opts)?;
    let (mut rhs, mut var) = (0.0, 0.0);
    for e in &estimates {
        let coef = 0.5 * gc.k as f64 * 2f64.powi(e.subset.len() as i32) * a_j_analytic(ci, e.subset, &tau)?;
        rhs += coef * e.value;
        var += (coef * e.std_error).powi(2);
    }
    let rhs_std_error = var.sqrt();
    let combined = (lhs_std_error.powi(2) + var).sqrt();
    let z_score = if combined > 0.0 { (lhs - rhs).abs() / combined } else { 0.0 };
    Ok(GammaDiagnostic {
        k: gc.k,
        tau,
        lhs,
        lhs_std_error,
        rhs,
        rhs_std_error,
        z_score,
        consistent: z_score <= 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{cube_probability, MethodChoice};

    fn ci(rows: Vec<Vec<f64>>, n1: usize) -> CovarianceInterpolation<f64> {
        CovarianceInterpolation::from_rows(rows, n1).unwrap()
    }

    fn budget(samples: usize) -> Budget {
        Budget { mc_samples: samples, ..Budget::default() }
    }

    #[test]
    fn chi_square_two_anchor() {
        let gc = GammaConfig::new(2, CovarianceInterpolation::from_rows(vec![vec![1.0]], 1).unwrap()).unwrap();
        let p = gamma_probability(&gc, 1.0, &budget(400_000)).unwrap();
        let exact = 1.0 - (-0.5f64).exp();
        assert!((p.value - exact).abs() < 3.0 * p.std_error, "{p:?}");
    }

    #[test]
    fn k_one_is_the_gaussian_event() {
        let c = ci(vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1);
        let gc = GammaConfig::new(1, c.clone()).unwrap();
        let p = gamma_probability(&gc, 0.8, &budget(300_000)).unwrap();
        let q = cube_probability(&c, 0.8, MethodChoice::Auto, &Budget::default()).unwrap();
        assert!((p.value - q.value).abs() < 3.0 * p.std_error);
    }

    #[test]
    fn gamma_inequality_holds() {
        let gc = GammaConfig::new(2, ci(vec![vec![1.0, 0.7], vec![0.7, 1.0]], 1)).unwrap();
        let r = gamma_gci_check(&gc, 6, &budget(200_000)).unwrap();
        assert!(r.gap > 0.0 && r.passed, "{r:?}");
        let block = GammaConfig::new(3, ci(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1)).unwrap();
        let r = gamma_gci_check(&block, 3, &budget(200_000)).unwrap();
        assert!(r.gap.abs() < 3.0 * r.gap_std_error + 1e-12, "{r:?}");
    }

    #[test]
    fn rejects_k_zero() {
        assert!(GammaConfig::new(0, ci(vec![vec![1.0]], 1)).is_err());
    }
}
