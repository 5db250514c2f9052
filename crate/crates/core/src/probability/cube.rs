use rand::Rng;
use rand_distr::StandardNormal;

use super::qmc::ScrambledHalton;
use super::{chunk_len, mean_and_std_error, normal, Budget, Method, MethodChoice, ProbabilityEstimate, MC_CHUNKS};
use crate::covariance::CovarianceInterpolation;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::par::{map_indexed, stream_rng};
use crate::quad::integrate;

const QMC_STREAM: u64 = 0x51;
const MC_STREAM: u64 = 0x4d;

/// `P[max_i |X_i| <= 1]` for `X ~ N(0, C(tau))`.
pub fn cube_probability(
    ci: &CovarianceInterpolation<f64>,
    tau: f64,
    method: MethodChoice,
    budget: &Budget,
) -> Result<ProbabilityEstimate> {
    cube_probability_cov(&ci.interpolate(&tau)?, method, budget)
}

/// `P[max_i |X_i| <= 1]` for `X ~ N(0, cov)`.
pub fn cube_probability_cov(cov: &Matrix<f64>, method: MethodChoice, budget: &Budget) -> Result<ProbabilityEstimate> {
    let n = cov.rows();
    if n == 0 {
        return Ok(ProbabilityEstimate::exact(1.0));
    }
    let l = cov.cholesky()?;
    match method.resolve(n)? {
        Method::Quadrature => quadrature(&l, budget),
        Method::QuasiMonteCarlo => {
            let reps = qmc_replicates(&l, budget)?;
            let (value, se) = mean_and_std_error(&reps);
            Ok(ProbabilityEstimate {
                value,
                abs_error: 3.0 * se,
                std_error: se,
                method: Method::QuasiMonteCarlo,
                seed: Some(budget.seed),
                samples: budget.qmc_points * budget.qmc_randomizations,
                converged: true,
            })
        }
        Method::MonteCarlo => {
            let hits: u64 = map_indexed(budget.execution, MC_CHUNKS, |c| {
                let mut rng = stream_rng(budget.seed, &[MC_STREAM, c as u64]);
                let mut z = vec![0.0; n];
                (0..chunk_len(budget.mc_samples, c))
                    .filter(|_| {
                        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                        inside_cube(&l, &z)
                    })
                    .count() as u64
            })
            .into_iter()
            .sum();
            Ok(bernoulli_estimate(hits, budget.mc_samples, budget.seed))
        }
    }
}

pub(crate) fn bernoulli_estimate(hits: u64, samples: usize, seed: u64) -> ProbabilityEstimate {
    let n = samples.max(1) as f64;
    let p = hits as f64 / n;
    let se = (p * (1.0 - p) / n).sqrt();
    ProbabilityEstimate {
        value: p,
        abs_error: 3.0 * se,
        std_error: se,
        method: Method::MonteCarlo,
        seed: Some(seed),
        samples,
        converged: samples > 0,
    }
}

fn inside_cube(l: &Matrix<f64>, z: &[f64]) -> bool {
    (0..z.len()).all(|i| {
        let x: f64 = l.row(i)[..=i].iter().zip(z).map(|(a, b)| a * b).sum();
        x.abs() <= 1.0
    })
}

/// Nested adaptive quadrature over the whitened variables `X = L z`: the
/// outer `n - 1` coordinates by Gauss-Kronrod, the last by an exact normal
/// interval probability.
fn quadrature(l: &Matrix<f64>, budget: &Budget) -> Result<ProbabilityEstimate> {
    let n = l.rows();
    let opts = budget.quad_options();
    let mut inner_opts = opts;
    inner_opts.abs_tol = opts.abs_tol * 0.1;
    let limits = |i: usize, shift: f64| ((-1.0 - shift) / l[(i, i)], (1.0 - shift) / l[(i, i)]);
    let (value, abs_error, evaluations, converged) = match n {
        1 => {
            let (a, b) = limits(0, 0.0);
            (normal::interval(a, b), 4.0 * f64::EPSILON, 1, true)
        }
        2 => {
            let (a, b) = limits(0, 0.0);
            let q = integrate(
                |z1| {
                    let (lo, hi) = limits(1, l[(1, 0)] * z1);
                    normal::pdf(z1) * normal::interval(lo, hi)
                },
                a,
                b,
                opts,
            );
            (q.value, q.abs_error, q.evaluations, q.converged)
        }
        3 => {
            let (a, b) = limits(0, 0.0);
            let mut inner_error = 0.0f64;
            let mut evaluations = 0;
            let mut inner_converged = true;
            let q = integrate(
                |z1| {
                    let (lo, hi) = limits(1, l[(1, 0)] * z1);
                    let inner = integrate(
                        |z2| {
                            let (lo3, hi3) = limits(2, l[(2, 0)] * z1 + l[(2, 1)] * z2);
                            normal::pdf(z2) * normal::interval(lo3, hi3)
                        },
                        lo,
                        hi,
                        inner_opts,
                    );
                    inner_error = inner_error.max(inner.abs_error);
                    evaluations += inner.evaluations;
                    inner_converged &= inner.converged;
                    normal::pdf(z1) * inner.value
                },
                a,
                b,
                opts,
            );
            // the outer weight integrates to at most 1
            (q.value, q.abs_error + inner_error, evaluations, q.converged && inner_converged)
        }
        _ => return Err(Error::Unsupported(format!("quadrature for n = {n} > 3"))),
    };
    Ok(ProbabilityEstimate {
        value: value.clamp(0.0, 1.0),
        abs_error,
        std_error: 0.0,
        method: Method::Quadrature,
        seed: None,
        samples: evaluations,
        converged,
    })
}

/// One QMC mean per randomization of the separation-of-variables integrand
/// (sequential conditioning on the Cholesky factor).
pub fn qmc_replicates(l: &Matrix<f64>, budget: &Budget) -> Result<Vec<f64>> {
    let n = l.rows();
    if n == 0 || n - 1 > super::qmc::MAX_DIM {
        return Err(Error::Unsupported(format!("QMC for n = {n}")));
    }
    if budget.qmc_points == 0 || budget.qmc_randomizations < 2 {
        return Err(Error::InvalidArgument("QMC needs points and at least two randomizations".into()));
    }
    Ok(map_indexed(budget.execution, budget.qmc_randomizations, |r| {
        let mut rng = stream_rng(budget.seed, &[QMC_STREAM, r as u64]);
        let halton = ScrambledHalton::new(n - 1, &mut rng);
        let mut w = vec![0.0; n - 1];
        let mut y = vec![0.0; n];
        let mut total = 0.0;
        for k in 0..budget.qmc_points {
            halton.point(k as u64, &mut w);
            total += separated_integrand(l, &w, &mut y);
        }
        total / budget.qmc_points as f64
    }))
}

fn separated_integrand(l: &Matrix<f64>, w: &[f64], y: &mut [f64]) -> f64 {
    let n = l.rows();
    let mut prod = 1.0;
    for i in 0..n {
        let shift: f64 = l.row(i)[..i].iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
        let a = (-1.0 - shift) / l[(i, i)];
        let b = (1.0 - shift) / l[(i, i)];
        let e = normal::interval(a, b);
        prod *= e;
        if prod == 0.0 {
            return 0.0;
        }
        if i + 1 < n {
            y[i] = normal::quantile(normal::cdf(a) + w[i] * e);
        }
    }
    prod
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    Central,
    Forward,
    Backward,
}

impl Stencil {
    /// `(offset in steps, weight)`; the derivative is `sum w f(tau + k h) / h`.
    fn nodes(self) -> &'static [(f64, f64)] {
        match self {
            Stencil::Central => &[(-1.0, -0.5), (1.0, 0.5)],
            Stencil::Forward => &[(0.0, -1.5), (1.0, 2.0), (2.0, -0.5)],
            Stencil::Backward => &[(0.0, 1.5), (-1.0, -2.0), (-2.0, 0.5)],
        }
    }

    fn fits(self, tau: f64, h: f64) -> bool {
        self.nodes().iter().all(|(k, _)| (0.0..=1.0).contains(&(tau + k * h)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    /// Bound (quadrature: propagated errors plus a Richardson truncation
    /// estimate) or 3-sigma half-width (QMC/MC, common random numbers).
    pub abs_error: f64,
    pub std_error: f64,
    pub method: Method,
    pub step: f64,
    pub stencil: Stencil,
    pub seed: Option<u64>,
    pub converged: bool,
}

/// Finite-difference `dP/dtau` with common integration grids / random numbers
/// across the stencil.
pub fn tau_derivative(
    ci: &CovarianceInterpolation<f64>,
    tau: f64,
    h: f64,
    method: MethodChoice,
    budget: &Budget,
) -> Result<DerivativeEstimate> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::TauOutOfRange(tau));
    }
    if !(h > 0.0 && h <= 0.25) {
        return Err(Error::InvalidArgument(format!("step {h} outside (0, 0.25]")));
    }
    let stencil = [Stencil::Central, Stencil::Forward, Stencil::Backward]
        .into_iter()
        .find(|s| s.fits(tau, h))
        .expect("one-sided stencils fit for h <= 0.25");
    let method = method.resolve(ci.n())?;
    let factor = |t: f64| ci.interpolate(&t).and_then(|c| c.cholesky());
    match method {
        Method::Quadrature => {
            let eval = |step: f64| -> Result<(f64, f64, bool)> {
                let mut d = 0.0;
                let mut err = 0.0;
                let mut conv = true;
                for &(k, w) in stencil.nodes() {
                    let p = quadrature(&factor(tau + k * step)?, budget)?;
                    d += w * p.value / step;
                    err += (w / step).abs() * p.abs_error;
                    conv &= p.converged;
                }
                Ok((d, err, conv))
            };
            let (d, err, conv) = eval(h)?;
            let truncation = if stencil.fits(tau, 2.0 * h) {
                let (d2, err2, _) = eval(2.0 * h)?;
                ((d - d2).abs() - err - err2).max(0.0) / 3.0
            } else {
                0.0
            };
            Ok(DerivativeEstimate {
                value: d,
                abs_error: err + truncation,
                std_error: 0.0,
                method,
                step: h,
                stencil,
                seed: None,
                converged: conv,
            })
        }
        Method::QuasiMonteCarlo => {
            let mut per_rep = vec![0.0; budget.qmc_randomizations];
            for &(k, w) in stencil.nodes() {
                let reps = qmc_replicates(&factor(tau + k * h)?, budget)?;
                for (acc, r) in per_rep.iter_mut().zip(reps) {
                    *acc += w * r / h;
                }
            }
            let (value, se) = mean_and_std_error(&per_rep);
            Ok(DerivativeEstimate {
                value,
                abs_error: 3.0 * se,
                std_error: se,
                method,
                step: h,
                stencil,
                seed: Some(budget.seed),
                converged: true,
            })
        }
        Method::MonteCarlo => {
            let factors: Vec<(Matrix<f64>, f64)> = stencil
                .nodes()
                .iter()
                .map(|&(k, w)| factor(tau + k * h).map(|l| (l, w / h)))
                .collect::<Result<_>>()?;
            let n = ci.n();
            let sums = map_indexed(budget.execution, MC_CHUNKS, |c| {
                let mut rng = stream_rng(budget.seed, &[MC_STREAM, c as u64]);
                let mut z = vec![0.0; n];
                let (mut s1, mut s2) = (0.0, 0.0);
                for _ in 0..chunk_len(budget.mc_samples, c) {
                    z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                    let d: f64 = factors.iter().filter(|(l, _)| inside_cube(l, &z)).map(|(_, w)| w).sum();
                    s1 += d;
                    s2 += d * d;
                }
                (s1, s2)
            });
            let m = budget.mc_samples.max(1) as f64;
            let (s1, s2) = sums.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
            let mean = s1 / m;
            let se = ((s2 / m - mean * mean).max(0.0) / m).sqrt();
            Ok(DerivativeEstimate {
                value: mean,
                abs_error: 3.0 * se,
                std_error: se,
                method,
                step: h,
                stencil,
                seed: Some(budget.seed),
                converged: budget.mc_samples > 0,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Execution;

    const P1: f64 = 0.682_689_492_137_085_9;

    fn ci(rows: Vec<Vec<f64>>, n1: usize) -> CovarianceInterpolation<f64> {
        CovarianceInterpolation::from_rows(rows, n1).unwrap()
    }

    fn budget() -> Budget {
        Budget::default()
    }

    #[test]
    fn one_dimensional() {
        let p = cube_probability_cov(&Matrix::identity(1), MethodChoice::Auto, &budget()).unwrap();
        assert!((p.value - P1).abs() < 1e-12);
        let p = cube_probability_cov(&Matrix::from_rows(vec![vec![4.0]]).unwrap(), MethodChoice::Auto, &budget()).unwrap();
        assert!((p.value - normal::interval(-0.5, 0.5)).abs() < 1e-14);
    }

    #[test]
    fn independent_product() {
        let c = ci(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1);
        for tau in [0.0, 0.4, 1.0] {
            let p = cube_probability(&c, tau, MethodChoice::Auto, &budget()).unwrap();
            assert!((p.value - P1 * P1).abs() < 1e-10, "{p:?}");
            assert!(p.abs_error <= 1e-8);
        }
        let c3 = ci(vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 0.5]], 1);
        let p = cube_probability(&c3, 1.0, MethodChoice::Auto, &budget()).unwrap();
        let expect = P1 * normal::interval(-0.5f64.sqrt(), 0.5f64.sqrt()) * normal::interval(-2f64.sqrt(), 2f64.sqrt());
        assert!((p.value - expect).abs() < 1e-10);
    }

    #[test]
    fn block_diagonal_endpoint() {
        let c = ci(vec![vec![1.0, 0.6, 0.3], vec![0.6, 1.0, -0.2], vec![0.3, -0.2, 1.0]], 2);
        let p0 = cube_probability(&c, 0.0, MethodChoice::Auto, &budget()).unwrap();
        let (c11, c22) = c.marginals();
        let p1 = cube_probability_cov(&c11, MethodChoice::Auto, &budget()).unwrap();
        let p2 = cube_probability_cov(&c22, MethodChoice::Auto, &budget()).unwrap();
        assert!((p0.value - p1.value * p2.value).abs() < 1e-9);
    }

    #[test]
    fn qmc_and_mc_agree_with_quadrature() {
        let c = ci(vec![vec![1.0, 0.5, 0.2], vec![0.5, 1.0, 0.4], vec![0.2, 0.4, 1.0]], 1);
        let q = cube_probability(&c, 0.7, MethodChoice::Auto, &budget()).unwrap();
        let qmc = cube_probability(&c, 0.7, MethodChoice::Fixed(Method::QuasiMonteCarlo), &budget()).unwrap();
        assert!((q.value - qmc.value).abs() < 4.0 * qmc.std_error + 1e-6, "{q:?} {qmc:?}");
        assert!(qmc.std_error < 1e-4);
        let b = Budget { mc_samples: 200_000, ..budget() };
        let mc = cube_probability(&c, 0.7, MethodChoice::Fixed(Method::MonteCarlo), &b).unwrap();
        assert!((q.value - mc.value).abs() < 4.0 * mc.std_error);
    }

    #[test]
    fn serial_parallel_identical() {
        let c = ci(vec![vec![1.0, 0.5, 0.2, 0.1], vec![0.5, 1.0, 0.4, 0.0], vec![0.2, 0.4, 1.0, 0.3], vec![0.1, 0.0, 0.3, 1.0]], 2);
        let s = budget().with_execution(Execution::Serial);
        let p = budget().with_execution(Execution::Parallel);
        let a = cube_probability(&c, 0.5, MethodChoice::Auto, &s).unwrap();
        let b = cube_probability(&c, 0.5, MethodChoice::Auto, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn derivative_examples() {
        let zero = ci(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1);
        let d = tau_derivative(&zero, 0.5, 1e-3, MethodChoice::Auto, &budget()).unwrap();
        assert!(d.value.abs() < 1e-7);

        let c = ci(vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1);
        let d = tau_derivative(&c, 0.5, 1e-3, MethodChoice::Auto, &budget()).unwrap();
        // oracle: rho * dP/dr with dP/dr = 2 phi2(1,1;r) - 2 phi2(1,-1;r), r = tau rho
        let r: f64 = 0.25;
        let phi2 = |x: f64, y: f64| {
            (-(x * x - 2.0 * r * x * y + y * y) / (2.0 * (1.0 - r * r))).exp()
                / (2.0 * std::f64::consts::PI * (1.0 - r * r).sqrt())
        };
        let oracle = 0.5 * (2.0 * phi2(1.0, 1.0) - 2.0 * phi2(1.0, -1.0));
        assert!(d.value > 0.0);
        assert!((d.value - oracle).abs() < 1e-6, "{} vs {oracle}", d.value);
        assert!(d.abs_error < 1e-5);

        let flipped = ci(vec![vec![1.0, -0.5], vec![-0.5, 1.0]], 1);
        let f = tau_derivative(&flipped, 0.5, 1e-3, MethodChoice::Auto, &budget()).unwrap();
        assert!((f.value - d.value).abs() < 1e-7);

        let end = tau_derivative(&c, 0.0, 1e-3, MethodChoice::Auto, &budget()).unwrap();
        assert_eq!(end.stencil, Stencil::Forward);
        assert!(end.value.abs() < 1e-5);
        let end = tau_derivative(&c, 1.0, 1e-3, MethodChoice::Auto, &budget()).unwrap();
        assert_eq!(end.stencil, Stencil::Backward);
    }
}
