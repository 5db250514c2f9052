use rand::Rng;
use rand_distr::StandardNormal;

use super::cube::{tau_derivative, DerivativeEstimate};
use super::{chunk_len, Budget, MethodChoice, MC_CHUNKS};
use crate::covariance::{a_j_analytic, CovarianceInterpolation, SubsetIndex};
use crate::error::{Error, Result};
use crate::par::{map_indexed, stream_rng, Execution};

const SLICE_STREAM: u64 = 0x42;

#[derive(Clone, Debug, PartialEq)]
pub struct SliceOptions {
    /// Window half-widths around `B_j^2 = 1`, tried from largest to smallest.
    pub bandwidths: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Number of iid Gaussian copies summed into `B_i^2` (3 for the Gaussian case).
    pub copies: usize,
    /// Fewer window hits than this flags the estimate.
    pub min_hits: u64,
    pub execution: Execution,
}

impl Default for SliceOptions {
    fn default() -> Self {
        SliceOptions {
            bandwidths: vec![0.1, 0.05, 0.025],
            samples: 1_000_000,
            seed: 0x5eed,
            copies: 3,
            min_hits: 100,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthEstimate {
    pub bandwidth: f64,
    pub hits: u64,
    pub value: f64,
    pub std_error: f64,
}

/// Estimate of the slice `int h_tau(1_J, x_{J'}) dx_{J'}` of the density of
/// `(B_1^2, ..., B_n^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyDensityEstimate {
    pub subset: SubsetIndex,
    pub value: f64,
    pub std_error: f64,
    /// Bandwidth whose estimate was selected.
    pub bandwidth: f64,
    pub hits: u64,
    pub samples: usize,
    pub seed: u64,
    /// All bandwidths, largest first.
    pub per_bandwidth: Vec<BandwidthEstimate>,
    /// `eps^2`-extrapolation from the two largest bandwidths (diagnostic).
    pub extrapolated: Option<f64>,
    /// Too few window hits at every bandwidth.
    pub flagged: bool,
}

/// Slice estimates for every nonempty `J` from one shared sample: a draw
/// counts for `J` at bandwidth `eps` when `|B_j^2 - 1| <= eps` for `j in J`
/// and `B_i^2 <= 1` otherwise; the count is divided by `N (2 eps)^{|J|}`.
pub fn boundary_integral_estimates(
    ci: &CovarianceInterpolation<f64>,
    tau: f64,
    opts: &SliceOptions,
) -> Result<Vec<BodyDensityEstimate>> {
    if opts.bandwidths.is_empty() || opts.bandwidths.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidArgument(format!("bandwidths {:?} must lie in (0, 1)", opts.bandwidths)));
    }
    if opts.copies == 0 {
        return Err(Error::InvalidArgument("at least one Gaussian copy".into()));
    }
    let l = ci.interpolate(&tau)?.cholesky()?;
    let n = ci.n();
    let subsets = 1usize << n;
    let full = subsets as u32 - 1;
    let mut bandwidths = opts.bandwidths.clone();
    bandwidths.sort_by(|a, b| b.total_cmp(a));
    bandwidths.dedup();
    let nb = bandwidths.len();

    let chunks = map_indexed(opts.execution, MC_CHUNKS, |c| {
        let mut rng = stream_rng(opts.seed, &[SLICE_STREAM, c as u64]);
        let mut counts = vec![0u64; nb * subsets];
        let mut z = vec![0.0; n];
        let mut b2 = vec![0.0; n];
        for _ in 0..chunk_len(opts.samples, c) {
            b2.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..opts.copies {
                z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                for (i, acc) in b2.iter_mut().enumerate() {
                    let x: f64 = l.row(i)[..=i].iter().zip(&z).map(|(a, b)| a * b).sum();
                    *acc += x * x;
                }
            }
            let inside = (0..n).filter(|&i| b2[i] <= 1.0).fold(0u32, |m, i| m | 1 << i);
            for (bi, &eps) in bandwidths.iter().enumerate() {
                let window = (0..n).filter(|&i| (b2[i] - 1.0).abs() <= eps).fold(0u32, |m, i| m | 1 << i);
                let mut j = window;
                while j != 0 {
                    if full & !j & !inside == 0 {
                        counts[bi * subsets + j as usize] += 1;
                    }
                    j = (j - 1) & window;
                }
            }
        }
        counts
    });
    let mut counts = vec![0u64; nb * subsets];
    for chunk in chunks {
        for (a, b) in counts.iter_mut().zip(chunk) {
            *a += b;
        }
    }

    let m = opts.samples.max(1) as f64;
    Ok(SubsetIndex::all_nonempty(n)
        .map(|j| {
            let per_bandwidth: Vec<BandwidthEstimate> = bandwidths
                .iter()
                .enumerate()
                .map(|(bi, &eps)| {
                    let hits = counts[bi * subsets + j.mask() as usize];
                    let volume = (2.0 * eps).powi(j.len() as i32);
                    let p = hits as f64 / m;
                    BandwidthEstimate {
                        bandwidth: eps,
                        hits,
                        value: p / volume,
                        std_error: (p * (1.0 - p) / m).sqrt() / volume,
                    }
                })
                .collect();
            select(j, per_bandwidth, opts)
        })
        .collect())
}

/// Largest bandwidth with enough hits whose estimate agrees with the next
/// smaller one at 3 sigma; otherwise the smallest with enough hits.
fn select(subset: SubsetIndex, per_bandwidth: Vec<BandwidthEstimate>, opts: &SliceOptions) -> BodyDensityEstimate {
    let enough = |b: &BandwidthEstimate| b.hits >= opts.min_hits;
    let mut chosen = None;
    for (idx, b) in per_bandwidth.iter().enumerate() {
        if !enough(b) {
            continue;
        }
        chosen = Some(idx);
        match per_bandwidth.get(idx + 1) {
            Some(next) if enough(next) => {
                if (b.value - next.value).abs() <= 3.0 * b.std_error.hypot(next.std_error) {
                    break;
                }
            }
            _ => break,
        }
    }
    let flagged = chosen.is_none();
    let pick = &per_bandwidth[chosen.unwrap_or(0)];
    let extrapolated = (per_bandwidth.len() >= 2).then(|| {
        let (a, b) = (&per_bandwidth[0], &per_bandwidth[1]);
        let (ea, eb) = (a.bandwidth * a.bandwidth, b.bandwidth * b.bandwidth);
        (ea * b.value - eb * a.value) / (ea - eb)
    });
    BodyDensityEstimate {
        subset,
        value: pick.value,
        std_error: pick.std_error,
        bandwidth: pick.bandwidth,
        hits: pick.hits,
        samples: opts.samples,
        seed: opts.seed,
        extrapolated,
        flagged,
        per_bandwidth,
    }
}

pub fn boundary_integral_estimate(
    ci: &CovarianceInterpolation<f64>,
    tau: f64,
    j: SubsetIndex,
    opts: &SliceOptions,
) -> Result<BodyDensityEstimate> {
    if j.is_empty() {
        return Err(Error::EmptySubset);
    }
    if j.dim() != ci.n() {
        return Err(Error::DimensionMismatch("subset dimension".into()));
    }
    Ok(boundary_integral_estimates(ci, tau, opts)?
        .into_iter()
        .find(|e| e.subset == j)
        .expect("all nonempty subsets are estimated"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionOptions {
    pub slices: SliceOptions,
    /// Finite-difference step for the left-hand side.
    pub step: f64,
    pub budget: Budget,
    /// Allowed relative disagreement between the two sides.
    pub rel_tol: f64,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        DecompositionOptions { slices: SliceOptions::default(), step: 1e-3, budget: Budget::default(), rel_tol: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionTerm {
    pub subset: SubsetIndex,
    pub a_j: f64,
    /// `2^{|J|} / 2`
    pub weight: f64,
    pub slice: BodyDensityEstimate,
    pub summand: f64,
    pub summand_std_error: f64,
    /// `summand >= -3 sigma`
    pub nonnegative: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionReport {
    pub tau: f64,
    pub lhs: DerivativeEstimate,
    pub rhs: f64,
    pub rhs_std_error: f64,
    pub terms: Vec<DecompositionTerm>,
    pub relative_error: f64,
    pub agreement: bool,
    pub nonnegative: bool,
    pub passed: bool,
}

/// Below this both sides count as zero.
const ABS_FLOOR: f64 = 1e-7;

/// Compares the finite-difference `dP/dtau` with
/// `1/2 sum_{J != {}} 2^{|J|} a_J(tau) int h_tau(1_J, x_{J'}) dx_{J'}`.
pub fn decomposition_check(
    ci: &CovarianceInterpolation<f64>,
    tau: f64,
    opts: &DecompositionOptions,
) -> Result<DecompositionReport> {
    if ci.n() > 3 {
        return Err(Error::Unsupported(format!("decomposition check needs n <= 3, got {}", ci.n())));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::TauOutOfRange(tau));
    }
    if opts.slices.copies != 3 {
        return Err(Error::InvalidArgument("the Gaussian decomposition uses three copies".into()));
    }
    let lhs = tau_derivative(ci, tau, opts.step, MethodChoice::Auto, &opts.budget)?;
    let slices = boundary_integral_estimates(ci, tau, &opts.slices)?;
    let mut terms = Vec::with_capacity(slices.len());
    let (mut rhs, mut var) = (0.0, 0.0);
    for slice in slices {
        let a_j = a_j_analytic(ci, slice.subset, &tau)?;
        let weight = 0.5 * 2f64.powi(slice.subset.len() as i32);
        let summand = weight * a_j * slice.value;
        let summand_std_error = weight * a_j.abs() * slice.std_error;
        rhs += summand;
        var += summand_std_error * summand_std_error;
        terms.push(DecompositionTerm {
            subset: slice.subset,
            a_j,
            weight,
            nonnegative: summand >= -3.0 * summand_std_error,
            slice,
            summand,
            summand_std_error,
        });
    }
    let diff = (lhs.value - rhs).abs();
    let relative_error = if lhs.value.abs() > ABS_FLOOR { diff / lhs.value.abs() } else { diff };
    let agreement = diff <= (opts.rel_tol * lhs.value.abs()).max(ABS_FLOOR);
    let nonnegative = terms.iter().all(|t| t.nonnegative);
    Ok(DecompositionReport {
        tau,
        lhs,
        rhs,
        rhs_std_error: var.sqrt(),
        terms,
        relative_error,
        agreement,
        nonnegative,
        passed: agreement && nonnegative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_three_slice() {
        let ci = CovarianceInterpolation::from_rows(vec![vec![1.0]], 1).unwrap();
        let opts = SliceOptions { samples: 2_000_000, ..Default::default() };
        let e = boundary_integral_estimate(&ci, 1.0, SubsetIndex::full(1), &opts).unwrap();
        // chi^2_3 density at 1
        let exact = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((e.value - exact).abs() < 4.0 * e.std_error + 1e-3, "{e:?}");
        assert!(!e.flagged);
        assert_eq!(e.per_bandwidth.len(), 3);
    }

    #[test]
    fn estimates_nonnegative_and_deterministic() {
        let ci = CovarianceInterpolation::from_rows(vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1).unwrap();
        let opts = SliceOptions { samples: 100_000, ..Default::default() };
        let a = boundary_integral_estimates(&ci, 0.5, &opts).unwrap();
        let serial = SliceOptions { execution: Execution::Serial, ..opts };
        assert_eq!(a, boundary_integral_estimates(&ci, 0.5, &serial).unwrap());
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|e| e.value >= 0.0));
        assert!(boundary_integral_estimate(&ci, 0.5, SubsetIndex::new(0, 2).unwrap(), &serial).is_err());
    }

    #[test]
    fn decomposition_two_by_two() {
        let ci = CovarianceInterpolation::from_rows(vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1).unwrap();
        let opts = DecompositionOptions {
            slices: SliceOptions { samples: 2_000_000, ..Default::default() },
            ..Default::default()
        };
        let r = decomposition_check(&ci, 0.5, &opts).unwrap();
        assert!(r.passed, "{r:#?}");
    }

    #[test]
    fn decomposition_uncorrelated_is_zero() {
        let ci = CovarianceInterpolation::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap();
        let opts = DecompositionOptions {
            slices: SliceOptions { samples: 10_000, ..Default::default() },
            ..Default::default()
        };
        let r = decomposition_check(&ci, 0.5, &opts).unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.terms.iter().all(|t| t.a_j == 0.0));
        assert!(r.passed);
    }
}
