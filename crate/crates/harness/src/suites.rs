//! The verification suites. Every check becomes one [`Record`]; records are
//! assembled in config order whatever the execution policy.

use std::time::Instant;

use susy_gci::covariance::{
    a_j_analytic, a_j_fermionic, a_j_fermionic_poly, leibniz_check, principal_minor_det, CovarianceInterpolation,
    SubsetIndex, WickTable,
};
use susy_gci::ensemble::{random_rational_matrix, random_rational_spd};
use susy_gci::exterior::{gaussian_fermionic_integral, Registry};
use susy_gci::par::{derive_seed, map_slice, stream_rng, Execution};
use susy_gci::poly::Poly;
use susy_gci::probability::{
    cube_probability, decomposition_check, gamma_gci_check, gci_check, square_expectation, Budget,
    DecompositionOptions, GammaConfig, GciOptions, Method, MethodChoice, SliceOptions,
};
use susy_gci::ring::{rat, Coefficient, Rational};
use susy_gci::super_calculus::{localization_check, radius_combination, reduction_check, ward_seed, SuperDerivation, TestFunction};

use crate::config::{ConfigError, NamedCovariance, RunConfig, Suite};
use crate::report::{digest, Record, ReportDocument};

const ANCHOR_FERMIONIC: &str = "fermionic Gaussian integral formula";
const ANCHOR_LEIBNIZ: &str = "determinant expansion formula";
const ANCHOR_Q_CLOSED: &str = "Y^2 + Z^2 + 2 xi eta is Q-closed";
const ANCHOR_WARD_SEED: &str = "Q(Y^T S eta) = xi^T S eta + Y^T S Y for any symmetric matrix";
const ANCHOR_ROUTES: &str = "effective action route to a_J(tau)";
const ANCHOR_WICK: &str = "fermionic Wick contraction yields 2^|J| det C_J";
const ANCHOR_LEMMA_A: &str = "the submatrix of the interpolated covariance kernel: a_J(tau) >= 0";
const ANCHOR_GCI: &str = "Gaussian correlation inequality for a centered Gaussian vector";
const ANCHOR_GAMMA: &str = "Gamma_i <= 1/2: half-integer multivariate Gamma correlation inequality";
const ANCHOR_LOCALIZATION: &str = "supersymmetric localization: integral equals f(0,0,0,0)";
const ANCHOR_REDUCTION: &str = "dimensional reduction for F smooth with enough decay";
const ANCHOR_DECOMPOSITION: &str = "Ward identity multiplied by the constant -1/2; boundary integral of h_tau";

const ROUTE_ABS_FLOOR: f64 = 1e-15;

const RATES: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
const VARIANCES: [f64; 3] = [0.5, 1.0, 2.0];

enum Task<'a> {
    Fermionic,
    Leibniz,
    QClosed,
    WardSeed,
    RationalRoutes,
    RationalWick,
    LemmaA(&'a NamedCovariance),
    Gci(usize, &'a NamedCovariance),
    Gamma(usize, &'a NamedCovariance, usize),
    Reduction(f64, f64),
    Decomposition(usize, &'a NamedCovariance, usize),
}

/// Validates `config` and runs it. `config_bytes` feeds the report's config digest.
pub fn run(config: &RunConfig, config_bytes: &[u8], exec: Execution) -> Result<ReportDocument, ConfigError> {
    let matrices = config.validate()?;
    Ok(run_suite(config, &matrices, config_bytes, exec))
}

pub fn run_suite(config: &RunConfig, matrices: &[NamedCovariance], config_bytes: &[u8], exec: Execution) -> ReportDocument {
    let mut suites = config.suites.clone();
    suites.sort();
    suites.dedup();
    let mut tasks = Vec::new();
    for suite in suites {
        match suite {
            Suite::Identities => {
                tasks.extend([
                    Task::Fermionic,
                    Task::Leibniz,
                    Task::QClosed,
                    Task::WardSeed,
                    Task::RationalRoutes,
                    Task::RationalWick,
                ]);
            }
            Suite::LemmaA => tasks.extend(matrices.iter().map(Task::LemmaA)),
            Suite::Gci => tasks.extend(matrices.iter().enumerate().map(|(i, m)| Task::Gci(i, m))),
            Suite::Gamma => {
                for (i, m) in matrices.iter().enumerate() {
                    tasks.extend(config.gamma_k.iter().map(|&k| Task::Gamma(i, m, k)));
                }
            }
            Suite::Reduction => {
                for &rate in &RATES {
                    tasks.extend(VARIANCES.iter().map(|&c| Task::Reduction(rate, c)));
                }
            }
            Suite::Decomposition => {
                for (i, m) in matrices.iter().enumerate().filter(|(_, m)| m.ci.n() <= 3) {
                    tasks.extend((0..config.tau_grid.len()).map(|t| Task::Decomposition(i, m, t)));
                }
            }
        }
    }
    let records = map_slice(exec, &tasks, |task| {
        let start = Instant::now();
        let mut record = execute(config, task, exec);
        record.wall_ms = start.elapsed().as_millis() as u64;
        record
    });
    ReportDocument::new(digest(config_bytes), config.seed, records)
}

fn suite_key(s: Suite) -> u64 {
    s as u64 + 1
}

fn matrix_inputs(m: &NamedCovariance) -> String {
    format!("{} n1={} rows={:?}", m.name, m.ci.n1(), m.ci.matrix().to_rows())
}

fn budget_for(config: &RunConfig, seed: u64, exec: Execution) -> Budget {
    let b = &config.budget;
    Budget {
        qmc_points: b.qmc_points,
        qmc_randomizations: b.qmc_randomizations,
        mc_samples: b.mc_samples,
        seed,
        execution: exec,
        ..Budget::default()
    }
}

fn execute(config: &RunConfig, task: &Task<'_>, exec: Execution) -> Record {
    let root = config.seed;
    let b = &config.budget;
    let tol = &config.tolerances;
    let samples = b.identity_samples;
    match *task {
        Task::Fermionic => {
            let seed = derive_seed(root, &[suite_key(Suite::Identities), 0]);
            let mut r = Record::new("identities", "identities/fermionic-gaussian-integral", ANCHOR_FERMIONIC, &format!("N<=6 x{samples}"), seed, format!("instances={samples}"));
            let mut rng = stream_rng(seed, &[]);
            let mut mismatches = 0;
            for k in 0..samples {
                let a = random_rational_matrix(k % 6 + 1, k % 6 + 1, &mut rng);
                match (gaussian_fermionic_integral(&a), a.det()) {
                    (Ok(x), Ok(y)) if x == y => {}
                    _ => mismatches += 1,
                }
            }
            r.value("instances", samples as f64).value("mismatches", mismatches as f64);
            r.passed = mismatches == 0;
            r
        }
        Task::Leibniz => {
            let seed = derive_seed(root, &[suite_key(Suite::Identities), 1]);
            let mut r = Record::new("identities", "identities/principal-minor-expansion", ANCHOR_LEIBNIZ, &format!("n<=8 x{samples}"), seed, format!("instances={samples}"));
            let mut rng = stream_rng(seed, &[]);
            let mut mismatches = 0;
            for k in 0..samples {
                let n = k % 8 + 1;
                match leibniz_check(&random_rational_matrix(n, n, &mut rng)) {
                    Ok(rep) if rep.lhs == rep.rhs => {}
                    _ => mismatches += 1,
                }
            }
            r.value("instances", samples as f64).value("mismatches", mismatches as f64);
            r.passed = mismatches == 0;
            r
        }
        Task::QClosed => {
            let mut r = Record::new("identities", "identities/q-closed-radius", ANCHOR_Q_CLOSED, "n<=4", root, "exact".into());
            let mut failures = 0;
            for n in 1..=4 {
                let reg = Registry::new(n).expect("n <= 4");
                let q = SuperDerivation::new(reg);
                for i in 0..n {
                    let e = radius_combination::<Rational>(reg, i);
                    let closed = q.apply(&e).map(|x| x.is_zero()).unwrap_or(false)
                        && SuperDerivation::single(reg, i).and_then(|qi| qi.apply(&e)).map(|x| x.is_zero()).unwrap_or(false);
                    failures += usize::from(!closed);
                }
            }
            r.value("failures", failures as f64);
            r.passed = failures == 0;
            r
        }
        Task::WardSeed => {
            let seed = derive_seed(root, &[suite_key(Suite::Identities), 3]);
            let mut r = Record::new("identities", "identities/ward-seed", ANCHOR_WARD_SEED, &format!("n<=4 x{samples}"), seed, format!("instances={samples}"));
            let mut rng = stream_rng(seed, &[]);
            let mut failures = 0;
            for k in 0..samples {
                let n = k % 4 + 1;
                let g = random_rational_matrix(n, n, &mut rng);
                let sigma = g.add(&g.transpose()).expect("square");
                match ward_seed(&sigma) {
                    Ok((lhs, rhs)) if lhs == rhs => {}
                    _ => failures += 1,
                }
            }
            r.value("instances", samples as f64).value("failures", failures as f64);
            r.passed = failures == 0;
            r
        }
        Task::RationalRoutes => {
            let seed = derive_seed(root, &[suite_key(Suite::Identities), 4]);
            let count = samples.div_ceil(5);
            let mut r = Record::new("identities", "identities/a-j-routes-exact", ANCHOR_ROUTES, &format!("n<=4 x{count}"), seed, format!("instances={count}"));
            let mut rng = stream_rng(seed, &[]);
            let taus = [rat(0, 1), rat(1, 3), rat(1, 2), rat(1, 1)];
            let mut comparisons = 0;
            let mut mismatches = 0;
            for k in 0..count {
                let n = k % 3 + 2;
                let c = random_rational_spd(n, &mut rng);
                for n1 in 1..n {
                    let ci = CovarianceInterpolation::new(c.clone(), n1).expect("exactly positive definite");
                    for j in SubsetIndex::all_nonempty(n) {
                        let poly = a_j_fermionic_poly(&ci, j);
                        for tau in &taus {
                            comparisons += 1;
                            let analytic = a_j_analytic(&ci, j, tau);
                            let fermionic = a_j_fermionic(&ci, j, tau);
                            let from_poly = poly.as_ref().map(|p| p.evaluate_tau(tau));
                            let ok = matches!((&analytic, &fermionic, &from_poly), (Ok(a), Ok(b), Ok(c)) if a == b && b == c);
                            mismatches += usize::from(!ok);
                        }
                    }
                }
            }
            r.value("comparisons", comparisons as f64).value("mismatches", mismatches as f64);
            r.passed = mismatches == 0;
            r
        }
        Task::RationalWick => {
            let seed = derive_seed(root, &[suite_key(Suite::Identities), 5]);
            let count = samples.div_ceil(5);
            let mut r = Record::new("identities", "identities/wick-contraction", ANCHOR_WICK, &format!("n<=5 x{count}"), seed, format!("instances={count}"));
            let mut rng = stream_rng(seed, &[]);
            let mut comparisons = 0;
            let mut mismatches = 0;
            for k in 0..count {
                let n = k % 5 + 1;
                let c = random_rational_spd(n, &mut rng);
                let ci = CovarianceInterpolation::new(c, n.max(2) - 1).expect("exactly positive definite");
                let tau = rat(1, 2);
                let table = WickTable::new(&ci, &tau);
                let cov = ci.interpolate(&tau);
                for j in SubsetIndex::all_nonempty(n) {
                    comparisons += 1;
                    let expected = cov
                        .as_ref()
                        .ok()
                        .and_then(|m| principal_minor_det(m, j).ok())
                        .map(|d| d.times(&Rational::from_i64(1 << j.len())));
                    let got = table.as_ref().ok().and_then(|t| t.expectation(j).ok());
                    mismatches += usize::from(expected.is_none() || expected != got);
                }
            }
            r.value("comparisons", comparisons as f64).value("mismatches", mismatches as f64);
            r.passed = mismatches == 0;
            r
        }
        Task::LemmaA(m) => {
            let mut r = Record::new("lemmaA", format!("lemmaA/{}", m.name), ANCHOR_LEMMA_A, &matrix_inputs(m), root, "grid=101 splits=all".into());
            if let Err(e) = lemma_a(m, tol.positivity_floor, tol.route_rel, &mut r) {
                r.fail(e);
            }
            r
        }
        Task::Gci(i, m) => {
            let seed = derive_seed(root, &[suite_key(Suite::Gci), i as u64]);
            let budget = budget_for(config, seed, exec);
            let desc = format!("grid={} qmc={}x{}", b.grid_points, b.qmc_points, b.qmc_randomizations);
            let mut r = Record::new("gci", format!("gci/{}", m.name), ANCHOR_GCI, &matrix_inputs(m), seed, desc);
            let opts = GciOptions { grid_points: b.grid_points, method: MethodChoice::Auto, budget };
            match gci_check(&m.ci, &opts) {
                Ok(rep) => {
                    r.value("joint", rep.joint.value)
                        .value("first", rep.first.value)
                        .value("second", rep.second.value)
                        .value("gap", rep.gap)
                        .value("endpoint_residual", rep.endpoint_residual)
                        .value("violations", rep.violations.len() as f64)
                        .error_bound("joint", rep.joint.abs_error)
                        .error_bound("gap_threshold", rep.gap_threshold);
                    r.profile = rep.profile.iter().map(|p| [p.tau, p.estimate.value, p.estimate.abs_error]).collect();
                    let endpoint_ok =
                        rep.joint.method != Method::Quadrature || rep.endpoint_residual.abs() <= tol.endpoint_abs;
                    r.passed = rep.passed && endpoint_ok;
                }
                Err(e) => {
                    r.fail(e);
                }
            }
            r
        }
        Task::Gamma(i, m, k) => {
            let seed = derive_seed(root, &[suite_key(Suite::Gamma), i as u64, k as u64]);
            let budget = budget_for(config, seed, exec);
            let desc = format!("mc={} grid={}", b.mc_samples, b.gamma_grid_points);
            let mut r = Record::new("gamma", format!("gamma/{}/k{k}", m.name), ANCHOR_GAMMA, &format!("{} k={k}", matrix_inputs(m)), seed, desc);
            let result = GammaConfig::new(k, m.ci.clone()).and_then(|gc| gamma_gci_check(&gc, b.gamma_grid_points, &budget));
            match result {
                Ok(rep) => {
                    r.value("joint", rep.joint.value)
                        .value("first", rep.first.value)
                        .value("second", rep.second.value)
                        .value("gap", rep.gap)
                        .value("violations", rep.violations.len() as f64)
                        .error_bound("gap_std_error", rep.gap_std_error);
                    r.profile = rep.profile.iter().map(|p| [p.tau, p.estimate.value, p.estimate.abs_error]).collect();
                    r.passed = rep.passed;
                    if k == 1 {
                        // same event as the Gaussian cube
                        match cube_probability(&m.ci, 1.0, MethodChoice::Auto, &budget) {
                            Ok(g) => {
                                let diff = rep.joint.value - g.value;
                                let allowed = 3.0 * rep.joint.std_error.hypot(g.std_error) + 2.0 * g.bound();
                                r.value("gaussian_event", g.value).error_bound("gaussian_event_allowed", allowed);
                                r.passed &= diff.abs() <= allowed;
                            }
                            Err(e) => {
                                r.fail(e);
                            }
                        }
                    }
                }
                Err(e) => {
                    r.fail(e);
                }
            }
            r
        }
        Task::Reduction(rate, c) => {
            let name = format!("reduction/rate{rate}/c{c}");
            let mut r = Record::new("reduction", name, ANCHOR_REDUCTION, &format!("rate={rate} c={c}"), root, "quadrature".into());
            r.anchor = format!("{ANCHOR_LOCALIZATION}; {ANCHOR_REDUCTION}");
            let f = TestFunction::exponential(rate);
            let result = (|| -> susy_gci::Result<()> {
                // F = 1 has no decay; localization needs it, reduction does not
                let loc = if rate > 0.0 { Some(localization_check(&f, c)?) } else { None };
                let red = reduction_check(rate, c)?;
                let prob = square_expectation(&f, c, &Budget::default())?;
                if let Some(loc) = &loc {
                    r.value("localization", loc.integral).value("f0", loc.expected);
                }
                r.value("reduction_lhs", red.lhs)
                    .value("reduction_rhs", red.rhs)
                    .value("analytic", red.analytic)
                    .value("probability_side", prob.value);
                let t = tol.reduction_abs;
                r.passed = loc.as_ref().is_none_or(|l| l.residual <= t)
                    && (red.lhs - red.analytic).abs() <= t
                    && (red.rhs - red.analytic).abs() <= t
                    && (prob.value - red.rhs).abs() <= t;
                Ok(())
            })();
            if let Err(e) = result {
                r.fail(e);
            }
            r
        }
        Task::Decomposition(i, m, t) => {
            let tau = config.tau_grid[t];
            let seed = derive_seed(root, &[suite_key(Suite::Decomposition), i as u64, t as u64]);
            let desc = format!("slices={} fd_step={}", b.slice_samples, b.fd_step);
            let inputs = format!("{} tau={tau}", matrix_inputs(m));
            let mut r = Record::new("decomposition", format!("decomposition/{}/tau{tau}", m.name), ANCHOR_DECOMPOSITION, &inputs, seed, desc);
            let opts = DecompositionOptions {
                slices: SliceOptions { samples: b.slice_samples, seed, execution: exec, ..SliceOptions::default() },
                step: b.fd_step,
                budget: budget_for(config, seed, exec),
                rel_tol: tol.decomposition_rel,
            };
            match decomposition_check(&m.ci, tau, &opts) {
                Ok(rep) => {
                    r.value("lhs", rep.lhs.value)
                        .value("rhs", rep.rhs)
                        .value("relative_error", rep.relative_error)
                        .error_bound("lhs", rep.lhs.abs_error)
                        .error_bound("rhs_std_error", rep.rhs_std_error);
                    for term in &rep.terms {
                        let key = format!("J{:?}", term.subset.indices().iter().map(|j| j + 1).collect::<Vec<_>>());
                        r.value(&format!("summand_{key}"), term.summand)
                            .error_bound(&format!("summand_{key}"), term.summand_std_error);
                    }
                    r.passed = rep.passed;
                }
                Err(e) => {
                    r.fail(e);
                }
            }
            r
        }
    }
}

/// Positivity of `a_J` on a 101-point grid for every split and subset, the
/// float route agreement, and monotonicity of `det C(tau)_J`.
fn lemma_a(m: &NamedCovariance, floor: f64, route_rel: f64, r: &mut Record) -> susy_gci::Result<()> {
    let c = m.ci.matrix();
    let n = c.rows();
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let mut min_a = f64::INFINITY;
    let mut worst_route = 0.0f64;
    let mut worst_increase = f64::NEG_INFINITY;
    let mut evaluations = 0usize;
    for n1 in 1..n {
        let ci = CovarianceInterpolation::new(c.clone(), n1)?;
        for j in SubsetIndex::all_nonempty(n) {
            let poly: Poly<f64> = a_j_fermionic_poly(&ci, j)?;
            let mut prev_det = f64::INFINITY;
            for &tau in &grid {
                let a = a_j_analytic(&ci, j, &tau)?;
                let b = poly.evaluate_tau(&tau);
                min_a = min_a.min(a);
                // identically-zero a_J come out as rounding noise on one route
                let diff = (a - b).abs();
                if diff > ROUTE_ABS_FLOOR {
                    worst_route = worst_route.max(diff / a.abs().max(b.abs()));
                }
                let det = principal_minor_det(&ci.interpolate(&tau)?, j)?;
                if prev_det.is_finite() {
                    worst_increase = worst_increase.max(det - prev_det);
                }
                prev_det = det;
                evaluations += 1;
            }
        }
    }
    r.value("min_a_j", min_a)
        .value("max_route_relative_difference", worst_route)
        .value("max_det_increase", worst_increase)
        .value("evaluations", evaluations as f64);
    r.passed = min_a >= floor && worst_route <= route_rel && worst_increase <= 1e-12;
    Ok(())
}
