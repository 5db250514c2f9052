//! Property tests for the structural invariants: positivity and monotonicity
//! of the interpolated minors, agreement of the two `a_J` routes, the Wick
//! table, the determinant expansion and the `Q` identities.

use proptest::prelude::*;
use susy_gci::covariance::{
    a_j_analytic, a_j_fermionic, a_j_fermionic_poly, leibniz_check, principal_minor_det, CovarianceInterpolation,
    SubsetIndex, WickTable,
};
use susy_gci::ensemble::{ensemble_member, random_rational_matrix, random_rational_spd};
use susy_gci::exterior::{GrassmannElement, Registry};
use susy_gci::par::{stream_rng, Execution};
use susy_gci::probability::{cube_probability, Budget, Method, MethodChoice};
use susy_gci::ring::{rat, Coefficient, Rational};
use susy_gci::super_calculus::{radius_combination, ward_seed, SuperDerivation};

fn correlation(n: usize, seed: u64) -> CovarianceInterpolation<f64> {
    CovarianceInterpolation::new(ensemble_member(n, seed, 0), 1 + (seed as usize) % (n - 1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn a_j_nonnegative_and_routes_agree(n in 2usize..=5, seed in any::<u64>(), tau in 0.0f64..=1.0) {
        let ci = correlation(n, seed);
        for j in SubsetIndex::all_nonempty(n) {
            let a = a_j_analytic(&ci, j, &tau).unwrap();
            let b = a_j_fermionic(&ci, j, &tau).unwrap();
            let p: f64 = a_j_fermionic_poly(&ci, j).unwrap().evaluate_tau(&tau);
            prop_assert!(a >= -1e-12, "a_J = {a}");
            let scale = a.abs().max(1e-12);
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
            prop_assert!((a - p).abs() <= 1e-9 * scale, "{a} vs {p}");
        }
    }

    #[test]
    fn minors_decrease_in_tau(n in 2usize..=5, seed in any::<u64>(), t0 in 0.0f64..1.0, dt in 0.0f64..0.5) {
        let ci = correlation(n, seed);
        let t1 = (t0 + dt).min(1.0);
        let (m0, m1) = (ci.interpolate(&t0).unwrap(), ci.interpolate(&t1).unwrap());
        for j in SubsetIndex::all_nonempty(n) {
            let d0 = principal_minor_det(&m0, j).unwrap();
            let d1 = principal_minor_det(&m1, j).unwrap();
            prop_assert!(d1 <= d0 + 1e-12, "det C_J({t1}) = {d1} > det C_J({t0}) = {d0}");
        }
    }

    #[test]
    fn exact_routes_and_wick(n in 2usize..=4, seed in any::<u64>(), num in 0i64..=5) {
        let mut rng = stream_rng(seed, &[]);
        let c = random_rational_spd(n, &mut rng);
        let n1 = 1 + (seed as usize) % (n - 1);
        let ci = CovarianceInterpolation::new(c, n1).unwrap();
        let tau = rat(num, 5);
        let table = WickTable::new(&ci, &tau).unwrap();
        let ct = ci.interpolate(&tau).unwrap();
        for j in SubsetIndex::all_nonempty(n) {
            let a = a_j_analytic(&ci, j, &tau).unwrap();
            prop_assert_eq!(&a, &a_j_fermionic(&ci, j, &tau).unwrap());
            prop_assert!(a >= <Rational as num_traits::Zero>::zero());
            let wick = principal_minor_det(&ct, j).unwrap().times(&rat(1 << j.len(), 1));
            prop_assert_eq!(table.expectation(j).unwrap(), wick);
        }
    }

    #[test]
    fn determinant_expansion_exact(n in 1usize..=6, seed in any::<u64>()) {
        let a = random_rational_matrix(n, n, &mut stream_rng(seed, &[]));
        let rep = leibniz_check(&a).unwrap();
        prop_assert_eq!(rep.lhs, rep.rhs);
    }

    #[test]
    fn ward_seed_exact(n in 1usize..=3, seed in any::<u64>()) {
        let g = random_rational_matrix(n, n, &mut stream_rng(seed, &[]));
        let sigma = g.add(&g.transpose()).unwrap();
        let (lhs, rhs) = ward_seed(&sigma).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn grassmann_generators_anticommute(pairs in 1usize..=4, a in 0usize..8, b in 0usize..8) {
        let reg = Registry::new(pairs).unwrap();
        let (a, b) = (a % (2 * pairs), b % (2 * pairs));
        let ga = GrassmannElement::<Rational>::generator(reg, reg.generator(a).unwrap());
        let gb = GrassmannElement::<Rational>::generator(reg, reg.generator(b).unwrap());
        let sum = ga.try_mul(&gb).unwrap().try_add(&gb.try_mul(&ga).unwrap()).unwrap();
        prop_assert!(sum.is_zero());
    }
}

#[test]
fn radius_is_q_closed() {
    for n in 1..=4 {
        let reg = Registry::new(n).unwrap();
        for i in 0..n {
            let r = radius_combination::<Rational>(reg, i);
            assert!(SuperDerivation::new(reg).apply(&r).unwrap().is_zero());
        }
    }
}

#[test]
fn endpoint_factorizes_and_gap_is_positive() {
    let ci = CovarianceInterpolation::from_rows(vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1).unwrap();
    let b = Budget::default();
    let q = MethodChoice::Fixed(Method::Quadrature);
    let p0 = cube_probability(&ci, 0.0, q, &b).unwrap();
    let p1 = cube_probability(&ci, 1.0, q, &b).unwrap();
    let one = 0.682_689_492_137_085_9; // P(|Z| <= 1)
    assert!((p0.value - one * one).abs() < 1e-9);
    assert!(p1.value - p0.value > 1e-3);
}

#[test]
fn monte_carlo_serial_equals_parallel() {
    let ci = correlation(4, 3);
    let mc = MethodChoice::Fixed(Method::MonteCarlo);
    let base = Budget { mc_samples: 100_000, ..Budget::default() };
    let s = cube_probability(&ci, 0.5, mc, &base.with_execution(Execution::Serial)).unwrap();
    let p = cube_probability(&ci, 0.5, mc, &base.with_execution(Execution::Parallel)).unwrap();
    assert_eq!(s, p);
}
