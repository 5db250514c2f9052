use num_traits::One;

use super::ScalarFunction;
use crate::error::{Error, Result};
use crate::exterior::{GrassmannElement, Registry};
use crate::ring::{Coefficient, Rational};

/// `F(x + soul * xi_p eta_p) = F(x) + F'(x) * soul * xi_p eta_p`; higher
/// orders vanish because `(xi_p eta_p)^2 = 0`.
pub fn soul_taylor(
    f: &impl ScalarFunction,
    x: f64,
    soul: f64,
    pair: usize,
    registry: Registry,
) -> Result<GrassmannElement<f64>> {
    if pair >= registry.pairs() {
        return Err(Error::GeneratorOutOfRange { index: pair, pairs: registry.pairs() });
    }
    let body = GrassmannElement::scalar(registry, f.value(x));
    let nilpotent = GrassmannElement::pair(registry, pair).scale(&(f.derivative(x) * soul));
    body.try_add(&nilpotent)
}

/// Argument of a Heaviside/delta factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryArgument {
    /// A real number `a`.
    Value(f64),
    /// The symbolic body `1 - B_p^2` of `1 - R_p^2`.
    OneMinusBodySquare { pair: usize },
}

/// Body factor of a Heaviside expansion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BodyFactor {
    /// `Theta(a)` for numeric `a`.
    Step(f64),
    /// `1{B_p^2 <= 1}`.
    Indicator { pair: usize },
}

/// A symbolic `delta(argument)` multiplying `weight * xi_p eta_p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaMarker {
    pub argument: BoundaryArgument,
    pub weight: f64,
    pub pair: usize,
}

impl DeltaMarker {
    /// True when the marker sits at a numeric point off the boundary, where it vanishes.
    pub fn vanishes_pointwise(&self) -> bool {
        self.weight == 0.0 || matches!(self.argument, BoundaryArgument::Value(a) if a != 0.0)
    }
}

/// `Theta(a + b xi_p eta_p) = Theta(a) + b xi_p eta_p delta(a)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeavisideExpansion {
    pub body: BodyFactor,
    /// `None` when `b = 0`.
    pub delta: Option<DeltaMarker>,
}

pub fn heaviside_expand(argument: BoundaryArgument, b: f64, pair: usize) -> Result<HeavisideExpansion> {
    let body = match argument {
        BoundaryArgument::Value(0.0) => return Err(Error::DegenerateBoundary),
        BoundaryArgument::Value(a) => BodyFactor::Step(if a > 0.0 { 1.0 } else { 0.0 }),
        BoundaryArgument::OneMinusBodySquare { pair: p } => BodyFactor::Indicator { pair: p },
    };
    let delta = (b != 0.0).then_some(DeltaMarker { argument, weight: b, pair });
    Ok(HeavisideExpansion { body, delta })
}

/// One term of the super-hypercube indicator expansion:
/// `prod_{j in J} (-2 xi_j eta_j) delta(1 - B_j^2) * prod_{i not in J} 1{B_i^2 <= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTerm {
    pub subset: u64,
    pub fermion: GrassmannElement<Rational>,
    /// Pairs carrying `delta(1 - B_j^2)`.
    pub delta_pairs: u64,
    /// Pairs carrying `1{B_i^2 <= 1}`.
    pub indicator_pairs: u64,
}

impl BoundaryTerm {
    pub fn order(&self) -> u32 {
        self.subset.count_ones()
    }
}

/// All `2^n` boundary terms, indexed by the bitmask of `J`.
pub fn indicator_expand(n: usize) -> Result<Vec<BoundaryTerm>> {
    let registry = Registry::new(n)?;
    let full = (1u64 << n) - 1;
    let minus_two = -Rational::from_i64(2);
    let mut out = Vec::with_capacity(1 << n);
    for subset in 0..=full {
        let mut fermion = GrassmannElement::scalar(registry, <Rational as One>::one());
        for j in (0..n).filter(|j| subset >> j & 1 == 1) {
            fermion = fermion.try_mul(&GrassmannElement::pair(registry, j).scale(&minus_two))?;
        }
        out.push(BoundaryTerm { subset, fermion, delta_pairs: subset, indicator_pairs: full & !subset });
    }
    Ok(out)
}

/// How the symbolic step and delta are realized numerically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothing {
    /// Sharp step; delta evaluates to zero (valid off the boundary only).
    Sharp,
    /// Logistic step `1/(1+exp(-x/eps))` and its derivative.
    Logistic { bandwidth: f64 },
}

impl Smoothing {
    pub fn step(&self, x: f64) -> f64 {
        match *self {
            Smoothing::Sharp => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Smoothing::Logistic { bandwidth } => 0.5 * (1.0 + (0.5 * x / bandwidth).tanh()),
        }
    }

    pub fn delta(&self, x: f64) -> f64 {
        match *self {
            Smoothing::Sharp => 0.0,
            Smoothing::Logistic { bandwidth } => {
                let s = self.step(x);
                s * (1.0 - s) / bandwidth
            }
        }
    }
}

impl ScalarFunction for Smoothing {
    fn value(&self, s: f64) -> f64 {
        self.step(s)
    }
    fn derivative(&self, s: f64) -> f64 {
        self.delta(s)
    }
}

/// Sums the boundary terms at body values `b_squared[i] = B_i^2`.
pub fn evaluate_expansion(
    terms: &[BoundaryTerm],
    b_squared: &[f64],
    smoothing: Smoothing,
) -> Result<GrassmannElement<f64>> {
    let n = b_squared.len();
    let registry = Registry::new(n)?;
    let mut acc = GrassmannElement::zero(registry);
    for term in terms {
        if term.fermion.registry() != registry {
            return Err(Error::RegistryMismatch {
                left: term.fermion.registry().pairs(),
                right: n,
            });
        }
        let mut weight = 1.0;
        for (i, &b2) in b_squared.iter().enumerate() {
            let x = 1.0 - b2;
            weight *= if term.delta_pairs >> i & 1 == 1 {
                smoothing.delta(x)
            } else {
                smoothing.step(x)
            };
        }
        let fermion = term.fermion.map_coefficients(|c| num_traits::ToPrimitive::to_f64(c).unwrap_or(0.0));
        acc = acc.try_add(&fermion.scale(&weight))?;
    }
    Ok(acc)
}

/// `prod_i Theta_eps(1 - R_i^2)` computed directly in the Grassmann algebra,
/// with `R_i^2 = B_i^2 + 2 xi_i eta_i`.
pub fn smoothed_indicator_product(b_squared: &[f64], smoothing: Smoothing) -> Result<GrassmannElement<f64>> {
    let registry = Registry::new(b_squared.len())?;
    let mut acc = GrassmannElement::one(registry);
    for (i, &b2) in b_squared.iter().enumerate() {
        acc = acc.try_mul(&soul_taylor(&smoothing, 1.0 - b2, -2.0, i, registry)?)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::rat;
    use crate::super_calculus::TestFunction;

    fn reg(n: usize) -> Registry {
        Registry::new(n).unwrap()
    }

    #[test]
    fn taylor_examples() {
        let r = reg(1);
        let sq = TestFunction::Polynomial { coeffs: vec![0.0, 0.0, 1.0] };
        let e = soul_taylor(&sq, 2.0, 1.0, 0, r).unwrap();
        assert_eq!(e.scalar_part(), 4.0);
        assert_eq!(e.coefficient(0b11), 4.0);
        let zero_soul = soul_taylor(&sq, 2.0, 0.0, 0, r).unwrap();
        assert_eq!(zero_soul, GrassmannElement::scalar(r, 4.0));
        let exp = TestFunction::exponential(-1.0);
        let e = soul_taylor(&exp, 0.0, 2.0, 0, r).unwrap();
        assert_eq!(e.scalar_part(), 1.0);
        assert_eq!(e.coefficient(0b11), 2.0);
        // soul part squares to zero
        let soul = e.try_sub(&GrassmannElement::scalar(r, 1.0)).unwrap();
        assert!(soul.try_mul(&soul).unwrap().is_zero());
        assert!(soul_taylor(&exp, 0.0, 1.0, 1, r).is_err());
    }

    #[test]
    fn soul_taylor_matches_finite_difference() {
        let r = reg(1);
        let f = TestFunction::InversePower { power: 2.5 };
        let h = 1e-5;
        for &x in &[0.1, 0.8, 3.0] {
            let e = soul_taylor(&f, x, 1.0, 0, r).unwrap();
            let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            assert!((e.coefficient(0b11) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn heaviside_rules() {
        let h = heaviside_expand(BoundaryArgument::Value(0.5), -2.0, 0).unwrap();
        assert_eq!(h.body, BodyFactor::Step(1.0));
        let d = h.delta.unwrap();
        assert_eq!(d.weight, -2.0);
        assert!(d.vanishes_pointwise());
        let h = heaviside_expand(BoundaryArgument::Value(-0.3), 0.0, 0).unwrap();
        assert_eq!(h.body, BodyFactor::Step(0.0));
        assert!(h.delta.is_none());
        assert_eq!(
            heaviside_expand(BoundaryArgument::Value(0.0), 1.0, 0).unwrap_err(),
            Error::DegenerateBoundary
        );
        let on_shell = heaviside_expand(BoundaryArgument::OneMinusBodySquare { pair: 0 }, -2.0, 0).unwrap();
        assert_eq!(on_shell.body, BodyFactor::Indicator { pair: 0 });
        let d = on_shell.delta.unwrap();
        assert_eq!(d.argument, BoundaryArgument::OneMinusBodySquare { pair: 0 });
        assert!(!d.vanishes_pointwise());
    }

    #[test]
    fn indicator_expansion_terms() {
        let one = indicator_expand(1).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one[0].fermion, GrassmannElement::one(reg(1)));
        assert_eq!(one[0].indicator_pairs, 1);
        assert_eq!(one[1].fermion, GrassmannElement::pair(reg(1), 0).scale(&rat(-2, 1)));
        assert_eq!(one[1].delta_pairs, 1);

        let two = indicator_expand(2).unwrap();
        let r = reg(2);
        let p0 = GrassmannElement::<Rational>::pair(r, 0);
        let p1 = GrassmannElement::<Rational>::pair(r, 1);
        assert_eq!(two[0b00].fermion, GrassmannElement::one(r));
        assert_eq!(two[0b01].fermion, p0.scale(&rat(-2, 1)));
        assert_eq!(two[0b10].fermion, p1.scale(&rat(-2, 1)));
        assert_eq!(two[0b11].fermion, p0.try_mul(&p1).unwrap().scale(&rat(4, 1)));
        let mut keys: Vec<u64> = two.iter().map(|t| t.fermion.terms().next().unwrap().0).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 4);
    }

    #[test]
    fn expansion_equals_direct_product() {
        let terms = indicator_expand(3).unwrap();
        let b2 = [0.4, 1.3, 0.97];
        for eps in [0.3, 0.05] {
            let s = Smoothing::Logistic { bandwidth: eps };
            let lhs = evaluate_expansion(&terms, &b2, s).unwrap();
            let rhs = smoothed_indicator_product(&b2, s).unwrap();
            let diff = lhs.try_sub(&rhs).unwrap();
            assert!(diff.terms().all(|(_, c)| c.abs() < 1e-12), "{diff:?}");
        }
    }
}
