//! Grassmann algebra over `xi_1..xi_n, eta_1..eta_n`.
//!
//! Monomials are bitmasks: bit `i` is `xi_{i+1}` and bit `n+i` is
//! `eta_{i+1}`. A stored coefficient always refers to the monomial with its
//! generators written in ascending bit order, so `xi1 eta1` is stored as is and
//! `eta1 xi1` is stored as `-xi1 eta1`. Nilpotency is structural: a bitmask
//! cannot hold a generator twice.
//!
//! Berezin integration is the top-coefficient extractor. An integration order
//! is read as a written operator product: `(d_a, d_b)` means `d_a d_b F`, so
//! the last derivative in the list acts first. The standard measure is
//! `d_xi1 d_eta1 ... d_xin d_etan`, under which
//! `int exp(-xi^T S eta) = det(S)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ring::Coefficient;

/// Largest supported number of generator pairs (2n generators fit in a `u64`).
pub const MAX_PAIRS: usize = 32;

/// Names generators and fixes their indices for `n` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Registry {
    pairs: usize,
}

/// A single odd generator, identified by its bit index in a registry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator(u8);

impl Generator {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    fn bit(self) -> u64 {
        1u64 << self.0
    }
}

impl Registry {
    pub fn new(pairs: usize) -> Result<Self> {
        if pairs == 0 || pairs > MAX_PAIRS {
            return Err(Error::InvalidPairCount { got: pairs, max: MAX_PAIRS });
        }
        Ok(Registry { pairs })
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn generator_count(&self) -> usize {
        2 * self.pairs
    }

    /// `xi_{i+1}` (0-based pair index).
    pub fn xi(&self, i: usize) -> Generator {
        assert!(i < self.pairs, "pair index {i} out of range");
        Generator(i as u8)
    }

    /// `eta_{i+1}` (0-based pair index).
    pub fn eta(&self, i: usize) -> Generator {
        assert!(i < self.pairs, "pair index {i} out of range");
        Generator((self.pairs + i) as u8)
    }

    pub fn generator(&self, index: usize) -> Result<Generator> {
        if index >= self.generator_count() {
            return Err(Error::GeneratorOutOfRange { index, pairs: self.pairs });
        }
        Ok(Generator(index as u8))
    }

    pub fn name(&self, g: Generator) -> String {
        let i = g.index();
        if i < self.pairs {
            format!("xi{}", i + 1)
        } else {
            format!("eta{}", i - self.pairs + 1)
        }
    }

    /// The commuting symbols that polynomial coefficients may use with this registry.
    pub fn symbols(&self) -> Vec<crate::poly::Symbol> {
        use crate::poly::Symbol;
        let mut out = vec![Symbol::Tau];
        for i in 0..self.pairs as u16 {
            out.extend([Symbol::X(i), Symbol::Y(i), Symbol::Z(i)]);
        }
        out
    }

    /// `d_xi1 d_eta1 ... d_xin d_etan`.
    pub fn standard_order(&self) -> Vec<Generator> {
        (0..self.pairs).flat_map(|i| [self.xi(i), self.eta(i)]).collect()
    }

    fn full_mask(&self) -> u64 {
        if self.generator_count() == 64 {
            u64::MAX
        } else {
            (1u64 << self.generator_count()) - 1
        }
    }

    fn check(&self, g: Generator) -> Result<()> {
        if g.index() >= self.generator_count() {
            return Err(Error::GeneratorOutOfRange { index: g.index(), pairs: self.pairs });
        }
        Ok(())
    }
}

/// Sign of moving the generators of `b` to the right of those of `a` into
/// ascending order: `(-1)^{#(i in a, j in b, i > j)}`.
fn merge_sign(a: u64, b: u64) -> bool {
    let mut rest = b;
    let mut parity = 0u32;
    while rest != 0 {
        let j = rest.trailing_zeros();
        rest &= rest - 1;
        parity ^= (a >> j >> 1).count_ones() & 1;
    }
    parity == 1
}

/// Sparse element of the exterior algebra with coefficients in `C`.
#[derive(Clone, PartialEq)]
pub struct GrassmannElement<C> {
    registry: Registry,
    terms: BTreeMap<u64, C>,
}

impl<C: Coefficient> GrassmannElement<C> {
    pub fn zero(registry: Registry) -> Self {
        GrassmannElement { registry, terms: BTreeMap::new() }
    }

    pub fn scalar(registry: Registry, c: C) -> Self {
        Self::monomial(registry, 0, c)
    }

    pub fn one(registry: Registry) -> Self {
        Self::scalar(registry, C::one())
    }

    pub fn generator(registry: Registry, g: Generator) -> Self {
        assert!(g.index() < registry.generator_count());
        Self::monomial(registry, g.bit(), C::one())
    }

    /// `c` times the ascending monomial with bitmask `mask`.
    pub fn monomial(registry: Registry, mask: u64, c: C) -> Self {
        assert_eq!(mask & !registry.full_mask(), 0, "mask outside registry");
        let mut e = Self::zero(registry);
        e.accumulate(mask, c);
        e
    }

    /// Product of generators in the given (not necessarily ascending) order.
    pub fn product_of(registry: Registry, gens: &[Generator]) -> Result<Self> {
        let mut acc = Self::one(registry);
        for &g in gens {
            registry.check(g)?;
            acc = acc.try_mul(&Self::generator(registry, g))?;
        }
        Ok(acc)
    }

    /// `xi_i eta_i` (0-based pair index).
    pub fn pair(registry: Registry, i: usize) -> Self {
        Self::monomial(registry, registry.xi(i).bit() | registry.eta(i).bit(), C::one())
    }

    /// The bilinear form `sum_ij m_ij xi_i eta_j`.
    pub fn bilinear(registry: Registry, m: &Matrix<C>) -> Result<Self> {
        let n = registry.pairs();
        if m.rows() != n || m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} form on {n} pairs",
                m.rows(),
                m.cols()
            )));
        }
        let mut e = Self::zero(registry);
        for i in 0..n {
            for j in 0..n {
                e.accumulate(registry.xi(i).bit() | registry.eta(j).bit(), m[(i, j)].clone());
            }
        }
        Ok(e)
    }

    pub fn registry(&self) -> Registry {
        self.registry
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &C)> {
        self.terms.iter().map(|(&m, c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mask: u64) -> C {
        self.terms.get(&mask).cloned().unwrap_or_else(C::zero)
    }

    pub fn scalar_part(&self) -> C {
        self.coefficient(0)
    }

    /// True when every monomial has even degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 0)
    }

    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 1)
    }

    /// Degree if every monomial has the same degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(|m| m.count_ones());
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    fn accumulate(&mut self, mask: u64, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mask) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().plus(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn same_registry(&self, other: &Self) -> Result<()> {
        if self.registry != other.registry {
            return Err(Error::RegistryMismatch {
                left: self.registry.pairs,
                right: other.registry.pairs,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_registry(other)?;
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.accumulate(m, c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        GrassmannElement {
            registry: self.registry,
            terms: self.terms.iter().map(|(&m, c)| (m, c.negate())).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.registry);
        for (&m, v) in &self.terms {
            out.accumulate(m, v.times(c));
        }
        out
    }

    /// Exterior product.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_registry(other)?;
        let mut out = Self::zero(self.registry);
        for (&ma, ca) in &self.terms {
            for (&mb, cb) in &other.terms {
                if ma & mb != 0 {
                    continue;
                }
                let c = ca.times(cb);
                let c = if merge_sign(ma, mb) { c.negate() } else { c };
                out.accumulate(ma | mb, c);
            }
        }
        Ok(out)
    }

    /// Left derivative: anticommute `g` to the front of each monomial, then drop it.
    pub fn derive(&self, g: Generator) -> Result<Self> {
        self.registry.check(g)?;
        let bit = g.bit();
        let below = bit - 1;
        let mut out = Self::zero(self.registry);
        for (&m, c) in &self.terms {
            if m & bit == 0 {
                continue;
            }
            let negative = (m & below).count_ones() % 2 == 1;
            out.accumulate(m ^ bit, if negative { c.negate() } else { c.clone() });
        }
        Ok(out)
    }

    /// Berezin integral `d_{order[0]} d_{order[1]} ... F`; the last entry acts first.
    pub fn berezin_integrate(&self, order: &[Generator]) -> Result<C> {
        self.validate_order(order)?;
        let top = self.registry.full_mask();
        let Some(c) = self.terms.get(&top) else {
            return Ok(C::zero());
        };
        let mut mask = top;
        let mut negative = false;
        for g in order.iter().rev() {
            let bit = g.bit();
            negative ^= (mask & (bit - 1)).count_ones() % 2 == 1;
            mask ^= bit;
        }
        Ok(if negative { c.negate() } else { c.clone() })
    }

    /// Berezin integral with the standard measure `d_xi1 d_eta1 ... d_xin d_etan`.
    pub fn integrate(&self) -> C {
        self.berezin_integrate(&self.registry.standard_order())
            .expect("standard order is a permutation")
    }

    fn validate_order(&self, order: &[Generator]) -> Result<()> {
        let mut seen = 0u64;
        for &g in order {
            self.registry.check(g)?;
            if seen & g.bit() != 0 {
                return Err(Error::BadIntegrationOrder(format!(
                    "{} appears twice",
                    self.registry.name(g)
                )));
            }
            seen |= g.bit();
        }
        if seen != self.registry.full_mask() {
            return Err(Error::BadIntegrationOrder(format!(
                "{} of {} generators listed",
                seen.count_ones(),
                self.registry.generator_count()
            )));
        }
        Ok(())
    }

    /// `exp(e) = sum_k e^k / k!` for even `e` with zero scalar part; the
    /// series stops once a power vanishes (at most `n` nonzero powers).
    pub fn exp(&self) -> Result<Self> {
        if !self.is_even() {
            return Err(Error::OddExponent);
        }
        if !self.scalar_part().is_zero() {
            return Err(Error::NonzeroScalarPart);
        }
        let mut result = Self::one(self.registry);
        let mut power = Self::one(self.registry);
        let mut k = 1i64;
        loop {
            power = power.try_mul(self)?;
            if power.is_zero() {
                break;
            }
            power = GrassmannElement {
                registry: self.registry,
                terms: power.terms.into_iter().map(|(m, c)| (m, c.div_int(k))).collect(),
            };
            result = result.try_add(&power)?;
            k += 1;
        }
        Ok(result)
    }

    /// Applies `f` to every coefficient, dropping those that become zero.
    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> GrassmannElement<D> {
        let mut out = GrassmannElement::zero(self.registry);
        for (&m, c) in &self.terms {
            out.accumulate(m, f(c));
        }
        out
    }
}

/// `int d_xi1 d_eta1 ... d_xiN d_etaN exp(-xi^T S eta)`, which equals `det(S)`.
pub fn gaussian_fermionic_integral<C: Coefficient>(sigma: &Matrix<C>) -> Result<C> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not square",
            sigma.rows(),
            sigma.cols()
        )));
    }
    let registry = Registry::new(sigma.rows())?;
    let action = GrassmannElement::bilinear(registry, sigma)?.neg();
    Ok(action.exp()?.integrate())
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $call:ident) => {
        impl<C: Coefficient> std::ops::$tr<&GrassmannElement<C>> for &GrassmannElement<C> {
            type Output = GrassmannElement<C>;
            fn $method(self, rhs: &GrassmannElement<C>) -> GrassmannElement<C> {
                self.$call(rhs).expect("registry mismatch")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl<C: Coefficient> std::ops::Neg for &GrassmannElement<C> {
    type Output = GrassmannElement<C>;
    fn neg(self) -> GrassmannElement<C> {
        GrassmannElement::neg(self)
    }
}

impl<C: Coefficient> fmt::Debug for GrassmannElement<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c:?})")?;
            let mut rest = m;
            while rest != 0 {
                let i = rest.trailing_zeros();
                rest &= rest - 1;
                write!(f, "*{}", self.registry.name(Generator(i as u8)))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{rat, Rational};

    type E = GrassmannElement<Rational>;

    fn reg(n: usize) -> Registry {
        Registry::new(n).unwrap()
    }

    #[test]
    fn anticommutation_and_nilpotency() {
        let r = reg(1);
        let xi = E::generator(r, r.xi(0));
        let eta = E::generator(r, r.eta(0));
        let xe = &xi * &eta;
        assert_eq!(xe, E::pair(r, 0));
        assert_eq!(&eta * &xi, -&xe);
        assert!((&xi * &xi).is_zero());
    }

    #[test]
    fn product_of_pair_exponentials() {
        let r = reg(2);
        let a = &E::one(r) + &E::pair(r, 0);
        let b = &E::one(r) + &E::pair(r, 1);
        let prod = &a * &b;
        let expected = [&E::one(r), &E::pair(r, 0), &E::pair(r, 1), &(&E::pair(r, 0) * &E::pair(r, 1))]
            .into_iter()
            .fold(E::zero(r), |acc, t| &acc + t);
        assert_eq!(prod, expected);
        // xi1 eta1 xi2 eta2 = -(xi1 xi2 eta1 eta2) in ascending storage
        assert_eq!(prod.coefficient(0b1111), rat(-1, 1));
    }

    #[test]
    fn left_derivative_signs() {
        let r = reg(2);
        let xe = E::pair(r, 0);
        assert_eq!(xe.derive(r.xi(0)).unwrap(), E::generator(r, r.eta(0)));
        assert_eq!(xe.derive(r.eta(0)).unwrap(), -&E::generator(r, r.xi(0)));
        assert!(E::generator(r, r.eta(1)).derive(r.xi(0)).unwrap().is_zero());
    }

    #[test]
    fn berezin_order_convention() {
        let r = reg(1);
        let xe = E::pair(r, 0);
        assert_eq!(xe.berezin_integrate(&[r.xi(0), r.eta(0)]).unwrap(), rat(-1, 1));
        assert_eq!(xe.berezin_integrate(&[r.eta(0), r.xi(0)]).unwrap(), rat(1, 1));
        assert_eq!(E::one(r).integrate(), rat(0, 1));
        let gauss = E::pair(r, 0).neg().exp().unwrap();
        assert_eq!(gauss.integrate(), rat(1, 1));
    }

    #[test]
    fn berezin_rejects_bad_orders() {
        let r = reg(2);
        let e = E::one(r);
        assert!(matches!(
            e.berezin_integrate(&[r.xi(0), r.eta(0), r.xi(1)]),
            Err(Error::BadIntegrationOrder(_))
        ));
        assert!(matches!(
            e.berezin_integrate(&[r.xi(0), r.xi(0), r.eta(0), r.eta(1)]),
            Err(Error::BadIntegrationOrder(_))
        ));
    }

    #[test]
    fn exp_rules() {
        let r = reg(1);
        assert_eq!(E::pair(r, 0).exp().unwrap(), &E::one(r) + &E::pair(r, 0));
        assert_eq!(E::zero(r).exp().unwrap(), E::one(r));
        assert_eq!(E::generator(r, r.xi(0)).exp().unwrap_err(), Error::OddExponent);
        assert_eq!(E::one(r).exp().unwrap_err(), Error::NonzeroScalarPart);
    }

    #[test]
    fn exp_of_pair_sum_enumerates_subsets() {
        let r = reg(3);
        let s = (0..3).fold(E::zero(r), |acc, i| &acc + &E::pair(r, i));
        let ex = s.neg().exp().unwrap();
        assert_eq!(ex.len(), 8);
        for subset in 0u64..8 {
            let expected = (0..3)
                .filter(|i| subset >> i & 1 == 1)
                .fold(E::one(r), |acc, i| &acc * &E::pair(r, i).neg());
            let mask = expected.terms().next().unwrap().0;
            assert_eq!(ex.coefficient(mask), expected.coefficient(mask));
        }
    }

    #[test]
    fn registry_mismatch_is_an_error() {
        let a = E::one(reg(1));
        let b = E::one(reg(2));
        assert_eq!(a.try_mul(&b).unwrap_err(), Error::RegistryMismatch { left: 1, right: 2 });
        assert!(Registry::new(0).is_err());
        assert!(Registry::new(33).is_err());
    }

    #[test]
    fn gaussian_integral_small() {
        let id: Matrix<Rational> = Matrix::identity(2);
        assert_eq!(gaussian_fermionic_integral(&id).unwrap(), rat(1, 1));
        let s = Matrix::from_rows(vec![vec![rat(2, 1), rat(1, 1)], vec![rat(1, 1), rat(2, 1)]]).unwrap();
        assert_eq!(gaussian_fermionic_integral(&s).unwrap(), rat(3, 1));
        let bad: Matrix<Rational> = Matrix::zeros(2, 3);
        assert!(gaussian_fermionic_integral(&bad).is_err());
    }
}
