//! Sparse polynomials over named commuting symbols.
//!
//! Used as the coefficient ring when the exterior algebra has to carry the
//! interpolation parameter `tau` or the bosonic coordinates `X_i, Y_i, Z_i`.

use std::collections::BTreeMap;
use std::fmt;

use crate::ring::Coefficient;

/// A commuting (bosonic) symbol. Indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Tau,
    X(u16),
    Y(u16),
    Z(u16),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Tau => write!(f, "tau"),
            Symbol::X(i) => write!(f, "X{}", i + 1),
            Symbol::Y(i) => write!(f, "Y{}", i + 1),
            Symbol::Z(i) => write!(f, "Z{}", i + 1),
        }
    }
}

/// Product of symbol powers, sorted by symbol with no zero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(symbol: Symbol) -> Self {
        Monomial(vec![(symbol, 1)])
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (Symbol, u32)>) -> Self {
        let mut acc: BTreeMap<Symbol, u32> = BTreeMap::new();
        for (s, e) in powers {
            *acc.entry(s).or_default() += e;
        }
        Monomial(acc.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, symbol: Symbol) -> u32 {
        self.0
            .iter()
            .find(|&&(s, _)| s == symbol)
            .map_or(0, |&(_, e)| e)
    }

    pub fn powers(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, b) = (self.0[i], other.0[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Lowers the exponent of `symbol` by one; returns the old exponent.
    fn lower(&self, symbol: Symbol) -> Option<(u32, Monomial)> {
        let e = self.exponent(symbol);
        if e == 0 {
            return None;
        }
        let rest = self
            .0
            .iter()
            .filter_map(|&(s, k)| {
                if s == symbol {
                    (k > 1).then_some((s, k - 1))
                } else {
                    Some((s, k))
                }
            })
            .collect();
        Some((e, Monomial(rest)))
    }
}

/// Sparse polynomial `sum c_m * m` with no zero coefficients stored.
#[derive(Clone, PartialEq)]
pub struct Poly<C> {
    terms: BTreeMap<Monomial, C>,
}

impl<C: Coefficient> Poly<C> {
    pub fn constant(c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(symbol: Symbol) -> Self {
        Self::term(Monomial::var(symbol), C::one())
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Poly { terms: BTreeMap::new() };
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v.times(c));
        }
        out
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
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

    /// Partial derivative with respect to `symbol`.
    pub fn partial(&self, symbol: Symbol) -> Self {
        let mut out = Poly { terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            if let Some((e, rest)) = m.lower(symbol) {
                out.add_term(rest, c.times(&C::from_i64(e as i64)));
            }
        }
        out
    }

    /// Substitutes values for every symbol and sums.
    pub fn evaluate(&self, value: impl Fn(Symbol) -> C) -> C {
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for &(s, e) in m.powers() {
                let v = value(s);
                for _ in 0..e {
                    term = term.times(&v);
                }
            }
            acc = acc.plus(&term);
        }
        acc
    }

    /// Substitutes `tau`; every other symbol must be absent.
    pub fn evaluate_tau(&self, tau: &C) -> C {
        self.evaluate(|s| match s {
            Symbol::Tau => tau.clone(),
            other => panic!("symbol {other} has no value"),
        })
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = self
            .terms
            .keys()
            .flat_map(|m| m.powers().iter().map(|&(s, _)| s))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

impl<C: Coefficient> Coefficient for Poly<C> {
    fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }
    fn one() -> Self {
        Poly::constant(C::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
    fn times(&self, other: &Self) -> Self {
        let mut out = Poly { terms: BTreeMap::new() };
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.times(cb));
            }
        }
        out
    }
    fn negate(&self) -> Self {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.negate())).collect(),
        }
    }
    fn from_i64(value: i64) -> Self {
        Poly::constant(C::from_i64(value))
    }
    fn div_int(&self, k: i64) -> Self {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.div_int(k))).collect(),
        }
    }
    fn close_to(&self, other: &Self, rel_tol: f64) -> bool {
        let diff = self.minus(other);
        diff.terms.values().all(|c| c.close_to(&C::zero(), rel_tol))
    }
}

impl<C: Coefficient> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c:?}")?;
            for &(s, e) in m.powers() {
                if e == 1 {
                    write!(f, "*{s}")?;
                } else {
                    write!(f, "*{s}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{rat, Rational};
    use proptest::prelude::*;

    type P = Poly<Rational>;

    fn arb_poly() -> impl Strategy<Value = P> {
        let sym = prop_oneof![
            Just(Symbol::Tau),
            (0u16..2).prop_map(Symbol::Y),
            (0u16..2).prop_map(Symbol::Z)
        ];
        proptest::collection::vec(
            (proptest::collection::vec((sym, 0u32..3), 0..3), -5i64..5),
            0..4,
        )
        .prop_map(|terms| {
            terms.into_iter().fold(P::zero(), |acc, (pw, c)| {
                acc.plus(&P::term(Monomial::from_powers(pw), rat(c, 1)))
            })
        })
    }

    proptest! {
        #[test]
        fn commutative_ring_laws(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
            prop_assert_eq!(a.times(&b), b.times(&a));
            prop_assert_eq!(a.times(&b).times(&c), a.times(&b.times(&c)));
            prop_assert_eq!(a.times(&b.plus(&c)), a.times(&b).plus(&a.times(&c)));
            prop_assert!(a.minus(&a).is_zero());
        }

        #[test]
        fn partial_is_a_derivation(a in arb_poly(), b in arb_poly()) {
            let s = Symbol::Y(0);
            let lhs = a.times(&b).partial(s);
            let rhs = a.partial(s).times(&b).plus(&a.times(&b.partial(s)));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn square_expands() {
        let y = P::var(Symbol::Y(0));
        let z = P::var(Symbol::Z(0));
        let s = y.plus(&z);
        let sq = s.times(&s);
        assert_eq!(sq.len(), 3);
        assert_eq!(
            sq.coefficient(&Monomial::from_powers([(Symbol::Y(0), 1), (Symbol::Z(0), 1)])),
            rat(2, 1)
        );
        assert_eq!(sq.partial(Symbol::Y(0)), y.scale(&rat(2, 1)).plus(&z.scale(&rat(2, 1))));
    }

    #[test]
    fn evaluates_in_tau() {
        let t = P::var(Symbol::Tau);
        let p = P::one().minus(&t.times(&t).scale(&rat(1, 4)));
        assert_eq!(p.evaluate_tau(&rat(1, 1)), rat(3, 4));
        assert_eq!(p.degree(), 2);
    }
}
