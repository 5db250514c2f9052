use crate::error::{Error, Result};
use crate::exterior::{Generator, GrassmannElement, Registry};
use crate::linalg::Matrix;
use crate::poly::{Poly, Symbol};
use crate::ring::Coefficient;

/// Which pair of bosonic copies the derivation exchanges with `(xi, eta)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BosonPair {
    #[default]
    YZ,
    XY,
    ZX,
}

impl BosonPair {
    fn symbols(self, i: usize) -> (Symbol, Symbol) {
        let i = i as u16;
        match self {
            BosonPair::YZ => (Symbol::Y(i), Symbol::Z(i)),
            BosonPair::XY => (Symbol::X(i), Symbol::Y(i)),
            BosonPair::ZX => (Symbol::Z(i), Symbol::X(i)),
        }
    }
}

/// The odd derivation
/// `Q_i = xi_i d/dY_i + eta_i d/dZ_i + Y_i d/deta_i - Z_i d/dxi_i`,
/// summed over the selected pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperDerivation {
    registry: Registry,
    pairs: Vec<usize>,
    bosons: BosonPair,
}

impl SuperDerivation {
    /// `Q = sum_i Q_i` over all pairs.
    pub fn new(registry: Registry) -> Self {
        SuperDerivation { registry, pairs: (0..registry.pairs()).collect(), bosons: BosonPair::YZ }
    }

    /// `Q_i` for a single pair.
    pub fn single(registry: Registry, pair: usize) -> Result<Self> {
        if pair >= registry.pairs() {
            return Err(Error::GeneratorOutOfRange { index: pair, pairs: registry.pairs() });
        }
        Ok(SuperDerivation { registry, pairs: vec![pair], bosons: BosonPair::YZ })
    }

    pub fn with_bosons(mut self, bosons: BosonPair) -> Self {
        self.bosons = bosons;
        self
    }

    /// Applies `Q` to an element whose coefficients are polynomials in the
    /// commuting symbols. Coefficients sit to the left of the fermionic monomials.
    pub fn apply<C: Coefficient>(&self, e: &GrassmannElement<Poly<C>>) -> Result<GrassmannElement<Poly<C>>> {
        if e.registry() != self.registry {
            return Err(Error::RegistryMismatch {
                left: e.registry().pairs(),
                right: self.registry.pairs(),
            });
        }
        let reg = self.registry;
        let mut out = GrassmannElement::zero(reg);
        for (mask, c) in e.terms() {
            let term = GrassmannElement::monomial(reg, mask, Poly::<C>::one());
            for &i in &self.pairs {
                let (first, second) = self.bosons.symbols(i);
                // bosonic part: xi_i dc/dfirst + eta_i dc/dsecond
                for (g, sym) in [(reg.xi(i), first), (reg.eta(i), second)] {
                    let dc = c.partial(sym);
                    if !dc.is_zero() {
                        let left = GrassmannElement::generator(reg, g).try_mul(&term)?;
                        out = out.try_add(&left.scale(&dc))?;
                    }
                }
                // fermionic part: first * d/deta_i - second * d/dxi_i
                out = out.try_add(&self.fermionic(&term, reg.eta(i), c, &Poly::var(first))?)?;
                out = out.try_add(&self.fermionic(&term, reg.xi(i), c, &Poly::var(second).negate())?)?;
            }
        }
        Ok(out)
    }

    fn fermionic<C: Coefficient>(
        &self,
        term: &GrassmannElement<Poly<C>>,
        g: Generator,
        c: &Poly<C>,
        factor: &Poly<C>,
    ) -> Result<GrassmannElement<Poly<C>>> {
        Ok(term.derive(g)?.scale(&c.times(factor)))
    }
}

/// `Y_i^2 + Z_i^2 + 2 xi_i eta_i`, annihilated by `Q_i`.
pub fn radius_combination<C: Coefficient>(registry: Registry, i: usize) -> GrassmannElement<Poly<C>> {
    let y = Poly::var(Symbol::Y(i as u16));
    let z = Poly::var(Symbol::Z(i as u16));
    GrassmannElement::scalar(registry, y.times(&y).plus(&z.times(&z)))
        .try_add(&GrassmannElement::pair(registry, i).scale(&Poly::from_i64(2)))
        .expect("same registry")
}

type SuperPair<C> = (GrassmannElement<Poly<C>>, GrassmannElement<Poly<C>>);

/// Both sides of `Q(Y^T S eta) = xi^T S eta + Y^T S Y` for a square `S`.
pub fn ward_seed<C: Coefficient>(
    sigma: &Matrix<C>,
) -> Result<SuperPair<C>> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch("expected a square matrix".into()));
    }
    let n = sigma.rows();
    let reg = Registry::new(n)?;
    let y = |i: usize| Poly::<C>::var(Symbol::Y(i as u16));
    let mut seed = GrassmannElement::zero(reg);
    let mut yy = Poly::zero();
    for i in 0..n {
        for j in 0..n {
            let s = Poly::constant(sigma[(i, j)].clone());
            seed = seed.try_add(&GrassmannElement::generator(reg, reg.eta(j)).scale(&y(i).times(&s)))?;
            yy = yy.plus(&y(i).times(&y(j)).times(&s));
        }
    }
    let lhs = SuperDerivation::new(reg).apply(&seed)?;
    let xi_eta = GrassmannElement::bilinear(reg, &sigma.map(|v| Poly::constant(v.clone())))?;
    Ok((lhs, xi_eta.try_add(&GrassmannElement::scalar(reg, yy))?))
}
