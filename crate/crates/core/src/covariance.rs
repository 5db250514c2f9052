//! Interpolated covariance `C(tau)`, principal minors, the determinant
//! derivative `a_J(tau)` by two independent routes, the principal-minor
//! expansion of `det(I + A)`, and fermionic Wick expectations.

use crate::error::{Error, Result};
use crate::exterior::{GrassmannElement, Registry};
use crate::linalg::Matrix;
use crate::poly::{Poly, Symbol};
use crate::ring::{Coefficient, Field};

/// Regularization added to the diagonal when a covariance fails to factor.
pub const DEFAULT_REGULARIZATION: f64 = 1e-10;

/// Largest dimension accepted by the subset enumerations.
pub const MAX_SUBSET_DIM: usize = 16;

/// Covariance `C` with block split `n = n1 + n2`; `C(tau)` scales the
/// off-diagonal blocks by `tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceInterpolation<T> {
    c: Matrix<T>,
    n1: usize,
    epsilon: f64,
}

impl<T: Field> CovarianceInterpolation<T> {
    /// Validates `C` (square, symmetric, positive definite). A matrix that
    /// fails to factor is retried once with `C + 1e-10 I`.
    pub fn new(c: Matrix<T>, n1: usize) -> Result<Self> {
        match Self::with_regularization(c.clone(), n1, 0.0) {
            Err(Error::NotPositiveDefinite) => Self::with_regularization(c, n1, DEFAULT_REGULARIZATION),
            other => other,
        }
    }

    pub fn with_regularization(c: Matrix<T>, n1: usize, epsilon: f64) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::DimensionMismatch(format!("{}x{} covariance", c.rows(), c.cols())));
        }
        let n = c.rows();
        if n == 0 || n1 == 0 || n1 > n || n > MAX_SUBSET_DIM {
            return Err(Error::InvalidSplit { n1, n });
        }
        if !c.is_symmetric(1e-12) {
            return Err(Error::NotSymmetric);
        }
        let c = if epsilon != 0.0 {
            let eps = T::from_f64(epsilon);
            c.add(&Matrix::identity(n).scale(&eps))?
        } else {
            c
        };
        c.ldlt()?;
        Ok(CovarianceInterpolation { c, n1, epsilon })
    }

    pub fn n(&self) -> usize {
        self.c.rows()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n() - self.n1
    }

    /// Diagonal regularization applied at construction (0 if none).
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.c
    }

    pub fn in_first_block(&self, i: usize) -> bool {
        i < self.n1
    }

    /// The diagonal blocks `C11`, `C22`.
    pub fn marginals(&self) -> (Matrix<T>, Matrix<T>) {
        let first: Vec<usize> = (0..self.n1).collect();
        let second: Vec<usize> = (self.n1..self.n()).collect();
        (self.c.principal(&first), self.c.principal(&second))
    }

    /// `C(tau)`.
    pub fn interpolate(&self, tau: &T) -> Result<Matrix<T>> {
        let t = tau.to_f64();
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::TauOutOfRange(t));
        }
        let m = self.interpolate_unchecked(tau);
        m.ldlt().map_err(|_| Error::NotPositiveDefinite)?;
        Ok(m)
    }

    pub(crate) fn interpolate_unchecked(&self, tau: &T) -> Matrix<T> {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| {
            if self.in_first_block(i) == self.in_first_block(j) {
                self.c[(i, j)].clone()
            } else {
                self.c[(i, j)].times(tau)
            }
        })
    }

    /// `dC(tau)/dtau`: the off-diagonal blocks of `C`, zeros elsewhere.
    pub fn coupling_pattern(&self) -> Matrix<T> {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| {
            if self.in_first_block(i) == self.in_first_block(j) {
                T::zero()
            } else {
                self.c[(i, j)].clone()
            }
        })
    }

    fn check_subset(&self, j: SubsetIndex) -> Result<()> {
        if j.n != self.n() {
            return Err(Error::DimensionMismatch(format!("subset over {} for n = {}", j.n, self.n())));
        }
        Ok(())
    }
}

impl CovarianceInterpolation<f64> {
    pub fn from_rows(rows: Vec<Vec<f64>>, n1: usize) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, n1)
    }
}

/// Subset `J` of `{0..n-1}` as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetIndex {
    mask: u32,
    n: usize,
}

impl SubsetIndex {
    pub fn new(mask: u32, n: usize) -> Result<Self> {
        if n > MAX_SUBSET_DIM || (n < 32 && mask >> n != 0) {
            return Err(Error::InvalidArgument(format!("mask {mask:#b} outside {{0..{n}}}")));
        }
        Ok(SubsetIndex { mask, n })
    }

    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidArgument(format!("index {i} >= {n}")));
            }
            mask |= 1 << i;
        }
        Self::new(mask, n)
    }

    pub fn full(n: usize) -> Self {
        SubsetIndex { mask: ((1u64 << n) - 1) as u32, n }
    }

    pub fn mask(self) -> u32 {
        self.mask
    }

    pub fn dim(self) -> usize {
        self.n
    }

    pub fn len(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    pub fn indices(self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.contains(i)).collect()
    }

    /// `J ∩ {0..n1-1}`
    pub fn first_block(self, n1: usize) -> SubsetIndex {
        SubsetIndex { mask: self.mask & ((1u64 << n1) - 1) as u32, n: self.n }
    }

    /// `J ∩ {n1..n-1}`
    pub fn second_block(self, n1: usize) -> SubsetIndex {
        SubsetIndex { mask: self.mask & !(((1u64 << n1) - 1) as u32), n: self.n }
    }

    pub fn complement(self) -> SubsetIndex {
        SubsetIndex { mask: Self::full(self.n).mask & !self.mask, n: self.n }
    }

    /// Every nonempty subset, in increasing mask order.
    pub fn all_nonempty(n: usize) -> impl Iterator<Item = SubsetIndex> {
        (1..(1u64 << n)).map(move |m| SubsetIndex { mask: m as u32, n })
    }
}

/// Which sector a quadratic action lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    /// `copies` independent bosonic vectors, each with `1/2 x^T M x`.
    Bosonic { copies: usize },
    /// One fermionic pair of vectors with `xi^T M eta`.
    Fermionic,
}

/// Quadratic action with precision matrix `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticAction<T> {
    pub precision: Matrix<T>,
    pub sector: Sector,
}

impl<T: Field> QuadraticAction<T> {
    /// Action with precision `C(tau)^{-1}`.
    pub fn from_covariance(ci: &CovarianceInterpolation<T>, tau: &T, sector: Sector) -> Result<Self> {
        let precision = ci.interpolate(tau)?.inverse()?;
        Ok(QuadraticAction { precision, sector })
    }

    /// `-S` as an element of the exterior algebra (fermionic sector only).
    pub fn fermionic_weight(&self) -> Result<GrassmannElement<T>> {
        if self.sector != Sector::Fermionic {
            return Err(Error::Unsupported("bosonic action has no Grassmann weight".into()));
        }
        let reg = Registry::new(self.precision.rows())?;
        GrassmannElement::bilinear(reg, &self.precision)?.neg().exp()
    }
}

/// `det(M_J)`; the empty set is rejected (callers use the convention `det = 1`).
pub fn principal_minor_det<T: Field>(m: &Matrix<T>, j: SubsetIndex) -> Result<T> {
    if j.is_empty() {
        return Err(Error::EmptySubset);
    }
    if !m.is_square() || m.rows() != j.dim() {
        return Err(Error::DimensionMismatch(format!("{}-subset of {}x{}", j.dim(), m.rows(), m.cols())));
    }
    m.principal(&j.indices()).det()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeibnizReport<T> {
    /// `det(I + A)`
    pub lhs: T,
    /// `1 + sum_{J != {}} det(A_J)`
    pub rhs: T,
    pub holds: bool,
}

/// Checks `det(I + A) = 1 + sum_{J != {}} det(A_J)` by full enumeration.
pub fn leibniz_check<T: Field>(a: &Matrix<T>) -> Result<LeibnizReport<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("expected a square matrix".into()));
    }
    let n = a.rows();
    if n > 12 {
        return Err(Error::Unsupported(format!("subset enumeration for n = {n} > 12")));
    }
    let lhs = Matrix::identity(n).add(a)?.det()?;
    let mut rhs = T::one();
    for j in SubsetIndex::all_nonempty(n) {
        rhs = rhs.plus(&principal_minor_det(a, j)?);
    }
    let holds = lhs.close_to(&rhs, 1e-10);
    Ok(LeibnizReport { lhs, rhs, holds })
}

/// `a_J(tau) = -d/dtau det(C(tau)_J)` via `d det M = det M * tr(M^{-1} dM)`.
pub fn a_j_analytic<T: Field>(ci: &CovarianceInterpolation<T>, j: SubsetIndex, tau: &T) -> Result<T> {
    ci.check_subset(j)?;
    if j.is_empty() {
        return Ok(T::zero());
    }
    let idx = j.indices();
    let m = ci.interpolate_unchecked(tau).principal(&idx);
    let dm = ci.coupling_pattern().principal(&idx);
    let det = m.det()?;
    if det.is_zero() {
        return Err(Error::Singular);
    }
    let x = m.solve(&dm)?;
    // a zero trace must not come back as -0.0
    let a = det.times(&x.trace());
    Ok(if a.is_zero() { T::zero() } else { a.negate() })
}

/// Schur split of `C_J` along `J = J1 ∪ J2`: the pieces of the change of
/// variables `xi2' = xi2 + tau C22^{-1} C21 xi1` (same for `eta`).
#[derive(Clone, Debug, PartialEq)]
pub struct SchurSplit<T> {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    /// `C11` restricted to `J1`.
    pub c11: Matrix<T>,
    /// `K = C12 C22^{-1} C21`, so the effective coupling is `C11 - tau^2 K`.
    pub coupling: Matrix<T>,
    /// `det(C22)`, computed as a fermionic Gaussian integral.
    pub det_c22: T,
}

impl<T: Field> SchurSplit<T> {
    pub fn new(ci: &CovarianceInterpolation<T>, j: SubsetIndex) -> Result<Option<Self>> {
        ci.check_subset(j)?;
        let first = j.first_block(ci.n1()).indices();
        let second = j.second_block(ci.n1()).indices();
        if first.is_empty() || second.is_empty() {
            return Ok(None);
        }
        let c = ci.matrix();
        let c11 = c.principal(&first);
        let c12 = c.select(&first, &second);
        let c22 = c.principal(&second);
        let det_c22 = crate::exterior::gaussian_fermionic_integral(&c22)?;
        if det_c22.is_zero() {
            return Err(Error::Singular);
        }
        let coupling = c12.mul(&c22.solve(&c12.transpose())?)?;
        Ok(Some(SchurSplit { first, second, c11, coupling, det_c22 }))
    }

    /// Fermionic effective action `xi1^T (C11 - tau^2 K) eta1`.
    pub fn effective_action(&self, tau: &T) -> QuadraticAction<T> {
        let t2 = tau.times(tau);
        let precision = self
            .c11
            .sub(&self.coupling.scale(&t2))
            .expect("same shape");
        QuadraticAction { precision, sector: Sector::Fermionic }
    }

    /// `det(C22) int exp(-S_eff) (-2 tau xi1^T K eta1)`.
    pub fn a_j(&self, tau: &T) -> Result<T> {
        let action = self.effective_action(tau);
        let weight = action.fermionic_weight()?;
        let reg = weight.registry();
        let observable = GrassmannElement::bilinear(reg, &self.coupling)?.scale(&tau.times(&T::from_i64(-2)));
        let integral = weight.try_mul(&observable)?.integrate();
        Ok(self.det_c22.times(&integral))
    }

    /// The same quantity as a polynomial in `tau`.
    pub fn a_j_poly(&self) -> Result<Poly<T>> {
        let tau = Poly::<T>::var(Symbol::Tau);
        let t2 = tau.times(&tau);
        let k = self.coupling.map(|v| Poly::constant(v.clone()));
        let s_eff = Matrix::from_fn(self.c11.rows(), self.c11.cols(), |a, b| {
            Poly::constant(self.c11[(a, b)].clone()).minus(&k[(a, b)].times(&t2))
        });
        let reg = Registry::new(s_eff.rows())?;
        let weight = GrassmannElement::bilinear(reg, &s_eff)?.neg().exp()?;
        let observable = GrassmannElement::bilinear(reg, &k)?.scale(&tau.times(&Poly::from_i64(-2)));
        let integral = weight.try_mul(&observable)?.integrate();
        Ok(integral.scale(&self.det_c22))
    }
}

/// `a_J(tau)` through the fermionic effective-action route; zero when `J`
/// lies inside one block.
pub fn a_j_fermionic<T: Field>(ci: &CovarianceInterpolation<T>, j: SubsetIndex, tau: &T) -> Result<T> {
    match SchurSplit::new(ci, j)? {
        None => Ok(T::zero()),
        Some(split) => split.a_j(tau),
    }
}

/// `a_J` as a polynomial in `tau` via the fermionic route.
pub fn a_j_fermionic_poly<T: Field>(ci: &CovarianceInterpolation<T>, j: SubsetIndex) -> Result<Poly<T>> {
    match SchurSplit::new(ci, j)? {
        None => Ok(Poly::zero()),
        Some(split) => split.a_j_poly(),
    }
}

/// Normalized fermionic expectations `E_f[prod_{j in J} (-2 xi_j eta_j)]`
/// under `S_f = xi^T C(tau)^{-1} eta`; the weight is expanded once.
pub struct WickTable<T> {
    weight: GrassmannElement<T>,
    normalization: T,
    n: usize,
}

impl<T: Field> WickTable<T> {
    pub fn new(ci: &CovarianceInterpolation<T>, tau: &T) -> Result<Self> {
        let cov = ci.interpolate(tau)?;
        let action = QuadraticAction { precision: cov.inverse()?, sector: Sector::Fermionic };
        Ok(WickTable { weight: action.fermionic_weight()?, normalization: cov.det()?, n: ci.n() })
    }

    pub fn expectation(&self, j: SubsetIndex) -> Result<T> {
        if j.dim() != self.n {
            return Err(Error::DimensionMismatch("subset dimension".into()));
        }
        let reg = self.weight.registry();
        let minus_two = T::from_i64(-2);
        let mut obs = GrassmannElement::one(reg);
        for i in j.indices() {
            obs = obs.try_mul(&GrassmannElement::pair(reg, i).scale(&minus_two))?;
        }
        Ok(self.weight.try_mul(&obs)?.integrate().times(&self.normalization))
    }
}

/// Engine-evaluated `E_f[prod_{j in J} (-2 xi_j eta_j)]`; equals `2^{|J|} det(C(tau)_J)`.
pub fn wick_subset_expectation<T: Field>(ci: &CovarianceInterpolation<T>, j: SubsetIndex, tau: &T) -> Result<T> {
    ci.check_subset(j)?;
    WickTable::new(ci, tau)?.expectation(j)
}
