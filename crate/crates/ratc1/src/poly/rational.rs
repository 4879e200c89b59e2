//! Rational functions as numerator/denominator pairs with degree-bound
//! metadata.
//!
//! No gcd reduction is ever performed: coprimality testing over floating
//! point is ill-posed, so all degrees are tracked as upper bounds of the
//! stored representation. Denominator positivity is certified by probing a
//! grid over the declared domain, not symbolically.

use super::{PolyError, PolyJson};
use crate::poly::{DensePolynomial, SparseMultiPolynomial};
use serde::{Deserialize, Serialize};

/// Default probe resolution for denominator positivity certification.
pub const DEFAULT_PROBE_POINTS_PER_AXIS: usize = 1024;

/// Univariate rational function `num/den` over dense polynomials.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    num: DensePolynomial,
    den: DensePolynomial,
    degree_bound: usize,
}

impl RationalFunction {
    /// The degree bound is lifted to at least the representation degrees so
    /// the invariant `bound >= max(deg num, deg den)` always holds.
    pub fn new(num: DensePolynomial, den: DensePolynomial) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        let bound = rep_degree(num.degree(), den.degree());
        Ok(RationalFunction {
            num,
            den,
            degree_bound: bound,
        })
    }

    pub fn from_poly(p: DensePolynomial) -> Self {
        RationalFunction::new(p, DensePolynomial::constant(1.0)).expect("unit denominator")
    }

    pub fn identity() -> Self {
        Self::from_poly(DensePolynomial::monomial(1.0, 1))
    }

    pub fn numerator(&self) -> &DensePolynomial {
        &self.num
    }

    pub fn denominator(&self) -> &DensePolynomial {
        &self.den
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn with_degree_bound(mut self, bound: usize) -> Self {
        self.degree_bound = bound.max(rep_degree(self.num.degree(), self.den.degree()));
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.num.eval(x) / self.den.eval(x)
    }

    /// Quotient-rule derivative value.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let n = self.num.eval(x);
        let d = self.den.eval(x);
        let np = self.num.derivative().eval(x);
        let dp = self.den.derivative().eval(x);
        (np * d - n * dp) / (d * d)
    }

    /// Cross-multiplied sum; degree bound adds.
    pub fn add(&self, other: &Self) -> Self {
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        RationalFunction::new(num, den)
            .expect("product of nonzero denominators")
            .with_degree_bound(self.degree_bound + other.degree_bound)
    }

    /// Componentwise product; degree bound adds.
    pub fn mul(&self, other: &Self) -> Self {
        RationalFunction::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("product of nonzero denominators")
            .with_degree_bound(self.degree_bound + other.degree_bound)
    }

    /// Probes `den > 0` on a uniform grid (endpoints included) over `[lo, hi]`.
    pub fn certify_denominator_positive(
        &self,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Result<(), PolyError> {
        for k in 0..points {
            let x = lo + (hi - lo) * k as f64 / (points - 1).max(1) as f64;
            let v = self.den.eval(x);
            if v <= 0.0 {
                return Err(PolyError::NonPositiveDenominator { at: vec![x], value: v });
            }
        }
        Ok(())
    }

    /// Embeds into a `dim`-variate rational in variable `var`.
    pub fn to_multi(&self, dim: usize, var: usize) -> MultiRational {
        MultiRational {
            num: SparseMultiPolynomial::from_dense(&self.num, dim, var),
            den: SparseMultiPolynomial::from_dense(&self.den, dim, var),
            degree_bound: self.degree_bound,
        }
    }
}

/// Multivariate rational function over sparse polynomials.
#[derive(Clone, Debug)]
pub struct MultiRational {
    num: SparseMultiPolynomial,
    den: SparseMultiPolynomial,
    degree_bound: usize,
}

impl MultiRational {
    pub fn new(num: SparseMultiPolynomial, den: SparseMultiPolynomial) -> Result<Self, PolyError> {
        if num.dimension() != den.dimension() {
            return Err(PolyError::DimensionMismatch {
                expected: num.dimension(),
                got: den.dimension(),
            });
        }
        if den.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        let bound = rep_degree(num.degree(), den.degree());
        Ok(MultiRational {
            num,
            den,
            degree_bound: bound,
        })
    }

    pub fn from_poly(p: SparseMultiPolynomial) -> Self {
        let dim = p.dimension();
        MultiRational::new(p, SparseMultiPolynomial::constant(dim, 1.0))
            .expect("unit denominator")
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_poly(SparseMultiPolynomial::constant(dim, c))
    }

    /// The coordinate function `x_var` as a degree-1 rational.
    pub fn identity(dim: usize, var: usize) -> Self {
        Self::from_poly(SparseMultiPolynomial::variable(dim, var))
    }

    pub fn numerator(&self) -> &SparseMultiPolynomial {
        &self.num
    }

    pub fn denominator(&self) -> &SparseMultiPolynomial {
        &self.den
    }

    pub fn dimension(&self) -> usize {
        self.num.dimension()
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn with_degree_bound(mut self, bound: usize) -> Self {
        self.degree_bound = bound.max(rep_degree(self.num.degree(), self.den.degree()));
        self
    }

    /// Representation degree `max(deg num, deg den)` of the stored pair.
    pub fn representation_degree(&self) -> usize {
        rep_degree(self.num.degree(), self.den.degree())
    }

    pub fn term_count(&self) -> usize {
        self.num.term_count() + self.den.term_count()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.num.eval(x) / self.den.eval(x)
    }

    /// Double-double evaluation path for ill-conditioned expanded forms.
    pub fn eval_extended(&self, x: &[f64]) -> f64 {
        self.num.eval_extended(x) / self.den.eval_extended(x)
    }

    /// Value and directional derivative along `dx` by the quotient rule.
    pub fn eval_with_directional(&self, x: &[f64], dx: &[f64]) -> (f64, f64) {
        let (n, dn) = self.num.eval_with_directional(x, dx);
        let (d, dd) = self.den.eval_with_directional(x, dx);
        (n / d, (dn * d - n * dd) / (d * d))
    }

    /// Denominator value at `x`, for near-zero diagnostics.
    pub fn denominator_value(&self, x: &[f64]) -> f64 {
        self.den.eval(x)
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        let bound = self.degree_bound + other.degree_bound;
        // Shared denominators add without cross-multiplication; this keeps
        // collapse representations from doubling degree on every sum.
        if self.den == other.den {
            return Ok(MultiRational::new(self.num.add(&other.num)?, self.den.clone())?
                .with_degree_bound(bound.min(self.degree_bound.max(other.degree_bound))));
        }
        let num = self
            .num
            .mul(&other.den)?
            .add(&other.num.mul(&self.den)?)?;
        let den = self.den.mul(&other.den)?;
        Ok(MultiRational::new(num, den)?.with_degree_bound(bound))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        let bound = self.degree_bound + other.degree_bound;
        Ok(
            MultiRational::new(self.num.mul(&other.num)?, self.den.mul(&other.den)?)?
                .with_degree_bound(bound),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        MultiRational {
            num: self.num.scale(c),
            den: self.den.clone(),
            degree_bound: self.degree_bound,
        }
    }

    /// Symbolic composition `self(inners[0], ..., inners[k-1])` where `self`
    /// has `k` variables and every inner shares one dimension `d`.
    ///
    /// Substitution runs over the common denominator `prod_l den_l^{T_l}`
    /// with `T_l` the largest exponent of variable `l` in either the
    /// numerator or the denominator, so the common denominator cancels and
    /// the result is a single `num/den` pair. Coefficient arithmetic runs
    /// in double-double and rounds once at the end: the substitution sums
    /// cancel heavily and plain f64 construction loses ~8 digits already on
    /// small networks. The returned degree bound is the representation
    /// degree; the naive product rule `deg(outer) * max_l deg(inner_l)`
    /// undercounts sums and is not used.
    pub fn compose(&self, inners: &[MultiRational], term_cap: usize) -> Result<Self, PolyError> {
        let k = self.dimension();
        if inners.len() != k {
            return Err(PolyError::DimensionMismatch {
                expected: k,
                got: inners.len(),
            });
        }
        let d = inners
            .first()
            .map(|r| r.dimension())
            .ok_or(PolyError::EmptyComposition)?;
        for r in inners {
            if r.dimension() != d {
                return Err(PolyError::DimensionMismatch {
                    expected: d,
                    got: r.dimension(),
                });
            }
        }

        let tops: Vec<u32> = (0..k)
            .map(|l| self.num.max_exponent(l).max(self.den.max_exponent(l)))
            .collect();

        // Power tables for each inner's numerator and denominator.
        let mut num_pows: Vec<Vec<DdPoly>> = Vec::with_capacity(k);
        let mut den_pows: Vec<Vec<DdPoly>> = Vec::with_capacity(k);
        for (l, inner) in inners.iter().enumerate() {
            num_pows.push(power_chain(inner.numerator(), tops[l], term_cap)?);
            den_pows.push(power_chain(inner.denominator(), tops[l], term_cap)?);
        }

        let substitute = |poly: &SparseMultiPolynomial| -> Result<SparseMultiPolynomial, PolyError> {
            let mut acc = DdPoly::zero(d);
            for (exps, c) in poly.terms() {
                let mut term = DdPoly::constant(d, c);
                for l in 0..k {
                    let e = exps[l];
                    term = term.mul(&num_pows[l][e as usize], term_cap)?;
                    term = term.mul(&den_pows[l][(tops[l] - e) as usize], term_cap)?;
                }
                acc.add_assign(&term);
                if acc.term_count() > term_cap {
                    return Err(PolyError::TermExplosion {
                        terms: acc.term_count(),
                        cap: term_cap,
                    });
                }
            }
            Ok(acc.round(d))
        };

        let num = substitute(&self.num)?;
        let den = substitute(&self.den)?;
        MultiRational::new(num, den)
    }

    /// Probes `den > 0` on a uniform grid over an axis-aligned box.
    /// `points_per_axis` is capped so the total probe count stays below 2^24.
    pub fn certify_denominator_positive(
        &self,
        domain: &[(f64, f64)],
        points_per_axis: usize,
    ) -> Result<(), PolyError> {
        let d = self.dimension();
        assert_eq!(domain.len(), d, "domain box dimension mismatch");
        let mut per_axis = points_per_axis.max(2);
        while (per_axis as f64).powi(d as i32) > (1u64 << 24) as f64 {
            per_axis /= 2;
        }
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        loop {
            for l in 0..d {
                let (lo, hi) = domain[l];
                x[l] = lo + (hi - lo) * idx[l] as f64 / (per_axis - 1) as f64;
            }
            let v = self.den.eval(&x);
            if v <= 0.0 {
                return Err(PolyError::NonPositiveDenominator {
                    at: x.clone(),
                    value: v,
                });
            }
            // mixed-radix increment
            let mut l = 0;
            loop {
                if l == d {
                    return Ok(());
                }
                idx[l] += 1;
                if idx[l] < per_axis {
                    break;
                }
                idx[l] = 0;
                l += 1;
            }
        }
    }
}

fn rep_degree(a: Option<usize>, b: Option<usize>) -> usize {
    a.unwrap_or(0).max(b.unwrap_or(0))
}

/// Double-double-coefficient scratch polynomial for composition.
struct DdPoly {
    terms: std::collections::BTreeMap<Vec<u32>, Dd>,
}

use crate::dd::{self, Dd};

impl DdPoly {
    fn zero(_dim: usize) -> Self {
        DdPoly {
            terms: std::collections::BTreeMap::new(),
        }
    }

    fn constant(dim: usize, c: f64) -> Self {
        let mut terms = std::collections::BTreeMap::new();
        if c != 0.0 {
            terms.insert(vec![0; dim], Dd { hi: c, lo: 0.0 });
        }
        DdPoly { terms }
    }

    fn from_f64(p: &SparseMultiPolynomial) -> Self {
        DdPoly {
            terms: p
                .terms()
                .map(|(e, c)| (e.to_vec(), Dd { hi: c, lo: 0.0 }))
                .collect(),
        }
    }

    fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn add_assign(&mut self, other: &Self) {
        for (e, &c) in other.terms.iter() {
            self.push(e.clone(), c);
        }
    }

    fn push(&mut self, e: Vec<u32>, c: Dd) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() = dd::add(*o.get(), c);
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn scale(mut self, c: f64) -> Self {
        for v in self.terms.values_mut() {
            *v = dd::mul_f64(*v, c);
        }
        self
    }

    fn mul(&self, other: &Self, term_cap: usize) -> Result<Self, PolyError> {
        let mut out = DdPoly {
            terms: std::collections::BTreeMap::new(),
        };
        for (e1, &c1) in self.terms.iter() {
            for (e2, &c2) in other.terms.iter() {
                let e: Vec<u32> = e1.iter().zip(e2.iter()).map(|(a, b)| a + b).collect();
                out.push(e, dd::mul(c1, c2));
            }
            if out.term_count() > term_cap {
                return Err(PolyError::TermExplosion {
                    terms: out.term_count(),
                    cap: term_cap,
                });
            }
        }
        Ok(out)
    }

    fn round(&self, dim: usize) -> SparseMultiPolynomial {
        SparseMultiPolynomial::from_terms(
            dim,
            self.terms.iter().map(|(e, c)| (e.clone(), c.to_f64())),
        )
        .expect("exponent widths preserved")
    }
}

fn power_chain(
    p: &SparseMultiPolynomial,
    top: u32,
    term_cap: usize,
) -> Result<Vec<DdPoly>, PolyError> {
    let base = DdPoly::from_f64(p);
    let mut pows = Vec::with_capacity(top as usize + 1);
    pows.push(DdPoly::constant(p.dimension(), 1.0));
    for k in 1..=top as usize {
        let next = pows[k - 1].mul(&base, term_cap)?;
        pows.push(next);
    }
    Ok(pows)
}

/// Rational function with the denominator kept as a multiset of factor
/// polynomials. Network collapse uses this: expanding a product that
/// repeats every activation denominator once per summand both inflates the
/// degree and wrecks the coefficient conditioning, while the factored form
/// keeps each distinct factor once (the common-denominator bookkeeping the
/// degree accounting assumes).
#[derive(Clone, Debug)]
pub struct FactoredRational {
    num: SparseMultiPolynomial,
    /// canonical key -> (factor polynomial, multiplicity)
    den: std::collections::BTreeMap<Vec<u8>, (SparseMultiPolynomial, u32)>,
}

fn factor_key(p: &SparseMultiPolynomial) -> Vec<u8> {
    let mut key = Vec::new();
    for (e, c) in p.terms() {
        for &x in e {
            key.extend_from_slice(&x.to_le_bytes());
        }
        key.extend_from_slice(&c.to_bits().to_le_bytes());
        key.push(0xff);
    }
    key
}

impl FactoredRational {
    pub fn identity(dim: usize, var: usize) -> Self {
        FactoredRational {
            num: SparseMultiPolynomial::variable(dim, var),
            den: std::collections::BTreeMap::new(),
        }
    }

    pub fn numerator(&self) -> &SparseMultiPolynomial {
        &self.num
    }

    pub fn denominator_factors(&self) -> impl Iterator<Item = (&SparseMultiPolynomial, u32)> {
        self.den.values().map(|(p, m)| (p, *m))
    }

    pub fn denominator_degree(&self) -> usize {
        self.den
            .values()
            .map(|(p, m)| p.degree().unwrap_or(0) * *m as usize)
            .sum()
    }

    /// Expands the factored denominator (in double-double) and returns the
    /// plain pair; the degree bound is the representation degree.
    pub fn expand(&self, term_cap: usize) -> Result<MultiRational, PolyError> {
        let dim = self.num.dimension();
        let mut den = DdPoly::constant(dim, 1.0);
        for (p, m) in self.den.values() {
            let base = DdPoly::from_f64(p);
            for _ in 0..*m {
                den = den.mul(&base, term_cap)?;
            }
        }
        MultiRational::new(self.num.clone(), den.round(dim))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut den = 1.0;
        for (p, m) in self.den.values() {
            den *= p.eval(x).powi(*m as i32);
        }
        self.num.eval(x) / den
    }
}

impl MultiRational {
    /// Composition that preserves denominator factorizations of the inner
    /// functions. When `self` has a constant denominator the result keeps
    /// the inner factors (with LCM multiplicities across the substitution
    /// terms); otherwise the substituted denominator joins as one new
    /// factor.
    pub fn compose_factored(
        &self,
        inners: &[FactoredRational],
        term_cap: usize,
    ) -> Result<FactoredRational, PolyError> {
        let k = self.dimension();
        if inners.len() != k {
            return Err(PolyError::DimensionMismatch {
                expected: k,
                got: inners.len(),
            });
        }
        let d = inners
            .first()
            .map(|r| r.num.dimension())
            .ok_or(PolyError::EmptyComposition)?;

        let tops: Vec<u32> = (0..k)
            .map(|l| self.num.max_exponent(l).max(self.den.max_exponent(l)))
            .collect();

        // Registry of distinct factors with per-inner multiplicities.
        let mut registry: std::collections::BTreeMap<Vec<u8>, (SparseMultiPolynomial, Vec<u32>)> =
            std::collections::BTreeMap::new();
        for (l, inner) in inners.iter().enumerate() {
            for (key, (poly, mult)) in inner.den.iter() {
                let entry = registry
                    .entry(key.clone())
                    .or_insert_with(|| (poly.clone(), vec![0; k]));
                entry.1[l] = *mult;
            }
        }

        // Required multiplicity of each factor in the common denominator:
        // max over substitution terms of sum_l e_l * mult_l(f).
        let needed = |mults: &[u32]| -> u32 {
            let mut mu = 0u32;
            for poly in [&self.num, &self.den] {
                for (e, _) in poly.terms() {
                    let s: u32 = e.iter().zip(mults.iter()).map(|(&a, &b)| a * b).sum();
                    mu = mu.max(s);
                }
            }
            mu
        };
        let factor_info: Vec<(&SparseMultiPolynomial, &Vec<u32>, u32)> = registry
            .values()
            .map(|(poly, mults)| (poly, mults, needed(mults)))
            .collect();

        let mut num_pows: Vec<Vec<DdPoly>> = Vec::with_capacity(k);
        for (l, inner) in inners.iter().enumerate() {
            num_pows.push(power_chain(&inner.num, tops[l], term_cap)?);
        }
        let mut factor_pows: Vec<Vec<DdPoly>> = Vec::with_capacity(factor_info.len());
        for (poly, _, mu) in &factor_info {
            factor_pows.push(power_chain(poly, *mu, term_cap)?);
        }

        let substitute = |poly: &SparseMultiPolynomial| -> Result<DdPoly, PolyError> {
            let mut acc = DdPoly::zero(d);
            for (exps, c) in poly.terms() {
                let mut term = DdPoly::constant(d, c);
                for l in 0..k {
                    let e = exps[l];
                    if e > 0 {
                        term = term.mul(&num_pows[l][e as usize], term_cap)?;
                    }
                }
                for (fi, (_, mults, mu)) in factor_info.iter().enumerate() {
                    let used: u32 = exps.iter().zip(mults.iter()).map(|(&a, &b)| a * b).sum();
                    if mu - used > 0 {
                        term = term.mul(&factor_pows[fi][(mu - used) as usize], term_cap)?;
                    }
                }
                acc.add_assign(&term);
                if acc.term_count() > term_cap {
                    return Err(PolyError::TermExplosion {
                        terms: acc.term_count(),
                        cap: term_cap,
                    });
                }
            }
            Ok(acc)
        };

        let den_constant = self.den.degree() == Some(0);
        if den_constant {
            let c0 = self
                .den
                .terms()
                .next()
                .map(|(_, c)| c)
                .expect("nonzero constant denominator");
            let num = substitute(&self.num)?.scale(1.0 / c0).round(d);
            let den = factor_info
                .iter()
                .filter(|(_, _, mu)| *mu > 0)
                .map(|(poly, _, mu)| (factor_key(poly), ((*poly).clone(), *mu)))
                .collect();
            Ok(FactoredRational { num, den })
        } else {
            let num = substitute(&self.num)?.round(d);
            let den_poly = substitute(&self.den)?.round(d);
            if den_poly.is_zero() {
                return Err(PolyError::ZeroDenominator);
            }
            let mut den = std::collections::BTreeMap::new();
            if den_poly.degree() == Some(0) {
                let c0 = den_poly.terms().next().map(|(_, c)| c).expect("constant");
                return Ok(FactoredRational {
                    num: num.scale(1.0 / c0),
                    den,
                });
            }
            den.insert(factor_key(&den_poly), (den_poly, 1));
            Ok(FactoredRational { num, den })
        }
    }
}

/// JSON schema `{"num": ..., "den": ..., "degree_bound": k}`.
#[derive(Serialize, Deserialize)]
pub struct RationalJson {
    pub num: PolyJson,
    pub den: PolyJson,
    pub degree_bound: usize,
}

impl From<&MultiRational> for RationalJson {
    fn from(r: &MultiRational) -> Self {
        RationalJson {
            num: (&r.num).into(),
            den: (&r.den).into(),
            degree_bound: r.degree_bound,
        }
    }
}

impl TryFrom<&RationalJson> for MultiRational {
    type Error = PolyError;

    fn try_from(j: &RationalJson) -> Result<Self, Self::Error> {
        let num = SparseMultiPolynomial::try_from(&j.num)?;
        let den = SparseMultiPolynomial::try_from(&j.den)?;
        Ok(MultiRational::new(num, den)?.with_degree_bound(j.degree_bound))
    }
}

impl From<&RationalFunction> for RationalJson {
    fn from(r: &RationalFunction) -> Self {
        RationalJson {
            num: (&r.num).into(),
            den: (&r.den).into(),
            degree_bound: r.degree_bound,
        }
    }
}

impl TryFrom<&RationalJson> for RationalFunction {
    type Error = PolyError;

    fn try_from(j: &RationalJson) -> Result<Self, Self::Error> {
        let num = DensePolynomial::try_from(&j.num)?;
        let den = DensePolynomial::try_from(&j.den)?;
        Ok(RationalFunction::new(num, den)?.with_degree_bound(j.degree_bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn add_x_plus_one() {
        let x = RationalFunction::identity();
        let one = RationalFunction::from_poly(DensePolynomial::constant(1.0));
        let s = x.add(&one);
        assert_eq!(s.numerator().coeffs(), &[1.0, 1.0]);
        assert_eq!(s.degree_bound(), 1);
    }

    #[test]
    fn add_zero_is_identity_pointwise() {
        let r = RationalFunction::new(
            DensePolynomial::new(vec![1.0, 2.0]),
            DensePolynomial::new(vec![1.0, 0.0, 1.0]),
        )
        .unwrap();
        let zero = RationalFunction::from_poly(DensePolynomial::zero());
        let s = r.add(&zero);
        for x in grid(64) {
            assert!((s.eval(x) - r.eval(x)).abs() <= 1e-12 * r.eval(x).abs().max(1.0));
        }
    }

    #[test]
    fn add_shared_denominator_oracle() {
        // 1/(1+x^2) + x/(1+x^2) agrees with the pointwise sum on a grid.
        let den = DensePolynomial::new(vec![1.0, 0.0, 1.0]);
        let a = RationalFunction::new(DensePolynomial::constant(1.0), den.clone()).unwrap();
        let b = RationalFunction::new(DensePolynomial::monomial(1.0, 1), den).unwrap();
        let s = a.add(&b);
        assert!(s.degree_bound() <= 4);
        for x in grid(100) {
            let direct = a.eval(x) + b.eval(x);
            assert!((s.eval(x) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn mul_monomials_and_identity() {
        let x = RationalFunction::identity();
        let sq = x.mul(&x);
        assert_eq!(sq.numerator().coeffs(), &[0.0, 0.0, 1.0]);
        assert_eq!(sq.degree_bound(), 2);

        let r = RationalFunction::new(
            DensePolynomial::new(vec![1.0, 1.0]),
            DensePolynomial::new(vec![1.0, 0.0, 1.0]),
        )
        .unwrap();
        let one = RationalFunction::from_poly(DensePolynomial::constant(1.0));
        let p = r.mul(&one);
        for x in grid(64) {
            assert!((p.eval(x) - r.eval(x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn mul_pointwise_product_oracle() {
        let den = DensePolynomial::new(vec![1.0, 0.0, 1.0]);
        let a = RationalFunction::new(DensePolynomial::new(vec![1.0, 1.0]), den.clone()).unwrap();
        let b = RationalFunction::new(DensePolynomial::new(vec![1.0, -1.0]), den).unwrap();
        let p = a.mul(&b);
        for x in grid(100) {
            let direct = (1.0 - x * x) / (1.0 + x * x).powi(2);
            assert!((p.eval(x) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn compose_square_with_affine() {
        // outer y^2, inner (1+x) -> (1+x)^2
        let outer = MultiRational::from_poly(
            SparseMultiPolynomial::from_terms(1, [(vec![2], 1.0)]).unwrap(),
        );
        let inner = MultiRational::from_poly(
            SparseMultiPolynomial::from_terms(1, [(vec![0], 1.0), (vec![1], 1.0)]).unwrap(),
        );
        let c = outer.compose(std::slice::from_ref(&inner), 1000).unwrap();
        for x in grid(32) {
            assert!((c.eval(&[x]) - (1.0 + x).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_identity_outer_keeps_inner() {
        let outer = MultiRational::identity(1, 0);
        let inner = MultiRational::new(
            SparseMultiPolynomial::from_terms(1, [(vec![1], 1.0)]).unwrap(),
            SparseMultiPolynomial::from_terms(1, [(vec![0], 1.0), (vec![2], 1.0)]).unwrap(),
        )
        .unwrap();
        let c = outer.compose(std::slice::from_ref(&inner), 1000).unwrap();
        for x in grid(32) {
            assert!((c.eval(&[x]) - inner.eval(&[x])).abs() < 1e-13);
        }
    }

    #[test]
    fn compose_numeric_oracle() {
        // outer y/(1+y^2), inner 2x: agree with numeric composition.
        let outer = MultiRational::new(
            SparseMultiPolynomial::from_terms(1, [(vec![1], 1.0)]).unwrap(),
            SparseMultiPolynomial::from_terms(1, [(vec![0], 1.0), (vec![2], 1.0)]).unwrap(),
        )
        .unwrap();
        let inner = MultiRational::from_poly(
            SparseMultiPolynomial::from_terms(1, [(vec![1], 2.0)]).unwrap(),
        );
        let c = outer.compose(std::slice::from_ref(&inner), 1000).unwrap();
        for x in grid(100) {
            let y = 2.0 * x;
            let direct = y / (1.0 + y * y);
            assert!((c.eval(&[x]) - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn compose_term_cap_reports_explosion() {
        // (1 + x1 + x2 + x3)^6 composed into itself overflows a tiny cap.
        let dim = 3;
        let mut base = SparseMultiPolynomial::constant(dim, 1.0);
        for v in 0..dim {
            base = base.add(&SparseMultiPolynomial::variable(dim, v)).unwrap();
        }
        let outer = MultiRational::from_poly(
            SparseMultiPolynomial::from_terms(3, [(vec![6, 0, 0], 1.0), (vec![0, 6, 0], 1.0), (vec![0, 0, 6], 1.0)]).unwrap(),
        );
        let inner = MultiRational::from_poly(base);
        let r = outer.compose(&[inner.clone(), inner.clone(), inner], 10);
        assert!(matches!(r, Err(PolyError::TermExplosion { .. })));
    }

    #[test]
    fn positivity_probe_flags_sign_change() {
        let r = MultiRational::new(
            SparseMultiPolynomial::constant(1, 1.0),
            SparseMultiPolynomial::from_terms(1, [(vec![1], 1.0)]).unwrap(),
        )
        .unwrap();
        assert!(r.certify_denominator_positive(&[(-1.0, 1.0)], 64).is_err());
        assert!(r.certify_denominator_positive(&[(0.5, 1.0)], 64).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let r = MultiRational::new(
            SparseMultiPolynomial::from_terms(2, [(vec![1, 0], 1.0), (vec![0, 2], -0.5)]).unwrap(),
            SparseMultiPolynomial::constant(2, 2.0),
        )
        .unwrap();
        let j = RationalJson::from(&r);
        let text = serde_json::to_string(&j).unwrap();
        let back: RationalJson = serde_json::from_str(&text).unwrap();
        let r2 = MultiRational::try_from(&back).unwrap();
        assert!((r2.eval(&[0.3, 0.4]) - r.eval(&[0.3, 0.4])).abs() < 1e-15);
        assert_eq!(r2.degree_bound(), r.degree_bound());
    }
}
