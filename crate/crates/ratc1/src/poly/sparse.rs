//! Sparse multivariate polynomials keyed by exponent multi-index.

use std::collections::BTreeMap;

use super::{PolyError, PolyJson};
use crate::poly::DensePolynomial;

/// Sparse polynomial in `dim` variables. Terms map an exponent multi-index
/// `(j_1, ..., j_d)` to a nonzero coefficient; zero coefficients are never
/// stored. The degree is the maximum of `sum_l j_l` over stored terms.
///
/// A `BTreeMap` keeps term iteration deterministic, which the harness relies
/// on for byte-identical output.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMultiPolynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl SparseMultiPolynomial {
    pub fn zero(dim: usize) -> Self {
        SparseMultiPolynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate polynomial `x_var`.
    pub fn variable(dim: usize, var: usize) -> Self {
        assert!(var < dim, "variable index out of range");
        let mut e = vec![0; dim];
        e[var] = 1;
        let mut p = Self::zero(dim);
        p.add_term(e, 1.0);
        p
    }

    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, f64)>,
    ) -> Result<Self, PolyError> {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            if e.len() != dim {
                return Err(PolyError::DimensionMismatch {
                    expected: dim,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Embeds a univariate polynomial as a polynomial in `x_var` of a
    /// `dim`-variate ring.
    pub fn from_dense(p: &DensePolynomial, dim: usize, var: usize) -> Self {
        let mut out = Self::zero(dim);
        for (k, &c) in p.coeffs().iter().enumerate() {
            if c != 0.0 {
                let mut e = vec![0; dim];
                e[var] = k as u32;
                out.add_term(e, c);
            }
        }
        out
    }

    fn add_term(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        debug_assert_eq!(exps.len(), self.dim);
        let entry = self.terms.entry(exps);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = o.get() + c;
                if v == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree: `max sum_l j_l` over stored terms; `None` if zero.
    pub fn degree(&self) -> Option<usize> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as usize).sum())
            .max()
    }

    /// Largest exponent of variable `var` over all terms.
    pub fn max_exponent(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "evaluation point dimension mismatch");
        let pows = self.power_table(x);
        let mut acc = 0.0;
        for (e, c) in self.terms.iter() {
            let mut t = *c;
            for (l, &k) in e.iter().enumerate() {
                t *= pows[l][k as usize];
            }
            acc += t;
        }
        acc
    }

    /// Value together with the directional derivative along `dx`.
    pub fn eval_with_directional(&self, x: &[f64], dx: &[f64]) -> (f64, f64) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(dx.len(), self.dim);
        let pows = self.power_table(x);
        let mut v = 0.0;
        let mut dv = 0.0;
        for (e, c) in self.terms.iter() {
            let mut t = *c;
            for (l, &k) in e.iter().enumerate() {
                t *= pows[l][k as usize];
            }
            v += t;
            for (l, &k) in e.iter().enumerate() {
                if k > 0 && dx[l] != 0.0 {
                    let mut s = *c * k as f64 * dx[l] * pows[l][(k - 1) as usize];
                    for (m, &j) in e.iter().enumerate() {
                        if m != l {
                            s *= pows[m][j as usize];
                        }
                    }
                    dv += s;
                }
            }
        }
        (v, dv)
    }

    /// Evaluation in software double-double. The expanded forms produced by
    /// network collapse cancel catastrophically in plain f64; this path
    /// keeps the cross-checks meaningful.
    pub fn eval_extended(&self, x: &[f64]) -> f64 {
        use crate::dd::{self, Dd};
        assert_eq!(x.len(), self.dim, "evaluation point dimension mismatch");
        let pows: Vec<Vec<Dd>> = (0..self.dim)
            .map(|l| {
                let top = self.max_exponent(l) as usize;
                let mut pows = Vec::with_capacity(top + 1);
                pows.push(Dd { hi: 1.0, lo: 0.0 });
                for k in 1..=top {
                    pows.push(dd::mul_f64(pows[k - 1], x[l]));
                }
                pows
            })
            .collect();
        let mut acc = Dd::ZERO;
        for (e, c) in self.terms.iter() {
            let mut t = Dd { hi: *c, lo: 0.0 };
            for (l, &k) in e.iter().enumerate() {
                t = dd::mul(t, pows[l][k as usize]);
            }
            acc = dd::add(acc, t);
        }
        acc.to_f64()
    }

    fn power_table(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|l| {
                let top = self.max_exponent(l) as usize;
                let mut pows = Vec::with_capacity(top + 1);
                pows.push(1.0);
                for k in 1..=top {
                    pows.push(pows[k - 1] * x[l]);
                }
                pows
            })
            .collect()
    }

    /// Partial derivative along `axis`.
    pub fn partial_derivative(&self, axis: usize) -> Self {
        assert!(axis < self.dim);
        let mut out = Self::zero(self.dim);
        for (e, &c) in self.terms.iter() {
            let k = e[axis];
            if k > 0 {
                let mut e2 = e.clone();
                e2[axis] = k - 1;
                out.add_term(e2, c * k as f64);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, &c) in other.terms.iter() {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero(self.dim);
        }
        SparseMultiPolynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, &a)| (e.clone(), a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim);
        for (e1, &c1) in self.terms.iter() {
            for (e2, &c2) in other.terms.iter() {
                let e: Vec<u32> = e1.iter().zip(e2.iter()).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        Ok(out)
    }

    /// `self^k` by repeated multiplication, guarded by a term cap.
    pub fn pow(&self, k: u32, term_cap: usize) -> Result<Self, PolyError> {
        let mut acc = Self::constant(self.dim, 1.0);
        for _ in 0..k {
            acc = acc.mul(self)?;
            if acc.term_count() > term_cap {
                return Err(PolyError::TermExplosion {
                    terms: acc.term_count(),
                    cap: term_cap,
                });
            }
        }
        Ok(acc)
    }

    fn check_dim(&self, other: &Self) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }
}

impl From<&SparseMultiPolynomial> for PolyJson {
    fn from(p: &SparseMultiPolynomial) -> Self {
        PolyJson {
            dim: p.dim,
            terms: p.terms.iter().map(|(e, &c)| (e.clone(), c)).collect(),
        }
    }
}

impl TryFrom<&PolyJson> for SparseMultiPolynomial {
    type Error = PolyError;

    fn try_from(j: &PolyJson) -> Result<Self, Self::Error> {
        SparseMultiPolynomial::from_terms(j.dim, j.terms.iter().cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_is_total_degree() {
        // x^2 y has degree 3 in the multidimensional sense.
        let p = SparseMultiPolynomial::from_terms(2, [(vec![2, 1], 1.0)]).unwrap();
        assert_eq!(p.degree(), Some(3));
    }

    #[test]
    fn partial_derivative_of_x2y() {
        let p = SparseMultiPolynomial::from_terms(2, [(vec![2, 1], 1.0)]).unwrap();
        let dpy = p.partial_derivative(1);
        let expect = SparseMultiPolynomial::from_terms(2, [(vec![2, 0], 1.0)]).unwrap();
        assert_eq!(dpy, expect);
    }

    #[test]
    fn no_zero_terms_stored() {
        let p = SparseMultiPolynomial::from_terms(1, [(vec![1], 1.0), (vec![1], -1.0)]).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.term_count(), 0);
    }

    #[test]
    fn directional_derivative_matches_partials() {
        let p = SparseMultiPolynomial::from_terms(
            2,
            [(vec![2, 1], 0.5), (vec![0, 3], -2.0), (vec![1, 0], 1.0)],
        )
        .unwrap();
        let x = [0.7, -0.3];
        let (v, dv) = p.eval_with_directional(&x, &[1.0, 0.0]);
        assert!((v - p.eval(&x)).abs() < 1e-15);
        assert!((dv - p.partial_derivative(0).eval(&x)).abs() < 1e-15);
    }
}
