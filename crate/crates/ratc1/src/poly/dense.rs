//! Dense univariate polynomials in canonical form.

use serde::{Deserialize, Serialize};

use crate::dd;

/// Dense univariate polynomial; `coeffs[k]` multiplies `x^k`.
///
/// Canonical form: the trailing (highest-index) coefficient is nonzero, and
/// the zero polynomial is the empty coefficient list. [`DensePolynomial::new`]
/// canonicalizes its input.
#[derive(Clone, Debug, PartialEq)]
pub struct DensePolynomial {
    coeffs: Vec<f64>,
}

impl DensePolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        DensePolynomial { coeffs }
    }

    pub fn zero() -> Self {
        DensePolynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c * x^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the last nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Horner evaluation carried out in software double-double precision.
    /// Used as a cross-check where coefficient expansion is ill-conditioned.
    pub fn eval_extended(&self, x: f64) -> f64 {
        dd::horner(&self.coeffs, x)
    }

    /// Formal derivative.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Self::new(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (k, slot) in coeffs.iter_mut().enumerate() {
            *slot = self.coeffs.get(k).copied().unwrap_or(0.0)
                + other.coeffs.get(k).copied().unwrap_or(0.0);
        }
        Self::new(coeffs)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    /// The polynomial `x -> p(-x)` (sign flip on odd-degree coefficients).
    pub fn reflect(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
            .collect();
        Self::new(coeffs)
    }
}

/// JSON form shared by dense (dim 1) and sparse polynomials:
/// `{"dim": d, "terms": [[[e1,...,ed], c], ...]}`.
#[derive(Serialize, Deserialize)]
pub struct PolyJson {
    pub dim: usize,
    pub terms: Vec<(Vec<u32>, f64)>,
}

impl From<&DensePolynomial> for PolyJson {
    fn from(p: &DensePolynomial) -> Self {
        PolyJson {
            dim: 1,
            terms: p
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(k, &c)| (vec![k as u32], c))
                .collect(),
        }
    }
}

impl TryFrom<&PolyJson> for DensePolynomial {
    type Error = super::PolyError;

    fn try_from(j: &PolyJson) -> Result<Self, Self::Error> {
        if j.dim != 1 {
            return Err(super::PolyError::DimensionMismatch {
                expected: 1,
                got: j.dim,
            });
        }
        let deg = j.terms.iter().map(|(e, _)| e[0] as usize).max();
        let mut coeffs = vec![0.0; deg.map_or(0, |d| d + 1)];
        for (e, c) in &j.terms {
            if e.len() != 1 {
                return Err(super::PolyError::DimensionMismatch {
                    expected: 1,
                    got: e.len(),
                });
            }
            coeffs[e[0] as usize] += c;
        }
        Ok(DensePolynomial::new(coeffs))
    }
}
