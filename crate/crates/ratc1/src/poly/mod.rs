//! Polynomial and rational-function arithmetic with degree bookkeeping.
//!
//! Degrees of rational functions are tracked as upper bounds of the stored
//! (unreduced) representation; see [`MultiRational`] for the rationale.

mod dense;
mod rational;
mod sparse;

pub use dense::{DensePolynomial, PolyJson};
pub use rational::{
    FactoredRational, MultiRational, RationalFunction, RationalJson,
    DEFAULT_PROBE_POINTS_PER_AXIS,
};
pub use sparse::SparseMultiPolynomial;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero denominator polynomial")]
    ZeroDenominator,
    #[error("denominator not positive at {at:?} (value {value})")]
    NonPositiveDenominator { at: Vec<f64>, value: f64 },
    #[error("term explosion: {terms} terms exceeds cap {cap}")]
    TermExplosion { terms: usize, cap: usize },
    #[error("composition requires at least one inner function")]
    EmptyComposition,
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn poly_strategy(max_deg: usize) -> impl Strategy<Value = DensePolynomial> {
        (1..=max_deg, proptest::collection::vec(-10.0f64..10.0, max_deg + 1)).prop_map(
            |(deg, mut coeffs)| {
                coeffs.truncate(deg + 1);
                // force a nonzero leading coefficient
                if coeffs[deg].abs() < 0.5 {
                    coeffs[deg] += 1.0;
                }
                DensePolynomial::new(coeffs)
            },
        )
    }

    proptest! {
        /// deg(p * q) = deg p + deg q exactly for nonzero leading terms.
        #[test]
        fn product_degree_adds(p in poly_strategy(8), q in poly_strategy(8)) {
            let prod = p.mul(&q);
            prop_assert_eq!(
                prod.degree().unwrap(),
                p.degree().unwrap() + q.degree().unwrap()
            );
        }

        /// derivative() agrees with central finite differences on [-1, 1].
        #[test]
        fn derivative_matches_finite_differences(
            p in poly_strategy(8),
            x in -1.0f64..1.0,
        ) {
            let h = 1e-5;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            let an = p.derivative().eval(x);
            prop_assert!((fd - an).abs() <= 1e-6, "fd={fd} analytic={an}");
        }

        /// Symbolic add/mul agree pointwise with operand arithmetic on a
        /// 256-point grid, relative error <= 1e-10.
        #[test]
        fn rational_ops_pointwise(
            pn in poly_strategy(4),
            pq in poly_strategy(3),
            qn in poly_strategy(4),
            qq in poly_strategy(3),
        ) {
            // Denominators 1 + q^2 are positive everywhere by construction.
            let d1 = DensePolynomial::constant(1.0).add(&pq.mul(&pq));
            let d2 = DensePolynomial::constant(1.0).add(&qq.mul(&qq));
            let r1 = RationalFunction::new(pn, d1).unwrap();
            let r2 = RationalFunction::new(qn, d2).unwrap();
            let sum = r1.add(&r2);
            let prod = r1.mul(&r2);
            for k in 0..256 {
                let x = -1.0 + 2.0 * k as f64 / 255.0;
                let (a, b) = (r1.eval(x), r2.eval(x));
                let tol = |v: f64| 1e-10 * v.abs().max(1.0);
                prop_assert!((sum.eval(x) - (a + b)).abs() <= tol(a + b));
                prop_assert!((prod.eval(x) - a * b).abs() <= tol(a * b));
            }
        }

        /// Multivariate partial derivatives match finite differences.
        #[test]
        fn sparse_partial_matches_fd(
            coeffs in proptest::collection::vec((-5.0f64..5.0, 0u32..4, 0u32..4), 1..6),
            x in -1.0f64..1.0,
            y in -1.0f64..1.0,
        ) {
            let p = SparseMultiPolynomial::from_terms(
                2,
                coeffs.into_iter().map(|(c, e1, e2)| (vec![e1, e2], c)),
            ).unwrap();
            let h = 1e-5;
            let fd = (p.eval(&[x + h, y]) - p.eval(&[x - h, y])) / (2.0 * h);
            let an = p.partial_derivative(0).eval(&[x, y]);
            prop_assert!((fd - an).abs() <= 1e-6);
        }
    }
}
