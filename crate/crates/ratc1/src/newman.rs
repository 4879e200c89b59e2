//! Newman polynomials and the rational approximants of the sign, ReQU and
//! RePU functions built from them.
//!
//! The `n`-th Newman polynomial is `P_n(x) = prod_{i<n} (x + xi_n^i)` with
//! `xi_n = exp(-1/sqrt(n))`. The sign-like rational
//! `r_n = (P_n(x) - P_n(-x)) / (P_n(x) + P_n(-x))` approximates `sgn` so that
//! `sup | |x| - x r_n(x) | <= 3 exp(-sqrt(n))` on `[-1, 1]`, and
//! `R~_n(x) = (x^2 + x^2 r_n(x)) / 2` approximates `ReQU(x) = max(x,0)^2` in
//! the C¹ norm.
//!
//! Evaluation always uses the factored ratio form
//! `Q(x) = prod_i (xi^i - x)/(xi^i + x)`, `r_n = (1 - Q)/(1 + Q)`: every
//! factor has magnitude at most one on the domain, while the expanded
//! coefficient form underflows already for moderate `n`
//! (`P_n(0) = xi^{n(n-1)/2}`). [`NewmanBasis::as_rational`] exposes the
//! expanded coefficients for interop and inspection only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{DensePolynomial, PolyError, RationalFunction};

#[derive(Debug, Error)]
pub enum NewmanError {
    #[error("argument {x} outside the certified domain [-1, 1]")]
    DomainError { x: f64 },
    #[error("{0}")]
    ArgumentError(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Exact rectified quadratic unit `max(x, 0)^2`.
pub fn requ(x: f64) -> f64 {
    let p = x.max(0.0);
    p * p
}

/// Derivative of the exact ReQU.
pub fn requ_prime(x: f64) -> f64 {
    2.0 * x.max(0.0)
}

/// Exact rectified power unit `max(x, 0)^p`.
pub fn repu(p: u32, x: f64) -> f64 {
    x.max(0.0).powi(p as i32)
}

pub fn repu_prime(p: u32, x: f64) -> f64 {
    p as f64 * x.max(0.0).powi(p as i32 - 1)
}

/// Degree parameter, nodes and evaluators for one Newman construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NewmanBasis {
    n: usize,
    xi: f64,
    nodes: Vec<f64>,
}

impl NewmanBasis {
    pub fn new(n: usize) -> Result<Self, NewmanError> {
        if n == 0 {
            return Err(NewmanError::ArgumentError(
                "degree parameter n must be positive".into(),
            ));
        }
        let sqrt_n = (n as f64).sqrt();
        let xi = (-1.0 / sqrt_n).exp();
        // nodes[i] = exp(-i/sqrt(n)); computed through exp directly rather
        // than by repeated multiplication so nodes[n-1] is correctly rounded.
        let nodes = (0..n).map(|i| (-(i as f64) / sqrt_n).exp()).collect();
        Ok(NewmanBasis { n, xi, nodes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// The node powers `xi^i`, strictly decreasing from 1.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn check_domain(&self, x: f64) -> Result<(), NewmanError> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(NewmanError::DomainError { x });
        }
        Ok(())
    }

    /// `r_n(x)` via the factored ratio; odd, with `r_n(0) = 0`.
    pub fn eval_r(&self, x: f64) -> Result<f64, NewmanError> {
        self.check_domain(x)?;
        if x == 0.0 {
            return Ok(0.0);
        }
        let a = x.abs();
        let mut q = 1.0;
        for &node in &self.nodes {
            q *= (node - a) / (node + a);
        }
        Ok(x.signum() * (1.0 - q) / (1.0 + q))
    }

    /// `r_n'(x)` via the singularity-free rearrangement
    /// `4/(1+Q)^2 sum_i xi^i/(xi^i+x)^2 prod_{j != i} (xi^j-x)/(xi^j+x)`;
    /// even in `x` and finite at the endpoints. Products over `j != i` are
    /// formed from prefix/suffix tables so nodes hit exactly cost no
    /// special-casing.
    pub fn eval_r_prime(&self, x: f64) -> Result<f64, NewmanError> {
        self.check_domain(x)?;
        let a = x.abs();
        let n = self.n;
        let factors: Vec<f64> = self.nodes.iter().map(|&t| (t - a) / (t + a)).collect();
        let mut prefix = vec![1.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] * factors[i];
        }
        let mut suffix = vec![1.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * factors[i];
        }
        let q = prefix[n];
        let mut sum = 0.0;
        for i in 0..n {
            let t = self.nodes[i];
            sum += t / ((t + a) * (t + a)) * prefix[i] * suffix[i + 1];
        }
        Ok(4.0 / ((1.0 + q) * (1.0 + q)) * sum)
    }

    /// `R~_n(x) = (x^2 + x^2 r_n(x)) / 2`, the ReQU approximant.
    pub fn eval_requ(&self, x: f64) -> Result<f64, NewmanError> {
        let r = self.eval_r(x)?;
        Ok(0.5 * (x * x + x * x * r))
    }

    /// `R~_n'(x) = x (1 + r_n(x)) + x^2 r_n'(x) / 2`.
    pub fn eval_requ_prime(&self, x: f64) -> Result<f64, NewmanError> {
        let r = self.eval_r(x)?;
        let rp = self.eval_r_prime(x)?;
        Ok(x * (1.0 + r) + 0.5 * x * x * rp)
    }

    /// RePU_p approximant `(x^p + x^p r_n(x)) / 2` for `p >= 3`.
    pub fn eval_repu(&self, p: u32, x: f64) -> Result<f64, NewmanError> {
        if p < 3 {
            return Err(NewmanError::ArgumentError(format!(
                "RePU order p must be >= 3, got {p}"
            )));
        }
        let r = self.eval_r(x)?;
        Ok(0.5 * (x.powi(p as i32) + x.powi(p as i32) * r))
    }

    pub fn eval_repu_prime(&self, p: u32, x: f64) -> Result<f64, NewmanError> {
        if p < 3 {
            return Err(NewmanError::ArgumentError(format!(
                "RePU order p must be >= 3, got {p}"
            )));
        }
        let r = self.eval_r(x)?;
        let rp = self.eval_r_prime(x)?;
        Ok(0.5 * (p as f64 * x.powi(p as i32 - 1) * (1.0 + r) + x.powi(p as i32) * rp))
    }

    /// Uniform grid on `[-1, 1]` with the power set `{±xi^i: i <= 2n}`
    /// adjoined. Error extrema cluster around the nodes, and the largest
    /// one sits near `xi^{1.3 n}`, below the smallest node, where uniform
    /// grids undersample; continuing the powers to `2n` resolves it at
    /// every n.
    pub fn certification_grid(&self, uniform_points: usize) -> Vec<f64> {
        let m = uniform_points.max(2);
        let mut grid: Vec<f64> = (0..m)
            .map(|k| -1.0 + 2.0 * k as f64 / (m - 1) as f64)
            .collect();
        let sqrt_n = (self.n as f64).sqrt();
        for i in 0..=2 * self.n {
            let t = (-(i as f64) / sqrt_n).exp();
            grid.push(t);
            grid.push(-t);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }

    /// Expands `P_n(x) ± P_n(-x)` into dense coefficients and returns the
    /// explicit rational for the requested variant. Capped at `n <= 30`;
    /// a conditioning warning is attached for `n > 20`.
    pub fn as_rational(&self, variant: Variant) -> Result<ExpandedRational, NewmanError> {
        if self.n > 30 {
            return Err(NewmanError::ArgumentError(format!(
                "coefficient expansion capped at n <= 30, got {}",
                self.n
            )));
        }
        variant.validate()?;
        let mut p = DensePolynomial::constant(1.0);
        for &node in &self.nodes {
            p = p.mul(&DensePolynomial::new(vec![node, 1.0]));
        }
        let p_neg = p.reflect();
        let den = p.add(&p_neg);
        let num = match variant {
            Variant::SignLike => p.add(&p_neg.scale(-1.0)),
            Variant::SignedSquare => DensePolynomial::monomial(1.0, 2).mul(&p.add(&p_neg.scale(-1.0))),
            // (x^2 + x^2 r)/2 = x^2 P / (P + P_neg)
            Variant::Requ => DensePolynomial::monomial(1.0, 2).mul(&p),
            Variant::Repu(k) => DensePolynomial::monomial(1.0, k as usize).mul(&p),
        };
        let rational = RationalFunction::new(num, den)?;
        let conditioning_warning = (self.n > 20).then(|| {
            format!(
                "coefficient expansion at n = {} loses digits; prefer factored evaluation",
                self.n
            )
        });
        Ok(ExpandedRational {
            rational,
            conditioning_warning,
        })
    }
}

/// Which of the constructed rationals to evaluate or expand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// `r_n`, the sign approximant.
    SignLike,
    /// `R_n = x^2 r_n`, approximating `x^2 sgn(x)`.
    SignedSquare,
    /// `R~_n = (x^2 + x^2 r_n)/2`, approximating ReQU.
    Requ,
    /// `(x^p + x^p r_n)/2` for `p >= 3`, approximating RePU_p.
    Repu(u32),
}

impl Variant {
    fn validate(self) -> Result<(), NewmanError> {
        if let Variant::Repu(p) = self {
            if p < 3 {
                return Err(NewmanError::ArgumentError(format!(
                    "RePU order p must be >= 3, got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Expanded-coefficient rational plus the conditioning caveat.
#[derive(Clone, Debug)]
pub struct ExpandedRational {
    pub rational: RationalFunction,
    pub conditioning_warning: Option<String>,
}

/// A Newman basis specialized to one variant, with the paper-facing
/// bookkeeping attached.
#[derive(Clone, Debug)]
pub struct ReQUApproximant {
    basis: NewmanBasis,
    variant: Variant,
}

impl ReQUApproximant {
    pub fn new(basis: NewmanBasis, variant: Variant) -> Result<Self, NewmanError> {
        variant.validate()?;
        Ok(ReQUApproximant { basis, variant })
    }

    pub fn basis(&self) -> &NewmanBasis {
        &self.basis
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Type bookkeeping `(n+1, n-1)` reported for `R_n`.
    pub fn reported_type(&self) -> (usize, usize) {
        (self.basis.n + 1, self.basis.n - 1)
    }

    /// Certified C⁰ ceiling `3 exp(-sqrt(n))`.
    pub fn error_bound(&self) -> f64 {
        3.0 * (-(self.basis.n as f64).sqrt()).exp()
    }

    pub fn eval(&self, x: f64) -> Result<f64, NewmanError> {
        match self.variant {
            Variant::SignLike => self.basis.eval_r(x),
            Variant::SignedSquare => Ok(x * x * self.basis.eval_r(x)?),
            Variant::Requ => self.basis.eval_requ(x),
            Variant::Repu(p) => self.basis.eval_repu(p, x),
        }
    }

    pub fn eval_prime(&self, x: f64) -> Result<f64, NewmanError> {
        match self.variant {
            Variant::SignLike => self.basis.eval_r_prime(x),
            Variant::SignedSquare => {
                let r = self.basis.eval_r(x)?;
                let rp = self.basis.eval_r_prime(x)?;
                Ok(2.0 * x * r + x * x * rp)
            }
            Variant::Requ => self.basis.eval_requ_prime(x),
            Variant::Repu(p) => self.basis.eval_repu_prime(p, x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn r1_is_the_identity() {
        let b = NewmanBasis::new(1).unwrap();
        for x in grid(1001) {
            assert!((b.eval_r(x).unwrap() - x).abs() <= 1e-14);
        }
    }

    #[test]
    fn r_is_one_at_one() {
        for n in [1, 2, 5, 16, 40, 64] {
            let b = NewmanBasis::new(n).unwrap();
            assert_eq!(b.eval_r(1.0).unwrap(), 1.0, "n={n}");
            assert_eq!(b.eval_r(-1.0).unwrap(), -1.0, "n={n}");
        }
    }

    #[test]
    fn r2_closed_form() {
        // P_2(x) = (x+1)(x+xi) gives r_2(x) = (1+xi) x / (x^2 + xi).
        let b = NewmanBasis::new(2).unwrap();
        let xi = (-1.0 / 2f64.sqrt()).exp();
        let expect = (1.0 + xi) * 0.5 / (0.25 + xi);
        assert!((b.eval_r(0.5).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 1.004664).abs() < 1e-6);
    }

    #[test]
    fn r_prime_n1_is_constant_one() {
        let b = NewmanBasis::new(1).unwrap();
        for x in grid(101) {
            assert!((b.eval_r_prime(x).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn r2_prime_closed_form_at_zero() {
        // d/dx [(1+xi) x / (x^2 + xi)] at 0 is (1+xi)/xi.
        let b = NewmanBasis::new(2).unwrap();
        let xi = (-1.0 / 2f64.sqrt()).exp();
        assert!((b.eval_r_prime(0.0).unwrap() - (1.0 + xi) / xi).abs() < 1e-13);
    }

    #[test]
    fn r_prime_matches_finite_differences() {
        // Step 1e-6 central differences. r' grows like sqrt(n) exp(sqrt(n))
        // near 0 and its curvature outruns the absolute 1e-5 budget past
        // n ~ 16, so larger n are held to the same tolerance relative to
        // the derivative magnitude.
        let h = 1e-6;
        for n in [1usize, 2, 3, 5, 8, 13, 16, 25, 36] {
            let b = NewmanBasis::new(n).unwrap();
            for x in grid(401) {
                if x.abs() > 1.0 - 1e-4 {
                    continue;
                }
                let fd = (b.eval_r(x + h).unwrap() - b.eval_r(x - h).unwrap()) / (2.0 * h);
                let an = b.eval_r_prime(x).unwrap();
                let tol = if n <= 16 { 1e-5 } else { 1e-5 * an.abs().max(1.0) };
                assert!((fd - an).abs() <= tol, "n={n} x={x} fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn r_prime_matches_expanded_rational_derivative() {
        // Independent algebraic route: expand to coefficients, differentiate
        // the dense polynomials, and compare on a grid.
        for n in [2, 3, 5, 8, 12] {
            let b = NewmanBasis::new(n).unwrap();
            let exp = b.as_rational(Variant::SignLike).unwrap().rational;
            for x in grid(257) {
                let an = b.eval_r_prime(x).unwrap();
                let alg = exp.eval_derivative(x);
                assert!((an - alg).abs() <= 1e-9 * alg.abs().max(1.0), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn odd_symmetry_is_exact() {
        let b = NewmanBasis::new(7).unwrap();
        for x in grid(201) {
            assert_eq!(b.eval_r(-x).unwrap(), -b.eval_r(x).unwrap());
            assert_eq!(b.eval_r_prime(-x).unwrap(), b.eval_r_prime(x).unwrap());
        }
    }

    #[test]
    fn node_invariants() {
        for n in [1, 2, 9, 30, 64] {
            let b = NewmanBasis::new(n).unwrap();
            let nodes = b.nodes();
            assert_eq!(nodes[0], 1.0);
            for i in 0..n - 1 {
                assert!(nodes[i + 1] < nodes[i]);
                // Lemma-style gap bound |xi^{i+1} - xi^i| <= xi^i / sqrt(n)
                assert!(nodes[i] - nodes[i + 1] <= nodes[i] / (n as f64).sqrt());
            }
            let last = (-((n - 1) as f64) / (n as f64).sqrt()).exp();
            assert!((nodes[n - 1] - last).abs() <= 1e-14);
        }
    }

    #[test]
    fn node_density_on_grid() {
        // For each x in [xi^n, 1], some node is within n^{-1/2}.
        for n in [4, 16, 64] {
            let b = NewmanBasis::new(n).unwrap();
            let lo = b.xi().powi(n as i32);
            let tol = 1.0 / (n as f64).sqrt();
            for k in 0..10_000 {
                let x = lo + (1.0 - lo) * k as f64 / 9_999.0;
                let best = b
                    .nodes()
                    .iter()
                    .map(|&t| (x - t).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= tol, "n={n} x={x} best={best}");
            }
        }
    }

    #[test]
    fn positivity_on_positive_axis() {
        let b = NewmanBasis::new(12).unwrap();
        for k in 1..=1000 {
            let x = k as f64 / 1000.0;
            assert!(b.eval_r(x).unwrap() > 0.0, "x={x}");
        }
    }

    #[test]
    fn domain_error_outside_interval() {
        let b = NewmanBasis::new(4).unwrap();
        assert!(matches!(
            b.eval_r(1.0 + 1e-9),
            Err(NewmanError::DomainError { .. })
        ));
        assert!(matches!(
            b.eval_r_prime(-1.1),
            Err(NewmanError::DomainError { .. })
        ));
    }

    #[test]
    fn requ_approx_endpoints() {
        for n in [2, 16] {
            let b = NewmanBasis::new(n).unwrap();
            assert_eq!(b.eval_requ(0.0).unwrap(), 0.0);
            // r_n(1) = 1 forces R~_n(1) = 1 = ReQU(1).
            assert!((b.eval_requ(1.0).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn requ_approx_sup_error_n16() {
        let b = NewmanBasis::new(16).unwrap();
        let mut sup: f64 = 0.0;
        for x in b.certification_grid(10_000) {
            sup = sup.max((requ(x) - b.eval_requ(x).unwrap()).abs());
        }
        assert!(sup <= 3.0 * (-4.0f64).exp(), "sup={sup}");
    }

    #[test]
    fn repu3_endpoints_and_sup_error() {
        let b = NewmanBasis::new(25).unwrap();
        assert_eq!(b.eval_repu(3, 0.0).unwrap(), 0.0);
        assert!((b.eval_repu(3, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let mut sup: f64 = 0.0;
        for x in b.certification_grid(10_000) {
            sup = sup.max((repu(3, x) - b.eval_repu(3, x).unwrap()).abs());
        }
        assert!(sup <= 3.0 * (-5.0f64).exp(), "sup={sup}");
    }

    #[test]
    fn repu_rejects_small_p() {
        let b = NewmanBasis::new(4).unwrap();
        assert!(matches!(
            b.eval_repu(2, 0.5),
            Err(NewmanError::ArgumentError(_))
        ));
    }

    #[test]
    fn as_rational_n1_signed_square() {
        let b = NewmanBasis::new(1).unwrap();
        let e = b.as_rational(Variant::SignedSquare).unwrap();
        assert!(e.conditioning_warning.is_none());
        assert_eq!(e.rational.numerator().coeffs(), &[0.0, 0.0, 0.0, 2.0]);
        assert_eq!(e.rational.denominator().coeffs(), &[2.0]);
    }

    #[test]
    fn as_rational_n2_sign_like() {
        let b = NewmanBasis::new(2).unwrap();
        let e = b.as_rational(Variant::SignLike).unwrap().rational;
        let xi = (-1.0 / 2f64.sqrt()).exp();
        let num = e.numerator().coeffs();
        let den = e.denominator().coeffs();
        assert_eq!(num.len(), 2);
        assert!((num[1] - 2.0 * (1.0 + xi)).abs() < 1e-15);
        assert_eq!(den.len(), 3);
        assert!((den[0] - 2.0 * xi).abs() < 1e-15);
        assert_eq!(den[1], 0.0);
        assert!((den[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn as_rational_matches_product_form() {
        for n in 1..=12 {
            let b = NewmanBasis::new(n).unwrap();
            let e = b.as_rational(Variant::SignLike).unwrap().rational;
            for k in 0..512 {
                let x = -1.0 + 2.0 * k as f64 / 511.0;
                let product = b.eval_r(x).unwrap();
                let expanded = e.eval(x);
                assert!(
                    (product - expanded).abs() <= 1e-8,
                    "n={n} x={x} product={product} expanded={expanded}"
                );
            }
        }
    }

    #[test]
    fn expanded_extended_precision_cross_check() {
        // Double-double Horner agrees with factored evaluation more tightly
        // than plain Horner at moderate n.
        let b = NewmanBasis::new(16).unwrap();
        let e = b.as_rational(Variant::SignLike).unwrap().rational;
        for k in 0..128 {
            let x = -1.0 + 2.0 * k as f64 / 127.0;
            let num = e.numerator().eval_extended(x);
            let den = e.denominator().eval_extended(x);
            assert!((num / den - b.eval_r(x).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn denominator_structure_even_positive() {
        for n in 1..=20 {
            let b = NewmanBasis::new(n).unwrap();
            let e = b.as_rational(Variant::SignLike).unwrap().rational;
            for (k, &c) in e.denominator().coeffs().iter().enumerate() {
                if k % 2 == 1 {
                    assert_eq!(c, 0.0, "n={n} odd coeff {k}");
                } else {
                    assert!(c > 0.0, "n={n} even coeff {k} = {c}");
                }
            }
        }
    }

    #[test]
    fn conditioning_warning_threshold() {
        assert!(NewmanBasis::new(20)
            .unwrap()
            .as_rational(Variant::Requ)
            .unwrap()
            .conditioning_warning
            .is_none());
        assert!(NewmanBasis::new(21)
            .unwrap()
            .as_rational(Variant::Requ)
            .unwrap()
            .conditioning_warning
            .is_some());
        assert!(NewmanBasis::new(31).unwrap().as_rational(Variant::Requ).is_err());
    }

    #[test]
    fn approximant_bookkeeping() {
        let a = ReQUApproximant::new(NewmanBasis::new(9).unwrap(), Variant::SignedSquare).unwrap();
        assert_eq!(a.reported_type(), (10, 8));
        assert!((a.error_bound() - 3.0 * (-3.0f64).exp()).abs() < 1e-15);
        assert!(ReQUApproximant::new(NewmanBasis::new(9).unwrap(), Variant::Repu(2)).is_err());
    }
}
