//! Clamped knot vectors, order-2 B-splines written as ReQU combinations,
//! and the order-raising recursion up to order `q`.
//!
//! Order `m` here means piecewise polynomial degree `m` (the order-2 splines
//! are the ReQU combinations below). The family of order `m` has
//! `2q + N - m` members, indexed 1-based to match the construction; the
//! knot vector is stored 0-based with `knot(j)` translating from the
//! 1-based index.

mod tensor;

pub use tensor::{fit_spline, FitOptions, SplineJson, TensorSpline};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::newman::{requ, requ_prime, NewmanBasis, NewmanError};

#[derive(Debug, Error)]
pub enum SplineError {
    #[error("{0}")]
    ArgumentError(String),
    #[error("basis index {j} out of range 1..={max}")]
    IndexError { j: usize, max: usize },
    #[error("point {x} outside [0, 1]")]
    DomainError { x: f64 },
    #[error("problem size {required} exceeds cap {cap}")]
    SizeCapExceeded { required: usize, cap: usize },
    #[error("least-squares solve failed or residual {residual} above tolerance")]
    SingularFit { residual: f64 },
    #[error(transparent)]
    Newman(#[from] NewmanError),
}

/// Clamped uniform knot vector: `q+1` zeros, interior knots `j/N`, `q+1`
/// ones; `2q + N + 1` knots in total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    q: usize,
    n: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(q: usize, n: usize) -> Result<Self, SplineError> {
        if q < 2 {
            return Err(SplineError::ArgumentError(format!(
                "spline order q must be >= 2, got {q}"
            )));
        }
        if n < 2 {
            return Err(SplineError::ArgumentError(format!(
                "resolution N must be >= 2, got {n}"
            )));
        }
        let mut knots = Vec::with_capacity(2 * q + n + 1);
        knots.extend(std::iter::repeat_n(0.0, q + 1));
        knots.extend((1..n).map(|j| j as f64 / n as f64));
        knots.extend(std::iter::repeat_n(1.0, q + 1));
        debug_assert_eq!(knots.len(), 2 * q + n + 1);
        Ok(KnotVector { q, n, knots })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.knots
    }

    /// Knot `a_j` in the 1-based indexing of the construction.
    pub fn knot(&self, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.knots.len(), "knot index {j} out of range");
        self.knots[j - 1]
    }

    /// Number of order-`m` basis functions.
    pub fn basis_count(&self, m: usize) -> usize {
        2 * self.q + self.n - m
    }

    /// Normalization gap `a_{j+q+1} - a_j` from the tensor representation.
    pub fn gap(&self, j: usize) -> f64 {
        self.knot(j + self.q + 1) - self.knot(j)
    }
}

/// Which unit sits behind every ReQU occurrence: the exact one, or the
/// Newman approximant `R~_M` of degree parameter `M`.
#[derive(Clone, Debug)]
pub enum Activation {
    Exact,
    Newman(NewmanBasis),
}

impl Activation {
    pub fn newman(m: usize) -> Result<Self, SplineError> {
        Ok(Activation::Newman(NewmanBasis::new(m)?))
    }

    /// Degree parameter `M`, or `None` for the exact unit.
    pub fn degree_param(&self) -> Option<usize> {
        match self {
            Activation::Exact => None,
            Activation::Newman(b) => Some(b.n()),
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64, SplineError> {
        match self {
            Activation::Exact => Ok(requ(u)),
            Activation::Newman(b) => Ok(b.eval_requ(u)?),
        }
    }

    pub fn eval_prime(&self, u: f64) -> Result<f64, SplineError> {
        match self {
            Activation::Exact => Ok(requ_prime(u)),
            Activation::Newman(b) => Ok(b.eval_requ_prime(u)?),
        }
    }
}

/// Whether a term reads `ReQU(z - shift)` or `ReQU(shift - z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    ZMinusS,
    SMinusZ,
}

#[derive(Clone, Debug)]
pub struct QuadTerm {
    pub coeff: f64,
    pub shift: f64,
    pub orientation: Orientation,
}

impl QuadTerm {
    fn argument(&self, z: f64) -> f64 {
        match self.orientation {
            Orientation::ZMinusS => z - self.shift,
            Orientation::SMinusZ => self.shift - z,
        }
    }

    fn sign(&self) -> f64 {
        match self.orientation {
            Orientation::ZMinusS => 1.0,
            Orientation::SMinusZ => -1.0,
        }
    }
}

/// Order-2 B-spline `B_j^{2,N}` as a ReQU combination. The empty term list
/// is the zero spline.
#[derive(Clone, Debug)]
pub struct QuadBSpline {
    pub j: usize,
    pub terms: Vec<QuadTerm>,
}

impl QuadBSpline {
    /// Term table for index `j` (1-based). The two interior-boundary pairs
    /// use the stated coefficient patterns; the right-boundary spline
    /// `B_{q+N-1}` uses the mirror image of `B_q` (coefficients 1, -4, 3 in
    /// the arguments `z-(N-2)/N`, `z-(N-1)/N`, `z-1`), which is the member
    /// of the clamped-knot family; see `paper_verbatim_terms` for the
    /// alternative listing kept for diagnostics.
    pub fn for_index(knots: &KnotVector, j: usize) -> Result<Self, SplineError> {
        let (q, n) = (knots.q(), knots.resolution());
        let max = knots.basis_count(2);
        if j < 1 || j > max {
            return Err(SplineError::IndexError { j, max });
        }
        let nf = n as f64;
        let c = nf * nf * nf;
        let term = |coeff: f64, shift: f64, orientation: Orientation| QuadTerm {
            coeff,
            shift,
            orientation,
        };
        let terms = if (q + 1..=q + n - 2).contains(&j) {
            let base = (j - q - 1) as f64 / nf;
            vec![
                term(c / 6.0, base, Orientation::ZMinusS),
                term(-3.0 * c / 6.0, base + 1.0 / nf, Orientation::ZMinusS),
                term(3.0 * c / 6.0, base + 2.0 / nf, Orientation::ZMinusS),
                term(-c / 6.0, base + 3.0 / nf, Orientation::ZMinusS),
            ]
        } else if j + 1 == q {
            vec![term(c, 1.0 / nf, Orientation::SMinusZ)]
        } else if j == q {
            vec![
                term(c / 4.0, 2.0 / nf, Orientation::SMinusZ),
                term(-c, 1.0 / nf, Orientation::SMinusZ),
                term(3.0 * c / 4.0, 0.0, Orientation::SMinusZ),
            ]
        } else if j == q + n - 1 {
            vec![
                term(c / 4.0, (n - 2) as f64 / nf, Orientation::ZMinusS),
                term(-c, (n - 1) as f64 / nf, Orientation::ZMinusS),
                term(3.0 * c / 4.0, 1.0, Orientation::ZMinusS),
            ]
        } else if j == q + n {
            vec![term(c, (n - 1) as f64 / nf, Orientation::ZMinusS)]
        } else {
            Vec::new()
        };
        Ok(QuadBSpline { j, terms })
    }

    /// The literal right-boundary listing with coefficients (1, -2, -3).
    /// Not part of the evaluation path; the boundary diagnostic compares it
    /// against the mirror-symmetric table used above.
    pub fn paper_verbatim_terms(knots: &KnotVector, j: usize) -> Result<Self, SplineError> {
        let (q, n) = (knots.q(), knots.resolution());
        if j != q + n - 1 {
            return Self::for_index(knots, j);
        }
        let nf = n as f64;
        let c = nf * nf * nf;
        Ok(QuadBSpline {
            j,
            terms: vec![
                QuadTerm {
                    coeff: c / 4.0,
                    shift: (n - 2) as f64 / nf,
                    orientation: Orientation::ZMinusS,
                },
                QuadTerm {
                    coeff: -c / 2.0,
                    shift: (n - 1) as f64 / nf,
                    orientation: Orientation::ZMinusS,
                },
                QuadTerm {
                    coeff: -3.0 * c / 4.0,
                    shift: 1.0,
                    orientation: Orientation::ZMinusS,
                },
            ],
        })
    }

    pub fn eval(&self, z: f64, activation: &Activation) -> Result<f64, SplineError> {
        let mut v = 0.0;
        for t in &self.terms {
            v += t.coeff * activation.eval(t.argument(z))?;
        }
        Ok(v)
    }

    pub fn eval_with_prime(&self, z: f64, activation: &Activation) -> Result<(f64, f64), SplineError> {
        let mut v = 0.0;
        let mut dv = 0.0;
        for t in &self.terms {
            let u = t.argument(z);
            v += t.coeff * activation.eval(u)?;
            dv += t.coeff * activation.eval_prime(u)? * t.sign();
        }
        Ok((v, dv))
    }
}

/// Evaluator for all orders 2..=q over one knot vector and activation.
#[derive(Clone, Debug)]
pub struct BSplineBasis {
    knots: KnotVector,
    activation: Activation,
    quads: Vec<QuadBSpline>,
}

impl BSplineBasis {
    pub fn new(knots: KnotVector, activation: Activation) -> Result<Self, SplineError> {
        let quads = (1..=knots.basis_count(2))
            .map(|j| QuadBSpline::for_index(&knots, j))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BSplineBasis {
            knots,
            activation,
            quads,
        })
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn with_activation(&self, activation: Activation) -> Result<Self, SplineError> {
        Self::new(self.knots.clone(), activation)
    }

    fn check_point(&self, z: f64) -> Result<(), SplineError> {
        if !(0.0..=1.0).contains(&z) {
            return Err(SplineError::DomainError { x: z });
        }
        Ok(())
    }

    /// Order-2 value, five-case table.
    pub fn eval_b2(&self, j: usize, z: f64) -> Result<f64, SplineError> {
        self.check_point(z)?;
        let max = self.knots.basis_count(2);
        if j < 1 || j > max {
            return Err(SplineError::IndexError { j, max });
        }
        self.quads[j - 1].eval(z, &self.activation)
    }

    /// Values and derivatives of the whole order-`m` family at `z`, raised
    /// from order 2 in one memoized sweep: entry `j-1` is `B_j^{m,N}(z)`.
    pub fn eval_all(&self, m: usize, z: f64) -> Result<Vec<(f64, f64)>, SplineError> {
        self.check_point(z)?;
        let q = self.knots.q();
        if m < 2 || m > q {
            return Err(SplineError::ArgumentError(format!(
                "order m must satisfy 2 <= m <= q = {q}, got {m}"
            )));
        }
        let mut level: Vec<(f64, f64)> = self
            .quads
            .iter()
            .map(|s| s.eval_with_prime(z, &self.activation))
            .collect::<Result<Vec<_>, _>>()?;
        for order in 3..=m {
            let count = self.knots.basis_count(order);
            let mut next = Vec::with_capacity(count);
            for j in 1..=count {
                let a_lo = self.knots.knot(j);
                let a_hi = self.knots.knot(j + order + 1);
                if a_lo < a_hi {
                    let inv = 1.0 / (a_hi - a_lo);
                    let (v0, d0) = level[j - 1];
                    let (v1, d1) = level[j];
                    let v = inv * ((z - a_lo) * v0 + (a_hi - z) * v1);
                    let d = inv * (v0 + (z - a_lo) * d0 - v1 + (a_hi - z) * d1);
                    next.push((v, d));
                } else {
                    next.push((0.0, 0.0));
                }
            }
            level = next;
        }
        Ok(level)
    }

    pub fn eval_bm(&self, j: usize, m: usize, z: f64) -> Result<f64, SplineError> {
        Ok(self.lookup(j, m, z)?.0)
    }

    pub fn eval_bm_prime(&self, j: usize, m: usize, z: f64) -> Result<f64, SplineError> {
        Ok(self.lookup(j, m, z)?.1)
    }

    fn lookup(&self, j: usize, m: usize, z: f64) -> Result<(f64, f64), SplineError> {
        let all = self.eval_all(m, z)?;
        if j < 1 || j > all.len() {
            return Err(SplineError::IndexError { j, max: all.len() });
        }
        Ok(all[j - 1])
    }
}

/// Continuity and boundary-formula report for one `(q, N)` pair.
#[derive(Clone, Debug)]
pub struct BoundaryDiagnostic {
    /// Largest jump of any order-2 spline across a knot (1e-9 step probes).
    pub max_jump: f64,
    /// Sup difference between the verbatim right-boundary listing and the
    /// mirror-symmetric table actually used.
    pub verbatim_deviation: f64,
    /// Knot locations where a jump exceeded 1e-8, with the offending index.
    pub jumps: Vec<(usize, f64, f64)>,
}

/// Evaluates continuity of every order-2 spline across the interior knots
/// and measures how far the verbatim right-boundary listing deviates from
/// the symmetric one. Reported, not asserted: the caller decides.
pub fn boundary_formula_diagnostic(q: usize, n: usize) -> Result<BoundaryDiagnostic, SplineError> {
    let knots = KnotVector::new(q, n)?;
    let act = Activation::Exact;
    // Small enough that slope effects (up to 5 N^2 * 2 eps) stay below the
    // 1e-8 reporting threshold; genuine jumps would be O(N).
    let eps = 1e-12;
    let mut max_jump: f64 = 0.0;
    let mut jumps = Vec::new();
    for j in 1..=knots.basis_count(2) {
        let spline = QuadBSpline::for_index(&knots, j)?;
        for k in 1..n {
            let a = k as f64 / n as f64;
            let left = spline.eval(a - eps, &act)?;
            let right = spline.eval(a + eps, &act)?;
            let jump = (left - right).abs();
            max_jump = max_jump.max(jump);
            if jump > 1e-8 {
                jumps.push((j, a, jump));
            }
        }
    }
    let j_right = q + n - 1;
    let used = QuadBSpline::for_index(&knots, j_right)?;
    let verbatim = QuadBSpline::paper_verbatim_terms(&knots, j_right)?;
    let mut dev: f64 = 0.0;
    for k in 0..=2000 {
        let z = k as f64 / 2000.0;
        dev = dev.max((used.eval(z, &act)? - verbatim.eval(z, &act)?).abs());
    }
    Ok(BoundaryDiagnostic {
        max_jump,
        verbatim_deviation: dev,
        jumps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_vector_q3_n4() {
        let k = KnotVector::new(3, 4).unwrap();
        assert_eq!(
            k.as_slice(),
            &[0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(k.len(), 2 * 3 + 4 + 1);
    }

    #[test]
    fn knot_vector_q2_n2() {
        let k = KnotVector::new(2, 2).unwrap();
        assert_eq!(k.as_slice(), &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn knot_vector_length_q5_n16() {
        let k = KnotVector::new(5, 16).unwrap();
        assert_eq!(k.len(), 27);
        for w in k.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn knot_vector_rejects_bad_arguments() {
        assert!(KnotVector::new(1, 4).is_err());
        assert!(KnotVector::new(3, 1).is_err());
    }

    #[test]
    fn boundary_values() {
        // B_{q-1}(0) = N^3 ReQU(1/N) = N, and mirrored at the right end.
        for (q, n) in [(3usize, 4usize), (3, 8), (4, 8)] {
            let basis = BSplineBasis::new(KnotVector::new(q, n).unwrap(), Activation::Exact).unwrap();
            let nf = n as f64;
            assert!((basis.eval_b2(q - 1, 0.0).unwrap() - nf).abs() < 1e-12);
            assert!((basis.eval_b2(q + n, 1.0).unwrap() - nf).abs() < 1e-12);
            // B_q(0) = N^3/4 (ReQU(2/N) - 4 ReQU(1/N)) = 0
            assert!(basis.eval_b2(q, 0.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn zero_index_ranges() {
        let basis = BSplineBasis::new(KnotVector::new(4, 4).unwrap(), Activation::Exact).unwrap();
        for z in [0.0, 0.3, 0.9] {
            // 1 <= j <= q-2
            for j in 1..=2 {
                assert_eq!(basis.eval_b2(j, z).unwrap(), 0.0);
            }
            // q+N+1 <= j <= 2q+N-2
            for j in 9..=10 {
                assert_eq!(basis.eval_b2(j, z).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn index_errors() {
        let basis = BSplineBasis::new(KnotVector::new(3, 4).unwrap(), Activation::Exact).unwrap();
        assert!(matches!(
            basis.eval_b2(0, 0.5),
            Err(SplineError::IndexError { .. })
        ));
        assert!(matches!(
            basis.eval_b2(9, 0.5),
            Err(SplineError::IndexError { .. })
        ));
        assert!(matches!(
            basis.eval_bm(1, 5, 0.5),
            Err(SplineError::ArgumentError(_))
        ));
    }

    #[test]
    fn recursion_zero_when_knots_coincide() {
        // q=4, m=3, j=1: a_1 = a_5 = 0 forces the zero spline.
        let basis = BSplineBasis::new(KnotVector::new(4, 4).unwrap(), Activation::Exact).unwrap();
        for z in [0.0, 0.2, 0.7, 1.0] {
            assert_eq!(basis.eval_bm(1, 3, z).unwrap(), 0.0);
        }
    }

    #[test]
    fn partition_of_unity_at_top_order() {
        for (q, n) in [(3usize, 4usize), (3, 8), (4, 8)] {
            let knots = KnotVector::new(q, n).unwrap();
            let basis = BSplineBasis::new(knots.clone(), Activation::Exact).unwrap();
            for k in 0..=500 {
                let z = k as f64 / 500.0;
                let vals = basis.eval_all(q, z).unwrap();
                let sum: f64 = (1..=q + n).map(|j| knots.gap(j) * vals[j - 1].0).sum();
                assert!((sum - 1.0).abs() < 1e-12, "q={q} N={n} z={z} sum={sum}");
            }
        }
    }

    #[test]
    fn sup_bounds_smoke() {
        let (q, n) = (3usize, 8usize);
        let basis = BSplineBasis::new(KnotVector::new(q, n).unwrap(), Activation::Exact).unwrap();
        let nf = n as f64;
        let mut sup2: f64 = 0.0;
        let mut sup2c1: f64 = 0.0;
        let mut supq: f64 = 0.0;
        for k in 0..=2000 {
            let z = k as f64 / 2000.0;
            for j in 1..=basis.knots().basis_count(2) {
                let (v, d) = basis.quads[j - 1].eval_with_prime(z, &Activation::Exact).unwrap();
                sup2 = sup2.max(v.abs());
                sup2c1 = sup2c1.max(v.abs() + d.abs());
            }
            for (v, _) in basis.eval_all(q, z).unwrap() {
                supq = supq.max(v.abs());
            }
        }
        assert!(sup2 <= nf * (1.0 + 1e-12));
        assert!(sup2c1 <= 5.0 * nf * nf);
        assert!(supq <= 2f64.powi(q as i32 - 2) * nf * (1.0 + 1e-12));
    }

    #[test]
    fn derivative_matches_finite_differences_away_from_knots() {
        let (q, n) = (4usize, 8usize);
        let basis = BSplineBasis::new(KnotVector::new(q, n).unwrap(), Activation::Exact).unwrap();
        let h = 1e-6;
        for k in 0..400 {
            let z = 0.0025 + 0.995 * k as f64 / 399.0;
            let near_knot = (0..=n).any(|i| (z - i as f64 / n as f64).abs() < 1e-3);
            if near_knot {
                continue;
            }
            for m in 2..=q {
                let lo = basis.eval_all(m, z - h).unwrap();
                let hi = basis.eval_all(m, z + h).unwrap();
                let at = basis.eval_all(m, z).unwrap();
                for j in 0..at.len() {
                    let fd = (hi[j].0 - lo[j].0) / (2.0 * h);
                    assert!(
                        (fd - at[j].1).abs() <= 1e-5 * at[j].1.abs().max(1.0),
                        "m={m} j={} z={z}",
                        j + 1
                    );
                }
            }
        }
    }

    #[test]
    fn substituted_basis_converges_in_m() {
        let (q, n) = (3usize, 4usize);
        let knots = KnotVector::new(q, n).unwrap();
        let exact = BSplineBasis::new(knots.clone(), Activation::Exact).unwrap();
        let mut prev = f64::INFINITY;
        let mut last = f64::NAN;
        for m in [8usize, 16, 32, 64] {
            let sub = BSplineBasis::new(knots.clone(), Activation::newman(m).unwrap()).unwrap();
            let mut sup: f64 = 0.0;
            for k in 0..=2000 {
                let z = k as f64 / 2000.0;
                for j in 1..=knots.basis_count(2) {
                    let a = exact.eval_b2(j, z).unwrap();
                    let b = sub.eval_b2(j, z).unwrap();
                    sup = sup.max((a - b).abs());
                }
            }
            assert!(sup <= prev, "M={m}: {sup} > {prev}");
            prev = sup;
            last = sup;
        }
        assert!(last <= 1e-6 * (n as f64).powi(3), "M=64 error {last}");
    }

    #[test]
    fn boundary_diagnostic_reports_no_jumps_and_known_deviation() {
        for (q, n) in [(3usize, 4usize), (4, 8)] {
            let d = boundary_formula_diagnostic(q, n).unwrap();
            assert!(d.max_jump <= 1e-8, "q={q} N={n} jump={}", d.max_jump);
            assert!(d.jumps.is_empty());
            // The verbatim listing differs by N^3/2 ReQU(z-(N-1)/N), whose
            // sup on [0,1] is N/2 at z=1.
            assert!(
                (d.verbatim_deviation - n as f64 / 2.0).abs() < 1e-9,
                "q={q} N={n} dev={}",
                d.verbatim_deviation
            );
        }
    }
}
