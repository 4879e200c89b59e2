//! Tensor-product splines with least-squares fitted weights.
//!
//! A fitted spline evaluates
//! `S_m(x) = sum_{j_1..j_d} w[m][j] prod_l (a_{j_l+q+1} - a_{j_l}) B_{j_l}^{q,N}(x_l)`
//! with the univariate order-`q` family from this module. The weights come
//! from a ridge-regularized least-squares fit on an oversampled uniform
//! grid; the quasi-interpolation weights the construction cites are not
//! reproduced, any weight choice achieving the spline-space approximation
//! rate serves the rate measurements.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Activation, BSplineBasis, KnotVector, SplineError};

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Sample points per axis = `oversample * (q + N)`.
    pub oversample: usize,
    /// Ridge parameter added to the normal equations.
    pub ridge: f64,
    /// Cap on `d * (q + N)^d`.
    pub size_cap: usize,
    /// Relative residual tolerance of the normal-equation solve.
    pub residual_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            oversample: 4,
            ridge: 1e-10,
            size_cap: 20_000,
            residual_tol: 1e-6,
        }
    }
}

/// Tensor-product spline over `[0,1]^d` with `p` outputs.
#[derive(Clone, Debug)]
pub struct TensorSpline {
    basis: BSplineBasis,
    d: usize,
    p: usize,
    /// Flat weights, index `m * nb^d + sum_l (j_l - 1) * nb^(d-1-l)`.
    weights: Vec<f64>,
}

impl TensorSpline {
    pub fn new(
        basis: BSplineBasis,
        d: usize,
        p: usize,
        weights: Vec<f64>,
    ) -> Result<Self, SplineError> {
        let nb = basis.knots().basis_count(basis.knots().q());
        let expect = p * nb.pow(d as u32);
        if weights.len() != expect {
            return Err(SplineError::ArgumentError(format!(
                "weight vector has length {}, expected {expect}",
                weights.len()
            )));
        }
        if d == 0 || p == 0 {
            return Err(SplineError::ArgumentError(
                "dimensions d and p must be positive".into(),
            ));
        }
        Ok(TensorSpline {
            basis,
            d,
            p,
            weights,
        })
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn output_dimension(&self) -> usize {
        self.p
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Basis functions per axis (`q + N`).
    pub fn basis_per_axis(&self) -> usize {
        let k = self.basis.knots();
        k.q() + k.resolution()
    }

    pub fn weight(&self, m: usize, multi_j: &[usize]) -> f64 {
        let nb = self.basis_per_axis();
        let mut idx = m;
        for &j in multi_j {
            idx = idx * nb + (j - 1);
        }
        self.weights[idx]
    }

    /// Same weights over the same knots, with every ReQU swapped for the
    /// given activation.
    pub fn with_activation(&self, activation: Activation) -> Result<Self, SplineError> {
        Ok(TensorSpline {
            basis: self.basis.with_activation(activation)?,
            d: self.d,
            p: self.p,
            weights: self.weights.clone(),
        })
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), SplineError> {
        if x.len() != self.d {
            return Err(SplineError::ArgumentError(format!(
                "point dimension {} != spline dimension {}",
                x.len(),
                self.d
            )));
        }
        for &c in x {
            if !(0.0..=1.0).contains(&c) {
                return Err(SplineError::DomainError { x: c });
            }
        }
        Ok(())
    }

    /// Per-axis normalized values `gap_j B_j(x_l)` and derivatives.
    fn axis_tables(&self, x: &[f64]) -> Result<Vec<Vec<(f64, f64)>>, SplineError> {
        let knots = self.basis.knots();
        let q = knots.q();
        let nb = self.basis_per_axis();
        x.iter()
            .map(|&c| {
                let vals = self.basis.eval_all(q, c)?;
                Ok((1..=nb)
                    .map(|j| {
                        let g = knots.gap(j);
                        (g * vals[j - 1].0, g * vals[j - 1].1)
                    })
                    .collect())
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, SplineError> {
        self.check_domain(x)?;
        let tables = self.axis_tables(x)?;
        let nb = self.basis_per_axis();
        let block = nb.pow(self.d as u32);
        let mut out = vec![0.0; self.p];
        let mut idx = vec![0usize; self.d];
        loop {
            let mut prod = 1.0;
            for l in 0..self.d {
                prod *= tables[l][idx[l]].0;
            }
            if prod != 0.0 {
                let mut flat = 0;
                for &i in &idx {
                    flat = flat * nb + i;
                }
                for (m, slot) in out.iter_mut().enumerate() {
                    *slot += self.weights[m * block + flat] * prod;
                }
            }
            if !advance(&mut idx, nb) {
                break;
            }
        }
        Ok(out)
    }

    /// Values and Jacobian (`p` rows, `d` columns) by the product rule.
    pub fn eval_with_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), SplineError> {
        self.check_domain(x)?;
        let tables = self.axis_tables(x)?;
        let nb = self.basis_per_axis();
        let block = nb.pow(self.d as u32);
        let mut vals = vec![0.0; self.p];
        let mut jac = vec![vec![0.0; self.d]; self.p];
        let mut idx = vec![0usize; self.d];
        loop {
            let mut prod = 1.0;
            for l in 0..self.d {
                prod *= tables[l][idx[l]].0;
            }
            let mut flat = 0;
            for &i in &idx {
                flat = flat * nb + i;
            }
            for m in 0..self.p {
                let w = self.weights[m * block + flat];
                if w == 0.0 {
                    continue;
                }
                vals[m] += w * prod;
                for l in 0..self.d {
                    let mut dprod = tables[l][idx[l]].1;
                    for k in 0..self.d {
                        if k != l {
                            dprod *= tables[k][idx[k]].0;
                        }
                    }
                    jac[m][l] += w * dprod;
                }
            }
            if !advance(&mut idx, nb) {
                break;
            }
        }
        Ok((vals, jac))
    }

    pub fn to_json(&self) -> SplineJson {
        let knots = self.basis.knots();
        SplineJson {
            q: knots.q(),
            n: knots.resolution(),
            d: self.d,
            p: self.p,
            activation: match self.basis.activation() {
                Activation::Exact => ActivationJson::Exact,
                Activation::Newman(b) => ActivationJson::Newman(b.n()),
            },
            knots: knots.as_slice().to_vec(),
            weights: self.weights.clone(),
        }
    }

    pub fn from_json(j: &SplineJson) -> Result<Self, SplineError> {
        let knots = KnotVector::new(j.q, j.n)?;
        if knots.as_slice() != j.knots.as_slice() {
            return Err(SplineError::ArgumentError(
                "serialized knots disagree with (q, N)".into(),
            ));
        }
        let activation = match j.activation {
            ActivationJson::Exact => Activation::Exact,
            ActivationJson::Newman(m) => Activation::newman(m)?,
        };
        TensorSpline::new(BSplineBasis::new(knots, activation)?, j.d, j.p, j.weights.clone())
    }
}

fn advance(idx: &mut [usize], radix: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < radix {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Serialized spline: `{"q":3,"N":8,"d":1,"p":1,"activation":...,"knots":[...],"weights":[...]}`.
#[derive(Serialize, Deserialize)]
pub struct SplineJson {
    pub q: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub activation: ActivationJson,
    pub knots: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ActivationJson {
    Exact,
    Newman(usize),
}

/// Least-squares spline fit of `f: [0,1]^d -> R^p` with exact-ReQU basis.
///
/// Samples `oversample * (q+N)` points per axis, assembles the design matrix
/// of normalized basis products, and solves the ridge-regularized normal
/// equations by Cholesky factorization.
pub fn fit_spline(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    q: usize,
    n: usize,
    d: usize,
    p: usize,
    opts: &FitOptions,
) -> Result<TensorSpline, SplineError> {
    let knots = KnotVector::new(q, n)?;
    let basis = BSplineBasis::new(knots.clone(), Activation::Exact)?;
    let nb = q + n;
    let unknowns = nb.pow(d as u32);
    if d * unknowns > opts.size_cap {
        return Err(SplineError::SizeCapExceeded {
            required: d * unknowns,
            cap: opts.size_cap,
        });
    }
    let pts = opts.oversample.max(1) * nb;
    let t: Vec<f64> = (0..pts)
        .map(|k| k as f64 / (pts - 1) as f64)
        .collect();

    // One axis table serves every axis: the sample grid is shared.
    let mut axis = vec![vec![0.0; nb]; pts];
    for (i, &z) in t.iter().enumerate() {
        let vals = basis.eval_all(q, z)?;
        for j in 1..=nb {
            axis[i][j - 1] = knots.gap(j) * vals[j - 1].0;
        }
    }

    let rows = pts.pow(d as u32);
    let mut design = DMatrix::<f64>::zeros(rows, unknowns);
    let mut targets = DMatrix::<f64>::zeros(rows, p);
    let mut grid_idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut row = 0;
    loop {
        for l in 0..d {
            x[l] = t[grid_idx[l]];
        }
        let y = f(&x);
        assert_eq!(y.len(), p, "sampler output dimension mismatch");
        for (m, &v) in y.iter().enumerate() {
            targets[(row, m)] = v;
        }
        let mut col_idx = vec![0usize; d];
        loop {
            let mut prod = 1.0;
            for l in 0..d {
                prod *= axis[grid_idx[l]][col_idx[l]];
            }
            let mut flat = 0;
            for &c in &col_idx {
                flat = flat * nb + c;
            }
            design[(row, flat)] = prod;
            if !advance(&mut col_idx, nb) {
                break;
            }
        }
        row += 1;
        if !advance(&mut grid_idx, pts) {
            break;
        }
    }
    debug_assert_eq!(row, rows);

    let mut gram = design.transpose() * &design;
    for i in 0..unknowns {
        gram[(i, i)] += opts.ridge;
    }
    let rhs = design.transpose() * &targets;
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(SplineError::SingularFit { residual: f64::INFINITY })?;
    let solution = chol.solve(&rhs);

    let residual = (&gram * &solution - &rhs).norm();
    let scale = rhs.norm().max(1e-30);
    if residual / scale > opts.residual_tol {
        return Err(SplineError::SingularFit {
            residual: residual / scale,
        });
    }

    let mut weights = vec![0.0; p * unknowns];
    for m in 0..p {
        for k in 0..unknowns {
            weights[m * unknowns + k] = solution[(k, m)];
        }
    }
    TensorSpline::new(basis, d, p, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit1(f: impl Fn(f64) -> f64, q: usize, n: usize) -> TensorSpline {
        fit_spline(&|x: &[f64]| vec![f(x[0])], q, n, 1, 1, &FitOptions::default()).unwrap()
    }

    #[test]
    fn reproduces_x_squared() {
        let s = fit1(|x| x * x, 3, 4);
        let mut sup: f64 = 0.0;
        for k in 0..=2000 {
            let x = k as f64 / 2000.0;
            sup = sup.max((s.eval(&[x]).unwrap()[0] - x * x).abs());
        }
        assert!(sup <= 1e-8, "sup={sup:e}");
    }

    #[test]
    fn zero_function_gives_zero_weights() {
        let s = fit1(|_| 0.0, 3, 4);
        assert!(s.weights().iter().all(|w| w.abs() <= 1e-12));
    }

    #[test]
    fn polynomial_reproduction_up_to_q_minus_1() {
        let s = fit1(|x| 1.0 - 2.0 * x + 0.5 * x * x * x, 4, 5);
        let mut sup: f64 = 0.0;
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let f = 1.0 - 2.0 * x + 0.5 * x * x * x;
            sup = sup.max((s.eval(&[x]).unwrap()[0] - f).abs());
        }
        assert!(sup <= 1e-8, "sup={sup:e}");
    }

    #[test]
    fn polynomial_reproduction_d2() {
        let f = |x: &[f64]| vec![(x[0] + x[1]) * (x[0] + x[1])];
        let s = fit_spline(&f, 3, 4, 2, 1, &FitOptions::default()).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..=60 {
            for k in 0..=60 {
                let x = [i as f64 / 60.0, k as f64 / 60.0];
                sup = sup.max((s.eval(&x).unwrap()[0] - f(&x)[0]).abs());
            }
        }
        assert!(sup <= 1e-6, "sup={sup:e}");
    }

    #[test]
    fn sin_error_decreases_with_resolution() {
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
        let fp = |x: f64| 2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).cos();
        let mut prev = f64::INFINITY;
        for n in [4usize, 8, 16] {
            let s = fit1(f, 3, n);
            let mut c1: f64 = 0.0;
            let mut c0: f64 = 0.0;
            for k in 0..=4000 {
                let x = k as f64 / 4000.0;
                let (v, j) = s.eval_with_jacobian(&[x]).unwrap();
                c0 = c0.max((v[0] - f(x)).abs());
                c1 = c1.max((j[0][0] - fp(x)).abs());
            }
            let tot = c0 + c1;
            assert!(tot < prev, "N={n}: {tot} !< {prev}");
            prev = tot;
        }
    }

    #[test]
    fn zero_weights_evaluate_to_zero() {
        let knots = KnotVector::new(3, 4).unwrap();
        let basis = BSplineBasis::new(knots, Activation::Exact).unwrap();
        let s = TensorSpline::new(basis, 1, 1, vec![0.0; 7]).unwrap();
        assert_eq!(s.eval(&[0.4]).unwrap(), vec![0.0]);
        let (v, j) = s.eval_with_jacobian(&[0.4]).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(j[0][0], 0.0);
    }

    #[test]
    fn single_weight_is_scaled_basis_function() {
        let knots = KnotVector::new(3, 4).unwrap();
        let basis = BSplineBasis::new(knots.clone(), Activation::Exact).unwrap();
        let mut w = vec![0.0; 7];
        w[3] = 2.5; // j = 4
        let s = TensorSpline::new(basis.clone(), 1, 1, w).unwrap();
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            let expect = 2.5 * knots.gap(4) * basis.eval_bm(4, 3, x).unwrap();
            assert!((s.eval(&[x]).unwrap()[0] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let f = |x: &[f64]| vec![(2.0 * std::f64::consts::PI * x[0]).sin() * (1.0 + x[1])];
        let s = fit_spline(&f, 3, 6, 2, 1, &FitOptions::default()).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..50 {
            let x = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
            let (_, jac) = s.eval_with_jacobian(&x).unwrap();
            for l in 0..2 {
                let mut hi = x;
                hi[l] += h;
                let mut lo = x;
                lo[l] -= h;
                let fd = (s.eval(&hi).unwrap()[0] - s.eval(&lo).unwrap()[0]) / (2.0 * h);
                assert!((fd - jac[0][l]).abs() <= 1e-5 * jac[0][l].abs().max(1.0));
            }
        }
    }

    #[test]
    fn domain_error_outside_cube() {
        let s = fit1(|x| x, 3, 4);
        assert!(matches!(
            s.eval(&[1.0 + 1e-9]),
            Err(SplineError::DomainError { .. })
        ));
    }

    #[test]
    fn size_cap_is_enforced() {
        let r = fit_spline(
            &|_: &[f64]| vec![0.0],
            3,
            64,
            3,
            1,
            &FitOptions {
                size_cap: 1000,
                ..FitOptions::default()
            },
        );
        assert!(matches!(r, Err(SplineError::SizeCapExceeded { .. })));
    }

    #[test]
    fn json_round_trip_preserves_values() {
        let s = fit1(|x| x * x, 3, 4);
        let j = s.to_json();
        let text = serde_json::to_string(&j).unwrap();
        let back = TensorSpline::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for k in 0..=20 {
            let x = [k as f64 / 20.0];
            assert_eq!(s.eval(&x).unwrap()[0], back.eval(&x).unwrap()[0]);
        }
    }
}
