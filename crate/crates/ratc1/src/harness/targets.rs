//! Registry of reference targets with analytic gradients.

use super::HarnessError;

/// A named target `f: [0,1]^d -> R^p` with analytic Jacobian and the
/// smoothness class it is used to represent (informational).
#[derive(Clone)]
pub struct TargetFunction {
    pub name: &'static str,
    pub d: usize,
    pub p: usize,
    forward: fn(&[f64]) -> Vec<f64>,
    gradient: fn(&[f64]) -> Vec<Vec<f64>>,
    pub beta: f64,
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn sin2pi(x: &[f64]) -> Vec<f64> {
    vec![(TWO_PI * x[0]).sin()]
}
fn sin2pi_grad(x: &[f64]) -> Vec<Vec<f64>> {
    vec![vec![TWO_PI * (TWO_PI * x[0]).cos()]]
}

fn gauss(x: &[f64]) -> Vec<f64> {
    let u = 2.0 * x[0] - 1.0;
    vec![(-4.0 * u * u).exp()]
}
fn gauss_grad(x: &[f64]) -> Vec<Vec<f64>> {
    let u = 2.0 * x[0] - 1.0;
    vec![vec![-16.0 * u * (-4.0 * u * u).exp()]]
}

fn runge(x: &[f64]) -> Vec<f64> {
    let u = 2.0 * x[0] - 1.0;
    vec![1.0 / (1.0 + 25.0 * u * u)]
}
fn runge_grad(x: &[f64]) -> Vec<Vec<f64>> {
    let u = 2.0 * x[0] - 1.0;
    let den = 1.0 + 25.0 * u * u;
    vec![vec![-100.0 * u / (den * den)]]
}

fn poly2(x: &[f64]) -> Vec<f64> {
    vec![x[0] * x[0]]
}
fn poly2_grad(x: &[f64]) -> Vec<Vec<f64>> {
    vec![vec![2.0 * x[0]]]
}

// d = 2 entries are products f(x) g(y) of the univariate registry members.
fn sin2pi_2d(x: &[f64]) -> Vec<f64> {
    vec![(TWO_PI * x[0]).sin() * (TWO_PI * x[1]).sin()]
}
fn sin2pi_2d_grad(x: &[f64]) -> Vec<Vec<f64>> {
    let (sx, cx) = (TWO_PI * x[0]).sin_cos();
    let (sy, cy) = (TWO_PI * x[1]).sin_cos();
    vec![vec![TWO_PI * cx * sy, TWO_PI * sx * cy]]
}

fn gauss_2d(x: &[f64]) -> Vec<f64> {
    vec![gauss(&x[..1])[0] * gauss(&x[1..])[0]]
}
fn gauss_2d_grad(x: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (gauss(&x[..1])[0], gauss(&x[1..])[0]);
    let (da, db) = (gauss_grad(&x[..1])[0][0], gauss_grad(&x[1..])[0][0]);
    vec![vec![da * b, a * db]]
}

fn runge_2d(x: &[f64]) -> Vec<f64> {
    vec![runge(&x[..1])[0] * runge(&x[1..])[0]]
}
fn runge_2d_grad(x: &[f64]) -> Vec<Vec<f64>> {
    let (a, b) = (runge(&x[..1])[0], runge(&x[1..])[0]);
    let (da, db) = (runge_grad(&x[..1])[0][0], runge_grad(&x[1..])[0][0]);
    vec![vec![da * b, a * db]]
}

fn poly2_2d(x: &[f64]) -> Vec<f64> {
    vec![x[0] * x[0] * x[1] * x[1]]
}
fn poly2_2d_grad(x: &[f64]) -> Vec<Vec<f64>> {
    vec![vec![2.0 * x[0] * x[1] * x[1], 2.0 * x[0] * x[0] * x[1]]]
}

impl TargetFunction {
    pub fn custom(
        name: &'static str,
        d: usize,
        p: usize,
        forward: fn(&[f64]) -> Vec<f64>,
        gradient: fn(&[f64]) -> Vec<Vec<f64>>,
        beta: f64,
    ) -> Self {
        TargetFunction {
            name,
            d,
            p,
            forward,
            gradient,
            beta,
        }
    }

    /// Registry lookup by name and input dimension; `d = 2` names resolve
    /// to the tensor product of the univariate target with itself.
    pub fn lookup(name: &str, d: usize) -> Result<TargetFunction, HarnessError> {
        let entry = Self::all()
            .into_iter()
            .find(|t| t.name == name && t.d == d);
        entry.ok_or_else(|| {
            HarnessError::ArgumentError(format!("no registry target named {name:?} with d = {d}"))
        })
    }

    pub fn all() -> Vec<TargetFunction> {
        vec![
            Self::custom("sin2pi", 1, 1, sin2pi, sin2pi_grad, 3.0),
            Self::custom("gauss", 1, 1, gauss, gauss_grad, 3.0),
            Self::custom("runge", 1, 1, runge, runge_grad, 3.0),
            Self::custom("poly2", 1, 1, poly2, poly2_grad, 3.0),
            Self::custom("sin2pi", 2, 1, sin2pi_2d, sin2pi_2d_grad, 3.0),
            Self::custom("gauss", 2, 1, gauss_2d, gauss_2d_grad, 3.0),
            Self::custom("runge", 2, 1, runge_2d, runge_2d_grad, 3.0),
            Self::custom("poly2", 2, 1, poly2_2d, poly2_2d_grad, 3.0),
        ]
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.forward)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.gradient)(x)
    }

    /// Returns a sampler closure for the fitting pipeline.
    pub fn sampler(&self) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
        move |x: &[f64]| (self.forward)(x)
    }

    /// Checks the analytic Jacobian against central finite differences at
    /// `count` seeded-random interior points.
    pub fn validate_gradient(&self, count: usize, seed: u64) -> Result<(), HarnessError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let h = 1e-6;
        for _ in 0..count {
            let x: Vec<f64> = (0..self.d).map(|_| rng.random_range(0.01..0.99)).collect();
            let jac = self.jacobian(&x);
            for l in 0..self.d {
                let mut hi = x.clone();
                hi[l] += h;
                let mut lo = x.clone();
                lo[l] -= h;
                let up = self.value(&hi);
                let dn = self.value(&lo);
                for m in 0..self.p {
                    let fd = (up[m] - dn[m]) / (2.0 * h);
                    if (fd - jac[m][l]).abs() > 1e-6 {
                        return Err(HarnessError::ArgumentError(format!(
                            "registry gradient check failed for {} at {:?}: fd={fd}, analytic={}",
                            self.name, x, jac[m][l]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
