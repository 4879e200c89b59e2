//! Cancellation networks: alternating rational stages and fixed activations
//! `r_{L+1} ∘ σ_L ∘ r_L ∘ ... ∘ σ_1 ∘ r_1`, where each `r_i` approximates
//! the inverse of the following activation so the composition reduces to a
//! rational approximation of the target.
//!
//! Every stage is fitted on the margin-extended interval `[-mu, 1+mu]`
//! (rescaled to `[0,1]` for the spline pipeline): the intermediate values
//! only approximately invert the activations, so they drift slightly
//! outside the unit cube. A stage input outside the extended interval is an
//! `IntermediateEscape`.

use rayon::prelude::*;
use thiserror::Error;

use crate::bspline::{fit_spline, FitOptions, SplineError};
use crate::harness::{c1_error, C1Map, ErrorReport, GridSpec, HarnessError, TargetFunction};
use crate::ratnet::{build_spline_net, BuildConfig, NetError, RationalNetwork};

#[derive(Debug, Error)]
pub enum SymregError {
    #[error("{0}")]
    DomainError(String),
    #[error("intermediate value {value} escaped [{lo}, {hi}] entering stage {stage}")]
    IntermediateEscape {
        stage: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{0}")]
    ArgumentError(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

/// Coordinatewise activation with an analytic inverse on a declared open
/// interval containing [0, 1].
#[derive(Clone)]
pub struct BaseActivation {
    pub name: &'static str,
    forward: fn(f64) -> f64,
    derivative: fn(f64) -> f64,
    inverse: fn(f64) -> f64,
    inverse_derivative: fn(f64) -> f64,
    /// Open interval on which the inverse is defined.
    pub inverse_domain: (f64, f64),
}

impl BaseActivation {
    /// `σ(x) = exp(x) - 1`, inverse `ln(1 + y)` on `(-1, ∞)`.
    pub fn exp1() -> Self {
        BaseActivation {
            name: "exp1",
            forward: |x| x.exp_m1(),
            derivative: |x| x.exp(),
            inverse: |y| y.ln_1p(),
            inverse_derivative: |y| 1.0 / (1.0 + y),
            inverse_domain: (-1.0, f64::INFINITY),
        }
    }

    /// `σ(x) = 2 atan(x)`, inverse `tan(y/2)` on `(-π, π)`.
    pub fn atan2() -> Self {
        BaseActivation {
            name: "atan2",
            forward: |x| 2.0 * x.atan(),
            derivative: |x| 2.0 / (1.0 + x * x),
            inverse: |y| (y / 2.0).tan(),
            inverse_derivative: |y| 0.5 / (y / 2.0).cos().powi(2),
            inverse_domain: (-std::f64::consts::PI, std::f64::consts::PI),
        }
    }

    pub fn identity() -> Self {
        BaseActivation {
            name: "identity",
            forward: |x| x,
            derivative: |_| 1.0,
            inverse: |y| y,
            inverse_derivative: |_| 1.0,
            inverse_domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn lookup(name: &str) -> Result<Self, SymregError> {
        match name {
            "exp1" => Ok(Self::exp1()),
            "atan2" => Ok(Self::atan2()),
            "identity" => Ok(Self::identity()),
            other => Err(SymregError::ArgumentError(format!(
                "unknown activation {other:?} (known: exp1, atan2, identity)"
            ))),
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        (self.forward)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }

    pub fn inverse_derivative(&self, y: f64) -> f64 {
        (self.inverse_derivative)(y)
    }

    /// Round-trip identity on [0, 1] probes, plus a bounded third divided
    /// difference of the inverse as a smoothness spot check.
    pub fn validate(&self) -> Result<(), SymregError> {
        for k in 0..=200 {
            let x = k as f64 / 200.0;
            let rt = self.forward(self.inverse(x));
            if (rt - x).abs() > 1e-12 {
                return Err(SymregError::ArgumentError(format!(
                    "activation {}: round trip at {x} off by {:e}",
                    self.name,
                    (rt - x).abs()
                )));
            }
        }
        let h = 1e-2;
        for k in 0..=100 {
            let y = k as f64 / 100.0;
            let d3 = (self.inverse(y + 1.5 * h) - 3.0 * self.inverse(y + 0.5 * h)
                + 3.0 * self.inverse(y - 0.5 * h)
                - self.inverse(y - 1.5 * h))
                / (h * h * h);
            if !d3.is_finite() || d3.abs() > 1e4 {
                return Err(SymregError::ArgumentError(format!(
                    "activation {}: inverse divided difference {d3:e} at {y}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// One rational stage: a constructive network over `[0,1]^k` together with
/// the affine rescale from the margin-extended interval it was fitted on.
#[derive(Clone, Debug)]
pub struct RationalStage {
    net: RationalNetwork,
    /// Accepted input interval (componentwise).
    lo: f64,
    hi: f64,
    /// Stage applies the univariate net to each coordinate when set.
    coordinatewise: bool,
}

impl RationalStage {
    pub fn network(&self) -> &RationalNetwork {
        &self.net
    }

    fn check_input(&self, y: &[f64], stage: usize) -> Result<(), SymregError> {
        for &v in y {
            if !(v >= self.lo && v <= self.hi) {
                return Err(SymregError::IntermediateEscape {
                    stage,
                    value: v,
                    lo: self.lo,
                    hi: self.hi,
                });
            }
        }
        Ok(())
    }

    fn rescale(&self, v: f64) -> f64 {
        ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    /// Value and Jacobian with the chain-rule factor of the rescale.
    pub fn eval_with_jacobian(
        &self,
        y: &[f64],
        stage: usize,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>), SymregError> {
        self.check_input(y, stage)?;
        let scale = 1.0 / (self.hi - self.lo);
        if self.coordinatewise {
            let k = y.len();
            let mut vals = vec![0.0; k];
            let mut jac = vec![vec![0.0; k]; k];
            for (l, &v) in y.iter().enumerate() {
                let (value, j) = self.net.eval_with_jacobian(&[self.rescale(v)])?;
                vals[l] = value[0];
                jac[l][l] = j[0][0] * scale;
            }
            Ok((vals, jac))
        } else {
            let t: Vec<f64> = y.iter().map(|&v| self.rescale(v)).collect();
            let (vals, mut jac) = self.net.eval_with_jacobian(&t)?;
            for row in &mut jac {
                for entry in row {
                    *entry *= scale;
                }
            }
            Ok((vals, jac))
        }
    }

    pub fn eval(&self, y: &[f64], stage: usize) -> Result<Vec<f64>, SymregError> {
        self.check_input(y, stage)?;
        if self.coordinatewise {
            y.iter()
                .map(|&v| Ok(self.net.eval(&[self.rescale(v)])?[0]))
                .collect()
        } else {
            let t: Vec<f64> = y.iter().map(|&v| self.rescale(v)).collect();
            Ok(self.net.eval(&t)?)
        }
    }
}

/// The alternating composition `r_{L+1} ∘ σ_L ∘ ... ∘ σ_1 ∘ r_1`.
#[derive(Clone)]
pub struct SymbolicNet {
    stages: Vec<RationalStage>,
    activations: Vec<BaseActivation>,
    d: usize,
    p: usize,
    pub margin: f64,
}

impl SymbolicNet {
    /// Assembles a net from parts; `stages` must have exactly one more
    /// entry than `activations`.
    pub fn from_parts(
        stages: Vec<RationalStage>,
        activations: Vec<BaseActivation>,
        d: usize,
        p: usize,
        margin: f64,
    ) -> Result<Self, SymregError> {
        if stages.len() != activations.len() + 1 {
            return Err(SymregError::ArgumentError(format!(
                "need L+1 stages for L activations, got {} and {}",
                stages.len(),
                activations.len()
            )));
        }
        Ok(SymbolicNet {
            stages,
            activations,
            d,
            p,
            margin,
        })
    }

    /// Test fixture: wraps a network as a stage accepting `[lo, hi]`.
    pub fn stage_from_network(
        net: RationalNetwork,
        lo: f64,
        hi: f64,
        coordinatewise: bool,
    ) -> RationalStage {
        RationalStage {
            net,
            lo,
            hi,
            coordinatewise,
        }
    }

    pub fn cascade_length(&self) -> usize {
        self.activations.len()
    }

    pub fn stages(&self) -> &[RationalStage] {
        &self.stages
    }

    pub fn final_stage(&self) -> &RationalStage {
        self.stages.last().expect("at least one stage")
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, SymregError> {
        let mut v = x.to_vec();
        for (i, act) in self.activations.iter().enumerate() {
            v = self.stages[i].eval(&v, i + 1)?;
            for slot in &mut v {
                *slot = act.forward(*slot);
            }
        }
        self.stages[self.activations.len()].eval(&v, self.activations.len() + 1)
    }

    /// Gradient by the chain rule through the activations and the stages'
    /// forward-mode Jacobians.
    pub fn eval_with_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), SymregError> {
        let mut v = x.to_vec();
        let mut jac: Vec<Vec<f64>> = (0..self.d)
            .map(|i| (0..self.d).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        for (i, act) in self.activations.iter().enumerate() {
            let (u, ju) = self.stages[i].eval_with_jacobian(&v, i + 1)?;
            let mut next_jac = mat_mul(&ju, &jac);
            for (l, row) in next_jac.iter_mut().enumerate() {
                let s = act.derivative(u[l]);
                for entry in row.iter_mut() {
                    *entry *= s;
                }
            }
            v = u.iter().map(|&t| act.forward(t)).collect();
            jac = next_jac;
        }
        let (out, jout) = self.stages[self.activations.len()]
            .eval_with_jacobian(&v, self.activations.len() + 1)?;
        Ok((out, mat_mul(&jout, &jac)))
    }

    /// The cancellation block `S_i = σ_i ∘ r_i ∘ ... ∘ σ_1 ∘ r_1`, which
    /// converges to the identity.
    pub fn eval_cancellation_block(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, SymregError> {
        if i == 0 || i > self.activations.len() {
            return Err(SymregError::ArgumentError(format!(
                "cancellation block index {i} out of range 1..={}",
                self.activations.len()
            )));
        }
        let mut v = x.to_vec();
        for (k, act) in self.activations.iter().take(i).enumerate() {
            v = self.stages[k].eval(&v, k + 1)?;
            for slot in &mut v {
                *slot = act.forward(*slot);
            }
        }
        Ok(v)
    }
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![0.0; cols]; rows];
    for (i, row) in out.iter_mut().enumerate() {
        for k in 0..inner {
            let aik = a[i][k];
            if aik != 0.0 {
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot += aik * b[k][j];
                }
            }
        }
    }
    out
}

impl C1Map for SymbolicNet {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.p
    }

    fn value(&self, x: &[f64]) -> Result<Vec<f64>, HarnessError> {
        self.eval(x).map_err(HarnessError::eval)
    }

    fn value_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), HarnessError> {
        self.eval_with_jacobian(x).map_err(HarnessError::eval)
    }
}

/// Knobs of the cancellation construction.
#[derive(Clone, Debug)]
pub struct CancellationConfig {
    pub beta: f64,
    /// Margin `mu` of the extended fitting interval.
    pub margin: f64,
    /// Activation degree `M = m_factor * N` for every stage.
    pub m_factor: usize,
    pub fit: FitOptions,
}

impl Default for CancellationConfig {
    fn default() -> Self {
        CancellationConfig {
            beta: 3.0,
            margin: 0.05,
            m_factor: 2,
            fit: FitOptions::default(),
        }
    }
}

/// Builds the cancellation net for one schedule entry `n`: each inner stage
/// fits the inverse of its activation on the margin-extended interval via
/// the spline-network pipeline, and the final stage fits `f` the same way.
/// With no activations the net reduces to the plain rational approximation
/// of `f` on the unit cube (no margin needed: the input is exact).
pub fn build_cancellation_net(
    f: &TargetFunction,
    activations: &[BaseActivation],
    n: usize,
    cfg: &CancellationConfig,
) -> Result<SymbolicNet, SymregError> {
    let d = f.d;
    let p = f.p;
    let mu = if activations.is_empty() { 0.0 } else { cfg.margin };
    let scale = 1.0 + 2.0 * mu;
    let q = cfg.beta.floor() as usize;
    let m_deg = (cfg.m_factor * n).max(1);

    for act in activations {
        let (lo, hi) = act.inverse_domain;
        if !(lo < -mu && hi > 1.0 + mu) {
            return Err(SymregError::DomainError(format!(
                "inverse of {} not defined on [{}, {}]",
                act.name,
                -mu,
                1.0 + mu
            )));
        }
        act.validate()?;
    }

    let mut stages = Vec::with_capacity(activations.len() + 1);
    for act in activations {
        // Coordinatewise stages share one univariate network regardless of d.
        let inv = act.inverse;
        let sampler = move |t: &[f64]| vec![inv(-mu + scale * t[0])];
        let spline = fit_spline(&sampler, q, n, 1, 1, &cfg.fit)?;
        let build = BuildConfig::new(cfg.beta, n, 1, 1)?.with_activation_degree(m_deg);
        let net = build_spline_net(&build, &spline, false)?;
        stages.push(RationalStage {
            net,
            lo: -mu,
            hi: 1.0 + mu,
            coordinatewise: true,
        });
    }

    let sampler = |t: &[f64]| {
        let y: Vec<f64> = t.iter().map(|&v| -mu + scale * v).collect();
        f.value(&y)
    };
    let spline = fit_spline(&sampler, q, n, d, p, &cfg.fit)?;
    let build = BuildConfig::new(cfg.beta, n, d, p)?.with_activation_degree(m_deg);
    let net = build_spline_net(&build, &spline, false)?;
    stages.push(RationalStage {
        net,
        lo: -mu,
        hi: 1.0 + mu,
        coordinatewise: false,
    });

    SymbolicNet::from_parts(stages, activations.to_vec(), d, p, mu)
}

/// One row of a convergence scan.
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub schedule_entry: usize,
    pub report: ErrorReport,
    /// `sup |S_i - id|` over the grid, for each cancellation block.
    pub cancel_err: Vec<f64>,
}

/// Runs the builder over a degree schedule and reports grid C⁰/C¹ errors
/// against `f` plus per-block cancellation errors.
pub fn convergence_scan(
    builder: &dyn Fn(usize) -> Result<SymbolicNet, SymregError>,
    schedule: &[usize],
    grid_points: usize,
    f: &TargetFunction,
) -> Result<Vec<ScanRow>, SymregError> {
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let net = builder(n)?;
        let grid = GridSpec::unit(f.d, grid_points);
        let report = c1_error(f, &net, &grid)?;
        let mut cancel_err = Vec::with_capacity(net.cascade_length());
        for i in 1..=net.cascade_length() {
            let sup = (0..grid.total_points())
                .into_par_iter()
                .map(|flat| {
                    let x = grid.point(flat);
                    let s = net.eval_cancellation_block(i, &x)?;
                    Ok(s.iter()
                        .zip(x.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max))
                })
                .collect::<Result<Vec<f64>, SymregError>>()?
                .into_iter()
                .fold(0.0, f64::max);
            cancel_err.push(sup);
        }
        rows.push(ScanRow {
            schedule_entry: n,
            report,
            cancel_err,
        });
    }
    Ok(rows)
}
