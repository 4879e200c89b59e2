//! Layer-by-layer construction of the rational network realizing a fitted
//! tensor-product spline.
//!
//! The stack mirrors the constructive design: affine shifts, then one
//! activation node per shifted argument (exact ReQU in oracle mode, the
//! Newman approximant `R~_M` otherwise), then affine combinations forming
//! the order-2 splines, then one degree-2 rational recursion layer per
//! order up to `q`, and a final polynomial layer assembling the tensor
//! spline values. Resulting bookkeeping: depth `q+2`, width
//! `(N + max(4, q) + 1) d`, maximal activation degree `M+1`.

use super::{NetError, RationalNode, RationalNetwork};
use crate::bspline::{Activation, Orientation, QuadBSpline, TensorSpline};
use crate::poly::{MultiRational, SparseMultiPolynomial};

/// Parameters of one constructive build.
#[derive(Clone, Debug)]
pub struct BuildConfig {
    /// Smoothness parameter; the spline order is `q = floor(beta) >= 2`.
    pub beta: f64,
    /// Interior resolution `N`.
    pub n: usize,
    /// Activation degree parameter `M`; derived from `epsilon` when unset.
    pub m: Option<usize>,
    /// Exponent for the default `M = round(N^epsilon)`.
    pub epsilon: f64,
    /// Input dimension.
    pub d: usize,
    /// Output dimension.
    pub p: usize,
}

impl BuildConfig {
    pub fn new(beta: f64, n: usize, d: usize, p: usize) -> Result<Self, NetError> {
        let cfg = BuildConfig {
            beta,
            n,
            m: None,
            epsilon: 1.0,
            d,
            p,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_activation_degree(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.beta.is_nan() || self.beta <= 2.0 {
            return Err(NetError::ArgumentError(format!(
                "beta must exceed 2, got {}",
                self.beta
            )));
        }
        if self.n < 2 || self.d == 0 || self.p == 0 {
            return Err(NetError::ArgumentError(
                "require N >= 2 and positive d, p".into(),
            ));
        }
        if self.epsilon <= 0.0 {
            return Err(NetError::ArgumentError("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.beta.floor() as usize
    }

    /// `M` as configured, or `round(N^epsilon)` when unset.
    pub fn activation_degree(&self) -> usize {
        self.m
            .unwrap_or_else(|| (self.n as f64).powf(self.epsilon).round().max(1.0) as usize)
    }

    /// Claimed width `(N + max(4, q) + 1) d`.
    pub fn predicted_width(&self) -> usize {
        (self.n + self.q().max(4) + 1) * self.d
    }

    /// Claimed depth `q + 2`.
    pub fn predicted_depth(&self) -> usize {
        self.q() + 2
    }
}

/// Builds the constructive network for a fitted spline. With `oracle` the
/// activation layer uses exact ReQU nodes and the network output equals the
/// tensor spline pointwise; otherwise every ReQU becomes `R~_M`.
pub fn build_spline_net(
    cfg: &BuildConfig,
    spline: &TensorSpline,
    oracle: bool,
) -> Result<RationalNetwork, NetError> {
    cfg.validate()?;
    let q = cfg.q();
    let n = cfg.n;
    let d = cfg.d;
    let m_deg = cfg.activation_degree();
    let knots = spline.basis().knots().clone();
    if knots.q() != q || knots.resolution() != n {
        return Err(NetError::ConfigMismatch(format!(
            "spline has (q, N) = ({}, {}), config wants ({q}, {n})",
            knots.q(),
            knots.resolution()
        )));
    }
    if spline.dimension() != d || spline.output_dimension() != cfg.p {
        return Err(NetError::ConfigMismatch(format!(
            "spline is {}->{}, config wants {d}->{}",
            spline.dimension(),
            spline.output_dimension(),
            cfg.p
        )));
    }
    if !matches!(spline.basis().activation(), Activation::Exact) {
        return Err(NetError::ConfigMismatch(
            "constructive build expects a spline fitted with the exact basis".into(),
        ));
    }

    let nf = n as f64;
    let mut layers: Vec<Vec<RationalNode>> = Vec::with_capacity(q + 2);

    // Layer 1: shifts x_i - j/N for 0 <= j <= N plus the three reflected
    // boundary arguments -x_i, 1/N - x_i, 2/N - x_i. Width (N+4)d.
    let per1 = n + 4;
    let mut layer1 = Vec::with_capacity(per1 * d);
    for i in 0..d {
        for j in 0..=n {
            let mut w = vec![0.0; d];
            w[i] = 1.0;
            layer1.push(RationalNode::affine(d, w, -(j as f64) / nf)?);
        }
        for s in 0..3 {
            let mut w = vec![0.0; d];
            w[i] = -1.0;
            layer1.push(RationalNode::affine(d, w, s as f64 / nf)?);
        }
    }
    layers.push(layer1);

    // Layer 2: one activation per shifted argument plus an identity
    // passthrough of x_i (the j = 0 shift). Width (N+5)d.
    let per2 = n + 5;
    let mut layer2 = Vec::with_capacity(per2 * d);
    let width1 = per1 * d;
    for i in 0..d {
        for k in 0..per1 {
            let arg = i * per1 + k;
            layer2.push(if oracle {
                RationalNode::requ_exact(width1, arg)?
            } else {
                RationalNode::newman_requ(width1, arg, m_deg)?
            });
        }
        layer2.push(RationalNode::passthrough(width1, i * per1)?);
    }
    layers.push(layer2);

    // Layer 3: affine combinations forming the order-2 splines B_j for
    // q-1 <= j <= q+N per axis, plus passthrough while higher orders
    // remain. Width (N+3)d for q >= 3, (N+2)d when q = 2 finishes here.
    let width2 = per2 * d;
    let passthrough3 = q > 2;
    let per3 = n + 2 + usize::from(passthrough3);
    let mut layer3 = Vec::with_capacity(per3 * d);
    for i in 0..d {
        for j in q - 1..=q + n {
            let quad = QuadBSpline::for_index(&knots, j)?;
            let mut w = vec![0.0; width2];
            for t in &quad.terms {
                let scaled = t.shift * nf;
                let k = scaled.round() as usize;
                debug_assert!((scaled - k as f64).abs() < 1e-9, "non-grid shift {}", t.shift);
                let idx = match t.orientation {
                    Orientation::ZMinusS => i * per2 + k,
                    Orientation::SMinusZ => i * per2 + n + 1 + k,
                };
                w[idx] += t.coeff;
            }
            layer3.push(RationalNode::affine(width2, w, 0.0)?);
        }
        if passthrough3 {
            layer3.push(RationalNode::passthrough(width2, i * per2 + n + 4)?);
        }
    }
    layers.push(layer3);

    // Layers m+1 for 3 <= m <= q: degree-2 rational recursion nodes for
    // B_j^{m} with q-m+1 <= j <= q+N, passthrough except at the top order.
    let mut prev_per = per3;
    let mut prev_lo = q - 1; // lowest spline index held by the previous layer
    for m in 3..=q {
        let prev_width = prev_per * d;
        let has_passthrough = m < q;
        let lo = q - m + 1;
        let per = n + m + usize::from(has_passthrough);
        let mut layer = Vec::with_capacity(per * d);
        for i in 0..d {
            let z_idx = i * prev_per + (prev_per - 1);
            for j in lo..=q + n {
                let a_lo = knots.knot(j);
                let a_hi = knots.knot(j + m + 1);
                if a_lo >= a_hi {
                    layer.push(RationalNode::affine(prev_width, vec![0.0; prev_width], 0.0)?);
                    continue;
                }
                let inv = 1.0 / (a_hi - a_lo);
                let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
                let mut push = |positions: &[usize], c: f64| {
                    if c != 0.0 {
                        let mut e = vec![0u32; prev_width];
                        for &pos in positions {
                            e[pos] += 1;
                        }
                        terms.push((e, c));
                    }
                };
                if j >= prev_lo {
                    let u_idx = i * prev_per + (j - prev_lo);
                    push(&[z_idx, u_idx], inv);
                    push(&[u_idx], -inv * a_lo);
                }
                if j < q + n {
                    let v_idx = i * prev_per + (j + 1 - prev_lo);
                    push(&[v_idx], inv * a_hi);
                    push(&[z_idx, v_idx], -inv);
                }
                let num = SparseMultiPolynomial::from_terms(prev_width, terms)?;
                let node = MultiRational::from_poly(num).with_degree_bound(2);
                layer.push(RationalNode::rational(node));
            }
            if has_passthrough {
                layer.push(RationalNode::passthrough(prev_width, z_idx)?);
            }
        }
        layers.push(layer);
        prev_per = per;
        prev_lo = lo;
    }

    // Output layer: the degree-d polynomial of the tensor representation,
    // one node per output component.
    let top_per = n + q;
    let top_width = top_per * d;
    debug_assert_eq!(prev_per, top_per);
    debug_assert_eq!(prev_lo, 1);
    let nb = top_per;
    let mut out_layer = Vec::with_capacity(cfg.p);
    for m_out in 0..cfg.p {
        let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
        let mut multi = vec![1usize; d];
        loop {
            let mut coeff = spline.weight(m_out, &multi);
            if coeff != 0.0 {
                let mut e = vec![0u32; top_width];
                for (l, &j) in multi.iter().enumerate() {
                    coeff *= knots.gap(j);
                    e[l * top_per + (j - 1)] += 1;
                }
                terms.push((e, coeff));
            }
            // advance multi-index over [1, nb]^d
            let mut l = d;
            loop {
                if l == 0 {
                    break;
                }
                l -= 1;
                multi[l] += 1;
                if multi[l] <= nb {
                    break;
                }
                multi[l] = 1;
                if l == 0 {
                    l = usize::MAX;
                    break;
                }
            }
            if l == usize::MAX {
                break;
            }
        }
        let num = SparseMultiPolynomial::from_terms(top_width, terms)?;
        let node = MultiRational::from_poly(num).with_degree_bound(d);
        out_layer.push(RationalNode::rational(node));
    }
    layers.push(out_layer);

    RationalNetwork::new(d, layers, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::{fit_spline, FitOptions};
    use crate::harness::TargetFunction;

    fn fitted(name: &str, q_beta: f64, n: usize, d: usize) -> (BuildConfig, TensorSpline) {
        let t = TargetFunction::lookup(name, d).unwrap();
        let spline = fit_spline(
            &|x: &[f64]| t.value(x),
            q_beta.floor() as usize,
            n,
            d,
            1,
            &FitOptions::default(),
        )
        .unwrap();
        let cfg = BuildConfig::new(q_beta, n, d, 1).unwrap();
        (cfg, spline)
    }

    #[test]
    fn bookkeeping_beta3_n8_d2() {
        let (cfg, spline) = fitted("sin2pi", 3.0, 8, 2);
        let cfg = cfg.with_activation_degree(9);
        let net = build_spline_net(&cfg, &spline, false).unwrap();
        let report = net.degree_report();
        assert_eq!(report.depth, 5);
        assert_eq!(report.depth, cfg.predicted_depth());
        assert_eq!(report.width, 26);
        assert_eq!(report.width, cfg.predicted_width());
        assert_eq!(report.max_degree_bound, 10);
        assert!(!report.contains_non_rational);
    }

    #[test]
    fn layer2_width_beta3_n4_d1() {
        let (cfg, spline) = fitted("sin2pi", 3.0, 4, 1);
        let cfg = cfg.with_activation_degree(16);
        let net = build_spline_net(&cfg, &spline, false).unwrap();
        // widths() returns n_0..n_L; layer 2 is index 2.
        assert_eq!(net.widths()[2], 4 + 5);
        assert_eq!(net.widths(), vec![1, 8, 9, 7, 7, 1]);
    }

    #[test]
    fn bookkeeping_q4() {
        let (cfg, spline) = fitted("sin2pi", 4.5, 4, 1);
        let cfg = cfg.with_activation_degree(6);
        let net = build_spline_net(&cfg, &spline, false).unwrap();
        let report = net.degree_report();
        assert_eq!(report.depth, 6);
        assert_eq!(report.width, cfg.predicted_width());
        assert_eq!(report.layer_widths, vec![1, 8, 9, 7, 8, 8, 1]);
        assert_eq!(report.max_degree_bound, 7);
    }

    #[test]
    fn oracle_network_equals_tensor_spline() {
        fn run(name: &str, n: usize, d: usize) {
            let (cfg, spline) = fitted(name, 3.0, n, d);
            let net = build_spline_net(&cfg, &spline, true).unwrap();
            let pts: usize = if d == 1 { 501 } else { 41 };
            let total = pts.pow(d as u32);
            for flat in 0..total {
                let mut rest = flat;
                let mut x = vec![0.0; d];
                for l in (0..d).rev() {
                    x[l] = (rest % pts) as f64 / (pts - 1) as f64;
                    rest /= pts;
                }
                let sv = spline.eval(&x).unwrap();
                let nv = net.eval(&x).unwrap();
                assert!(
                    (sv[0] - nv[0]).abs() <= 1e-9,
                    "{name} d={d} x={x:?}: {} vs {}",
                    sv[0],
                    nv[0]
                );
            }
        }
        run("sin2pi", 8, 1);
        run("gauss", 4, 2);
    }

    #[test]
    fn zero_weight_spline_gives_zero_network() {
        use crate::bspline::{Activation, BSplineBasis, KnotVector};
        let knots = KnotVector::new(3, 4).unwrap();
        let basis = BSplineBasis::new(knots, Activation::Exact).unwrap();
        let spline = TensorSpline::new(basis, 1, 1, vec![0.0; 7]).unwrap();
        let cfg = BuildConfig::new(3.0, 4, 1, 1).unwrap().with_activation_degree(4);
        let net = build_spline_net(&cfg, &spline, false).unwrap();
        for k in 0..=20 {
            let x = [k as f64 / 20.0];
            let (v, jac) = net.eval_with_jacobian(&x).unwrap();
            assert_eq!(v[0], 0.0);
            assert_eq!(jac[0][0], 0.0);
        }
    }

    #[test]
    fn config_mismatch_detected() {
        let (_, spline) = fitted("sin2pi", 3.0, 8, 1);
        let cfg = BuildConfig::new(3.0, 4, 1, 1).unwrap();
        assert!(matches!(
            build_spline_net(&cfg, &spline, false),
            Err(NetError::ConfigMismatch(_))
        ));
    }

    #[test]
    fn default_activation_degree_follows_epsilon() {
        let cfg = BuildConfig::new(3.0, 16, 1, 1).unwrap().with_epsilon(0.5);
        assert_eq!(cfg.activation_degree(), 4);
        let cfg = cfg.with_activation_degree(9);
        assert_eq!(cfg.activation_degree(), 9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let (cfg, spline) = fitted("sin2pi", 3.0, 4, 1);
        let cfg = cfg.with_activation_degree(8);
        let net = build_spline_net(&cfg, &spline, false).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..50 {
            let x = [rng.random_range(0.01..0.99)];
            let (_, jac) = net.eval_with_jacobian(&x).unwrap();
            let hi = net.eval(&[x[0] + h]).unwrap()[0];
            let lo = net.eval(&[x[0] - h]).unwrap()[0];
            let fd = (hi - lo) / (2.0 * h);
            assert!(
                (fd - jac[0][0]).abs() <= 1e-4 * jac[0][0].abs().max(1.0),
                "x={x:?} fd={fd} an={}",
                jac[0][0]
            );
        }
    }

    #[test]
    fn substitution_error_decreases_in_m() {
        let (cfg, spline) = fitted("sin2pi", 3.0, 4, 1);
        let oracle = build_spline_net(&cfg, &spline, true).unwrap();
        let mut prev = f64::INFINITY;
        let mut at64 = f64::NAN;
        for m in [8usize, 16, 32, 64] {
            let net = build_spline_net(&cfg.clone().with_activation_degree(m), &spline, false).unwrap();
            let mut c0: f64 = 0.0;
            let mut c1: f64 = 0.0;
            for k in 0..=2000 {
                let x = [k as f64 / 2000.0];
                let (ov, oj) = oracle.eval_with_jacobian(&x).unwrap();
                let (nv, nj) = net.eval_with_jacobian(&x).unwrap();
                c0 = c0.max((ov[0] - nv[0]).abs());
                c1 = c1.max((oj[0][0] - nj[0][0]).abs());
            }
            let dist = c0 + c1;
            assert!(dist <= prev, "M={m}: {dist} > {prev}");
            prev = dist;
            at64 = dist;
        }
        assert!(at64 < 1e-4, "C1 distance at M=64 is {at64}");
    }
}
