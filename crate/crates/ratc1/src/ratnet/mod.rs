//! Rational neural networks: layered compositions of multivariate rational
//! nodes with width/depth/degree bookkeeping, forward-mode gradients, and
//! symbolic collapse.

mod build;
mod collapse;

pub use build::{build_spline_net, BuildConfig};
pub use collapse::{collapse_to_rational, COLLAPSE_DEGREE_SLACK, DEFAULT_COLLAPSE_TERM_CAP};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{C1Map, HarnessError};
use crate::newman::{requ, requ_prime, NewmanBasis, NewmanError};
use crate::poly::{MultiRational, PolyError, RationalJson, SparseMultiPolynomial};

/// Denominator magnitudes below this signal an invalid network or domain.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("input {x} outside the unit cube")]
    DomainError { x: f64 },
    #[error("denominator magnitude {value:e} below floor at layer {layer}, node {node}")]
    DenominatorNearZero { layer: usize, node: usize, value: f64 },
    #[error("operation requires a non-oracle network: {0}")]
    OracleMode(String),
    #[error("{0}")]
    ArgumentError(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Newman(#[from] NewmanError),
    #[error(transparent)]
    Spline(#[from] crate::bspline::SplineError),
}

/// One node of one layer: a rational map `R^{input_dim} -> R`.
///
/// The builtin tags are semantically rationals where applicable: an affine
/// node is a degree-1 rational, `newman_requ(M)` is the degree-(M+1)
/// approximant applied to one input coordinate. `requ_exact` is not a
/// rational function and is legal only inside oracle-mode networks.
#[derive(Clone, Debug)]
pub enum NodeKind {
    Affine { weights: Vec<f64>, bias: f64 },
    RequExact { arg: usize },
    NewmanRequ { basis: NewmanBasis, arg: usize },
    Rational(MultiRational),
}

#[derive(Clone, Debug)]
pub struct RationalNode {
    input_dim: usize,
    kind: NodeKind,
}

impl RationalNode {
    pub fn affine(input_dim: usize, weights: Vec<f64>, bias: f64) -> Result<Self, NetError> {
        if weights.len() != input_dim {
            return Err(NetError::ArgumentError(format!(
                "affine weights length {} != input dim {input_dim}",
                weights.len()
            )));
        }
        Ok(RationalNode {
            input_dim,
            kind: NodeKind::Affine { weights, bias },
        })
    }

    /// Affine node selecting one input coordinate.
    pub fn passthrough(input_dim: usize, arg: usize) -> Result<Self, NetError> {
        Self::check_arg(input_dim, arg)?;
        let mut weights = vec![0.0; input_dim];
        weights[arg] = 1.0;
        Self::affine(input_dim, weights, 0.0)
    }

    pub fn requ_exact(input_dim: usize, arg: usize) -> Result<Self, NetError> {
        Self::check_arg(input_dim, arg)?;
        Ok(RationalNode {
            input_dim,
            kind: NodeKind::RequExact { arg },
        })
    }

    pub fn newman_requ(input_dim: usize, arg: usize, m: usize) -> Result<Self, NetError> {
        Self::check_arg(input_dim, arg)?;
        Ok(RationalNode {
            input_dim,
            kind: NodeKind::NewmanRequ {
                basis: NewmanBasis::new(m)?,
                arg,
            },
        })
    }

    pub fn rational(rational: MultiRational) -> Self {
        RationalNode {
            input_dim: rational.dimension(),
            kind: NodeKind::Rational(rational),
        }
    }

    fn check_arg(input_dim: usize, arg: usize) -> Result<(), NetError> {
        if arg >= input_dim {
            return Err(NetError::ArgumentError(format!(
                "argument index {arg} out of range for input dim {input_dim}"
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn is_rational(&self) -> bool {
        !matches!(self.kind, NodeKind::RequExact { .. })
    }

    /// Degree bookkeeping: affine nodes are 1, `newman_requ(M)` reports the
    /// construction's `M + 1`, general rationals their declared bound, and
    /// the non-rational exact unit its polynomial degree 2.
    pub fn degree_bound(&self) -> usize {
        match &self.kind {
            NodeKind::Affine { .. } => 1,
            NodeKind::RequExact { .. } => 2,
            NodeKind::NewmanRequ { basis, .. } => basis.n() + 1,
            NodeKind::Rational(r) => r.degree_bound(),
        }
    }

    fn eval(&self, x: &[f64], layer: usize, node: usize) -> Result<f64, NetError> {
        match &self.kind {
            NodeKind::Affine { weights, bias } => {
                Ok(weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + bias)
            }
            NodeKind::RequExact { arg } => Ok(requ(x[*arg])),
            NodeKind::NewmanRequ { basis, arg } => Ok(basis.eval_requ(x[*arg])?),
            NodeKind::Rational(r) => {
                let den = r.denominator_value(x);
                if den.abs() < DENOMINATOR_FLOOR {
                    return Err(NetError::DenominatorNearZero {
                        layer,
                        node,
                        value: den,
                    });
                }
                Ok(r.eval(x))
            }
        }
    }

    fn eval_dual(
        &self,
        x: &[f64],
        dx: &[f64],
        layer: usize,
        node: usize,
    ) -> Result<(f64, f64), NetError> {
        match &self.kind {
            NodeKind::Affine { weights, bias } => {
                let v = weights.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>() + bias;
                let dv = weights.iter().zip(dx.iter()).map(|(w, v)| w * v).sum::<f64>();
                Ok((v, dv))
            }
            NodeKind::RequExact { arg } => Ok((requ(x[*arg]), requ_prime(x[*arg]) * dx[*arg])),
            NodeKind::NewmanRequ { basis, arg } => Ok((
                basis.eval_requ(x[*arg])?,
                basis.eval_requ_prime(x[*arg])? * dx[*arg],
            )),
            NodeKind::Rational(r) => {
                let den = r.denominator_value(x);
                if den.abs() < DENOMINATOR_FLOOR {
                    return Err(NetError::DenominatorNearZero {
                        layer,
                        node,
                        value: den,
                    });
                }
                Ok(r.eval_with_directional(x, dx))
            }
        }
    }

    /// The node as an explicit rational in its input variables; errors for
    /// the exact unit, which has no rational form.
    pub fn as_rational(&self) -> Result<MultiRational, NetError> {
        match &self.kind {
            NodeKind::Affine { weights, bias } => {
                let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
                if *bias != 0.0 {
                    terms.push((vec![0; self.input_dim], *bias));
                }
                for (l, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        let mut e = vec![0; self.input_dim];
                        e[l] = 1;
                        terms.push((e, w));
                    }
                }
                let num = SparseMultiPolynomial::from_terms(self.input_dim, terms)?;
                Ok(MultiRational::from_poly(num))
            }
            NodeKind::RequExact { .. } => Err(NetError::OracleMode(
                "exact ReQU has no rational representation".into(),
            )),
            NodeKind::NewmanRequ { basis, arg } => {
                let expanded = basis.as_rational(crate::newman::Variant::Requ)?;
                Ok(expanded.rational.to_multi(self.input_dim, *arg))
            }
            NodeKind::Rational(r) => Ok(r.clone()),
        }
    }
}

/// Layered rational network. Layer widths `n_0..n_L` include the input
/// width `n_0`; depth is the number of layers `L`, width the maximum `n_l`.
#[derive(Clone, Debug)]
pub struct RationalNetwork {
    input_dim: usize,
    layers: Vec<Vec<RationalNode>>,
    oracle_mode: bool,
}

impl RationalNetwork {
    pub fn new(
        input_dim: usize,
        layers: Vec<Vec<RationalNode>>,
        oracle_mode: bool,
    ) -> Result<Self, NetError> {
        let mut prev = input_dim;
        for (l, layer) in layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(NetError::ArgumentError(format!("layer {l} is empty")));
            }
            for node in layer {
                if node.input_dim() != prev {
                    return Err(NetError::ArgumentError(format!(
                        "layer {l} node expects {} inputs, previous width is {prev}",
                        node.input_dim()
                    )));
                }
                if !oracle_mode && !node.is_rational() {
                    return Err(NetError::OracleMode(
                        "requ_exact nodes are only legal in oracle mode".into(),
                    ));
                }
            }
            prev = layer.len();
        }
        Ok(RationalNetwork {
            input_dim,
            layers,
            oracle_mode,
        })
    }

    /// Single-layer identity network on `dim` inputs.
    pub fn identity(dim: usize) -> Self {
        let layer = (0..dim)
            .map(|i| RationalNode::passthrough(dim, i).expect("valid passthrough"))
            .collect();
        RationalNetwork::new(dim, vec![layer], false).expect("identity network")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, Vec::len)
    }

    pub fn oracle_mode(&self) -> bool {
        self.oracle_mode
    }

    pub fn layers(&self) -> &[Vec<RationalNode>] {
        &self.layers
    }

    /// Widths `n_0..n_L`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.layers.len() + 1);
        w.push(self.input_dim);
        w.extend(self.layers.iter().map(Vec::len));
        w
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn width(&self) -> usize {
        self.widths().into_iter().max().unwrap_or(0)
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::ArgumentError(format!(
                "input length {} != network input dim {}",
                x.len(),
                self.input_dim
            )));
        }
        for &c in x {
            if !(0.0..=1.0).contains(&c) {
                return Err(NetError::DomainError { x: c });
            }
        }
        Ok(())
    }

    /// Forward pass, layer by layer.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        self.check_domain(x)?;
        let mut values = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.len());
            for (k, node) in layer.iter().enumerate() {
                next.push(node.eval(&values, l, k)?);
            }
            values = next;
        }
        Ok(values)
    }

    /// Value and Jacobian by forward-mode directional propagation, one
    /// sweep per input coordinate, quotient rule at each rational node.
    pub fn eval_with_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), NetError> {
        self.check_domain(x)?;
        let p = self.output_dim();
        let mut values = vec![0.0; p];
        let mut jac = vec![vec![0.0; self.input_dim]; p];
        for dir in 0..self.input_dim {
            let mut v = x.to_vec();
            let mut dv = vec![0.0; self.input_dim];
            dv[dir] = 1.0;
            for (l, layer) in self.layers.iter().enumerate() {
                let mut nv = Vec::with_capacity(layer.len());
                let mut ndv = Vec::with_capacity(layer.len());
                for (k, node) in layer.iter().enumerate() {
                    let (a, b) = node.eval_dual(&v, &dv, l, k)?;
                    nv.push(a);
                    ndv.push(b);
                }
                v = nv;
                dv = ndv;
            }
            for m in 0..p {
                jac[m][dir] = dv[m];
                if dir == 0 {
                    values[m] = v[m];
                }
            }
        }
        Ok((values, jac))
    }

    /// Bookkeeping snapshot: depth, width, raw per-layer widths, and the
    /// largest node degree bound.
    pub fn degree_report(&self) -> DegreeReport {
        let mut max_degree = 0;
        let mut non_rational = false;
        for layer in &self.layers {
            for node in layer {
                max_degree = max_degree.max(node.degree_bound());
                non_rational |= !node.is_rational();
            }
        }
        DegreeReport {
            depth: self.depth(),
            width: self.width(),
            layer_widths: self.widths(),
            max_degree_bound: max_degree,
            contains_non_rational: non_rational,
        }
    }

    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            input_dim: self.input_dim,
            oracle_mode: self.oracle_mode,
            layers: self
                .layers
                .iter()
                .map(|layer| layer.iter().map(node_to_json).collect())
                .collect(),
        }
    }

    pub fn from_json(j: &NetworkJson) -> Result<Self, NetError> {
        let mut prev = j.input_dim;
        let mut layers = Vec::with_capacity(j.layers.len());
        for layer in &j.layers {
            let nodes = layer
                .iter()
                .map(|n| node_from_json(n, prev))
                .collect::<Result<Vec<_>, _>>()?;
            prev = nodes.len();
            layers.push(nodes);
        }
        RationalNetwork::new(j.input_dim, layers, j.oracle_mode)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeReport {
    pub depth: usize,
    pub width: usize,
    pub layer_widths: Vec<usize>,
    pub max_degree_bound: usize,
    pub contains_non_rational: bool,
}

impl C1Map for RationalNetwork {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        RationalNetwork::output_dim(self)
    }

    fn value(&self, x: &[f64]) -> Result<Vec<f64>, HarnessError> {
        self.eval(x).map_err(HarnessError::eval)
    }

    fn value_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), HarnessError> {
        self.eval_with_jacobian(x).map_err(HarnessError::eval)
    }
}

/// Serialized network: layers of `{kind, params, degree_bound}` nodes.
#[derive(Serialize, Deserialize)]
pub struct NetworkJson {
    pub input_dim: usize,
    pub oracle_mode: bool,
    pub layers: Vec<Vec<NodeJson>>,
}

#[derive(Serialize, Deserialize)]
pub struct NodeJson {
    #[serde(flatten)]
    pub body: NodeBodyJson,
    pub degree_bound: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum NodeBodyJson {
    Affine { weights: Vec<f64>, bias: f64 },
    RequExact { arg: usize },
    NewmanRequ { m: usize, arg: usize },
    Rational(RationalJson),
}

fn node_to_json(node: &RationalNode) -> NodeJson {
    let body = match &node.kind {
        NodeKind::Affine { weights, bias } => NodeBodyJson::Affine {
            weights: weights.clone(),
            bias: *bias,
        },
        NodeKind::RequExact { arg } => NodeBodyJson::RequExact { arg: *arg },
        NodeKind::NewmanRequ { basis, arg } => NodeBodyJson::NewmanRequ {
            m: basis.n(),
            arg: *arg,
        },
        NodeKind::Rational(r) => NodeBodyJson::Rational(r.into()),
    };
    NodeJson {
        body,
        degree_bound: node.degree_bound(),
    }
}

fn node_from_json(j: &NodeJson, input_dim: usize) -> Result<RationalNode, NetError> {
    match &j.body {
        NodeBodyJson::Affine { weights, bias } => {
            RationalNode::affine(input_dim, weights.clone(), *bias)
        }
        NodeBodyJson::RequExact { arg } => RationalNode::requ_exact(input_dim, *arg),
        NodeBodyJson::NewmanRequ { m, arg } => RationalNode::newman_requ(input_dim, *arg, *m),
        NodeBodyJson::Rational(r) => {
            let rational = MultiRational::try_from(r)?;
            if rational.dimension() != input_dim {
                return Err(NetError::ArgumentError(format!(
                    "rational node dimension {} != layer input {input_dim}",
                    rational.dimension()
                )));
            }
            Ok(RationalNode::rational(rational))
        }
    }
}
