//! Rational approximants for ReQU-based spline networks, with C¹ error
//! measurement at desk scale.
//!
//! The crate is organized around the construction pipeline:
//!
//! - [`poly`]: exact polynomial / rational-function arithmetic (univariate
//!   dense and multivariate sparse) with degree-bound bookkeeping.
//! - [`newman`]: Newman polynomials, the sign-like rationals `r_n`, and the
//!   ReQU / RePU approximants with stable factored evaluation.
//! - [`bspline`]: clamped knot vectors, order-2 B-splines in ReQU form, the
//!   order-raising recursion, and least-squares tensor-product spline fits.
//! - [`ratnet`]: rational neural networks, the constructive spline network
//!   (exact-ReQU oracle mode or Newman-substituted), and symbolic collapse
//!   to a single multivariate rational.
//! - [`symreg`]: cancellation networks alternating rational stages with
//!   fixed activations, plus convergence scans.
//! - [`harness`]: target-function registry, grid-based C⁰/C¹ sup-error
//!   estimation, and convergence-rate fitting.
//! - [`acceptance`]: the end-to-end verification suite used both by
//!   `cargo test` and the `ratc1 selftest` subcommand.

pub mod acceptance;
pub mod bspline;
pub mod harness;
pub mod newman;
pub mod poly;
pub mod ratnet;
pub mod symreg;

mod dd;



pub use bspline::{fit_spline, Activation, BSplineBasis, KnotVector, TensorSpline};
pub use harness::{c1_error, fit_rate, ErrorReport, GridSpec, RateFit, TargetFunction};
pub use newman::{NewmanBasis, ReQUApproximant, Variant};
pub use poly::{DensePolynomial, MultiRational, RationalFunction, SparseMultiPolynomial};
pub use ratnet::{build_spline_net, collapse_to_rational, BuildConfig, RationalNetwork, RationalNode};
pub use symreg::{build_cancellation_net, convergence_scan, BaseActivation, SymbolicNet};


