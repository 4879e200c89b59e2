//! Target registry, grid-based norm estimation, and rate fitting.

mod grid;
mod rates;
mod targets;

pub use grid::{c1_error, ErrorReport, GridSpec};
pub use rates::{fit_rate, AbscissaMode, RateFit};
pub use targets::TargetFunction;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("evaluation failed: {0}")]
    Eval(#[source] Box<dyn std::error::Error + Send + Sync>),
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("{0}")]
    ArgumentError(String),
}

impl HarnessError {
    pub fn eval(e: impl std::error::Error + Send + Sync + 'static) -> Self {
        HarnessError::Eval(Box::new(e))
    }
}

/// Anything with a value and a Jacobian on a box domain. The error harness
/// compares two of these on a grid.
pub trait C1Map: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<Vec<f64>, HarnessError>;
    /// Value plus Jacobian, `p` rows of `d` entries.
    fn value_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), HarnessError>;
}

impl C1Map for TargetFunction {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.p
    }

    fn value(&self, x: &[f64]) -> Result<Vec<f64>, HarnessError> {
        Ok(TargetFunction::value(self, x))
    }

    fn value_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), HarnessError> {
        Ok((TargetFunction::value(self, x), self.jacobian(x)))
    }
}

impl C1Map for crate::bspline::TensorSpline {
    fn input_dim(&self) -> usize {
        self.dimension()
    }

    fn output_dim(&self) -> usize {
        self.output_dimension()
    }

    fn value(&self, x: &[f64]) -> Result<Vec<f64>, HarnessError> {
        self.eval(x).map_err(HarnessError::eval)
    }

    fn value_and_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), HarnessError> {
        self.eval_with_jacobian(x).map_err(HarnessError::eval)
    }
}
