//! Symbolic collapse of a rational network to explicit rational functions.

use super::{NetError, RationalNetwork};
use crate::poly::MultiRational;

/// Default term cap for collapse compositions.
pub const DEFAULT_COLLAPSE_TERM_CAP: usize = 200_000;

/// Recorded slack constant for the collapsed degree bound: the stored
/// representation degree stays within
/// `COLLAPSE_DEGREE_SLACK * d * (N+q)^d * (M+1)` on the tested family.
pub const COLLAPSE_DEGREE_SLACK: f64 = 1.0;

/// Composes all layers symbolically, returning one multivariate rational
/// per output component. Requires a non-oracle network; guarded by a term
/// cap since representation size grows quickly with `N`, `M` and depth.
///
/// Intermediate states keep their denominators factored so each distinct
/// activation denominator appears once in the common denominator; expanding
/// the duplicated product instead would square both the degree and the
/// coefficient conditioning. Positivity of the result's denominator is
/// inherited from the factors (activation denominators have positive even
/// coefficients; all other node denominators are 1), which is also why no
/// probe of the expanded coefficients runs here: their cancellation outruns
/// f64 exactly when N and M grow.
pub fn collapse_to_rational(
    net: &RationalNetwork,
    term_cap: usize,
) -> Result<Vec<MultiRational>, NetError> {
    if net.oracle_mode() {
        return Err(NetError::OracleMode(
            "collapse is defined for rational (non-oracle) networks".into(),
        ));
    }
    let d = net.input_dim();
    let mut state: Vec<crate::poly::FactoredRational> = (0..d)
        .map(|v| crate::poly::FactoredRational::identity(d, v))
        .collect();
    for layer in net.layers() {
        let mut next = Vec::with_capacity(layer.len());
        for node in layer {
            let outer = node.as_rational()?;
            next.push(outer.compose_factored(&state, term_cap)?);
        }
        state = next;
    }
    state
        .iter()
        .map(|r| Ok(r.expand(term_cap)?))
        .collect()
}
