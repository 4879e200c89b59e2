//! Grid-based C⁰/C¹ sup-error estimation.

use rayon::prelude::*;

use super::{C1Map, HarnessError};

/// Uniform evaluation grid: `points_per_axis` points per axis (endpoints
/// included) on `[lo, hi]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub points_per_axis: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GridSpec {
    pub fn unit(d: usize, points_per_axis: usize) -> Self {
        GridSpec {
            d,
            points_per_axis: points_per_axis.max(2),
            lo: 0.0,
            hi: 1.0,
        }
    }

    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.d as u32)
    }

    fn axis_coord(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / (self.points_per_axis - 1) as f64
    }

    /// Grid point for a flat index, axis 0 slowest.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rest = flat;
        let mut out = vec![0.0; self.d];
        for l in (0..self.d).rev() {
            out[l] = self.axis_coord(rest % self.points_per_axis);
            rest /= self.points_per_axis;
        }
        out
    }
}

/// Grid sup errors of `g` against `f`. The C¹ figure is the sum of the
/// value sup and the gradient max-norm sup, so it always dominates C⁰.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub grid: GridSpec,
    pub c0_error: f64,
    pub grad_error: f64,
    pub c1_error: f64,
    pub argmax_c0: Vec<f64>,
    pub argmax_grad: Vec<f64>,
}

/// Sup over the grid of `|f - g|` and of the max-norm Jacobian difference.
/// Points evaluate in parallel; the reduction runs sequentially in index
/// order, so the report (including argmax locations) is deterministic.
pub fn c1_error(f: &dyn C1Map, g: &dyn C1Map, grid: &GridSpec) -> Result<ErrorReport, HarnessError> {
    if f.input_dim() != g.input_dim() || f.output_dim() != g.output_dim() {
        return Err(HarnessError::ArgumentError(format!(
            "shape mismatch: f is {}->{}, g is {}->{}",
            f.input_dim(),
            f.output_dim(),
            g.input_dim(),
            g.output_dim()
        )));
    }
    if f.input_dim() != grid.d {
        return Err(HarnessError::ArgumentError(format!(
            "grid dimension {} does not match map dimension {}",
            grid.d,
            f.input_dim()
        )));
    }
    let total = grid.total_points();
    let per_point: Result<Vec<(f64, f64)>, HarnessError> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let x = grid.point(flat);
            let (fv, fj) = f.value_and_jacobian(&x)?;
            let (gv, gj) = g.value_and_jacobian(&x)?;
            let mut dv: f64 = 0.0;
            for m in 0..fv.len() {
                dv = dv.max((fv[m] - gv[m]).abs());
            }
            let mut dj: f64 = 0.0;
            for m in 0..fj.len() {
                for l in 0..fj[m].len() {
                    dj = dj.max((fj[m][l] - gj[m][l]).abs());
                }
            }
            Ok((dv, dj))
        })
        .collect();
    let per_point = per_point?;

    let mut c0 = 0.0;
    let mut grad = 0.0;
    let mut arg_c0 = 0;
    let mut arg_grad = 0;
    for (i, &(dv, dj)) in per_point.iter().enumerate() {
        if dv > c0 {
            c0 = dv;
            arg_c0 = i;
        }
        if dj > grad {
            grad = dj;
            arg_grad = i;
        }
    }
    Ok(ErrorReport {
        grid: grid.clone(),
        c0_error: c0,
        grad_error: grad,
        c1_error: c0 + grad,
        argmax_c0: grid.point(arg_c0),
        argmax_grad: grid.point(arg_grad),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::TargetFunction;

    #[test]
    fn identical_maps_report_zero() {
        let f = TargetFunction::lookup("sin2pi", 1).unwrap();
        let g = f.clone();
        let r = c1_error(&f, &g, &GridSpec::unit(1, 1001)).unwrap();
        assert!(r.c0_error <= 1e-14);
        assert!(r.c1_error <= 1e-14);
    }

    #[test]
    fn constant_offset_moves_only_c0() {
        fn shifted(x: &[f64]) -> Vec<f64> {
            vec![(2.0 * std::f64::consts::PI * x[0]).sin() + 0.1]
        }
        fn shifted_grad(x: &[f64]) -> Vec<Vec<f64>> {
            let t = 2.0 * std::f64::consts::PI;
            vec![vec![t * (t * x[0]).cos()]]
        }
        let f = TargetFunction::lookup("sin2pi", 1).unwrap();
        let g = TargetFunction::custom("sin2pi+0.1", 1, 1, shifted, shifted_grad, 3.0);
        let r = c1_error(&f, &g, &GridSpec::unit(1, 1001)).unwrap();
        assert!((r.c0_error - 0.1).abs() < 1e-12);
        assert!(r.grad_error < 1e-12);
        assert!((r.c1_error - 0.1).abs() < 1e-12);
        assert!(r.c1_error >= r.c0_error);
    }

    #[test]
    fn reports_are_bit_identical_across_runs() {
        let f = TargetFunction::lookup("runge", 1).unwrap();
        let g = TargetFunction::lookup("gauss", 1).unwrap();
        let a = c1_error(&f, &g, &GridSpec::unit(1, 5001)).unwrap();
        let b = c1_error(&f, &g, &GridSpec::unit(1, 5001)).unwrap();
        assert_eq!(a.c0_error.to_bits(), b.c0_error.to_bits());
        assert_eq!(a.c1_error.to_bits(), b.c1_error.to_bits());
        assert_eq!(a.argmax_c0, b.argmax_c0);
    }

    #[test]
    fn spline_fit_reports_are_bit_identical() {
        use crate::bspline::{fit_spline, FitOptions};
        let f = TargetFunction::lookup("sin2pi", 1).unwrap();
        let run = || {
            let spline =
                fit_spline(&|x: &[f64]| f.value(x), 3, 8, 1, 1, &FitOptions::default()).unwrap();
            c1_error(&f, &spline, &GridSpec::unit(1, 2001)).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.c0_error.to_bits(), b.c0_error.to_bits());
        assert_eq!(a.grad_error.to_bits(), b.grad_error.to_bits());
        assert_eq!(a.c1_error.to_bits(), b.c1_error.to_bits());
    }

    #[test]
    fn grid_points_cover_the_box() {
        let g = GridSpec::unit(2, 3);
        assert_eq!(g.total_points(), 9);
        assert_eq!(g.point(0), vec![0.0, 0.0]);
        assert_eq!(g.point(1), vec![0.0, 0.5]);
        assert_eq!(g.point(8), vec![1.0, 1.0]);
    }
}
