//! Convergence-rate fitting by least squares on transformed coordinates.

use super::HarnessError;

/// Which abscissa transform the slope is fitted in: `log y` against `log x`
/// (algebraic rates `x^slope`) or against `sqrt x` (rates `exp(slope sqrt x)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbscissaMode {
    LogLog,
    SqrtAbscissa,
}

#[derive(Clone, Debug)]
pub struct RateFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub mode: AbscissaMode,
}

/// Ordinary least squares of `ln y` on the transformed abscissa.
pub fn fit_rate(series: &[(f64, f64)], mode: AbscissaMode) -> Result<RateFit, HarnessError> {
    if series.len() < 3 {
        return Err(HarnessError::DegenerateSeries(format!(
            "need at least 3 points, got {}",
            series.len()
        )));
    }
    for &(x, y) in series {
        if y <= 0.0 {
            return Err(HarnessError::DegenerateSeries(format!(
                "error value {y} at x = {x} is not positive; log undefined"
            )));
        }
        if x <= 0.0 {
            return Err(HarnessError::DegenerateSeries(format!(
                "abscissa {x} is not positive"
            )));
        }
    }
    let ts: Vec<f64> = series
        .iter()
        .map(|&(x, _)| match mode {
            AbscissaMode::LogLog => x.ln(),
            AbscissaMode::SqrtAbscissa => x.sqrt(),
        })
        .collect();
    let us: Vec<f64> = series.iter().map(|&(_, y)| y.ln()).collect();
    let n = ts.len() as f64;
    let tbar = ts.iter().sum::<f64>() / n;
    let ubar = us.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stu = 0.0;
    for (t, u) in ts.iter().zip(us.iter()) {
        stt += (t - tbar) * (t - tbar);
        stu += (t - tbar) * (u - ubar);
    }
    if stt == 0.0 {
        return Err(HarnessError::DegenerateSeries(
            "all abscissa values coincide".into(),
        ));
    }
    let slope = stu / stt;
    let intercept = ubar - slope * tbar;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (t, u) in ts.iter().zip(us.iter()) {
        let pred = intercept + slope * t;
        ss_res += (u - pred) * (u - pred);
        ss_tot += (u - ubar) * (u - ubar);
    }
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        xs: series.iter().map(|&(x, _)| x).collect(),
        ys: series.iter().map(|&(_, y)| y).collect(),
        slope,
        intercept,
        r2,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_in_loglog() {
        let series: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, x.powi(-2)))
            .collect();
        let fit = fit_rate(&series, AbscissaMode::LogLog).unwrap();
        assert!((fit.slope + 2.0).abs() <= 1e-10);
        assert!((fit.r2 - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn exact_exponential_in_sqrt_mode() {
        let series: Vec<(f64, f64)> = [4.0f64, 9.0, 16.0, 25.0]
            .iter()
            .map(|&x| (x, (-x.sqrt()).exp()))
            .collect();
        let fit = fit_rate(&series, AbscissaMode::SqrtAbscissa).unwrap();
        assert!((fit.slope + 1.0).abs() <= 1e-10);
    }

    #[test]
    fn degenerate_series_is_rejected() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)], AbscissaMode::LogLog).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.5)], AbscissaMode::LogLog).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (1.0, 0.5), (1.0, 0.25)], AbscissaMode::LogLog).is_err());
    }
}
