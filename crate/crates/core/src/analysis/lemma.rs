//! Decay rate of |m(ν) + α| for integrable kernels.
//!
//! |m + α| is the sum of an algebraic term ~‖ν‖^{β−n} and an oscillating term
//! ~‖ν‖^{−(n+1)/2}. The fit uses the maximum over short windows spanning a few
//! oscillation periods, which follows the envelope of whichever term dominates.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_line, ExperimentReport, Measurement};
use crate::error::{Error, Result};
use crate::multiplier::{alpha_constant, multiplier_radial, OperatorParams};

/// Relative tolerance on the fitted exponent.
pub const EXPONENT_REL_TOL: f64 = 0.05;
const MAX_FIT_RESIDUAL: f64 = 0.1;

/// Windows of two oscillation periods (2·2π/δ) at log-spaced centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    /// Smallest and largest window start, in units of 1/δ.
    pub lo: f64,
    pub hi: f64,
    pub windows: usize,
    pub samples_per_window: usize,
}

impl Default for WindowGrid {
    fn default() -> Self {
        Self {
            lo: 1e3,
            hi: 1e5,
            windows: 40,
            samples_per_window: 128,
        }
    }
}

/// β − n when (n−1)/2 < β < n, otherwise −(n+1)/2.
pub fn expected_m_plus_alpha_exponent(p: &OperatorParams) -> f64 {
    let n = p.dim();
    if p.beta > (n - 1.0) / 2.0 {
        p.beta - n
    } else {
        -(n + 1.0) / 2.0
    }
}

pub fn m_plus_alpha_exponent_fit(
    p: &OperatorParams,
    grid: &WindowGrid,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let alpha = alpha_constant(p)?;
    if grid.windows < 4 || grid.samples_per_window < 2 || !(grid.lo > 0.0 && grid.hi > grid.lo) {
        return Err(Error::InvalidParams(format!(
            "degenerate window grid {grid:?}"
        )));
    }
    let width = 4.0 * PI / p.delta;
    let starts: Vec<f64> = (0..grid.windows)
        .map(|j| {
            let r = j as f64 / (grid.windows - 1) as f64;
            grid.lo * (grid.hi / grid.lo).powf(r) / p.delta
        })
        .collect();
    let maxima: Vec<Result<f64>> = starts
        .par_iter()
        .map(|&a| {
            let mut best = 0.0f64;
            for i in 0..grid.samples_per_window {
                let nu = a + width * i as f64 / (grid.samples_per_window - 1) as f64;
                best = best.max((multiplier_radial(p, nu)?.value + alpha).abs());
            }
            Ok(best)
        })
        .collect();
    let maxima = maxima.into_iter().collect::<Result<Vec<f64>>>()?;
    let x: Vec<f64> = starts.iter().map(|a| (a + width / 2.0).ln()).collect();
    let y: Vec<f64> = maxima.iter().map(|m| m.ln()).collect();
    let fit = fit_line(&x, &y)?;
    if fit.rms_residual > MAX_FIT_RESIDUAL {
        return Err(Error::FitUnstable {
            residual: fit.rms_residual,
            threshold: MAX_FIT_RESIDUAL,
        });
    }
    let expected = expected_m_plus_alpha_exponent(p);
    let mut report = ExperimentReport::new("m-plus-alpha");
    report
        .param("n", p.n)
        .param("delta", p.delta)
        .param("beta", p.beta)
        .param("nu_min", starts[0])
        .param("nu_max", starts[grid.windows - 1] + width)
        .param("windows", grid.windows);
    report.push(Measurement::info("alpha", alpha));
    report.push(Measurement::near(
        "exponent",
        fit.slope,
        expected,
        EXPONENT_REL_TOL * expected.abs(),
    ));
    report.push(Measurement::info("prefactor", fit.intercept.exp()));
    report.push(Measurement::info("fit_rms_residual", fit.rms_residual));
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_branches() {
        let p = |n, b| OperatorParams::new(n, 1.0, b).unwrap();
        assert!((expected_m_plus_alpha_exponent(&p(1, 1.0 / 3.0)) + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(expected_m_plus_alpha_exponent(&p(3, 0.0)), -2.0);
        assert_eq!(expected_m_plus_alpha_exponent(&p(1, -1.0)), -1.0);
        assert_eq!(expected_m_plus_alpha_exponent(&p(2, 1.5)), -0.5);
    }

    #[test]
    fn requires_integrable_kernel() {
        let p = OperatorParams::new(1, 1.0, 1.0).unwrap();
        assert!(m_plus_alpha_exponent_fit(&p, &WindowGrid::default()).is_err());
    }

    #[test]
    fn algebraic_branch_fit() {
        let p = OperatorParams::new(2, 1.0, 1.5).unwrap();
        let grid = WindowGrid {
            windows: 12,
            samples_per_window: 64,
            ..WindowGrid::default()
        };
        let r = m_plus_alpha_exponent_fit(&p, &grid).unwrap();
        assert!(r.pass(), "{r:?}");
    }
}
