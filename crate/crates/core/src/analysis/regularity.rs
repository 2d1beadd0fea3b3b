//! Coefficient-decay fits and the Sobolev indices they imply.

use serde::{Deserialize, Serialize};

use super::fit_line;
use crate::error::{Error, Result};
use crate::multiplier::OperatorParams;
use crate::torus::SpectralField;

pub const DEFAULT_EPSILON1: f64 = 0.01;
pub const DEFAULT_EPSILON2: f64 = 0.02;

/// Fewest nonzero shells accepted in the fitting band.
const MIN_SHELLS: usize = 64;
/// Largest accepted RMS residual of the log-log fit (natural-log units).
const MAX_FIT_RESIDUAL: f64 = 0.25;
/// Second-half slope steeper than the first half by this factor marks decay
/// faster than any power.
const STEEPENING_RATIO: f64 = 1.2;

/// Which solution the fitted field is, and with what parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityTheory {
    pub params: OperatorParams,
    pub t: f64,
    pub sourced: bool,
    pub epsilon: f64,
}

impl RegularityTheory {
    pub fn homogeneous(params: OperatorParams, t: f64) -> Self {
        Self {
            params,
            t,
            sourced: false,
            epsilon: DEFAULT_EPSILON1,
        }
    }

    pub fn sourced(params: OperatorParams, t: f64) -> Self {
        Self {
            params,
            t,
            sourced: true,
            epsilon: DEFAULT_EPSILON1,
        }
    }

    /// The guaranteed index p for data in H^s.
    pub fn index(&self, s: f64) -> f64 {
        let n = self.params.dim();
        let beta = self.params.beta;
        let delta = self.params.delta;
        if self.sourced {
            if beta <= n {
                s
            } else {
                s + beta - n
            }
        } else if beta < n {
            s
        } else if beta == n {
            s + 4.0 * n * self.t * (1.0 - self.epsilon) / (delta * delta)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityFit {
    /// Slope of log max|coeff| against log‖k‖ over the band.
    pub fitted_decay_exponent: f64,
    /// −exponent − n/2, or +∞ when the decay is faster than any power.
    pub implied_sobolev_index: f64,
    pub theory_index: f64,
    pub epsilon_used: f64,
    pub super_polynomial: bool,
    pub fit_residual: f64,
    pub shells_used: usize,
}

impl RegularityFit {
    /// Implied index at least the guaranteed one, up to `tol`.
    pub fn consistent(&self, tol: f64) -> bool {
        self.implied_sobolev_index >= self.theory_index - tol
    }
}

/// (shell, max |coeff| over lattice points with round(‖k‖) = shell).
pub fn shell_maxima(field: &SpectralField) -> Vec<(usize, f64)> {
    let ksq = field.geometry().k_norm_sq_all();
    let top = ksq.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt().round() as usize;
    let mut max = vec![0.0f64; top + 1];
    for (c, k2) in field.coeffs().iter().zip(ksq) {
        let shell = k2.sqrt().round() as usize;
        max[shell] = max[shell].max(c.norm());
    }
    max.into_iter().enumerate().collect()
}

/// Power-law fit of the shell maxima over ‖k‖ ∈ [K/8, K/2].
pub fn regularity_fit(
    field: &SpectralField,
    s_init: f64,
    theory: &RegularityTheory,
) -> Result<RegularityFit> {
    if !(theory.epsilon > 0.0 && theory.epsilon < 1.0) {
        return Err(Error::InvalidParams(format!(
            "ε must lie in (0, 1) (got {})",
            theory.epsilon
        )));
    }
    let k = field.geometry().bandwidth();
    let (lo, hi) = (k.div_ceil(8), k / 2);
    let band: Vec<(usize, f64)> = shell_maxima(field)
        .into_iter()
        .filter(|&(s, _)| s >= lo.max(1) && s <= hi)
        .collect();
    let nonzero: Vec<(f64, f64)> = band
        .iter()
        .filter(|&&(_, m)| m > 0.0)
        .map(|&(s, m)| ((s as f64).ln(), m.ln()))
        .collect();
    let theory_index = theory.index(s_init);
    let n = field.geometry().dim() as f64;

    // Exact zeros inside a band of nonzero shells mean underflow of e^{mt}.
    let underflow = nonzero.len() >= MIN_SHELLS && nonzero.len() < band.len();
    if nonzero.len() < MIN_SHELLS {
        return Err(Error::InsufficientData(format!(
            "{} nonzero shells in [{lo}, {hi}], need {MIN_SHELLS}",
            nonzero.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = nonzero.iter().copied().unzip();
    let whole = fit_line(&x, &y)?;
    let half = x.len() / 2;
    let first = fit_line(&x[..half], &y[..half])?;
    let second = fit_line(&x[half..], &y[half..])?;
    let steepening = first.slope < 0.0 && second.slope < STEEPENING_RATIO * first.slope;
    let super_polynomial = underflow || steepening;

    if !super_polynomial && whole.rms_residual > MAX_FIT_RESIDUAL {
        return Err(Error::FitUnstable {
            residual: whole.rms_residual,
            threshold: MAX_FIT_RESIDUAL,
        });
    }
    let implied = if super_polynomial {
        f64::INFINITY
    } else {
        -whole.slope - n / 2.0
    };
    Ok(RegularityFit {
        fitted_decay_exponent: whole.slope,
        implied_sobolev_index: implied,
        theory_index,
        epsilon_used: theory.epsilon,
        super_polynomial,
        fit_residual: whole.rms_residual,
        shells_used: x.len(),
    })
}
