//! Convergence of the nonlocal solution to the classical one as δ → 0⁺ or
//! β → n+2⁻, measured against the exact classical symbol −‖ν‖².

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Measurement};
use crate::error::Result;
use crate::evolution::{evolve_homogeneous, evolve_sourced};
use crate::multiplier::{classical_table, multiplier_table, MultiplierTable, OperatorParams};
use crate::torus::{sobolev_norm, SobolevIndex, SpectralField};

/// Slack allowed when asserting that an error sequence decreases.
const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum Forcing {
    /// u(·,0) = f, no source.
    Initial(SpectralField),
    /// u(·,0) = 0 with source b.
    Source(SpectralField),
}

impl Forcing {
    fn field(&self) -> &SpectralField {
        match self {
            Forcing::Initial(f) | Forcing::Source(f) => f,
        }
    }

    fn solve(&self, table: &MultiplierTable, t: f64) -> Result<SpectralField> {
        match self {
            Forcing::Initial(f) => evolve_homogeneous(f, table, t),
            Forcing::Source(b) => evolve_sourced(b, table, t),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Forcing::Initial(_) => "initial",
            Forcing::Source(_) => "source",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Delta,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub sweep_value: f64,
    pub s_report: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub kind: SweepKind,
    /// Ordered by sweep position, then by the order of the requested indices.
    pub points: Vec<ConvergencePoint>,
    pub report: ExperimentReport,
}

impl ConvergenceStudy {
    /// Error sequence for one Sobolev index, in sweep order.
    pub fn errors(&self, s: f64) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.s_report == s)
            .map(|p| p.error)
            .collect()
    }
}

/// δ ∈ {1, 1/2, …, 1/64}.
pub fn default_delta_sweep() -> Vec<f64> {
    (0..=6).map(|j| 0.5f64.powi(j)).collect()
}

/// β ∈ {n+1, n+1.5, n+1.9, n+1.99, n+2}.
pub fn default_beta_sweep(n: usize) -> Vec<f64> {
    let n = n as f64;
    vec![n + 1.0, n + 1.5, n + 1.9, n + 1.99, n + 2.0]
}

/// ‖u^{δ,β}(·,t) − u(·,t)‖_{H^s} for each δ in `deltas` (β fixed).
pub fn converge_delta(
    forcing: &Forcing,
    params: &OperatorParams,
    deltas: &[f64],
    t: f64,
    s_reports: &[f64],
    tolerance: f64,
) -> Result<ConvergenceStudy> {
    let sweep: Vec<OperatorParams> = deltas.iter().map(|&d| params.with_delta(d)).collect();
    run(
        SweepKind::Delta,
        forcing,
        params,
        &sweep,
        deltas,
        t,
        s_reports,
        tolerance,
    )
}

/// ‖u^{δ,β}(·,t) − u(·,t)‖_{H^s} for each β in `betas` (δ fixed).
pub fn converge_beta(
    forcing: &Forcing,
    params: &OperatorParams,
    betas: &[f64],
    t: f64,
    s_reports: &[f64],
    tolerance: f64,
) -> Result<ConvergenceStudy> {
    let sweep: Vec<OperatorParams> = betas.iter().map(|&b| params.with_beta(b)).collect();
    run(
        SweepKind::Beta,
        forcing,
        params,
        &sweep,
        betas,
        t,
        s_reports,
        tolerance,
    )
}

#[allow(clippy::too_many_arguments)]
fn run(
    kind: SweepKind,
    forcing: &Forcing,
    base: &OperatorParams,
    sweep: &[OperatorParams],
    values: &[f64],
    t: f64,
    s_reports: &[f64],
    tolerance: f64,
) -> Result<ConvergenceStudy> {
    let start = Instant::now();
    if !(t > 0.0) {
        return Err(crate::Error::InvalidParams(format!(
            "convergence needs t > 0 (got {t})"
        )));
    }
    for p in sweep {
        p.validate()?;
        if p.beta > p.dim() + 2.0 {
            return Err(crate::Error::InvalidParams(format!(
                "convergence to the classical solution needs β ≤ n+2 (got {})",
                p.beta
            )));
        }
    }
    let geom = forcing.field().geometry();
    let reference = forcing.solve(&classical_table(geom, *base), t)?;

    let per_point: Vec<Result<Vec<f64>>> = sweep
        .par_iter()
        .map(|p| {
            let table = multiplier_table(p, geom)?;
            let diff = forcing.solve(&table, t)?.sub(&reference)?;
            Ok(s_reports
                .iter()
                .map(|&s| sobolev_norm(&diff, SobolevIndex(s)))
                .collect())
        })
        .collect();
    let per_point = per_point.into_iter().collect::<Result<Vec<_>>>()?;

    let mut points = Vec::new();
    for (v, errs) in values.iter().zip(&per_point) {
        for (s, e) in s_reports.iter().zip(errs) {
            points.push(ConvergencePoint {
                sweep_value: *v,
                s_report: *s,
                error: *e,
            });
        }
    }

    let id = match kind {
        SweepKind::Delta => "converge-delta",
        SweepKind::Beta => "converge-beta",
    };
    let mut report = ExperimentReport::new(id);
    report
        .param("n", base.n)
        .param("delta", base.delta)
        .param("beta", base.beta)
        .param("t", t)
        .param("forcing", forcing.name())
        .param("bandwidth", geom.bandwidth());
    let label = match kind {
        SweepKind::Delta => "delta",
        SweepKind::Beta => "beta",
    };
    for (j, &s) in s_reports.iter().enumerate() {
        let errs: Vec<f64> = per_point.iter().map(|e| e[j]).collect();
        for (v, e) in values.iter().zip(&errs) {
            report.push(Measurement::info(format!("error[s={s}][{label}={v}]"), *e));
        }
        let decreasing = errs.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
        report.push(Measurement::check(
            format!("decreasing[s={s}]"),
            errs.len() as f64,
            decreasing,
        ));
        if let Some(&last) = errs.last() {
            report.push(Measurement::below(
                format!("final_error[s={s}]"),
                last,
                tolerance,
            ));
        }
    }
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(ConvergenceStudy {
        kind,
        points,
        report,
    })
}
