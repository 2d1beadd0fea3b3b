//! Propagation of jump discontinuities for integrable kernels (β < n).
//!
//! With α the kernel mass, u = v + e^{−αt} f where v̂_k = f̂_k(1 − e^{−(m+α)t})e^{mt}
//! is continuous; jumps of u are those of f scaled by e^{−αt}.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Measurement};
use crate::compensated::CompensatedSum;
use crate::error::{Error, Result};
use crate::multiplier::{alpha_constant, multiplier_table, MultiplierTable, OperatorParams};
use crate::profiles::{builtin_profile, Breakpoint, Profile, Side};
use crate::torus::{synthesize, synthesize_grid, SpectralField, TorusGeometry};

#[derive(Debug, Clone)]
pub struct JumpDecomposition {
    pub alpha: f64,
    pub t: f64,
    /// e^{−αt}.
    pub g: f64,
    pub v_field: SpectralField,
    /// ĥ_k = f̂_k (m(ν_k) + α), the convolution part of L f.
    pub h_field: SpectralField,
    pub jump_locations: Vec<Breakpoint>,
}

fn v_coefficients(f: &SpectralField, m: &[f64], alpha: f64, t: f64) -> SpectralField {
    f.par_map_indexed(true, |i, c| {
        c * (-(-(m[i] + alpha) * t).exp_m1() * (m[i] * t).exp())
    })
}

/// Splits the solution with initial data f at time t into v and e^{−αt}f.
pub fn jump_decomposition(
    f: &SpectralField,
    table: &MultiplierTable,
    t: f64,
    breakpoints: Vec<Breakpoint>,
) -> Result<JumpDecomposition> {
    f.check_same_geometry(table.geometry())?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "time must be finite and ≥ 0 (got {t})"
        )));
    }
    let alpha = alpha_constant(table.params())?;
    let m = table.values();
    Ok(JumpDecomposition {
        alpha,
        t,
        g: (-alpha * t).exp(),
        v_field: v_coefficients(f, m, alpha, t),
        h_field: f.par_map_indexed(true, |i, c| c * (m[i] + alpha)),
        jump_locations: breakpoints,
    })
}

impl JumpDecomposition {
    /// v + e^{−αt} f, which equals e^{mt} f̂ up to rounding.
    pub fn reconstruct(&self, f: &SpectralField) -> Result<SpectralField> {
        self.v_field.add(&f.scale(self.g))
    }

    /// H⁰ norm of (v(t+h) − v(t−h))/(2h) − L v(t) − e^{−αt} h.
    pub fn v_equation_residual(
        &self,
        f: &SpectralField,
        table: &MultiplierTable,
        h: f64,
    ) -> Result<f64> {
        if !(h > 0.0 && h < self.t) {
            return Err(Error::InvalidParams(format!(
                "residual needs 0 < h < t (h = {h}, t = {})",
                self.t
            )));
        }
        let m = table.values();
        let plus = v_coefficients(f, m, self.alpha, self.t + h);
        let minus = v_coefficients(f, m, self.alpha, self.t - h);
        let mut sum = CompensatedSum::default();
        for i in 0..m.len() {
            let dv = (plus.coeffs()[i] - minus.coeffs()[i]) / (2.0 * h);
            let rhs = self.v_field.coeffs()[i] * m[i] + self.h_field.coeffs()[i] * self.g;
            sum.add((dv - rhs).norm_sqr());
        }
        Ok(sum.value().sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityCheck {
    /// Offset used for the one-sided evaluations: one grid cell, r/(2K+1).
    pub epsilon: f64,
    /// (x, s(x+ε) − s(x−ε)) for each candidate point.
    pub one_sided: Vec<(f64, f64)>,
    pub max_one_sided_jump: f64,
    /// Σ_{|k|>K/2} |ĉ_k|; a small value bounds the uniform distance between the
    /// series and its half-bandwidth truncation.
    pub tail_certificate: f64,
}

/// One-sided differences of a 1-D series at the candidate points, plus the
/// absolute-coefficient tail.
pub fn continuity_check(field: &SpectralField, candidates: &[f64]) -> Result<ContinuityCheck> {
    let geom = field.geometry();
    if geom.dim() != 1 {
        return Err(Error::InvalidParams(
            "continuity check is one-dimensional".into(),
        ));
    }
    let k = geom.bandwidth() as i64;
    let eps = geom.periods()[0] / geom.side() as f64;
    let points: Vec<Vec<f64>> = candidates
        .iter()
        .flat_map(|&x| [vec![x + eps], vec![x - eps]])
        .collect();
    let values = synthesize(field, &points)?;
    let one_sided: Vec<(f64, f64)> = candidates
        .iter()
        .zip(values.chunks(2))
        .map(|(&x, v)| (x, (v[0] - v[1]).re))
        .collect();
    let max_one_sided_jump = one_sided.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let mut tail = CompensatedSum::default();
    for (i, c) in field.coeffs().iter().enumerate() {
        if 2 * (i as i64 - k).abs() > k {
            tail.add(c.norm());
        }
    }
    Ok(ContinuityCheck {
        epsilon: eps,
        one_sided,
        max_one_sided_jump,
        tail_certificate: tail.value(),
    })
}

/// Defaults reproduce the published figure: (−10, 10), δ = 1, β = 1/3, the
/// sawtooth pair, t ∈ {0, 0.05, 0.1, 0.2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpDecayConfig {
    pub interval: (f64, f64),
    pub delta: f64,
    pub beta: f64,
    pub profile: Profile,
    pub times: Vec<f64>,
    pub bandwidth: usize,
    /// Bound on |measured jump − e^{−αt}[f]|, i.e. on the one-sided [v].
    pub jump_tolerance: f64,
    /// Bound on the v-part tail certificate.
    pub certificate_tolerance: f64,
    /// Physical profile samples per period.
    pub output_points: usize,
}

impl Default for JumpDecayConfig {
    fn default() -> Self {
        Self {
            interval: (-10.0, 10.0),
            delta: 1.0,
            beta: 1.0 / 3.0,
            profile: Profile::SawtoothPair,
            times: vec![0.0, 0.05, 0.1, 0.2],
            bandwidth: 1_000_000,
            jump_tolerance: 1e-3,
            certificate_tolerance: 1e-4,
            output_points: 2048,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredJump {
    pub location: f64,
    /// [f] at this location.
    pub initial_jump: f64,
    /// One-sided [v].
    pub v_jump: f64,
    /// e^{−αt}[f] + [v].
    pub measured: f64,
    /// e^{−αt}[f].
    pub expected: f64,
}

/// u(x⁻), u(x⁺) and the envelope at one output point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub x: f64,
    pub u_left: f64,
    pub u_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// e^{−αt}; the figure's dashed lines are ±envelope.
    pub envelope: f64,
    pub jumps: Vec<MeasuredJump>,
    pub certificate: f64,
    pub profile: Vec<ProfileRow>,
}

#[derive(Debug, Clone)]
pub struct JumpDecayResult {
    pub alpha: f64,
    pub snapshots: Vec<Snapshot>,
    pub report: ExperimentReport,
}

pub fn jump_decay_experiment(config: &JumpDecayConfig) -> Result<JumpDecayResult> {
    let start = Instant::now();
    let (a, b) = config.interval;
    if !(b > a) {
        return Err(Error::InvalidParams(format!("empty interval ({a}, {b})")));
    }
    if !config.profile.is_piecewise() {
        return Err(Error::InvalidParams(format!(
            "profile `{}` has no breakpoints to follow",
            config.profile
        )));
    }
    if config.output_points < 2 {
        return Err(Error::InvalidParams(
            "need at least two output points".into(),
        ));
    }
    for &t in &config.times {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time must be finite and ≥ 0 (got {t})"
            )));
        }
    }
    let period = b - a;
    let params = OperatorParams::new(1, config.delta, config.beta)?;
    let geom = TorusGeometry::new(vec![period], config.bandwidth)?;
    let table = multiplier_table(&params, &geom)?;
    let f = builtin_profile(&config.profile, &geom)?;
    let breakpoints = config.profile.breakpoints();
    let locations: Vec<f64> = breakpoints.iter().map(|bp| bp.location).collect();

    // FFT length: a power-of-two multiple of the output count covering 2K+1.
    let mut fft_len = config.output_points;
    while fft_len < geom.side() {
        fft_len *= 2;
    }
    let stride = fft_len / config.output_points;

    let mut snapshots = Vec::with_capacity(config.times.len());
    let mut alpha = 0.0;
    for &t in &config.times {
        let dec = jump_decomposition(&f, &table, t, breakpoints.clone())?;
        alpha = dec.alpha;
        let check = continuity_check(&dec.v_field, &locations)?;
        let jumps = breakpoints
            .iter()
            .zip(&check.one_sided)
            .map(|(bp, &(_, dv))| MeasuredJump {
                location: bp.location,
                initial_jump: bp.jump,
                v_jump: dv,
                measured: dec.g * bp.jump + dv,
                expected: dec.g * bp.jump,
            })
            .collect();
        let grid = synthesize_grid(&dec.v_field, &[a], &[fft_len])?;
        let profile = (0..=config.output_points)
            .map(|j| {
                let x = a + period * j as f64 / config.output_points as f64;
                let v = grid.values[(j * stride) % fft_len].re;
                let side = |s| config.profile.limit(x, period, s).expect("piecewise");
                ProfileRow {
                    x,
                    u_left: v + dec.g * side(Side::Left),
                    u_right: v + dec.g * side(Side::Right),
                }
            })
            .collect();
        snapshots.push(Snapshot {
            t,
            envelope: dec.g,
            jumps,
            certificate: check.tail_certificate,
            profile,
        });
    }

    let mut report = ExperimentReport::new("jump-decay");
    report
        .param("interval", format!("({a}, {b})"))
        .param("delta", config.delta)
        .param("beta", config.beta)
        .param("profile", &config.profile)
        .param("bandwidth", config.bandwidth);
    report.push(Measurement::info("alpha", alpha));
    let significant: Vec<f64> = breakpoints
        .iter()
        .filter(|bp| bp.jump != 0.0)
        .map(|bp| bp.location)
        .collect();
    for s in &snapshots {
        for j in &s.jumps {
            report.push(Measurement::near(
                format!("jump[t={}][x={}]", s.t, j.location),
                j.measured,
                j.expected,
                config.jump_tolerance,
            ));
        }
        report.push(Measurement::below(
            format!("certificate[t={}]", s.t),
            s.certificate,
            config.certificate_tolerance,
        ));
        let found: Vec<f64> = s
            .jumps
            .iter()
            .filter(|j| j.measured.abs() > config.jump_tolerance)
            .map(|j| j.location)
            .collect();
        report.push(Measurement::check(
            format!("locations[t={}]", s.t),
            found.len() as f64,
            s.envelope
                * breakpoints
                    .iter()
                    .map(|bp| bp.jump.abs())
                    .fold(0.0, f64::max)
                <= config.jump_tolerance
                || found == significant,
        ));
    }
    report.note(format!(
        "jumps decay exactly like exp(-{}t); the published caption calls this slow decay",
        alpha
    ));
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(JumpDecayResult {
        alpha,
        snapshots,
        report,
    })
}
