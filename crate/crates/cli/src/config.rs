//! JSON run configuration.

use std::path::{Path, PathBuf};

use clap::Subcommand;
use serde::{Deserialize, Serialize};

use nldiff_core::analysis::JumpDecayConfig;
use nldiff_core::{OperatorParams, Profile, TorusGeometry};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum CommandId {
    /// Tabulate the symbol against the quadrature oracle and the asymptotics.
    Multiplier,
    /// Evolve a profile and write physical-space snapshots.
    Solve,
    /// Error against the classical solution as δ shrinks.
    ConvergeDelta,
    /// Error against the classical solution as β approaches n+2.
    ConvergeBeta,
    /// Decay of jump discontinuities (the published figure).
    JumpDecay,
    /// Coefficient-decay fits against the guaranteed Sobolev gains.
    Regularity,
    /// Quick property checks of the solver.
    Selftest,
}

impl CommandId {
    pub fn name(&self) -> &'static str {
        match self {
            CommandId::Multiplier => "multiplier",
            CommandId::Solve => "solve",
            CommandId::ConvergeDelta => "converge-delta",
            CommandId::ConvergeBeta => "converge-beta",
            CommandId::JumpDecay => "jump-decay",
            CommandId::Regularity => "regularity",
            CommandId::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcingKind {
    /// The profile is the initial condition; no source.
    #[default]
    Initial,
    /// Zero initial condition; the profile is the source.
    Source,
}

/// ‖ν‖ values min + (max − min)·j/(points − 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for NuGrid {
    fn default() -> Self {
        Self {
            min: 0.0,
            max: 500.0,
            points: 201,
        }
    }
}

impl NuGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|j| self.min + (self.max - self.min) * j as f64 / (self.points - 1) as f64)
            .collect()
    }
}

/// Every field has a default; with no overrides and `command = jump-decay`
/// the run reproduces the published figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandId>,
    pub n: usize,
    pub delta: f64,
    pub beta: f64,
    /// Physical window [a, b) on every axis; the period is b − a.
    pub interval: (f64, f64),
    /// Fourier bandwidth K; the per-command default when absent.
    pub bandwidth: Option<usize>,
    pub profile: Profile,
    /// Coefficient CSV (k1..kn, re, im) used instead of `profile`.
    pub input_field: Option<PathBuf>,
    /// Extra source term for `solve`.
    pub source: Option<Profile>,
    pub forcing: ForcingKind,
    /// Output times; the per-command default when absent.
    pub times: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    /// Sobolev indices at which errors are reported.
    pub sobolev: Vec<f64>,
    /// Sobolev index of the data for regularity fits; fitted from the data
    /// when absent.
    pub initial_sobolev: Option<f64>,
    pub nu_grid: NuGrid,
    /// Main assertion tolerance; the per-command default when absent.
    pub tolerance: Option<f64>,
    pub certificate_tolerance: f64,
    pub output_points: usize,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub svg: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fig = JumpDecayConfig::default();
        Self {
            command: None,
            n: 1,
            delta: fig.delta,
            beta: fig.beta,
            interval: fig.interval,
            bandwidth: None,
            profile: fig.profile,
            input_field: None,
            source: None,
            forcing: ForcingKind::Initial,
            times: None,
            deltas: None,
            betas: None,
            sobolev: vec![0.0],
            initial_sobolev: None,
            nu_grid: NuGrid::default(),
            tolerance: None,
            certificate_tolerance: fig.certificate_tolerance,
            output_points: fig.output_points,
            out: None,
            threads: None,
            svg: true,
            seed: 20240601,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn command(&self) -> CliResult<CommandId> {
        self.command
            .ok_or_else(|| CliError::Config("no command given".into()))
    }

    pub fn params(&self) -> CliResult<OperatorParams> {
        Ok(OperatorParams::new(self.n, self.delta, self.beta)?)
    }

    pub fn period(&self) -> CliResult<f64> {
        let (a, b) = self.interval;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(CliError::Config(format!("empty interval ({a}, {b})")));
        }
        Ok(b - a)
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth.unwrap_or(match self.command {
            Some(CommandId::JumpDecay) => JumpDecayConfig::default().bandwidth,
            _ if self.n > 1 => 128,
            _ => 4096,
        })
    }

    pub fn geometry(&self) -> CliResult<TorusGeometry> {
        Ok(TorusGeometry::cube(
            self.n,
            self.period()?,
            self.bandwidth(),
        )?)
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone().unwrap_or_else(|| match self.command {
            Some(CommandId::ConvergeDelta | CommandId::ConvergeBeta) => vec![0.1],
            Some(CommandId::Regularity) => vec![0.25],
            _ => JumpDecayConfig::default().times,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.command {
            Some(CommandId::Multiplier) => 1e-8,
            Some(CommandId::Solve) => 1e-12,
            Some(CommandId::Regularity) => 0.05,
            Some(CommandId::Selftest) => 1e-10,
            _ => 1e-3,
        })
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.deltas
            .clone()
            .unwrap_or_else(nldiff_core::analysis::default_delta_sweep)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.betas.clone().unwrap_or_else(|| match self.command {
            Some(CommandId::Regularity) => {
                let n = self.n as f64;
                vec![n / 3.0, n, n + 1.0]
            }
            _ => nldiff_core::analysis::default_beta_sweep(self.n),
        })
    }

    pub fn jump_decay(&self) -> CliResult<JumpDecayConfig> {
        if self.n != 1 {
            return Err(CliError::Config(format!(
                "jump-decay is one-dimensional (got n = {})",
                self.n
            )));
        }
        Ok(JumpDecayConfig {
            interval: self.interval,
            delta: self.delta,
            beta: self.beta,
            profile: self.profile.clone(),
            times: self.times(),
            bandwidth: self.bandwidth(),
            jump_tolerance: self.tolerance(),
            certificate_tolerance: self.certificate_tolerance,
            output_points: self.output_points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_published_figure() {
        let c = RunConfig::from_json(r#"{"command": "jump-decay"}"#).unwrap();
        assert_eq!(c.jump_decay().unwrap(), JumpDecayConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.command = Some(CommandId::ConvergeBeta);
        c.profile = Profile::SingleMode(vec![3]);
        c.betas = Some(vec![2.0, 2.5]);
        c.interval = (-0.5, 0.5);
        c.tolerance = Some(1e-6);
        c.beta = 0.1 + 0.2;
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_json(r#"{"command": "solve", "dleta": 1}"#).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::EXIT_CONFIG);
        assert!(
            RunConfig::from_json(r#"{"nu_grid": {"min": 0, "max": 1, "points": 2, "x": 0}}"#)
                .is_err()
        );
        assert!(RunConfig::from_json(r#"{"profile": "zigzag"}"#).is_err());
        assert!(RunConfig::from_json(r#"{"command": "plot"}"#).is_err());
    }

    #[test]
    fn per_command_defaults() {
        let mut c = RunConfig::default();
        c.command = Some(CommandId::Regularity);
        assert_eq!(c.bandwidth(), 4096);
        assert_eq!(c.times(), vec![0.25]);
        assert_eq!(c.tolerance(), 0.05);
        c.command = Some(CommandId::Multiplier);
        assert_eq!(c.tolerance(), 1e-8);
        assert_eq!(c.nu_grid.values().len(), 201);
        assert_eq!(c.nu_grid.values()[200], 500.0);
    }
}
