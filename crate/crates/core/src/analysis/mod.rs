//! Numerical experiments built on the solver: regularity fits, convergence
//! sweeps, the jump-decay decomposition and the |m + α| exponent fits.

mod convergence;
mod jump;
mod lemma;
mod regularity;

pub use convergence::{
    converge_beta, converge_delta, default_beta_sweep, default_delta_sweep, ConvergencePoint,
    ConvergenceStudy, Forcing, SweepKind,
};
pub use jump::{
    continuity_check, jump_decay_experiment, jump_decomposition, ContinuityCheck, JumpDecayConfig,
    JumpDecayResult, JumpDecomposition, MeasuredJump, ProfileRow, Snapshot,
};
pub use lemma::{expected_m_plus_alpha_exponent, m_plus_alpha_exponent_fit, WindowGrid};
pub use regularity::{
    regularity_fit, shell_maxima, RegularityFit, RegularityTheory, DEFAULT_EPSILON1,
    DEFAULT_EPSILON2,
};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest round-trip decimal form; exponent notation outside [1e-5, 1e16).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl Measurement {
    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: None,
            tolerance: None,
            pass: None,
        }
    }

    /// Passes when |value − expected| ≤ tolerance.
    pub fn near(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: Some(expected),
            tolerance: Some(tolerance),
            pass: Some((value - expected).abs() <= tolerance),
        }
    }

    /// Passes when value < bound.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: None,
            tolerance: Some(bound),
            pass: Some(value < bound),
        }
    }

    pub fn check(name: impl Into<String>, value: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            expected: None,
            tolerance: None,
            pass: Some(pass),
        }
    }
}

/// Outcome of one experiment. The CSV form omits `runtime_seconds` so that
/// reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: Vec<(String, String)>,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
    pub runtime_seconds: f64,
}

pub const REPORT_HEADER: &str = "experiment,kind,name,value,expected,tolerance,pass";

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            parameters: Vec::new(),
            measurements: Vec::new(),
            notes: Vec::new(),
            runtime_seconds: 0.0,
        }
    }

    pub fn param(&mut self, name: impl Into<String>, value: impl ToString) -> &mut Self {
        self.parameters.push((name.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, m: Measurement) -> &mut Self {
        self.measurements.push(m);
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    /// True when every asserted measurement passes.
    pub fn pass(&self) -> bool {
        self.measurements.iter().all(|m| m.pass != Some(false))
    }

    pub fn measurement(&self, name: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(REPORT_HEADER);
        out.push('\n');
        let exp = csv_field(&self.experiment);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "{exp},param,{},{},,,", csv_field(k), csv_field(v));
        }
        for m in &self.measurements {
            let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
            let pass = m.pass.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{exp},measure,{},{},{},{},{}",
                csv_field(&m.name),
                fmt_num(m.value),
                opt(m.expected),
                opt(m.tolerance),
                pass
            );
        }
        for n in &self.notes {
            let _ = writeln!(out, "{exp},note,,{},,,", csv_field(n));
        }
        let _ = writeln!(out, "{exp},summary,pass,,,,{}", self.pass());
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::InvalidParams(format!("malformed report line `{line}`"));
        let mut lines = text.lines();
        if lines.next() != Some(REPORT_HEADER) {
            return Err(Error::InvalidParams("missing report header".into()));
        }
        let mut report = ExperimentReport::new("");
        for line in lines {
            let f = split_csv_line(line);
            if f.len() != 7 {
                return Err(bad(line));
            }
            report.experiment = f[0].clone();
            let num = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad(line))
                }
            };
            match f[1].as_str() {
                "param" => report.parameters.push((f[2].clone(), f[3].clone())),
                "measure" => report.measurements.push(Measurement {
                    name: f[2].clone(),
                    value: num(&f[3])?.ok_or_else(|| bad(line))?,
                    expected: num(&f[4])?,
                    tolerance: num(&f[5])?,
                    pass: match f[6].as_str() {
                        "" => None,
                        "true" => Some(true),
                        "false" => Some(false),
                        _ => return Err(bad(line)),
                    },
                }),
                "note" => report.notes.push(f[3].clone()),
                "summary" => {}
                _ => return Err(bad(line)),
            }
        }
        Ok(report)
    }
}

/// Quotes a field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Ordinary least squares y ≈ slope·x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs at least two points (got {})",
            x.len().min(y.len())
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "line fit over a single abscissa".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        rms_residual: (ss / n).sqrt(),
    })
}

/// Observed order log(e₁/e₂)/log(h₁/h₂) between consecutive entries.
pub fn observed_orders(h: &[f64], err: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(err.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 2.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-13);
        assert!(f.rms_residual < 1e-13);
        assert!(fit_line(&[1.0], &[2.0]).is_err());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn orders() {
        let h = [1e-3, 5e-4, 2.5e-4];
        let e: Vec<f64> = h.iter().map(|v| 3.0 * v * v).collect();
        for o in observed_orders(&h, &e) {
            assert!((o - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.0,
            1.5,
            -2.0e-300,
            1e20,
            0.1 + 0.2,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert!(fmt_num(f64::NAN).parse::<f64>().unwrap().is_nan());
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(3e-9), "3e-9");
    }

    #[test]
    fn report_csv_round_trip() {
        let mut r = ExperimentReport::new("demo");
        r.param("delta", 0.5).param("profile", "single_mode(1,2)");
        r.push(Measurement::near("alpha", 8.0, 8.0, 0.0));
        r.push(Measurement::below("error", 3.5e-7, 1e-3));
        r.push(Measurement::info("prefactor", 1.25));
        r.note("quoted \"note\", with comma");
        r.runtime_seconds = 1.0;
        let csv = r.to_csv();
        let mut back = ExperimentReport::from_csv(&csv).unwrap();
        back.runtime_seconds = r.runtime_seconds;
        assert_eq!(back, r);
        assert!(csv.ends_with("demo,summary,pass,,,,true\n"));
    }
}
