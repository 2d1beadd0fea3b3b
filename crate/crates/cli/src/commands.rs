//! One function per subcommand. Each returns its tables, plots and report;
//! writing them out is left to the caller.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;

use nldiff_core::analysis::{
    converge_beta, converge_delta, jump_decay_experiment, regularity_fit, ConvergenceStudy,
    ExperimentReport, Forcing, Measurement, RegularityTheory,
};
use nldiff_core::evolution::evolve;
use nldiff_core::multiplier::{
    multiplier_asymptotic, multiplier_quadrature_radial, multiplier_radial,
};
use nldiff_core::torus::{sobolev_norm, synthesize_grid};
use nldiff_core::{builtin_profile, multiplier_table, SobolevIndex, SpectralField, TorusGeometry};

use crate::config::{CommandId, ForcingKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::row;
use crate::svg::{self, Plot, Series};
use crate::table::{Cell, CsvTable};

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub command: CommandId,
    /// (file name, table)
    pub tables: Vec<(String, CsvTable)>,
    /// (file name, document)
    pub plots: Vec<(String, String)>,
    pub report: ExperimentReport,
}

impl CommandOutput {
    fn new(command: CommandId, report: ExperimentReport) -> Self {
        Self {
            command,
            tables: Vec::new(),
            plots: Vec::new(),
            report,
        }
    }

    pub fn pass(&self) -> bool {
        self.report.pass()
    }

    pub fn table(&self, name: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn report_file(&self) -> String {
        format!("{}-report.csv", self.command.name())
    }

    /// Writes every table, the report and (optionally) the plots into `dir`.
    pub fn write(&self, dir: &Path, svg: bool) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, table) in &self.tables {
            let path = dir.join(name);
            table.write(&path)?;
            written.push(path);
        }
        let path = dir.join(self.report_file());
        std::fs::write(&path, self.report.to_csv())?;
        written.push(path);
        if svg {
            for (name, doc) in &self.plots {
                let path = dir.join(name);
                std::fs::write(&path, doc)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

pub fn run_command(cfg: &RunConfig) -> CliResult<CommandOutput> {
    match cfg.command()? {
        CommandId::Multiplier => cmd_multiplier(cfg),
        CommandId::Solve => cmd_solve(cfg),
        CommandId::ConvergeDelta => cmd_converge(cfg, CommandId::ConvergeDelta),
        CommandId::ConvergeBeta => cmd_converge(cfg, CommandId::ConvergeBeta),
        CommandId::JumpDecay => cmd_jump_decay(cfg),
        CommandId::Regularity => cmd_regularity(cfg),
        CommandId::Selftest => crate::selftest::cmd_selftest(cfg),
    }
}

fn with_command(cfg: &RunConfig, command: CommandId) -> RunConfig {
    let mut c = cfg.clone();
    c.command = Some(command);
    c
}

/// The profile (or coefficient file) on the configured geometry.
pub fn load_field(cfg: &RunConfig, geom: &TorusGeometry) -> CliResult<SpectralField> {
    match &cfg.input_field {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            Ok(SpectralField::from_csv(geom.clone(), &text)?)
        }
        None => Ok(builtin_profile(&cfg.profile, geom)?),
    }
}

fn check_times(times: &[f64]) -> CliResult<()> {
    if times.is_empty() {
        return Err(CliError::Config("no output times".into()));
    }
    match times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        Some(t) => Err(CliError::Config(format!(
            "times must be finite and ≥ 0 (got {t})"
        ))),
        None => Ok(()),
    }
}

/// (‖ν‖, series, quadrature, asymptotic, branch)
type SymbolRow = (f64, f64, Option<f64>, f64, &'static str);

pub fn cmd_multiplier(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let cfg = with_command(cfg, CommandId::Multiplier);
    let p = cfg.params()?;
    let grid = cfg.nu_grid;
    if grid.points == 0 || !(grid.min >= 0.0 && grid.max >= grid.min && grid.max.is_finite()) {
        return Err(CliError::Config(format!("bad ‖ν‖ grid {grid:?}")));
    }
    let tol = cfg.tolerance();
    let has_integral = p.beta < p.dim() + 2.0;
    let rows: Vec<CliResult<SymbolRow>> = grid
        .values()
        .into_par_iter()
        .map(|nu| {
            let h = multiplier_radial(&p, nu)?;
            let q = if has_integral {
                Some(multiplier_quadrature_radial(&p, nu)?.value)
            } else {
                None
            };
            let a = if nu == 0.0 {
                0.0
            } else {
                multiplier_asymptotic(&p, nu)
            };
            Ok((nu, h.value, q, a, h.branch.name()))
        })
        .collect();

    let mut table = CsvTable::new(&[
        "nu_norm",
        "m_hyper",
        "m_quadrature",
        "m_asymptotic",
        "branch",
        "rel_disagreement",
    ]);
    let mut worst = 0.0f64;
    let mut classical_ok = true;
    for r in rows {
        let (nu, h, q, a, branch) = r?;
        let rel = q.map(|q| (h - q).abs() / q.abs().max(1e-30));
        if let Some(rel) = rel {
            worst = worst.max(rel);
        }
        if p.is_classical() {
            classical_ok &= h == -nu * nu;
        }
        let opt = |x: Option<f64>| x.map(Cell::Num).unwrap_or(Cell::Text(String::new()));
        table.push(vec![
            nu.into(),
            h.into(),
            opt(q),
            a.into(),
            branch.into(),
            opt(rel),
        ]);
    }

    let mut report = ExperimentReport::new("multiplier");
    report
        .param("n", p.n)
        .param("delta", p.delta)
        .param("beta", p.beta)
        .param("nu_min", grid.min)
        .param("nu_max", grid.max)
        .param("points", grid.points);
    if has_integral {
        report.push(Measurement::below("max_rel_disagreement", worst, tol));
    }
    if p.is_classical() {
        report.push(Measurement::check(
            "classical_identity",
            grid.points as f64,
            classical_ok,
        ));
    }
    let mut out = CommandOutput::new(CommandId::Multiplier, report);
    let series = |col: usize, label: &str, color: usize| {
        let pts = table
            .rows()
            .iter()
            .filter_map(|r| match (&r[0], &r[col]) {
                (Cell::Num(x), Cell::Num(y)) => Some((*x, *y)),
                _ => None,
            })
            .collect();
        Series::new(label, pts, color)
    };
    let plot = Plot::new(
        format!("symbol, n={} δ={} β={}", p.n, p.delta, p.beta),
        "‖ν‖",
        "m(ν)",
    )
    .with(series(1, "series", 0))
    .with(series(3, "asymptotic", 1).dashed());
    out.plots
        .push(("multiplier.svg".into(), svg::render(&[plot], 1)));
    out.tables.push(("multiplier.csv".into(), table));
    Ok(out)
}

/// Values along the first axis, the other coordinates fixed at the interval
/// midpoint, on `points` equispaced x in [a, b].
pub fn line_profile(
    field: &SpectralField,
    a: f64,
    mid: f64,
    points: usize,
) -> CliResult<Vec<(f64, f64)>> {
    let geom = field.geometry();
    let period = geom.periods()[0];
    let k = geom.bandwidth();
    let line_geom = TorusGeometry::new(vec![period], k)?;
    let mut line = vec![Complex64::new(0.0, 0.0); line_geom.len()];
    for (i, c) in field.coeffs().iter().enumerate() {
        let idx = geom.lattice_index(i);
        let phase: f64 = (1..geom.dim())
            .map(|d| geom.wavenumber(d, idx[d]) * mid)
            .sum();
        line[(idx[0] + k as i64) as usize] += c * Complex64::from_polar(1.0, phase);
    }
    let line = SpectralField::new(line_geom.clone(), line)?;
    let mut n = points.max(1);
    while n < line_geom.side() {
        n *= 2;
    }
    let stride = n / points.max(1);
    let grid = synthesize_grid(&line, &[a], &[n])?;
    Ok((0..=points)
        .map(|j| {
            let x = a + period * j as f64 / points as f64;
            (x, grid.values[(j * stride) % n].re)
        })
        .collect())
}

pub fn cmd_solve(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let cfg = with_command(cfg, CommandId::Solve);
    let p = cfg.params()?;
    let geom = cfg.geometry()?;
    let times = cfg.times();
    check_times(&times)?;
    if cfg.output_points < 2 {
        return Err(CliError::Config("need at least two output points".into()));
    }
    let data = load_field(&cfg, &geom)?;
    let (f, mut b) = match cfg.forcing {
        ForcingKind::Initial => (Some(data), None),
        ForcingKind::Source => (None, Some(data)),
    };
    if let Some(extra) = &cfg.source {
        let extra = builtin_profile(extra, &geom)?;
        b = Some(match b {
            Some(b) => b.add(&extra)?,
            None => extra,
        });
    }
    let table = multiplier_table(&p, &geom)?;
    let tol = cfg.tolerance();
    let (a, hi) = cfg.interval;
    let mid = 0.5 * (a + hi);

    let zero = vec![0i64; p.n];
    let mean =
        |g: &Option<SpectralField>| g.as_ref().and_then(|g| g.coeff(&zero)).unwrap_or_default();
    let (f0, b0) = (mean(&f), mean(&b));
    let initial_norm = f
        .as_ref()
        .map_or(0.0, |f| sobolev_norm(f, SobolevIndex(0.0)));

    let mut csv = CsvTable::new(&["t", "x", "u"]);
    let mut report = ExperimentReport::new("solve");
    report
        .param("n", p.n)
        .param("delta", p.delta)
        .param("beta", p.beta)
        .param("bandwidth", geom.bandwidth())
        .param("profile", &cfg.profile)
        .param("forcing", format!("{:?}", cfg.forcing).to_lowercase());
    let mut plot = Plot::new(format!("u(x,t), δ={} β={}", p.delta, p.beta), "x", "u");
    for (j, &t) in times.iter().enumerate() {
        let u = evolve(f.as_ref(), b.as_ref(), &table, t)?;
        // the zero mode evolves as f̂₀ + b̂₀t exactly
        let got = u.coeff(&zero).unwrap_or_default();
        let want = f0 + b0 * t;
        report.push(Measurement::below(
            format!("mean_drift[t={t}]"),
            (got - want).norm() / want.norm().max(1.0),
            tol.max(f64::EPSILON),
        ));
        if b.is_none() {
            let norm = sobolev_norm(&u, SobolevIndex(0.0));
            report.push(Measurement::check(
                format!("l2_nonincreasing[t={t}]"),
                norm,
                norm <= initial_norm * (1.0 + 1e-14),
            ));
        }
        let line = line_profile(&u, a, mid, cfg.output_points)?;
        for &(x, v) in &line {
            csv.push(row![t, x, v]);
        }
        plot.series.push(Series::new(format!("t={t}"), line, j));
    }
    let mut out = CommandOutput::new(CommandId::Solve, report);
    out.tables.push(("solve.csv".into(), csv));
    out.plots
        .push(("solve.svg".into(), svg::render(&[plot], 1)));
    Ok(out)
}

pub fn converge_study(cfg: &RunConfig, which: CommandId) -> CliResult<ConvergenceStudy> {
    let cfg = with_command(cfg, which);
    let p = cfg.params()?;
    let geom = cfg.geometry()?;
    let times = cfg.times();
    check_times(&times)?;
    if times.len() != 1 || times[0] <= 0.0 {
        return Err(CliError::Config(format!(
            "convergence runs take exactly one positive time (got {times:?})"
        )));
    }
    let data = load_field(&cfg, &geom)?;
    let forcing = match cfg.forcing {
        ForcingKind::Initial => Forcing::Initial(data),
        ForcingKind::Source => Forcing::Source(data),
    };
    let tol = cfg.tolerance();
    Ok(match which {
        CommandId::ConvergeDelta => {
            converge_delta(&forcing, &p, &cfg.deltas(), times[0], &cfg.sobolev, tol)?
        }
        _ => converge_beta(&forcing, &p, &cfg.betas(), times[0], &cfg.sobolev, tol)?,
    })
}

pub fn cmd_converge(cfg: &RunConfig, which: CommandId) -> CliResult<CommandOutput> {
    let study = converge_study(cfg, which)?;
    let mut csv = CsvTable::new(&["sweep_value", "h_s_error", "s_report"]);
    for pt in &study.points {
        csv.push(row![pt.sweep_value, pt.error, pt.s_report]);
    }
    let n = cfg.n as f64;
    let (x_label, to_x): (&str, Box<dyn Fn(f64) -> f64>) = match which {
        CommandId::ConvergeDelta => ("δ", Box::new(|v| v)),
        _ => ("n+2−β", Box::new(move |v| n + 2.0 - v)),
    };
    let mut plot = Plot::new(format!("{} error", which.name()), x_label, "H^s error").log_log();
    for (j, &s) in cfg.sobolev.iter().enumerate() {
        let pts = study
            .points
            .iter()
            .filter(|pt| pt.s_report == s)
            .map(|pt| (to_x(pt.sweep_value), pt.error))
            .collect();
        plot.series.push(Series::new(format!("s={s}"), pts, j));
    }
    let mut out = CommandOutput::new(which, study.report);
    out.tables.push((format!("{}.csv", which.name()), csv));
    out.plots
        .push((format!("{}.svg", which.name()), svg::render(&[plot], 1)));
    Ok(out)
}

pub fn cmd_jump_decay(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let cfg = with_command(cfg, CommandId::JumpDecay);
    let jd = cfg.jump_decay()?;
    let result = jump_decay_experiment(&jd)?;

    let mut profiles = CsvTable::new(&[
        "t",
        "x",
        "u_left",
        "u_right",
        "envelope_plus",
        "envelope_minus",
    ]);
    let mut jumps = CsvTable::new(&[
        "t",
        "location",
        "initial_jump",
        "expected",
        "measured",
        "v_jump",
        "certificate",
    ]);
    let mut panels = Vec::new();
    for (j, s) in result.snapshots.iter().enumerate() {
        for r in &s.profile {
            profiles.push(row![s.t, r.x, r.u_left, r.u_right, s.envelope, -s.envelope]);
        }
        for jm in &s.jumps {
            jumps.push(row![
                s.t,
                jm.location,
                jm.initial_jump,
                jm.expected,
                jm.measured,
                jm.v_jump,
                s.certificate
            ]);
        }
        // break the curve wherever the two one-sided values differ
        let mut curve = Vec::with_capacity(s.profile.len() + 4);
        for r in &s.profile {
            if (r.u_left - r.u_right).abs() > 1e-12 {
                curve.push((r.x, r.u_left));
                curve.push((r.x, f64::NAN));
            }
            curve.push((r.x, r.u_right));
        }
        let (x0, x1) = (jd.interval.0, jd.interval.1);
        panels.push(
            Plot::new(format!("t = {}", s.t), "x", "u")
                .with(Series::new("u", curve, j))
                .with(Series::new("", vec![(x0, s.envelope), (x1, s.envelope)], 5).dashed())
                .with(Series::new("", vec![(x0, -s.envelope), (x1, -s.envelope)], 5).dashed()),
        );
    }
    let mut out = CommandOutput::new(CommandId::JumpDecay, result.report);
    out.tables
        .push(("jump-decay-profiles.csv".into(), profiles));
    out.tables.push(("jump-decay-jumps.csv".into(), jumps));
    out.plots
        .push(("jump-decay.svg".into(), svg::render(&panels, 2)));
    Ok(out)
}

pub fn cmd_regularity(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let cfg = with_command(cfg, CommandId::Regularity);
    let base = cfg.params()?;
    let geom = cfg.geometry()?;
    let times = cfg.times();
    check_times(&times)?;
    let data = load_field(&cfg, &geom)?;
    let tol = cfg.tolerance();
    let sourced = cfg.forcing == ForcingKind::Source;

    let data_fit = regularity_fit(&data, 0.0, &RegularityTheory::homogeneous(base, 0.0))?;
    let s_init = cfg
        .initial_sobolev
        .unwrap_or(data_fit.implied_sobolev_index);

    let jobs: Vec<(f64, f64)> = cfg
        .betas()
        .iter()
        .flat_map(|&b| times.iter().map(move |&t| (b, t)))
        .collect();
    let fits: Vec<CliResult<_>> = jobs
        .par_iter()
        .map(|&(beta, t)| {
            let p = base.with_beta(beta);
            p.validate()?;
            let table = multiplier_table(&p, &geom)?;
            let (theory, u) = if sourced {
                (
                    RegularityTheory::sourced(p, t),
                    evolve(None, Some(&data), &table, t)?,
                )
            } else {
                (
                    RegularityTheory::homogeneous(p, t),
                    evolve(Some(&data), None, &table, t)?,
                )
            };
            Ok(regularity_fit(&u, s_init, &theory)?)
        })
        .collect();

    let mut csv = CsvTable::new(&[
        "beta",
        "t",
        "fitted_exponent",
        "implied_s",
        "theory_s",
        "pass",
    ]);
    let mut report = ExperimentReport::new("regularity");
    report
        .param("n", base.n)
        .param("delta", base.delta)
        .param("profile", &cfg.profile)
        .param("forcing", if sourced { "source" } else { "initial" })
        .param("bandwidth", geom.bandwidth());
    report.push(Measurement::info(
        "data_exponent",
        data_fit.fitted_decay_exponent,
    ));
    report.push(Measurement::info("s_init", s_init));
    for (&(beta, t), fit) in jobs.iter().zip(fits) {
        let fit = fit?;
        let pass = fit.consistent(tol);
        csv.push(row![
            beta,
            t,
            fit.fitted_decay_exponent,
            fit.implied_sobolev_index,
            fit.theory_index,
            pass
        ]);
        report.push(Measurement::info(
            format!("gain[beta={beta}][t={t}]"),
            data_fit.fitted_decay_exponent - fit.fitted_decay_exponent,
        ));
        report.push(Measurement::check(
            format!("consistent[beta={beta}][t={t}]"),
            fit.implied_sobolev_index,
            pass,
        ));
    }
    let mut out = CommandOutput::new(CommandId::Regularity, report);
    out.tables.push(("regularity.csv".into(), csv));
    Ok(out)
}
