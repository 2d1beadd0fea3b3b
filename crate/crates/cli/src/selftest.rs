//! Fast property checks of the symbol and the propagator.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nldiff_core::analysis::{ExperimentReport, Measurement};
use nldiff_core::evolution::{evolve, evolve_homogeneous, EvolutionState};
use nldiff_core::multiplier::{multiplier_quadrature_radial, multiplier_radial};
use nldiff_core::torus::sobolev_norm;
use nldiff_core::{multiplier_table, OperatorParams, SobolevIndex, SpectralField, TorusGeometry};

use crate::commands::CommandOutput;
use crate::config::{CommandId, RunConfig};
use crate::error::CliResult;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub fn cmd_selftest(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let override_tol = cfg.tolerance;
    let bound = |default: f64| override_tol.unwrap_or(default);
    let mut report = ExperimentReport::new("selftest");
    report.param("seed", cfg.seed);

    // β = n+2 is the Laplacian symbol
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let p = OperatorParams::new(n, 1.0, n as f64 + 2.0)?;
        for j in 1..=50 {
            let nu = 0.37 * j as f64;
            worst = worst.max(rel(multiplier_radial(&p, nu)?.value, -nu * nu));
        }
    }
    report.push(Measurement::below(
        "classical_identity",
        worst,
        bound(1e-12),
    ));

    // m^{δ,β}(ν) = δ^{-2} m^{1,β}(δν)
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let n = rng.gen_range(1..=3usize);
        let delta = rng.gen_range(0.5..2.0);
        let beta = rng.gen_range(-1.0..(n as f64 + 2.0));
        let nu = rng.gen_range(0.0..200.0);
        let p = OperatorParams::new(n, delta, beta)?;
        let lhs = multiplier_radial(&p, nu)?.value;
        let rhs = multiplier_radial(&p.with_delta(1.0), delta * nu)?.value / (delta * delta);
        if lhs != 0.0 || rhs != 0.0 {
            worst = worst.max(rel(lhs, rhs));
        }
    }
    report.push(Measurement::below("scaling_identity", worst, bound(1e-10)));

    // series against the quadrature oracle
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let n = rng.gen_range(1..=3usize);
        let beta = rng.gen_range(-1.0..(n as f64 + 1.9));
        let nu = rng.gen_range(0.1..100.0);
        let p = OperatorParams::new(n, 1.0, beta)?;
        let q = multiplier_quadrature_radial(&p, nu)?.value;
        worst = worst.max(rel(multiplier_radial(&p, nu)?.value, q));
    }
    report.push(Measurement::below("oracle_agreement", worst, bound(1e-8)));

    // strictly decreasing in β
    let mut violations = 0usize;
    for n in 1..=3 {
        let betas: Vec<f64> = (0..8)
            .map(|j| -1.0 + (n as f64 + 3.0) * j as f64 / 7.0)
            .collect();
        for nu in [0.5, 3.0, 40.0] {
            let p = OperatorParams::new(n, 1.0, 0.0)?;
            let m: Vec<f64> = betas
                .iter()
                .map(|&b| multiplier_radial(&p.with_beta(b), nu).map(|v| v.value))
                .collect::<Result<_, _>>()?;
            violations += m.windows(2).filter(|w| w[1] >= w[0]).count();
        }
    }
    report.push(Measurement::check(
        "monotone_in_beta",
        violations as f64,
        violations == 0,
    ));

    // one mode evolves by the scalar e^{mt}
    let g = TorusGeometry::new(vec![2.0 * std::f64::consts::PI], 16)?;
    let p = OperatorParams::new(1, 1.0, 1.0 / 3.0)?;
    let table = Arc::new(multiplier_table(&p, &g)?);
    let f = SpectralField::single_mode(g.clone(), &[5])?;
    let t = 0.3;
    let u = evolve_homogeneous(&f, &table, t)?;
    let m = table.get(&[5]).unwrap_or_default();
    let got = u.coeff(&[5]).unwrap_or_default();
    report.push(Measurement::below(
        "single_mode",
        (got - Complex64::new((m * t).exp(), 0.0)).norm() / (m * t).exp(),
        bound(1e-13),
    ));

    // U(t+s) = e^{Ls} U(t)
    let coeffs = (0..g.len())
        .map(|i| {
            let k = g.lattice_index(i)[0] as f64;
            Complex64::new(1.0 / (1.0 + k * k), 0.0)
        })
        .collect();
    let f = SpectralField::new(g.clone(), coeffs)?;
    let direct = evolve_homogeneous(&f, &table, 0.5)?;
    let stepped = evolve_homogeneous(&evolve_homogeneous(&f, &table, 0.2)?, &table, 0.3)?;
    let diff = sobolev_norm(&direct.sub(&stepped)?, SobolevIndex(0.0))
        / sobolev_norm(&direct, SobolevIndex(0.0));
    report.push(Measurement::below("semigroup", diff, bound(1e-12)));

    // a constant source accumulates linearly
    let b = SpectralField::constant(g.clone(), 0.75);
    let u = evolve(None, Some(&b), &table, 2.0)?;
    let want = SpectralField::constant(g.clone(), 1.5);
    let err = sobolev_norm(&u.sub(&want)?, SobolevIndex(0.0)) / 1.5;
    report.push(Measurement::below("constant_source", err, bound(1e-13)));

    // the state recomputed at a time equals direct evaluation
    let state = EvolutionState::new(table.clone(), Some(f.clone()), Some(b))?.at(0.4)?;
    let direct = evolve(state.initial(), state.source(), &table, 0.4)?;
    report.push(Measurement::check(
        "state_consistency",
        0.0,
        state.field() == &direct,
    ));

    Ok(CommandOutput {
        command: CommandId::Selftest,
        tables: Vec::new(),
        plots: Vec::new(),
        report,
    })
}
