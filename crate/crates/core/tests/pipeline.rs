use std::f64::consts::PI;

use nldiff_core::evolution::evolve_homogeneous;
use nldiff_core::multiplier::{alpha_constant, multiplier_radial};
use nldiff_core::profiles::Side;
use nldiff_core::torus::{synthesize, synthesize_grid};
use nldiff_core::{builtin_profile, multiplier_table, OperatorParams, Profile, TorusGeometry};
use proptest::prelude::*;

/// Σ_j exp(−(x − jr)²/(2σ²)) over enough images.
fn periodized_gaussian(x: f64, r: f64, sigma: f64) -> f64 {
    (-6..=6)
        .map(|j| {
            let d = x - j as f64 * r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .sum()
}

#[test]
fn classical_limit_is_the_heat_kernel() {
    // unit-width Gaussian under u_t = Δu widens to σ² = 1 + 2t, mass preserved
    let r = 16.0;
    let g = TorusGeometry::new(vec![r, r], 48).unwrap();
    let p = OperatorParams::new(2, 1.0, 4.0).unwrap();
    let f = builtin_profile(&Profile::SmoothBump, &g).unwrap();
    let table = multiplier_table(&p, &g).unwrap();
    let t = 0.6;
    let u = evolve_homogeneous(&f, &table, t).unwrap();
    let sigma = (1.0 + 2.0 * t).sqrt();
    let points: Vec<Vec<f64>> = (0..25)
        .map(|i| vec![-6.0 + 0.5 * i as f64, 3.0 - 0.3 * i as f64])
        .collect();
    let got = synthesize(&u, &points).unwrap();
    for (x, v) in points.iter().zip(got) {
        let want = periodized_gaussian(x[0], r, sigma) * periodized_gaussian(x[1], r, sigma)
            / (sigma * sigma);
        assert!((v.re - want).abs() < 1e-12, "{x:?}: {} vs {want}", v.re);
        assert!(v.im.abs() < 1e-12);
    }
}

#[test]
fn sawtooth_synthesis_matches_the_profile_away_from_the_jump() {
    let g = TorusGeometry::new(vec![20.0], 4096).unwrap();
    let profile = Profile::SawtoothPair;
    let f = builtin_profile(&profile, &g).unwrap();
    let grid = synthesize_grid(&f, &[-10.0], &[16384]).unwrap();
    let mut worst: f64 = 0.0;
    for j in 0..16384 {
        let x = -10.0 + 20.0 * j as f64 / 16384.0;
        if x.abs() < 0.5 {
            continue;
        }
        let want = profile.evaluate(x, 20.0).unwrap();
        worst = worst.max((grid.values[j].re - want).abs());
    }
    // truncation error of a jump of 2 at distance d: about 2/(π ν_K d) ≈ 1e-3
    assert!(worst < 2e-3, "{worst}");
    assert_eq!(profile.limit(0.0, 20.0, Side::Left), Some(1.0));
    assert_eq!(profile.limit(0.0, 20.0, Side::Right), Some(-1.0));
}

#[test]
fn table_matches_radial_evaluation_in_three_dimensions() {
    let g = TorusGeometry::new(vec![3.0, 5.0, 7.0], 5).unwrap();
    let p = OperatorParams::new(3, 0.8, 1.7).unwrap();
    let table = multiplier_table(&p, &g).unwrap();
    for i in (0..g.len()).step_by(7) {
        let nu = g.frequency(&g.lattice_index(i));
        let norm = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
        let want = multiplier_radial(&p, norm).unwrap().value;
        assert!((table.value(i) - want).abs() <= 1e-14 * want.abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// m = ∫K(y)(cos ν·y − 1)dy lies in [−2α, 0] when the kernel mass α is finite.
    #[test]
    fn symbol_is_bounded_by_twice_the_kernel_mass(
        n in 1usize..=3,
        delta in 0.3f64..3.0,
        frac in 0.0f64..0.95,
        nu in 0.0f64..300.0,
    ) {
        let beta = -1.0 + frac * (n as f64 + 1.0);
        let p = OperatorParams::new(n, delta, beta).unwrap();
        let alpha = alpha_constant(&p).unwrap();
        let m = multiplier_radial(&p, nu).unwrap().value;
        prop_assert!(m <= 0.0);
        prop_assert!(m >= -2.0 * alpha * (1.0 + 1e-12));
    }

    /// A symbol of a nonpositive operator damps every mode.
    #[test]
    fn symbol_is_nonpositive(
        n in 1usize..=3,
        frac in 0.0f64..=1.0,
        nu in 0.0f64..1e4,
    ) {
        let beta = -1.0 + frac * (n as f64 + 3.0);
        let p = OperatorParams::new(n, 1.0, beta).unwrap();
        let m = multiplier_radial(&p, nu).unwrap().value;
        prop_assert!(m <= 0.0, "m = {m}");
        prop_assert!(nu == 0.0 || m < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// m = −‖ν‖² ₂F₃(…), so 0 ≤ ₂F₃ ≤ 1 is −‖ν‖² ≤ m ≤ 0. It holds up to the
    /// classical exponent and fails beyond it.
    #[test]
    fn hypergeometric_factor_is_at_most_one_only_up_to_n_plus_2(
        n in 1usize..=3,
        frac in 0.0f64..1.0,
        nu in 0.1f64..200.0,
    ) {
        let nf = n as f64;
        let below = OperatorParams::new(n, 1.0, -1.0 + frac * (nf + 3.0)).unwrap();
        let m = multiplier_radial(&below, nu).unwrap().value;
        prop_assert!(m >= -nu * nu * (1.0 + 1e-14) && m <= 0.0);

        let above = OperatorParams::new(n, 1.0, nf + 2.0 + 0.05 + 1.9 * frac).unwrap();
        let m = multiplier_radial(&above, nu).unwrap().value;
        prop_assert!(m < -nu * nu, "β = {}: m = {m}, −‖ν‖² = {}", above.beta, -nu * nu);
    }
}

#[test]
fn unit_period_sine_mode_decays_at_the_symbol_rate() {
    let g = TorusGeometry::new(vec![2.0 * PI], 8).unwrap();
    let p = OperatorParams::new(1, 0.5, 0.0).unwrap();
    let table = multiplier_table(&p, &g).unwrap();
    let f = builtin_profile(&Profile::SingleMode(vec![4]), &g).unwrap();
    let u = evolve_homogeneous(&f, &table, 1.5).unwrap();
    let m = multiplier_radial(&p, 4.0).unwrap().value;
    let vals = synthesize(&u, &[vec![0.3]]).unwrap();
    let want = (m * 1.5).exp() * (4.0f64 * 0.3).cos();
    assert!((vals[0].re - want).abs() < 1e-15);
}
