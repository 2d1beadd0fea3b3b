//! Exact-in-time spectral propagation of u_t = L u (+ b).
//!
//! Every mode evolves independently, Û_k(t) = f̂_k e^{m_k t} + φ₁(m_k, t) b̂_k,
//! so nothing here steps in time.

use std::sync::Arc;

use num_complex::Complex64;

use crate::compensated::CompensatedSum;
use crate::error::{Error, Result};
use crate::multiplier::{MultiplierTable, OperatorParams};
use crate::torus::{SobolevIndex, SpectralField, TorusGeometry};

/// Below this |mt| the Taylor form of φ₁ is used.
pub const PHI1_TAYLOR_LIMIT: f64 = 1e-4;

/// φ₁(m, t) = (e^{mt} − 1)/m, equal to t at m = 0.
pub fn phi1(m: f64, t: f64) -> f64 {
    let z = m * t;
    if z.abs() < PHI1_TAYLOR_LIMIT {
        t * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0)
    } else {
        z.exp_m1() / m
    }
}

/// (e^z − 1 − z)/z², the normalized remainder of a first-order step.
fn phi2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        // 1/2 + z/6 + z²/24 + …; nine terms reach round-off for |z| < 0.1
        let mut term = 0.5;
        let mut sum = 0.5;
        for j in 3..12 {
            term *= z / j as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "time must be finite and ≥ 0 (got {t})"
        )));
    }
    Ok(())
}

fn check_table(field: &SpectralField, table: &MultiplierTable) -> Result<()> {
    field.check_same_geometry(table.geometry())
}

/// Û_k(t) = f̂_k e^{m(ν_k)t}.
pub fn evolve_homogeneous(
    f: &SpectralField,
    table: &MultiplierTable,
    t: f64,
) -> Result<SpectralField> {
    check_time(t)?;
    check_table(f, table)?;
    let m = table.values();
    Ok(f.par_map_indexed(true, |i, c| c * (m[i] * t).exp()))
}

/// Entrywise multiplication by m(ν_k).
pub fn apply_operator(field: &SpectralField, table: &MultiplierTable) -> Result<SpectralField> {
    check_table(field, table)?;
    let m = table.values();
    Ok(field.par_map_indexed(true, |i, c| c * m[i]))
}

/// Û_k(t) = φ₁(m(ν_k), t) b̂_k, the solution with zero initial data.
pub fn evolve_sourced(b: &SpectralField, table: &MultiplierTable, t: f64) -> Result<SpectralField> {
    check_time(t)?;
    check_table(b, table)?;
    let m = table.values();
    Ok(b.par_map_indexed(true, |i, c| c * phi1(m[i], t)))
}

/// Initial data f and source b together: e^{mt}f̂ + φ₁(m,t)b̂.
pub fn evolve(
    f: Option<&SpectralField>,
    b: Option<&SpectralField>,
    table: &MultiplierTable,
    t: f64,
) -> Result<SpectralField> {
    combine(f, b, table, t, |m, t, fi, bi| {
        fi * (m * t).exp() + bi * phi1(m, t)
    })
}

/// V(t) = L U(t) + b, i.e. V̂_k = (m f̂_k + b̂_k) e^{mt}.
pub fn time_derivative(
    f: Option<&SpectralField>,
    b: Option<&SpectralField>,
    table: &MultiplierTable,
    t: f64,
) -> Result<SpectralField> {
    combine(f, b, table, t, |m, t, fi, bi| (fi * m + bi) * (m * t).exp())
}

fn combine<F>(
    f: Option<&SpectralField>,
    b: Option<&SpectralField>,
    table: &MultiplierTable,
    t: f64,
    mode: F,
) -> Result<SpectralField>
where
    F: Fn(f64, f64, Complex64, Complex64) -> Complex64 + Sync + Send,
{
    check_time(t)?;
    for g in [f, b].into_iter().flatten() {
        check_table(g, table)?;
    }
    let m = table.values();
    let zero = SpectralField::zeros(table.geometry().clone());
    let fc = f.unwrap_or(&zero).coeffs();
    let bc = b.unwrap_or(&zero).coeffs();
    let real = f.is_none_or(SpectralField::is_real) && b.is_none_or(SpectralField::is_real);
    Ok(zero.par_map_indexed(real, |i, _| mode(m[i], t, fc[i], bc[i])))
}

/// The solution and its time derivative at one instant, together with the
/// data that determine them.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    table: Arc<MultiplierTable>,
    initial: Option<SpectralField>,
    source: Option<SpectralField>,
    t: f64,
    field: SpectralField,
    derivative: SpectralField,
}

impl EvolutionState {
    /// State at t = 0. Without initial data the field starts at zero.
    pub fn new(
        table: Arc<MultiplierTable>,
        initial: Option<SpectralField>,
        source: Option<SpectralField>,
    ) -> Result<Self> {
        let field = evolve(initial.as_ref(), source.as_ref(), &table, 0.0)?;
        let derivative = time_derivative(initial.as_ref(), source.as_ref(), &table, 0.0)?;
        Ok(Self {
            table,
            initial,
            source,
            t: 0.0,
            field,
            derivative,
        })
    }

    /// The same problem evaluated at time t (exact, not stepped from `self.t`).
    pub fn at(&self, t: f64) -> Result<Self> {
        let (f, b) = (self.initial.as_ref(), self.source.as_ref());
        let field = evolve(f, b, &self.table, t)?;
        let derivative = time_derivative(f, b, &self.table, t)?;
        Ok(Self {
            table: Arc::clone(&self.table),
            initial: self.initial.clone(),
            source: self.source.clone(),
            t,
            field,
            derivative,
        })
    }

    pub fn params(&self) -> &OperatorParams {
        self.table.params()
    }

    pub fn geometry(&self) -> &TorusGeometry {
        self.table.geometry()
    }

    pub fn table(&self) -> &MultiplierTable {
        &self.table
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn derivative(&self) -> &SpectralField {
        &self.derivative
    }

    pub fn initial(&self) -> Option<&SpectralField> {
        self.initial.as_ref()
    }

    pub fn source(&self) -> Option<&SpectralField> {
        self.source.as_ref()
    }
}

/// ‖(U(t+h) − U(t−h))/(2h) − L U(t) − b‖_{H^s}.
///
/// The difference quotient is formed per mode as
/// e^{m(t−h)}[f̂ (e^{2mh} − 1) + b̂ φ₁(m, 2h)]/(2h), which equals the literal
/// one but does not lose digits to the subtraction.
pub fn residual(state: &EvolutionState, h: f64, s: SobolevIndex) -> Result<f64> {
    let t = state.t();
    if !(h > 0.0 && h < t) {
        return Err(Error::InvalidParams(format!(
            "residual needs 0 < h < t (h = {h}, t = {t})"
        )));
    }
    let m = state.table().values();
    let zero = Complex64::new(0.0, 0.0);
    let f = state.initial().map(|f| f.coeffs());
    let b = state.source().map(|b| b.coeffs());
    let u = state.field().coeffs();
    let ksq = state.geometry().k_norm_sq_all();
    let mut sum = CompensatedSum::default();
    for i in 0..u.len() {
        let fi = f.map_or(zero, |f| f[i]);
        let bi = b.map_or(zero, |b| b[i]);
        let mi = m[i];
        let quotient = (fi * (2.0 * mi * h).exp_m1() + bi * phi1(mi, 2.0 * h))
            * ((mi * (t - h)).exp() / (2.0 * h));
        let r = quotient - u[i] * mi - bi;
        sum.add(sobolev_weight(ksq[i], s) * r.norm_sqr());
    }
    Ok(sum.value().max(0.0).sqrt())
}

fn sobolev_weight(k_norm_sq: f64, s: SobolevIndex) -> f64 {
    if s.0 == 0.0 {
        1.0
    } else {
        (1.0 + k_norm_sq).powf(s.0)
    }
}

/// Σ_k (1+‖k‖²)^s |f̂_k|² [(e^{mh} − 1)/h − m]² e^{2mt}, which tends to zero
/// with h when U is Gateaux differentiable at t.
pub fn gateaux_difference_check(
    f: &SpectralField,
    table: &MultiplierTable,
    t: f64,
    h: f64,
    s: SobolevIndex,
) -> Result<f64> {
    check_table(f, table)?;
    if !(t > 0.0) || h == 0.0 || !h.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need t > 0 and finite h ≠ 0 (t = {t}, h = {h})"
        )));
    }
    let ksq = f.geometry().k_norm_sq_all();
    let mut sum = CompensatedSum::default();
    for ((c, &m), k2) in f.coeffs().iter().zip(table.values()).zip(ksq) {
        // (e^{mh} − 1)/h − m = m²h·φ₂(mh), free of cancellation
        let bracket = m * m * h * phi2(m * h);
        let decay = (2.0 * m * t).exp();
        sum.add(sobolev_weight(k2, s) * c.norm_sqr() * bracket * bracket * decay);
    }
    Ok(sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::multiplier_table;
    use crate::profiles::{builtin_profile, Profile};
    use proptest::prelude::*;

    fn setup(beta: f64, k: usize) -> (Arc<MultiplierTable>, SpectralField) {
        let geom = TorusGeometry::new(vec![20.0], k).unwrap();
        let p = OperatorParams::new(1, 1.0, beta).unwrap();
        let table = Arc::new(multiplier_table(&p, &geom).unwrap());
        let f = builtin_profile(&Profile::SawtoothPair, &geom).unwrap();
        (table, f)
    }

    fn max_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn phi1_examples() {
        assert_eq!(phi1(0.0, 0.7), 0.7);
        assert_eq!(phi1(-3.0, 0.0), 0.0);
        // 1 − e^{−1}
        assert!((phi1(-1.0, 1.0) - 0.632_120_558_828_557_7).abs() < 1e-16);
        let t = 2.0;
        for m in [PHI1_TAYLOR_LIMIT / t, -PHI1_TAYLOR_LIMIT / t] {
            let below = phi1(m * (1.0 - 1e-12), t);
            let above = phi1(m * (1.0 + 1e-12), t);
            assert!(((below - above) / above).abs() < 1e-12);
        }
    }

    #[test]
    fn phi1_taylor_matches_series_oracle() {
        // Σ z^j/(j+1)! summed to convergence
        let oracle = |m: f64, t: f64| {
            let z = m * t;
            let (mut term, mut sum) = (1.0, 1.0);
            for j in 1..40 {
                term *= z / (j + 1) as f64;
                sum += term;
            }
            t * sum
        };
        for z in [1e-9, -3e-5, 9.9e-5, -9.9e-5, 2e-4, -0.3] {
            let got = phi1(z / 1.5, 1.5);
            let want = oracle(z / 1.5, 1.5);
            assert!(((got - want) / want).abs() < 1e-14, "z = {z}");
        }
    }

    #[test]
    fn phi2_is_continuous_and_matches_definition() {
        for z in [-0.0999, 0.0999] {
            let a = phi2(z);
            let b = phi2(z * 1.02);
            let direct = ((z * 1.02).exp_m1() - z * 1.02) / (z * z * 1.0404);
            assert!((b - direct).abs() < 1e-13);
            assert!((a - b).abs() < 0.02);
        }
        assert_eq!(phi2(0.0), 0.5);
    }

    #[test]
    fn single_mode_is_an_eigenfunction() {
        let (table, _) = setup(1.0 / 3.0, 64);
        let geom = table.geometry().clone();
        let mode = SpectralField::single_mode(geom, &[7]).unwrap();
        let u = evolve_homogeneous(&mode, &table, 0.3).unwrap();
        let m = table.get(&[7]).unwrap();
        let want = (m * 0.3).exp();
        assert!((u.coeff(&[7]).unwrap().re - want).abs() < 1e-15 * want);
        assert_eq!(u.coeffs().iter().filter(|c| c.norm() != 0.0).count(), 1);
    }

    #[test]
    fn constants_are_conserved_and_annihilated() {
        let (table, _) = setup(0.5, 16);
        let c = SpectralField::constant(table.geometry().clone(), 2.5);
        assert_eq!(evolve_homogeneous(&c, &table, 4.0).unwrap(), c);
        assert!(apply_operator(&c, &table)
            .unwrap()
            .coeffs()
            .iter()
            .all(|v| v.norm() == 0.0));
        let u = evolve_sourced(&c, &table, 0.4).unwrap();
        assert_eq!(u.coeff(&[0]).unwrap().re, 2.5 * 0.4);
    }

    #[test]
    fn time_zero() {
        let (table, f) = setup(1.0 / 3.0, 32);
        assert_eq!(evolve_homogeneous(&f, &table, 0.0).unwrap(), f);
        let z = evolve_sourced(&f, &table, 0.0).unwrap();
        assert!(z.coeffs().iter().all(|v| v.norm() == 0.0));
        assert!(evolve_homogeneous(&f, &table, -1.0).is_err());
    }

    #[test]
    fn classical_operator_is_minus_nu_squared() {
        let geom = TorusGeometry::new(vec![3.0], 10).unwrap();
        let p = OperatorParams::new(1, 0.7, 3.0).unwrap();
        let table = multiplier_table(&p, &geom).unwrap();
        let f = builtin_profile(&Profile::SmoothBump, &geom).unwrap();
        let lf = apply_operator(&f, &table).unwrap();
        for k in -10..=10 {
            let nu = geom.wavenumber(0, k);
            assert_eq!(lf.coeff(&[k]).unwrap(), f.coeff(&[k]).unwrap() * (-nu * nu));
        }
    }

    #[test]
    fn operator_of_solution_is_its_derivative() {
        let (table, f) = setup(1.0 / 3.0, 64);
        let s = EvolutionState::new(Arc::clone(&table), Some(f), None)
            .unwrap()
            .at(0.2)
            .unwrap();
        let lu = apply_operator(s.field(), &table).unwrap();
        assert!(max_diff(&lu, s.derivative()) < 1e-15);
    }

    #[test]
    fn duhamel_superposition() {
        let (table, f) = setup(1.5, 64);
        let b = builtin_profile(&Profile::Step, table.geometry()).unwrap();
        let both = evolve(Some(&f), Some(&b), &table, 0.37).unwrap();
        let split = evolve_homogeneous(&f, &table, 0.37)
            .unwrap()
            .add(&evolve_sourced(&b, &table, 0.37).unwrap())
            .unwrap();
        assert!(max_diff(&both, &split) < 1e-13);
    }

    #[test]
    fn sourced_modes_approach_steady_state() {
        let (table, _) = setup(1.5, 16);
        let b = builtin_profile(&Profile::Step, table.geometry()).unwrap();
        let u = evolve_sourced(&b, &table, 2000.0).unwrap();
        for k in [1i64, 3, 16] {
            let m = table.get(&[k]).unwrap();
            let want = -b.coeff(&[k]).unwrap() / m;
            assert!((u.coeff(&[k]).unwrap() - want).norm() < 1e-12 * want.norm().max(1e-300));
        }
    }

    #[test]
    fn derivative_of_sourced_solution() {
        let (table, _) = setup(0.5, 32);
        let b = builtin_profile(&Profile::SawtoothPair, table.geometry()).unwrap();
        let state = EvolutionState::new(Arc::clone(&table), None, Some(b.clone())).unwrap();
        let t = 0.3;
        let v = state.at(t).unwrap().derivative().clone();
        let mut prev = f64::INFINITY;
        for h in [1e-3, 1e-4, 1e-5] {
            let a = evolve_sourced(&b, &table, t + h).unwrap();
            let c = evolve_sourced(&b, &table, t).unwrap();
            let fd = a.sub(&c).unwrap().scale(1.0 / h);
            let err = max_diff(&fd, &v);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn residual_of_linear_sourced_solution_vanishes() {
        let (table, _) = setup(0.5, 8);
        let b = SpectralField::constant(table.geometry().clone(), 1.3);
        let state = EvolutionState::new(table, None, Some(b))
            .unwrap()
            .at(0.5)
            .unwrap();
        for h in [1e-1, 1e-3, 1e-5, 1e-9] {
            assert!(residual(&state, h, SobolevIndex(0.0)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn residual_is_second_order_for_a_single_mode() {
        let (table, _) = setup(1.0 / 3.0, 16);
        let mode = SpectralField::single_mode(table.geometry().clone(), &[5]).unwrap();
        let state = EvolutionState::new(table, Some(mode), None)
            .unwrap()
            .at(0.1)
            .unwrap();
        let r: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&h| residual(&state, h, SobolevIndex(0.0)).unwrap())
            .collect();
        for w in r.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        }
        assert!(residual(&state, 0.2, SobolevIndex(0.0)).is_err());
    }

    #[test]
    fn gateaux_sum_closed_form_and_slope() {
        let (table, _) = setup(1.0 / 3.0, 64);
        let mode = SpectralField::single_mode(table.geometry().clone(), &[3]).unwrap();
        let m = table.get(&[3]).unwrap();
        let (t, h) = (0.5, 1e-3);
        let want = (((m * h).exp() - 1.0) / h - m).powi(2) * (2.0 * m * t).exp();
        let got = gateaux_difference_check(&mode, &table, t, h, SobolevIndex(0.0)).unwrap();
        assert!(((got - want) / want).abs() < 1e-9);

        let f = builtin_profile(&Profile::SawtoothPair, table.geometry()).unwrap();
        let g: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&h| gateaux_difference_check(&f, &table, 0.1, h, SobolevIndex(0.0)).unwrap())
            .collect();
        for w in g.windows(2) {
            let slope = (w[0] / w[1]).log10();
            assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn semigroup_and_contractivity(t1 in 0.0f64..0.5, t2 in 0.0f64..0.5, beta in -1.0f64..2.9) {
            let geom = TorusGeometry::new(vec![20.0], 48).unwrap();
            let p = OperatorParams::new(1, 1.0, beta).unwrap();
            let table = multiplier_table(&p, &geom).unwrap();
            let f = builtin_profile(&Profile::SawtoothPair, &geom).unwrap();
            let once = evolve_homogeneous(&f, &table, t1 + t2).unwrap();
            let twice = evolve_homogeneous(&evolve_homogeneous(&f, &table, t1).unwrap(), &table, t2).unwrap();
            for (a, b) in once.coeffs().iter().zip(twice.coeffs()) {
                prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
            }
            for (u, c) in once.coeffs().iter().zip(f.coeffs()) {
                prop_assert!(u.norm() <= c.norm());
            }
            let s = SobolevIndex(0.5);
            let n1 = crate::torus::sobolev_norm(&evolve_homogeneous(&f, &table, t1).unwrap(), s);
            prop_assert!(crate::torus::sobolev_norm(&once, s) <= n1);
        }
    }
}
