//! Fourier multipliers m^{δ,β}(ν) of the nonlocal Laplacian
//!
//! ```text
//! L u(x) = c ∫_{B_δ(x)} (u(y) − u(x)) / ‖y − x‖^β dy,
//! m(ν)   = c ∫_{B_δ(0)} (cos(ν·z) − 1) / ‖z‖^β dz
//!        = −‖ν‖² ₂F₃(1, (n+2−β)/2; 2, (n+2)/2, (n+4−β)/2; −‖ν‖²δ²/4).
//! ```
//!
//! Three routes are kept independent of each other:
//!
//! * the hypergeometric series ([`crate::hypergeom`]), rerouted to extended
//!   precision when the `f64` sum cancels;
//! * adaptive quadrature of the radially reduced ball integral
//!   ([`multiplier_quadrature_oracle`]), valid for β < n+2;
//! * the large-argument form. Its algebraic part is exactly the two-term
//!   expansion of [`multiplier_asymptotic`]; the rest of the symbol is the
//!   oscillatory tail `−c|S^{n−1}| ∫_δ^∞ Λ(‖ν‖r) r^{n−1−β} dr` where Λ is the
//!   spherical average of `cos`. That tail is summed in closed form from the
//!   Hankel expansion of Λ and the incomplete-gamma expansion of
//!   `∫_δ^∞ e^{i‖ν‖r} r^q dr`, which are both accurate to roundoff once
//!   ‖ν‖δ is a few dozen.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma};

use crate::bessel::j0;
use crate::compensated::{dd_div, two_sum};
use crate::error::{Error, Result};
use crate::hypergeom::{pfq_2f3, pfq_2f3_extended, PfqParams};
use crate::quadrature;
use crate::torus::TorusGeometry;

/// ‖ν‖δ above which the large-argument branch is used. Calibrated by
/// [`calibrate_crossover`]; see the `crossover_calibration` test.
pub const DEFAULT_CROSSOVER: f64 = 40.0;

/// Within this distance of β = n the two algebraic terms cancel badly and the
/// series is used instead (up to [`NEAR_LOG_SERIES_LIMIT`]).
const NEAR_LOG_BAND: f64 = 1e-6;
const NEAR_LOG_SERIES_LIMIT: f64 = 2000.0;

/// Relative agreement between the large-argument and extended-series
/// branches observed at the crossover.
const CROSSOVER_AGREEMENT: f64 = 1e-13;

/// Stricter than the series' own threshold so that table entries stay near
/// 1e-13 relative accuracy below the crossover.
const SERIES_CANCELLATION_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub n: usize,
    pub delta: f64,
    pub beta: f64,
}

impl OperatorParams {
    pub fn new(n: usize, delta: f64, beta: f64) -> Result<Self> {
        let p = Self { n, delta, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n) {
            return Err(Error::InvalidParams(format!(
                "dimension {} not in 1..=3",
                self.n
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "horizon δ = {} must be positive",
                self.delta
            )));
        }
        let n = self.n as f64;
        if !self.beta.is_finite() || self.beta >= n + 4.0 {
            return Err(Error::InvalidParams(format!(
                "kernel exponent β = {} must be below n + 4 = {}",
                self.beta,
                n + 4.0
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// β = n + 2: the symbol is exactly −‖ν‖².
    pub fn is_classical(&self) -> bool {
        self.beta == self.dim() + 2.0
    }

    /// β < n: the kernel is integrable and α is finite.
    pub fn is_integrable(&self) -> bool {
        self.beta < self.dim()
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Hypergeometric,
    ExtendedHypergeometric,
    Quadrature,
    Asymptotic,
    ClassicalExact,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Hypergeometric => "hypergeometric",
            Branch::ExtendedHypergeometric => "extended_hypergeometric",
            Branch::Quadrature => "quadrature",
            Branch::Asymptotic => "asymptotic",
            Branch::ClassicalExact => "classical_exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierValue {
    pub value: f64,
    pub branch: Branch,
    pub est_rel_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub c_scaling: f64,
    /// Only defined for β < n.
    pub alpha: Option<f64>,
}

/// c^{δ,β} = 2(n+2−β) Γ(n/2+1) / (π^{n/2} δ^{n+2−β}).
pub fn scaling_constant(p: &OperatorParams) -> f64 {
    let n = p.dim();
    2.0 * (n + 2.0 - p.beta) * gamma_half_integer(p.n + 2)
        / (PI.powf(n / 2.0) * p.delta.powf(n + 2.0 - p.beta))
}

/// Γ(m/2) by the exact recurrence from Γ(1) or Γ(1/2).
fn gamma_half_integer(m: usize) -> f64 {
    let (mut g, mut x) = if m.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x < m as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// α = 2n(n+2−β) / (δ²(n−β)), the total kernel mass c∫_{B_δ}‖z‖^{−β}dz.
pub fn alpha_constant(p: &OperatorParams) -> Result<f64> {
    if !p.is_integrable() {
        return Err(Error::InvalidParams(format!(
            "α requires β < n (got β = {}, n = {})",
            p.beta, p.n
        )));
    }
    let n = p.dim();
    // both differences kept exactly, so α is correctly rounded for δ = 1
    let ratio = dd_div(two_sum(n + 2.0, -p.beta), two_sum(n, -p.beta));
    Ok(2.0 * n * ratio / (p.delta * p.delta))
}

pub fn derived_constants(p: &OperatorParams) -> DerivedConstants {
    DerivedConstants {
        c_scaling: scaling_constant(p),
        alpha: alpha_constant(p).ok(),
    }
}

#[cfg(test)]
/// Area of the unit sphere S^{n−1}.
fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0),
    }
}

/// c·|S^{n−1}| = 2n(n+2−β)/δ^{n+2−β}, the prefactor of every radial integral.
fn radial_prefactor(p: &OperatorParams) -> f64 {
    let n = p.dim();
    2.0 * n * (n + 2.0 - p.beta) / p.delta.powf(n + 2.0 - p.beta)
}

fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.round() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

fn nu_norm(nu: &[f64]) -> f64 {
    nu.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_dim(p: &OperatorParams, nu: &[f64]) -> Result<()> {
    p.validate()?;
    if nu.len() != p.n {
        return Err(Error::InvalidParams(format!(
            "frequency has {} components, expected {}",
            nu.len(),
            p.n
        )));
    }
    Ok(())
}

/// m^{δ,β}(ν), dispatching among the exact, series, and large-argument branches.
pub fn multiplier(p: &OperatorParams, nu: &[f64]) -> Result<MultiplierValue> {
    check_dim(p, nu)?;
    multiplier_radial(p, nu_norm(nu))
}

/// m as a function of ‖ν‖ (the symbol is radial).
pub fn multiplier_radial(p: &OperatorParams, nu_norm: f64) -> Result<MultiplierValue> {
    multiplier_radial_with_crossover(p, nu_norm, DEFAULT_CROSSOVER)
}

pub fn multiplier_radial_with_crossover(
    p: &OperatorParams,
    nu_norm: f64,
    crossover: f64,
) -> Result<MultiplierValue> {
    p.validate()?;
    if p.is_classical() {
        return Ok(MultiplierValue {
            value: -nu_norm * nu_norm,
            branch: Branch::ClassicalExact,
            est_rel_error: 0.0,
        });
    }
    if nu_norm == 0.0 {
        return Ok(MultiplierValue {
            value: 0.0,
            branch: Branch::Hypergeometric,
            est_rel_error: 0.0,
        });
    }
    let scaled = nu_norm * p.delta;
    let near_log = p.beta != p.dim() && (p.beta - p.dim()).abs() < NEAR_LOG_BAND;
    if scaled > crossover && !(near_log && scaled <= NEAR_LOG_SERIES_LIMIT) {
        let (value, est) = large_argument(p, nu_norm);
        return Ok(MultiplierValue {
            value,
            branch: Branch::Asymptotic,
            est_rel_error: est.max(CROSSOVER_AGREEMENT),
        });
    }
    series_branch(p, nu_norm)
}

fn series_branch(p: &OperatorParams, nu_norm: f64) -> Result<MultiplierValue> {
    let params = PfqParams::nonlocal_laplacian(p.n, p.beta)?;
    let x = -0.25 * nu_norm * nu_norm * p.delta * p.delta;
    let scale = -nu_norm * nu_norm;
    match pfq_2f3(&params, x) {
        Ok(r) if r.is_cancellation_safe() && r.cancellation_digits <= SERIES_CANCELLATION_LIMIT => {
            Ok(MultiplierValue {
                value: scale * r.value,
                branch: Branch::Hypergeometric,
                est_rel_error: r.est_abs_error / r.value.abs(),
            })
        }
        Ok(_) | Err(Error::NonConvergence { .. }) => {
            let r = pfq_2f3_extended(&params, x, 0)?;
            Ok(MultiplierValue {
                value: scale * r.value,
                branch: Branch::ExtendedHypergeometric,
                est_rel_error: r.est_abs_error / r.value.abs(),
            })
        }
        Err(e) => Err(e),
    }
}

/// The two-term large-‖ν‖ behaviour of the symbol:
///
/// * β ≠ n: −2n(n+2−β)/(δ²(n−β)) + 2(2/δ)^{n+2−β} Γ((n+4−β)/2)Γ((n+2)/2)/((n−β)Γ(β/2)) ‖ν‖^{β−n}
/// * β = n: −(2n/δ²)(2 log‖ν‖ + log(δ²/4) + γ − ψ(n/2))
pub fn multiplier_asymptotic(p: &OperatorParams, nu_norm: f64) -> f64 {
    let n = p.dim();
    let d = p.delta;
    let b = p.beta;
    if b == n {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        return -(2.0 * n / (d * d))
            * (2.0 * nu_norm.ln() + (d * d / 4.0).ln() + EULER_GAMMA - digamma(n / 2.0));
    }
    let constant = -2.0 * n * (n + 2.0 - b) / (d * d * (n - b));
    let coeff = 2.0
        * (2.0 / d).powf(n + 2.0 - b)
        * gamma((n + 4.0 - b) / 2.0)
        * gamma((n + 2.0) / 2.0)
        * recip_gamma(b / 2.0)
        / (n - b);
    constant + coeff * nu_norm.powf(b - n)
}

/// Coefficients of the Hankel expansion
/// Λ(s) = Re Σ_k w_k s^{−μ−1/2−k} e^{is},  μ = n/2 − 1,
/// where Λ(s) = Γ(n/2) 2^μ s^{−μ} J_μ(s). Finite for n = 1, 3.
fn hankel_weights(n: usize, max_terms: usize) -> Vec<Complex64> {
    let mu = n as f64 / 2.0 - 1.0;
    let lead = gamma(n as f64 / 2.0) * 2f64.powf(mu) * (2.0 / PI).sqrt();
    let phase = Complex64::from_polar(1.0, -(mu * FRAC_PI_2 + FRAC_PI_4));
    let mut out = Vec::new();
    let mut a = 1.0;
    let mut ik = Complex64::new(1.0, 0.0);
    for k in 0..max_terms {
        if k > 0 {
            let l = k as f64;
            a *= (4.0 * mu * mu - (2.0 * l - 1.0).powi(2)) / (l * 8.0);
            ik *= Complex64::i();
        }
        if a == 0.0 {
            break;
        }
        out.push(lead * phase * ik * a);
    }
    out
}

/// ∫_δ^∞ e^{iνr} r^q dr (Abel sense) from the incomplete-gamma expansion;
/// returns the value and the magnitude of the first omitted term.
fn oscillatory_tail(nu: f64, delta: f64, q: f64) -> (Complex64, f64) {
    let x = nu * delta;
    let step = Complex64::new(0.0, 1.0 / x);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for l in 0..400 {
        let mag = term.norm();
        if mag > last {
            break;
        }
        sum += term;
        last = mag;
        if mag < 1e-18 * sum.norm() {
            break;
        }
        term *= step * (q - l as f64);
    }
    let pre = Complex64::i() / nu * Complex64::from_polar(delta.powf(q), x);
    (pre * sum, last * pre.norm())
}

/// The part of m that is not captured by [`multiplier_asymptotic`]:
/// −c|S^{n−1}| Re ∫_δ^∞ Λ(‖ν‖r) r^{n−1−β} dr. Returns (value, error bound).
pub fn oscillatory_remainder(p: &OperatorParams, nu_norm: f64) -> (f64, f64) {
    let n = p.dim();
    let mu = n / 2.0 - 1.0;
    let q0 = n - 1.0 - p.beta;
    let weights = hankel_weights(p.n, 60);
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut prev = f64::INFINITY;
    for (k, w) in weights.iter().enumerate() {
        let e = mu + 0.5 + k as f64;
        let (tail, tail_err) = oscillatory_tail(nu_norm, p.delta, q0 - e);
        let c = w * nu_norm.powf(-e);
        let contribution = c * tail;
        let mag = contribution.norm();
        if mag > prev {
            err += mag;
            break;
        }
        total += contribution;
        err += tail_err * c.norm();
        prev = mag;
        if mag < 1e-18 * total.norm() {
            break;
        }
    }
    let pre = radial_prefactor(p);
    (-pre * total.re, pre.abs() * err)
}

/// Large-argument branch: algebraic part plus the oscillatory remainder.
fn large_argument(p: &OperatorParams, nu_norm: f64) -> (f64, f64) {
    let algebraic = multiplier_asymptotic(p, nu_norm);
    let (rem, rem_err) = oscillatory_remainder(p, nu_norm);
    let value = algebraic + rem;
    // The two algebraic terms cancel when β is close to n.
    let n = p.dim();
    let cancel = if p.beta == n {
        algebraic.abs()
    } else {
        (2.0 * n * (n + 2.0 - p.beta) / (p.delta * p.delta * (n - p.beta))).abs()
    };
    let rounding = 4.0 * f64::EPSILON * (cancel + algebraic.abs() + rem.abs());
    (value, (rem_err + rounding) / value.abs())
}

/// Smallest candidate ‖ν‖δ at which the large-argument branch agrees with
/// the extended-precision series to relative `tol`, for this and every
/// larger candidate.
pub fn calibrate_crossover(
    p: &OperatorParams,
    candidates: &[f64],
    tol: f64,
) -> Result<Option<f64>> {
    let mut best = None;
    for &x in candidates.iter().rev() {
        let nu = x / p.delta;
        let (asym, _) = large_argument(p, nu);
        let params = PfqParams::nonlocal_laplacian(p.n, p.beta)?;
        let series = -nu * nu * pfq_2f3_extended(&params, -0.25 * x * x, 0)?.value;
        if ((asym - series) / series).abs() <= tol {
            best = Some(x);
        } else {
            break;
        }
    }
    Ok(best)
}

/// Quadrature of the radially reduced ball integral,
///
/// ```text
/// m = c|S^{n−1}| ∫_0^δ (Λ(‖ν‖r) − 1) r^{n−1−β} dr,
/// Λ = cos (n=1), J₀ (n=2), sin(s)/s (n=3).
/// ```
///
/// Independent of the series: the integrand is written as
/// ‖ν‖² G(‖ν‖r) r^{n+1−β} with G(s) = (Λ(s) − 1)/s². The piece [0, r₁],
/// r₁ = min(δ, 1/‖ν‖), is mapped by r = r₁ w^{1/(n+2−β)} to remove the
/// endpoint power; the rest is split geometrically and into sub-periods.
pub fn multiplier_quadrature_oracle(p: &OperatorParams, nu: &[f64]) -> Result<MultiplierValue> {
    check_dim(p, nu)?;
    multiplier_quadrature_radial(p, nu_norm(nu))
}

pub fn multiplier_quadrature_radial(p: &OperatorParams, nu_norm: f64) -> Result<MultiplierValue> {
    p.validate()?;
    let n = p.dim();
    if p.beta >= n + 2.0 {
        return Err(Error::InvalidParams(format!(
            "the integral form needs β < n + 2 (got β = {})",
            p.beta
        )));
    }
    if nu_norm == 0.0 {
        return Ok(MultiplierValue {
            value: 0.0,
            branch: Branch::Quadrature,
            est_rel_error: 0.0,
        });
    }
    let nu = nu_norm;
    let delta = p.delta;
    let power = n + 1.0 - p.beta; // > −1
    let g = |s: f64| radial_kernel(p.n, s);

    let r1 = delta.min(1.0 / nu);
    let inner_scale = r1.powf(power + 1.0) / (power + 1.0);
    let inv = 1.0 / (power + 1.0);
    let inner = |w: f64| g(nu * r1 * w.powf(inv));
    let mut inner_breaks = vec![0.0];
    inner_breaks.extend((0..=40).rev().map(|j| 2f64.powi(-j)));

    let mut outer_breaks = Vec::new();
    if r1 < delta {
        let period = 2.0 * PI / nu;
        let mut r = r1;
        outer_breaks.push(r);
        while r < delta {
            let next = (2.0 * r).min(r + period).min(delta);
            outer_breaks.push(next);
            r = next;
        }
    }
    let outer = |r: f64| g(nu * r) * r.powf(power);

    // A cheap first pass fixes the scale for the relative tolerance.
    let rough = |tol: f64| -> Result<(f64, f64)> {
        let i = quadrature::integrate(inner, &inner_breaks, tol / inner_scale.abs(), 200_000)?;
        let mut v = inner_scale * i.value;
        let mut e = inner_scale.abs() * i.abs_error;
        if outer_breaks.len() >= 2 {
            let o = quadrature::integrate(outer, &outer_breaks, tol, 200_000)?;
            v += o.value;
            e += o.abs_error;
        }
        Ok((v, e))
    };
    let (first, _) = rough(1e-6 * inner_scale.abs())?;
    let tol = 1e-13 * first.abs();
    let (integral, abs_err) = rough(tol)?;
    let pre = radial_prefactor(p) * nu * nu;
    Ok(MultiplierValue {
        value: pre * integral,
        branch: Branch::Quadrature,
        est_rel_error: abs_err / integral.abs(),
    })
}

/// G(s) = (Λ_n(s) − 1)/s², from its power series near 0.
fn radial_kernel(n: usize, s: f64) -> f64 {
    if s < 1.0 {
        // Σ_{k≥1} (−1)^k s^{2k−2} / (4^k k! (n/2)_k)
        let half_n = n as f64 / 2.0;
        let q = -s * s / 4.0;
        let mut term = -1.0 / (4.0 * half_n);
        let mut sum = term;
        for k in 1..30 {
            let kf = k as f64;
            term *= q / ((kf + 1.0) * (half_n + kf));
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let lambda = match n {
        1 => s.cos(),
        2 => j0(s),
        3 => s.sin() / s,
        _ => unreachable!("dimension validated"),
    };
    (lambda - 1.0) / (s * s)
}

/// Multiplier values over every lattice index of a geometry.
#[derive(Debug, Clone)]
pub struct MultiplierTable {
    params: OperatorParams,
    geom: TorusGeometry,
    values: Vec<f64>,
    branches: Vec<Branch>,
    errors: Vec<f64>,
}

impl MultiplierTable {
    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn get(&self, k: &[i64]) -> Option<f64> {
        self.geom.flat_index(k).map(|i| self.values[i])
    }

    pub fn branch(&self, flat: usize) -> Branch {
        self.branches[flat]
    }

    pub fn est_rel_error(&self, flat: usize) -> f64 {
        self.errors[flat]
    }

    pub fn max_est_rel_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluate m(ν_k) for every ‖k‖_∞ ≤ K. Distinct ‖ν_k‖² values are evaluated
/// once each, in parallel; the result does not depend on the thread count.
pub fn multiplier_table(p: &OperatorParams, geom: &TorusGeometry) -> Result<MultiplierTable> {
    p.validate()?;
    if geom.dim() != p.n {
        return Err(Error::GeometryMismatch(format!(
            "operator is {}-dimensional, geometry is {}-dimensional",
            p.n,
            geom.dim()
        )));
    }
    let norms_sq = geom.nu_norm_sq_all();
    let mut first_index: HashMap<u64, usize> = HashMap::new();
    let mut unique: Vec<(f64, usize)> = Vec::new();
    for (i, &v) in norms_sq.iter().enumerate() {
        first_index.entry(v.to_bits()).or_insert_with(|| {
            unique.push((v, i));
            unique.len() - 1
        });
    }
    let evaluated: Vec<Result<MultiplierValue>> = unique
        .par_iter()
        .map(|&(nsq, idx)| {
            if p.is_classical() {
                return Ok(MultiplierValue {
                    value: -nsq,
                    branch: Branch::ClassicalExact,
                    est_rel_error: 0.0,
                });
            }
            multiplier_radial(p, nsq.sqrt()).map_err(|e| Error::AtIndex {
                k: geom.lattice_index(idx),
                source: Box::new(e),
            })
        })
        .collect();
    let evaluated: Vec<MultiplierValue> = evaluated.into_iter().collect::<Result<_>>()?;
    let slot: HashMap<u64, usize> = unique
        .iter()
        .enumerate()
        .map(|(j, &(v, _))| (v.to_bits(), j))
        .collect();
    let mut values = Vec::with_capacity(norms_sq.len());
    let mut branches = Vec::with_capacity(norms_sq.len());
    let mut errors = Vec::with_capacity(norms_sq.len());
    for v in &norms_sq {
        let m = evaluated[slot[&v.to_bits()]];
        values.push(m.value);
        branches.push(m.branch);
        errors.push(m.est_rel_error);
    }
    Ok(MultiplierTable {
        params: *p,
        geom: geom.clone(),
        values,
        branches,
        errors,
    })
}

/// Table with the classical symbol −‖ν_k‖², whatever β is.
pub fn classical_table(geom: &TorusGeometry, n_params: OperatorParams) -> MultiplierTable {
    let values: Vec<f64> = geom.nu_norm_sq_all().into_iter().map(|v| -v).collect();
    let len = values.len();
    MultiplierTable {
        params: n_params.with_beta(n_params.dim() + 2.0),
        geom: geom.clone(),
        values,
        branches: vec![Branch::ClassicalExact; len],
        errors: vec![0.0; len],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, delta: f64, beta: f64) -> OperatorParams {
        OperatorParams::new(n, delta, beta).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Cin(x) = ∫_0^x (1 − cos t)/t dt from its power series (x ≤ ~10 is safe).
    fn cin(x: f64) -> f64 {
        // Σ_{k≥1} (−1)^{k+1} x^{2k} / (2k (2k)!)
        let mut sum = 0.0;
        let mut pow_fact = 1.0; // x^{2k}/(2k)!
        for k in 1..60 {
            let kk = 2 * k;
            pow_fact *= x * x / ((kk - 1) as f64 * kk as f64);
            let term = pow_fact / kk as f64;
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-20 {
                break;
            }
        }
        sum
    }

    #[test]
    fn scaling_constant_examples() {
        assert!(rel(scaling_constant(&params(1, 1.0, 1.0)), 2.0) < 1e-15);
        assert!(rel(scaling_constant(&params(1, 2.0, 1.0)), 0.5) < 1e-15);
        assert!(rel(scaling_constant(&params(2, 1.0, 0.0)), 8.0 / PI) < 1e-15);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_constant(&params(1, 1.0, 1.0 / 3.0)).unwrap(), 8.0);
        assert!(rel(alpha_constant(&params(1, 2.0, 1.0 / 3.0)).unwrap(), 2.0) < 1e-15);
        assert!(matches!(
            alpha_constant(&params(1, 1.0, 1.0)),
            Err(Error::InvalidParams(_))
        ));
        let c = derived_constants(&params(2, 1.0, 3.0));
        assert!(c.alpha.is_none());
    }

    #[test]
    fn alpha_is_the_kernel_mass() {
        // c ∫_{B_δ} ‖z‖^{−β} dz = c |S^{n−1}| δ^{n−β}/(n−β)
        for (n, delta, beta) in [(1, 1.0, 0.3), (2, 0.5, -1.0), (3, 2.0, 2.5)] {
            let p = params(n, delta, beta);
            let mass = scaling_constant(&p) * sphere_area(n) * delta.powf(n as f64 - beta)
                / (n as f64 - beta);
            assert!(rel(mass, alpha_constant(&p).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn classical_and_zero_frequency() {
        let p = params(1, 1.0, 3.0);
        let m = multiplier(&p, &[7.0]).unwrap();
        assert_eq!(m.value, -49.0);
        assert_eq!(m.branch, Branch::ClassicalExact);
        for p in [
            params(1, 1.0, 0.5),
            params(3, 2.0, -1.0),
            params(2, 1.0, 2.0),
        ] {
            let zero = vec![0.0; p.n];
            assert_eq!(multiplier(&p, &zero).unwrap().value, 0.0);
            assert!(multiplier_quadrature_oracle(&p, &zero).unwrap().value.abs() < 1e-14);
        }
    }

    #[test]
    fn one_dimensional_beta_one_is_minus_four_cin() {
        // m = 2c ∫_0^1 (cos 5r − 1)/r dr = −2c Cin(5), c = 2
        let expected = -4.0 * cin(5.0);
        let p = params(1, 1.0, 1.0);
        let m = multiplier(&p, &[5.0]).unwrap();
        assert!(
            rel(m.value, expected) < 1e-13,
            "{} vs {}",
            m.value,
            expected
        );
        let q = multiplier_quadrature_oracle(&p, &[5.0]).unwrap();
        assert!(rel(q.value, expected) < 1e-11);
    }

    #[test]
    fn quadrature_oracle_agrees_with_series() {
        let cases = [
            (params(1, 1.0, 1.0 / 3.0), vec![10.0]),
            (params(3, 1.0, 2.0), vec![0.0, 4.0, 0.0]),
            (params(2, 0.5, 0.0), vec![3.0, 4.0]),
            (params(2, 2.0, 3.9), vec![30.0, 1.0]),
            (params(3, 1.0, 4.9), vec![1.0, 2.0, 2.0]),
        ];
        for (p, nu) in cases {
            let h = multiplier(&p, &nu).unwrap();
            let q = multiplier_quadrature_oracle(&p, &nu).unwrap();
            assert!(
                rel(h.value, q.value) < 1e-9,
                "{p:?} {nu:?}: {} vs {}",
                h.value,
                q.value
            );
        }
    }

    #[test]
    fn quadrature_rejects_non_integral_range() {
        assert!(multiplier_quadrature_oracle(&params(1, 1.0, 3.0), &[1.0]).is_err());
        assert!(multiplier_quadrature_oracle(&params(1, 1.0, 3.5), &[1.0]).is_err());
    }

    #[test]
    fn large_argument_branch_matches_extended_series() {
        let cases = [
            params(1, 1.0, 1.0 / 3.0),
            params(1, 1.0, 1.0),
            params(2, 1.0, 0.0),
            params(2, 0.5, 3.0),
            params(3, 1.0, 2.0),
            params(3, 2.0, -1.0),
            params(1, 1.0, 4.0),
            params(2, 1.0, 5.5),
        ];
        for p in cases {
            for x in [45.0, 80.0, 150.0] {
                let nu = x / p.delta;
                let (asym, est) = large_argument(&p, nu);
                let pp = PfqParams::nonlocal_laplacian(p.n, p.beta).unwrap();
                let series = -nu * nu * pfq_2f3_extended(&pp, -0.25 * x * x, 0).unwrap().value;
                assert!(rel(asym, series) < 1e-12, "{p:?} x={x}: {asym} vs {series}");
                assert!(est < 1e-10);
            }
        }
    }

    #[test]
    fn crossover_calibration() {
        let candidates: Vec<f64> = (1..=12).map(|i| 5.0 * i as f64).collect();
        for p in [
            params(1, 1.0, 1.0 / 3.0),
            params(2, 1.0, 1.0),
            params(3, 0.5, 4.0),
            params(1, 2.0, -1.0),
        ] {
            let x = calibrate_crossover(&p, &candidates, 1e-9)
                .unwrap()
                .expect("calibrates");
            assert!(x <= DEFAULT_CROSSOVER, "{p:?}: calibrated {x}");
        }
    }

    #[test]
    fn asymptotic_constant_tends_to_minus_alpha() {
        let p = params(1, 1.0, 1.0 / 3.0);
        // constant term: −2·(8/3)/(2/3) = −8
        let far = multiplier_asymptotic(&p, 1e12);
        assert!((far + 8.0).abs() < 1e-6);
        let m = multiplier(&p, &[1e6]).unwrap().value;
        assert!((m + alpha_constant(&p).unwrap()).abs() < 0.05);
    }

    #[test]
    fn log_branch_uses_digamma_identity() {
        // ψ(1/2) = −γ − 2 ln 2
        let p = params(1, 1.0, 1.0);
        let gamma_e = 0.577_215_664_901_532_9;
        for nu in [10.0, 1e3, 1e5] {
            let direct =
                -2.0 * (2.0 * f64::ln(nu) + (0.25f64).ln() + 2.0 * gamma_e + 2.0 * 2f64.ln());
            assert!(rel(multiplier_asymptotic(&p, nu), direct) < 1e-13);
        }
        assert!((digamma(0.5) + gamma_e + 2.0 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn ratio_to_asymptotic_tends_to_one() {
        for p in [
            params(1, 1.0, 1.0 / 3.0),
            params(2, 1.0, 2.0),
            params(3, 1.0, 4.0),
        ] {
            let r3 = multiplier_radial(&p, 1e3).unwrap().value / multiplier_asymptotic(&p, 1e3);
            let r4 = multiplier_radial(&p, 1e4).unwrap().value / multiplier_asymptotic(&p, 1e4);
            assert!((r4 - 1.0).abs() <= (r3 - 1.0).abs() + 1e-12);
            assert!((r4 - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn near_log_beta_falls_back_to_series() {
        let p = params(1, 1.0, 1.0 + 1e-8);
        let m = multiplier_radial(&p, 100.0).unwrap();
        assert_eq!(m.branch, Branch::ExtendedHypergeometric);
        let at_log = multiplier_radial(&params(1, 1.0, 1.0), 100.0)
            .unwrap()
            .value;
        assert!(rel(m.value, at_log) < 1e-6);
    }

    #[test]
    fn branch_selection() {
        let p = params(1, 1.0, 0.5);
        assert_eq!(
            multiplier_radial(&p, 1.0).unwrap().branch,
            Branch::Hypergeometric
        );
        assert_eq!(
            multiplier_radial(&p, 30.0).unwrap().branch,
            Branch::ExtendedHypergeometric
        );
        assert_eq!(
            multiplier_radial(&p, 300.0).unwrap().branch,
            Branch::Asymptotic
        );
    }

    #[test]
    fn table_entries() {
        let geom = TorusGeometry::new(vec![2.0 * PI, 4.0], 6).unwrap();
        let p = params(2, 1.0, 1.5);
        let t = multiplier_table(&p, &geom).unwrap();
        assert_eq!(t.get(&[0, 0]), Some(0.0));
        assert!(t.values().iter().all(|&v| v <= 0.0));
        let nu = geom.frequency(&[3, -2]);
        let direct = multiplier(&p, &nu).unwrap().value;
        assert!(rel(t.get(&[3, -2]).unwrap(), direct) < 1e-15);
        let classical = multiplier_table(&params(2, 1.0, 4.0), &geom).unwrap();
        for (i, v) in geom.nu_norm_sq_all().iter().enumerate() {
            assert_eq!(classical.value(i), -v);
        }
    }
}
