//! Globally adaptive Gauss–Kronrod (7/15) integration over a list of initial
//! breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

impl Segment {
    /// Error above the panel's roundoff floor; bisection cannot remove the rest.
    fn excess(&self) -> f64 {
        self.error - self.floor
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.excess() == other.excess()
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.excess().total_cmp(&other.excess())
    }
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        50.0 * f64::EPSILON * res_abs
    } else {
        0.0
    };
    (result, err.max(floor), floor)
}

/// Integrate `f` over `[breaks[0], breaks[last]]`, starting from one panel per
/// breakpoint interval and bisecting the worst panel until the summed error
/// estimate, less the panels' roundoff floors, drops below `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    max_panels: usize,
) -> Result<QuadResult> {
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::with_capacity(breaks.len() * 4);
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error, floor) = gk15(&f, w[0], w[1]);
            evaluations += 15;
            heap.push(Segment {
                a: w[0],
                b: w[1],
                value,
                error,
                floor,
            });
        }
    }
    loop {
        let total_err: f64 = heap.iter().map(|s| s.error).sum();
        let excess: f64 = heap.iter().map(Segment::excess).sum();
        if excess <= abs_tol || heap.len() >= max_panels {
            // Fixed-order reduction so results do not depend on heap layout.
            let mut segs = heap.into_vec();
            segs.sort_by(|x, y| x.a.total_cmp(&y.a));
            let mut sum = crate::compensated::CompensatedSum::default();
            for s in &segs {
                sum.add(s.value);
            }
            if excess > abs_tol {
                return Err(Error::QuadratureFailure {
                    estimate: total_err,
                    tolerance: abs_tol,
                });
            }
            return Ok(QuadResult {
                value: sum.value(),
                abs_error: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point; keep it and stop refining it.
            heap.push(Segment {
                floor: worst.error,
                ..worst
            });
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error, floor) = gk15(&f, a, b);
            evaluations += 15;
            heap.push(Segment {
                a,
                b,
                value,
                error,
                floor,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, &[0.0, 2.0], 1e-14, 100).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let breaks: Vec<f64> = std::iter::once(0.0)
            .chain((0..=30).rev().map(|j| 2f64.powi(-j)))
            .collect();
        let r = integrate(|x| x.powf(-0.5), &breaks, 1e-12, 2000).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(|x| (50.0 * x).cos(), &[0.0, 1.0], 1e-13, 500).unwrap();
        assert!((r.value - 50f64.sin() / 50.0).abs() < 1e-13);
    }

    #[test]
    fn reports_failure_when_panel_budget_runs_out() {
        let err = integrate(|x| (1e4 * x).sin().abs(), &[0.0, 1.0], 1e-15, 4).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }
}
