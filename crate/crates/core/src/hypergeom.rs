//! The generalized hypergeometric series ₂F₃(a₁, a₂; b₁, b₂, b₃; x) for real
//! parameters and x ≤ 0.
//!
//! Two evaluations of the same series are provided:
//!
//! * [`pfq_2f3`] runs the term recurrence in `f64` with compensated
//!   accumulation and reports how many digits were lost to cancellation.
//! * [`pfq_2f3_extended`] runs the recurrence in binary fixed point on
//!   arbitrary-size integers. Every parameter sum `a + j` is formed exactly
//!   from the `f64` inputs, so the only rounding is one truncation per term.
//!   Working precision is raised until the result keeps 24 significant digits
//!   after cancellation.
//!
//! For x ≪ 0 the terms grow to roughly `exp(2·sqrt(-x))` before decaying, so
//! the `f64` path is only trustworthy while `cancellation_digits` stays small.

use num_bigint::{BigInt, Sign};
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use crate::compensated::CompensatedSum;
use crate::error::{Error, Result};

/// Hard cap on the number of series terms.
pub const TERM_CAP: usize = 10_000;
/// Relative size below which a term counts as negligible.
pub const TERM_EPS: f64 = 1e-17;
/// Consecutive negligible terms required to stop.
pub const STOP_RUN: usize = 3;
/// Callers must not trust a double-precision result that lost more digits than this.
pub const CANCELLATION_THRESHOLD: f64 = 6.0;

const TARGET_DIGITS: f64 = 16.0;
const GUARD_DIGITS: f64 = 8.0;
const LOG2_10: f64 = std::f64::consts::LOG2_10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfqParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl PfqParams {
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64, b3: f64) -> Result<Self> {
        let p = Self { a1, a2, b1, b2, b3 };
        p.validate()?;
        Ok(p)
    }

    /// Parameters of the nonlocal Laplacian symbol in dimension `n`:
    /// (1, (n+2−β)/2; 2, (n+2)/2, (n+4−β)/2).
    pub fn nonlocal_laplacian(n: usize, beta: f64) -> Result<Self> {
        let n = n as f64;
        Self::new(
            1.0,
            (n + 2.0 - beta) / 2.0,
            2.0,
            (n + 2.0) / 2.0,
            (n + 4.0 - beta) / 2.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a1, self.a2, self.b1, self.b2, self.b3];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite parameter in {self:?}"
            )));
        }
        for b in [self.b1, self.b2, self.b3] {
            if b <= 0.0 && b == b.round() {
                return Err(Error::InvalidParams(format!(
                    "denominator parameter {b} is a nonpositive integer"
                )));
            }
        }
        Ok(())
    }

    fn ratio(&self, j: usize, x: f64) -> f64 {
        let j = j as f64;
        (self.a1 + j) * (self.a2 + j) / ((self.b1 + j) * (self.b2 + j) * (self.b3 + j) * (1.0 + j))
            * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub est_abs_error: f64,
    /// log₁₀(max |partial sum| / |value|), never negative.
    pub cancellation_digits: f64,
}

impl SeriesResult {
    pub fn is_cancellation_safe(&self) -> bool {
        self.cancellation_digits <= CANCELLATION_THRESHOLD
    }
}

fn check_inputs(p: &PfqParams, x: f64) -> Result<()> {
    p.validate()?;
    if !(x <= 0.0) {
        return Err(Error::InvalidParams(format!(
            "argument x = {x} must be ≤ 0"
        )));
    }
    Ok(())
}

fn cancellation(max_partial: f64, value: f64) -> f64 {
    if value == 0.0 {
        return f64::INFINITY;
    }
    (max_partial / value.abs()).log10().max(0.0)
}

/// Double-precision evaluation with compensated accumulation.
pub fn pfq_2f3(p: &PfqParams, x: f64) -> Result<SeriesResult> {
    check_inputs(p, x)?;
    if x == 0.0 {
        return Ok(SeriesResult {
            value: 1.0,
            terms_used: 1,
            est_abs_error: 0.0,
            cancellation_digits: 0.0,
        });
    }
    let mut term = 1.0;
    let mut sum = CompensatedSum::new(1.0);
    let mut sum_abs = 1.0;
    let mut max_partial: f64 = 1.0;
    let mut run = 0;
    for j in 0..TERM_CAP {
        term *= p.ratio(j, x);
        if !term.is_finite() {
            return Err(Error::NonConvergence { terms: j + 1 });
        }
        sum.add(term);
        sum_abs += term.abs();
        let s = sum.value();
        max_partial = max_partial.max(s.abs());
        if term.abs() < TERM_EPS * s.abs() || term == 0.0 {
            run += 1;
            if run == STOP_RUN {
                let value = sum.value();
                return Ok(SeriesResult {
                    value,
                    terms_used: j + 2,
                    est_abs_error: 2.0 * f64::EPSILON * sum_abs + term.abs(),
                    cancellation_digits: cancellation(max_partial, value),
                });
            }
        } else {
            run = 0;
        }
    }
    Err(Error::NonConvergence { terms: TERM_CAP })
}

/// Exact binary rational `mant · 2^exp`.
#[derive(Debug, Clone)]
struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    fn from_f64(v: f64) -> Self {
        let (m, e, s) = v.integer_decode();
        let mut mant = BigInt::from(m);
        if s < 0 {
            mant = -mant;
        }
        Self {
            mant,
            exp: e as i64,
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        if self.mant.is_zero() {
            self.exp = 0;
            return self;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz as usize;
            self.exp += tz as i64;
        }
        self
    }

    /// `self + j` without rounding.
    fn add_int(&self, j: u64) -> Self {
        if self.exp >= 0 {
            Self {
                mant: (&self.mant << self.exp as usize) + BigInt::from(j),
                exp: 0,
            }
        } else {
            Self {
                mant: &self.mant + (BigInt::from(j) << (-self.exp) as usize),
                exp: self.exp,
            }
        }
        .normalized()
    }

    fn mul(&self, other: &Self) -> Self {
        Self {
            mant: &self.mant * &other.mant,
            exp: self.exp + other.exp,
        }
    }
}

/// log₂|v| for a big integer, usable beyond the `f64` exponent range.
fn log2_big(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return v.abs().to_f64().unwrap().log2();
    }
    let shift = bits - 64;
    let top = (v.abs() >> shift as usize).to_f64().unwrap();
    top.log2() + shift as f64
}

/// Value of `v · 2^{-frac_bits}` rounded to `f64`.
fn fixed_to_f64(v: &BigInt, frac_bits: u64) -> f64 {
    let bits = v.bits();
    if bits == 0 {
        return 0.0;
    }
    let (top, shift) = if bits > 64 {
        let shift = bits - 64;
        ((v >> shift as usize).to_f64().unwrap(), shift as i64)
    } else {
        (v.to_f64().unwrap(), 0)
    };
    let e = shift - frac_bits as i64;
    top * 2f64.powi(e.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
}

/// Scan the term magnitudes in log space; returns log₁₀ of the largest term.
fn peak_term_log10(p: &PfqParams, x: f64) -> f64 {
    let mut log_t = 0.0f64;
    let mut peak = 0.0f64;
    for j in 0..TERM_CAP {
        let r = p.ratio(j, x).abs();
        if r == 0.0 {
            break;
        }
        log_t += r.log10();
        peak = peak.max(log_t);
        if r < 0.5 && log_t < peak - 40.0 {
            break;
        }
    }
    peak
}

struct FixedPointRun {
    sum: BigInt,
    terms_used: usize,
    max_partial_log2: f64,
    sum_abs_log2: f64,
}

fn run_fixed_point(p: &PfqParams, x: f64, frac_bits: u64) -> Result<FixedPointRun> {
    let xd = Dyadic::from_f64(x);
    let a1 = Dyadic::from_f64(p.a1);
    let a2 = Dyadic::from_f64(p.a2);
    let b1 = Dyadic::from_f64(p.b1);
    let b2 = Dyadic::from_f64(p.b2);
    let b3 = Dyadic::from_f64(p.b3);

    let one = BigInt::one() << frac_bits as usize;
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut sum_abs = one;
    let mut max_partial = sum.clone();
    let negligible = BigInt::from(10u64).pow(17);
    let mut run = 0;

    for j in 0..TERM_CAP as u64 {
        let num = xd.mul(&a1.add_int(j)).mul(&a2.add_int(j));
        let den = b1
            .add_int(j)
            .mul(&b2.add_int(j))
            .mul(&b3.add_int(j))
            .mul(&Dyadic::from_f64((j + 1) as f64));
        let shift = num.exp - den.exp;
        let scaled = &term * &num.mant;
        term = if shift >= 0 {
            (scaled << shift as usize) / &den.mant
        } else {
            scaled / (&den.mant << (-shift) as usize)
        };
        sum += &term;
        sum_abs += term.abs();
        if sum.magnitude() > max_partial.magnitude() {
            max_partial = sum.clone();
        }
        let small = term.is_zero() || term.magnitude() * negligible.magnitude() < *sum.magnitude();
        if small {
            run += 1;
            if run == STOP_RUN {
                return Ok(FixedPointRun {
                    terms_used: j as usize + 2,
                    max_partial_log2: log2_big(&max_partial),
                    sum_abs_log2: log2_big(&sum_abs),
                    sum,
                });
            }
        } else {
            run = 0;
        }
    }
    Err(Error::NonConvergence { terms: TERM_CAP })
}

/// The same series in software extended precision with at least `digits`
/// decimal digits of working precision (raised automatically so that 24
/// digits survive cancellation).
pub fn pfq_2f3_extended(p: &PfqParams, x: f64, digits: u32) -> Result<SeriesResult> {
    check_inputs(p, x)?;
    if x == 0.0 {
        return Ok(SeriesResult {
            value: 1.0,
            terms_used: 1,
            est_abs_error: 0.0,
            cancellation_digits: 0.0,
        });
    }
    let peak = peak_term_log10(p, x);
    // The symbol's series never ends much below 1/|x|; the retry below covers the rest.
    let expected_cancel = peak + (1.0 + x.abs()).log10();
    let mut working = (digits as f64).max(TARGET_DIGITS + expected_cancel.ceil() + GUARD_DIGITS);
    loop {
        let frac_bits = (working * LOG2_10).ceil() as u64 + 64;
        let run = run_fixed_point(p, x, frac_bits)?;
        let value = fixed_to_f64(&run.sum, frac_bits);
        let cancel = if run.sum.sign() == Sign::NoSign {
            f64::INFINITY
        } else {
            ((run.max_partial_log2 - log2_big(&run.sum)) / LOG2_10).max(0.0)
        };
        let needed = TARGET_DIGITS + cancel.ceil() + GUARD_DIGITS;
        if working >= needed || !cancel.is_finite() {
            // One truncation per term, each amplified at most by the relative
            // size of the largest term it feeds.
            let trunc_log2 = -(frac_bits as f64)
                + (run.terms_used as f64).log2()
                + (1.0 + (run.sum_abs_log2 - frac_bits as f64).exp2()).log2();
            let est = trunc_log2.exp2() + 0.5 * f64::EPSILON * value.abs();
            return Ok(SeriesResult {
                value,
                terms_used: run.terms_used,
                est_abs_error: est,
                cancellation_digits: cancel,
            });
        }
        working = needed + 4.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pochhammer(a: f64, j: usize) -> f64 {
        (0..j).map(|i| a + i as f64).product()
    }

    fn factorial(j: usize) -> f64 {
        (1..=j).map(|i| i as f64).product()
    }

    #[test]
    fn zero_argument_is_one() {
        let p = PfqParams::new(1.0, 1.0, 2.0, 1.5, 2.0).unwrap();
        assert_eq!(pfq_2f3(&p, 0.0).unwrap().value, 1.0);
        assert_eq!(pfq_2f3_extended(&p, 0.0, 40).unwrap().value, 1.0);
        assert_eq!(pfq_2f3_extended(&p, 0.0, 400).unwrap().value, 1.0);
    }

    #[test]
    fn vanishing_numerator_parameter_terminates_at_one() {
        for x in [-0.1, -3.0, -250.0, -1e6] {
            let p = PfqParams::new(1.0, 0.0, 2.0, 1.5, 2.0).unwrap();
            let r = pfq_2f3(&p, x).unwrap();
            assert_eq!(r.value, 1.0);
            assert_eq!(pfq_2f3_extended(&p, x, 30).unwrap().value, 1.0);
        }
    }

    #[test]
    fn rejects_nonpositive_integer_denominators_and_positive_x() {
        assert!(matches!(
            PfqParams::new(1.0, 1.0, 2.0, -3.0, 2.0),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            PfqParams::new(1.0, 1.0, 0.0, 1.0, 2.0),
            Err(Error::InvalidParams(_))
        ));
        let p = PfqParams::new(1.0, 1.0, 2.0, 1.5, 2.0).unwrap();
        assert!(matches!(pfq_2f3(&p, 0.5), Err(Error::InvalidParams(_))));
        // β = n + 4 makes b₃ = 0
        assert!(PfqParams::nonlocal_laplacian(1, 5.0).is_err());
    }

    #[test]
    fn recurrence_matches_direct_pochhammer_terms() {
        let p = PfqParams::nonlocal_laplacian(1, 1.0 / 3.0).unwrap();
        let x = -7.3;
        let mut t = 1.0;
        for j in 0..=20 {
            let direct = pochhammer(p.a1, j) * pochhammer(p.a2, j) * x.powi(j as i32)
                / (pochhammer(p.b1, j) * pochhammer(p.b2, j) * pochhammer(p.b3, j) * factorial(j));
            assert!(((t - direct) / direct).abs() < 1e-13, "j = {j}");
            t *= p.ratio(j, x);
        }
    }

    #[test]
    fn extended_agrees_with_double_when_cancellation_is_mild() {
        let p = PfqParams::nonlocal_laplacian(2, 0.7).unwrap();
        for x in [-0.01, -0.5, -2.0, -4.0] {
            let d = pfq_2f3(&p, x).unwrap();
            assert!(d.cancellation_digits < 2.0);
            let e = pfq_2f3_extended(&p, x, 30).unwrap();
            assert!(((d.value - e.value) / e.value).abs() < 1e-12, "x = {x}");
            assert!(e.est_abs_error <= d.est_abs_error);
        }
    }

    #[test]
    fn double_path_reports_heavy_cancellation() {
        let p = PfqParams::nonlocal_laplacian(1, 1.0 / 3.0).unwrap();
        let r = pfq_2f3(&p, -2500.0).unwrap();
        assert!(r.cancellation_digits > CANCELLATION_THRESHOLD);
        let e = pfq_2f3_extended(&p, -2500.0, 50).unwrap();
        assert!(e.cancellation_digits > 35.0);
        assert!(e.est_abs_error < 1e-19);
    }

    #[test]
    fn dyadic_sum_is_exact() {
        let d = Dyadic::from_f64(11.0 / 6.0).add_int(1_000_000);
        let back = d.mant.to_f64().unwrap() * 2f64.powi(d.exp as i32);
        assert!((back - (11.0 / 6.0 + 1_000_000.0)).abs() < 1e-9);
        let z = Dyadic::from_f64(0.0).add_int(7);
        assert_eq!(z.mant, BigInt::from(7));
    }
}
