//! Built-in initial data and sources with closed-form Fourier coefficients.
//!
//! Piecewise-linear profiles are integrated exactly against e^{−iν_k x} piece
//! by piece, so their coefficients carry no sampling or Gibbs error.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{SpectralField, TorusGeometry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Profile {
    /// x+1 on (−1, 0], x−1 on (0, 1), 0 elsewhere: one jump of −2 at x = 0
    /// and kinks at x = ±1.
    SawtoothPair,
    /// Indicator of (−1, 1).
    Step,
    /// e^{iν_k·x} for the given lattice index.
    SingleMode(Vec<i64>),
    /// Periodized unit Gaussian centred at the origin.
    SmoothBump,
}

/// f(x) = intercept + slope·x on (left, right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPiece {
    pub left: f64,
    pub right: f64,
    pub intercept: f64,
    pub slope: f64,
}

impl LinearPiece {
    fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// (1/r) ∫_left^right (intercept + slope·x) e^{−iνx} dx.
    fn coefficient(&self, nu: f64, period: f64) -> Complex64 {
        let (a, b, p, q) = (self.left, self.right, self.intercept, self.slope);
        if nu == 0.0 {
            return Complex64::new((p * (b - a) + q * (b * b - a * a) / 2.0) / period, 0.0);
        }
        // ∫ e^{−iνx} = (i/ν) e^{−iνx},  ∫ x e^{−iνx} = (ix/ν + 1/ν²) e^{−iνx}
        let i = Complex64::i();
        let antiderivative = |x: f64| {
            let e = Complex64::from_polar(1.0, -nu * x);
            (i / nu) * p * e + (i * x / nu + 1.0 / (nu * nu)) * q * e
        };
        (antiderivative(b) - antiderivative(a)) / period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Jump of the profile value across a breakpoint, f(x⁺) − f(x⁻).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub location: f64,
    pub jump: f64,
}

const BUMP_WIDTH: f64 = 1.0;

impl Profile {
    pub fn pieces(&self) -> Option<Vec<LinearPiece>> {
        match self {
            Profile::SawtoothPair => Some(vec![
                LinearPiece {
                    left: -1.0,
                    right: 0.0,
                    intercept: 1.0,
                    slope: 1.0,
                },
                LinearPiece {
                    left: 0.0,
                    right: 1.0,
                    intercept: -1.0,
                    slope: 1.0,
                },
            ]),
            Profile::Step => Some(vec![LinearPiece {
                left: -1.0,
                right: 1.0,
                intercept: 1.0,
                slope: 0.0,
            }]),
            _ => None,
        }
    }

    pub fn is_piecewise(&self) -> bool {
        self.pieces().is_some()
    }

    /// Profile value at x (taken modulo `period` into [−r/2, r/2)); pieces
    /// are open on the left and closed on the right.
    pub fn evaluate(&self, x: f64, period: f64) -> Option<f64> {
        self.limit(x, period, Side::Left)
    }

    /// One-sided limit f(x⁻) or f(x⁺).
    pub fn limit(&self, x: f64, period: f64, side: Side) -> Option<f64> {
        let pieces = self.pieces()?;
        let y = (x + period / 2.0).rem_euclid(period) - period / 2.0;
        let inside = |p: &&LinearPiece| match side {
            Side::Left => p.left < y && y <= p.right,
            Side::Right => p.left <= y && y < p.right,
        };
        Some(pieces.iter().find(inside).map(|p| p.at(y)).unwrap_or(0.0))
    }

    /// Every piece endpoint with the value jump across it (zero at kinks).
    pub fn breakpoints(&self) -> Vec<Breakpoint> {
        let Some(pieces) = self.pieces() else {
            return Vec::new();
        };
        let mut locs: Vec<f64> = pieces.iter().flat_map(|p| [p.left, p.right]).collect();
        locs.sort_by(f64::total_cmp);
        locs.dedup();
        locs.into_iter()
            .map(|x| {
                let left = pieces
                    .iter()
                    .find(|p| p.right == x)
                    .map(|p| p.at(x))
                    .unwrap_or(0.0);
                let right = pieces
                    .iter()
                    .find(|p| p.left == x)
                    .map(|p| p.at(x))
                    .unwrap_or(0.0);
                Breakpoint {
                    location: x,
                    jump: right - left,
                }
            })
            .collect()
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::SawtoothPair => write!(f, "sawtooth_pair"),
            Profile::Step => write!(f, "step"),
            Profile::SmoothBump => write!(f, "smooth_bump"),
            Profile::SingleMode(k) => {
                let parts: Vec<String> = k.iter().map(|v| v.to_string()).collect();
                write!(f, "single_mode({})", parts.join(","))
            }
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "sawtooth_pair" => return Ok(Profile::SawtoothPair),
            "step" => return Ok(Profile::Step),
            "smooth_bump" => return Ok(Profile::SmoothBump),
            _ => {}
        }
        if let Some(inner) = s
            .strip_prefix("single_mode(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let k: std::result::Result<Vec<i64>, _> =
                inner.split(',').map(|v| v.trim().parse::<i64>()).collect();
            if let Ok(k) = k {
                if !k.is_empty() {
                    return Ok(Profile::SingleMode(k));
                }
            }
        }
        Err(Error::UnknownProfile(s.to_string()))
    }
}

impl TryFrom<String> for Profile {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Profile> for String {
    fn from(p: Profile) -> String {
        p.to_string()
    }
}

/// Analytic Fourier coefficients of a built-in profile, truncated at K.
pub fn builtin_profile(profile: &Profile, geom: &TorusGeometry) -> Result<SpectralField> {
    match profile {
        Profile::SingleMode(k) => SpectralField::single_mode(geom.clone(), k),
        Profile::SmoothBump => {
            let n = geom.dim();
            let scale: Vec<f64> = geom
                .periods()
                .iter()
                .map(|r| (2.0 * PI).sqrt() * BUMP_WIDTH / r)
                .collect();
            let coeffs = (0..geom.len())
                .map(|i| {
                    let k = geom.lattice_index(i);
                    let mut v = 1.0;
                    for d in 0..n {
                        let nu = geom.wavenumber(d, k[d]);
                        v *= scale[d] * (-0.5 * BUMP_WIDTH * BUMP_WIDTH * nu * nu).exp();
                    }
                    Complex64::new(v, 0.0)
                })
                .collect();
            SpectralField::new(geom.clone(), coeffs)
        }
        Profile::SawtoothPair | Profile::Step => {
            if geom.dim() != 1 {
                return Err(Error::InvalidParams(format!(
                    "profile `{profile}` is one-dimensional"
                )));
            }
            let period = geom.periods()[0];
            if period < 2.0 {
                return Err(Error::InvalidParams(format!(
                    "profile `{profile}` needs a period of at least 2 (got {period})"
                )));
            }
            let pieces = profile.pieces().expect("piecewise");
            let kk = geom.bandwidth() as i64;
            let coeffs = (-kk..=kk)
                .map(|k| {
                    let nu = geom.wavenumber(0, k);
                    pieces.iter().map(|p| p.coefficient(nu, period)).sum()
                })
                .collect();
            SpectralField::new(geom.clone(), coeffs)
        }
    }
}

pub fn builtin_profile_named(name: &str, geom: &TorusGeometry) -> Result<SpectralField> {
    builtin_profile(&name.parse()?, geom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    fn geom20(k: usize) -> TorusGeometry {
        TorusGeometry::new(vec![20.0], k).unwrap()
    }

    /// (1/r)∫ f(x) e^{−iνx} dx by adaptive quadrature over the pieces.
    fn quadrature_coefficient(profile: &Profile, nu: f64, period: f64) -> Complex64 {
        let breaks = [-1.0, 0.0, 1.0];
        let f = |x: f64| profile.evaluate(x, period).unwrap();
        let re = quadrature::integrate(|x| f(x) * (nu * x).cos(), &breaks, 1e-14, 1000).unwrap();
        let im = quadrature::integrate(|x| -f(x) * (nu * x).sin(), &breaks, 1e-14, 1000).unwrap();
        Complex64::new(re.value, im.value) / period
    }

    #[test]
    fn names_round_trip() {
        for p in [
            Profile::SawtoothPair,
            Profile::Step,
            Profile::SmoothBump,
            Profile::SingleMode(vec![2, -1]),
        ] {
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        assert!(matches!(
            "zigzag".parse::<Profile>(),
            Err(Error::UnknownProfile(_))
        ));
    }

    #[test]
    fn piecewise_coefficients_match_quadrature() {
        let g = geom20(40);
        for profile in [Profile::SawtoothPair, Profile::Step] {
            let f = builtin_profile(&profile, &g).unwrap();
            assert!(f.is_real());
            for k in [-17, -3, 0, 1, 2, 9, 40] {
                let want = quadrature_coefficient(&profile, g.wavenumber(0, k), 20.0);
                let got = f.coeff(&[k]).unwrap();
                assert!(
                    (got - want).norm() < 1e-13,
                    "{profile} k={k}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn sawtooth_closed_form() {
        // f̂_k = (2i/r)(1/ν − sin ν/ν²), f̂_0 = 0
        let g = geom20(64);
        let f = builtin_profile(&Profile::SawtoothPair, &g).unwrap();
        assert!(f.coeff(&[0]).unwrap().norm() < 1e-16);
        for k in 1..=64 {
            let nu = g.wavenumber(0, k);
            let want = Complex64::new(0.0, 2.0 / 20.0 * (1.0 / nu - nu.sin() / (nu * nu)));
            assert!((f.coeff(&[k]).unwrap() - want).norm() < 1e-15);
        }
        // decays like C/|k| with C = 2/(2π) ≈ 1/π
        let k = 60;
        let ratio = f.coeff(&[k]).unwrap().norm() * k as f64;
        assert!((ratio - 1.0 / PI).abs() < 0.05 / PI);
    }

    #[test]
    fn step_closed_form() {
        let g = geom20(32);
        let f = builtin_profile(&Profile::Step, &g).unwrap();
        for k in 1..=32 {
            let nu = g.wavenumber(0, k);
            let want = 2.0 * nu.sin() / (nu * 20.0);
            assert!((f.coeff(&[k]).unwrap() - Complex64::new(want, 0.0)).norm() < 1e-15);
        }
        assert!((f.coeff(&[0]).unwrap().re - 0.1).abs() < 1e-15);
    }

    #[test]
    fn breakpoints_and_values() {
        let bp = Profile::SawtoothPair.breakpoints();
        let locs: Vec<f64> = bp.iter().map(|b| b.location).collect();
        assert_eq!(locs, vec![-1.0, 0.0, 1.0]);
        let jumps: Vec<f64> = bp.iter().map(|b| b.jump).collect();
        assert_eq!(jumps, vec![0.0, -2.0, 0.0]);
        let step: Vec<f64> = Profile::Step.breakpoints().iter().map(|b| b.jump).collect();
        assert_eq!(step, vec![1.0, -1.0]);
        let s = Profile::SawtoothPair;
        assert_eq!(s.evaluate(-0.5, 20.0), Some(0.5));
        assert_eq!(s.evaluate(0.0, 20.0), Some(1.0));
        assert_eq!(s.evaluate(0.25, 20.0), Some(-0.75));
        assert_eq!(s.evaluate(19.75, 20.0), Some(0.75));
        assert_eq!(s.evaluate(5.0, 20.0), Some(0.0));
        assert_eq!(s.limit(0.0, 20.0, Side::Left), Some(1.0));
        assert_eq!(s.limit(0.0, 20.0, Side::Right), Some(-1.0));
        assert_eq!(Profile::Step.limit(1.0, 20.0, Side::Right), Some(0.0));
        assert_eq!(Profile::Step.limit(-1.0, 20.0, Side::Right), Some(1.0));
    }

    #[test]
    fn piecewise_profiles_need_one_dimension() {
        let g = TorusGeometry::new(vec![20.0, 20.0], 4).unwrap();
        assert!(builtin_profile(&Profile::Step, &g).is_err());
        assert!(builtin_profile(&Profile::SmoothBump, &g).is_ok());
    }

    #[test]
    fn single_mode_is_an_indicator() {
        let g = geom20(5);
        let f = builtin_profile_named("single_mode(3)", &g).unwrap();
        for k in -5..=5 {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert_eq!(f.coeff(&[k]).unwrap(), Complex64::new(want, 0.0));
        }
    }
}
