//! Bessel function of the first kind, order zero.
//!
//! Rational approximation on [0, 5] (written around the first two zeros) and
//! the Hankel asymptotic form with 6/6 and 7/7 rational corrections beyond.
//! Coefficients are the Cephes `j0.c` set; peak absolute error ~4e-16 on [0, 30].
#![allow(clippy::excessive_precision, clippy::unreadable_literal)]

use std::f64::consts::{FRAC_PI_4, PI};

const DR1: f64 = 5.783185962946784;
const DR2: f64 = 30.471262343662087;

static RP: [f64; 4] = [
    -4.794432209782018e9,
    1.9561749194655657e12,
    -2.4924834436096772e14,
    9.708622510473064e15,
];
static RQ: [f64; 8] = [
    4.99563147152651e2,
    1.737854016763747e5,
    4.844096583399621e7,
    1.1185553704535683e10,
    2.112775201154892e12,
    3.1051822985742256e14,
    3.1812195594320496e16,
    1.7108629408104315e18,
];
static PP: [f64; 7] = [
    7.969367292973471e-4,
    8.283523921074408e-2,
    1.239533716464143,
    5.447250030587687,
    8.74716500199817,
    5.303240382353949,
    1.0,
];
static PQ: [f64; 7] = [
    9.244088105588637e-4,
    8.562884743544745e-2,
    1.2535274390105895,
    5.470977403304171,
    8.761908832370695,
    5.306052882353947,
    1.0,
];
static QP: [f64; 8] = [
    -1.1366383889846916e-2,
    -1.2825271867050931,
    -1.9553954425773597e1,
    -9.320601521237683e1,
    -1.7768116798048806e2,
    -1.4707750515495118e2,
    -5.141053267665993e1,
    -6.050143506007285,
];
static QQ: [f64; 7] = [
    6.43178256118178e1,
    8.564300259769806e2,
    3.8824018360540163e3,
    7.240467741956525e3,
    5.930727011873169e3,
    2.0620933166032783e3,
    2.420057402402914e2,
];

fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Same as `polevl` with an implicit leading coefficient of 1.
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 5.0 {
        let z = x * x;
        if x < 1e-5 {
            return 1.0 - z / 4.0;
        }
        let p = (z - DR1) * (z - DR2);
        return p * polevl(z, &RP) / p1evl(z, &RQ);
    }
    let w = 5.0 / x;
    let q = 25.0 / (x * x);
    let p = polevl(q, &PP) / polevl(q, &PQ);
    let q = polevl(q, &QP) / p1evl(q, &QQ);
    let xn = x - FRAC_PI_4;
    let p = p * xn.cos() - w * q * xn.sin();
    p * (2.0 / PI).sqrt() / x.sqrt()
}
