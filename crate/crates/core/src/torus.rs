//! Truncated Fourier series on the torus Tⁿ = Π [0, r_i).
//!
//! A [`SpectralField`] stores the coefficients ĥ_k for every ‖k‖_∞ ≤ K in
//! row-major order with each component running −K..=K, so the flat order is
//! the lexicographic order of k and the entry for −k sits at `len − 1 − i`.
//! The basis is e^{iν_k·x} with ν_k = (2πk₁/r₁, …, 2πk_n/r_n).

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::compensated::CompensatedSum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    periods: Vec<f64>,
    bandwidth: usize,
}

impl TorusGeometry {
    pub fn new(periods: Vec<f64>, bandwidth: usize) -> Result<Self> {
        if periods.is_empty() || periods.len() > 3 {
            return Err(Error::InvalidParams(format!(
                "torus dimension {} not in 1..=3",
                periods.len()
            )));
        }
        if periods.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "periods must be positive: {periods:?}"
            )));
        }
        if bandwidth == 0 {
            return Err(Error::InvalidParams("bandwidth must be positive".into()));
        }
        Ok(Self { periods, bandwidth })
    }

    /// Same period on every axis.
    pub fn cube(n: usize, period: f64, bandwidth: usize) -> Result<Self> {
        Self::new(vec![period; n], bandwidth)
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// 2K + 1 coefficients per axis.
    pub fn side(&self) -> usize {
        2 * self.bandwidth + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_bandwidth(&self, bandwidth: usize) -> Result<Self> {
        Self::new(self.periods.clone(), bandwidth)
    }

    pub fn flat_index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim() {
            return None;
        }
        let kk = self.bandwidth as i64;
        let mut idx = 0usize;
        for &c in k {
            if c.abs() > kk {
                return None;
            }
            idx = idx * self.side() + (c + kk) as usize;
        }
        Some(idx)
    }

    pub fn lattice_index(&self, mut flat: usize) -> Vec<i64> {
        let side = self.side();
        let mut k = vec![0i64; self.dim()];
        for slot in k.iter_mut().rev() {
            *slot = (flat % side) as i64 - self.bandwidth as i64;
            flat /= side;
        }
        k
    }

    /// 2πk/r_axis.
    pub fn wavenumber(&self, axis: usize, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.periods[axis]
    }

    pub fn frequency(&self, k: &[i64]) -> Vec<f64> {
        k.iter()
            .enumerate()
            .map(|(axis, &c)| self.wavenumber(axis, c))
            .collect()
    }

    /// ν_k for every stored k, in flat order.
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| self.frequency(&self.lattice_index(i)))
            .collect()
    }

    /// Per-axis tables of ν for k = −K..=K.
    fn axis_wavenumbers(&self) -> Vec<Vec<f64>> {
        let kk = self.bandwidth as i64;
        (0..self.dim())
            .map(|axis| (-kk..=kk).map(|k| self.wavenumber(axis, k)).collect())
            .collect()
    }

    /// ‖ν_k‖² in flat order, summed in axis order.
    pub fn nu_norm_sq_all(&self) -> Vec<f64> {
        let axes = self.axis_wavenumbers();
        self.tensor_map(|idx| idx.iter().zip(&axes).map(|(&j, a)| a[j] * a[j]).sum())
    }

    /// ‖k‖² in flat order.
    pub fn k_norm_sq_all(&self) -> Vec<f64> {
        let kk = self.bandwidth as i64;
        self.tensor_map(|idx| {
            idx.iter()
                .map(|&j| {
                    let c = (j as i64 - kk) as f64;
                    c * c
                })
                .sum()
        })
    }

    fn tensor_map<F: Fn(&[usize]) -> f64>(&self, f: F) -> Vec<f64> {
        let side = self.side();
        let n = self.dim();
        let mut idx = vec![0usize; n];
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            out.push(f(&idx));
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < side {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }

    /// (A, B) with A‖k‖ ≤ ‖ν_k‖ ≤ B‖k‖: the extreme per-axis scalings 2π/r_i.
    pub fn lattice_constants(&self) -> (f64, f64) {
        let scales = self.periods.iter().map(|r| 2.0 * PI / r);
        let a = scales.clone().fold(f64::INFINITY, f64::min);
        let b = scales.fold(0.0, f64::max);
        (a, b)
    }
}

/// Sobolev exponent s of H^s(Tⁿ); may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevIndex(pub f64);

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    geom: TorusGeometry,
    coeffs: Vec<Complex64>,
    real: bool,
}

const REALITY_TOL: f64 = 1e-12;

impl SpectralField {
    pub fn new(geom: TorusGeometry, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != geom.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} coefficients for a lattice of {}",
                coeffs.len(),
                geom.len()
            )));
        }
        let real = conjugate_symmetric(&coeffs, REALITY_TOL);
        Ok(Self { geom, coeffs, real })
    }

    pub fn zeros(geom: TorusGeometry) -> Self {
        let len = geom.len();
        Self {
            geom,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
            real: true,
        }
    }

    /// Coefficient 1 at k, zero elsewhere (the mode e^{iν_k·x}).
    pub fn single_mode(geom: TorusGeometry, k: &[i64]) -> Result<Self> {
        let idx = geom
            .flat_index(k)
            .ok_or_else(|| Error::InvalidParams(format!("mode {k:?} outside the truncation")))?;
        let mut f = Self::zeros(geom);
        f.coeffs[idx] = Complex64::new(1.0, 0.0);
        f.real = k.iter().all(|&c| c == 0);
        Ok(f)
    }

    pub fn constant(geom: TorusGeometry, value: f64) -> Self {
        let mut f = Self::zeros(geom);
        let zero = f.geom.flat_index(&vec![0; f.geom.dim()]).unwrap();
        f.coeffs[zero] = Complex64::new(value, 0.0);
        f
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> Option<Complex64> {
        self.geom.flat_index(k).map(|i| self.coeffs[i])
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Entrywise map `(flat index, coefficient) -> coefficient`. The reality
    /// flag is kept when `preserves_reality` (the map is real and even in k).
    pub fn map_indexed<F>(&self, preserves_reality: bool, f: F) -> Self
    where
        F: Fn(usize, Complex64) -> Complex64,
    {
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| f(i, c))
            .collect();
        let real = if preserves_reality && self.real {
            true
        } else {
            conjugate_symmetric(&coeffs, REALITY_TOL)
        };
        Self {
            geom: self.geom.clone(),
            coeffs,
            real,
        }
    }

    /// [`Self::map_indexed`] evaluated in parallel; each output slot is written
    /// by exactly one task, so the result does not depend on the thread count.
    pub fn par_map_indexed<F>(&self, preserves_reality: bool, f: F) -> Self
    where
        F: Fn(usize, Complex64) -> Complex64 + Sync + Send,
    {
        let coeffs: Vec<Complex64> = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(i, &c)| f(i, c))
            .collect();
        let real = if preserves_reality && self.real {
            true
        } else {
            conjugate_symmetric(&coeffs, REALITY_TOL)
        };
        Self {
            geom: self.geom.clone(),
            coeffs,
            real,
        }
    }

    pub fn check_same_geometry(&self, other: &TorusGeometry) -> Result<()> {
        if &self.geom != other {
            return Err(Error::GeometryMismatch(format!(
                "field geometry {:?} differs from {:?}",
                self.geom, other
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.check_same_geometry(&other.geom)?;
        Ok(self.map_indexed(other.real, |i, c| c + other.coeffs[i]))
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.check_same_geometry(&other.geom)?;
        Ok(self.map_indexed(other.real, |i, c| c - other.coeffs[i]))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_indexed(true, |_, c| c * s)
    }

    /// Same field on a smaller or larger truncation (padding with zeros).
    pub fn retruncate(&self, bandwidth: usize) -> Result<Self> {
        let geom = self.geom.with_bandwidth(bandwidth)?;
        let mut out = Self::zeros(geom.clone());
        for i in 0..geom.len() {
            let k = geom.lattice_index(i);
            if let Some(c) = self.coeff(&k) {
                out.coeffs[i] = c;
            }
        }
        out.real = conjugate_symmetric(&out.coeffs, REALITY_TOL);
        Ok(out)
    }

    /// CSV with columns k1..kn, re, im in lexicographic k order.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let n = self.geom.dim();
        for d in 1..=n {
            let _ = write!(s, "k{d},");
        }
        s.push_str("re,im\n");
        for (i, c) in self.coeffs.iter().enumerate() {
            for k in self.geom.lattice_index(i) {
                let _ = write!(s, "{k},");
            }
            let _ = writeln!(s, "{},{}", c.re, c.im);
        }
        s
    }

    /// Parse the CSV written by [`SpectralField::to_csv`]; missing modes are zero.
    pub fn from_csv(geom: TorusGeometry, text: &str) -> Result<Self> {
        let n = geom.dim();
        let mut f = Self::zeros(geom);
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != n + 2 {
                return Err(Error::InvalidParams(format!(
                    "line {}: expected {} columns",
                    line_no + 1,
                    n + 2
                )));
            }
            let bad =
                |what: &str| Error::InvalidParams(format!("line {}: bad {what}", line_no + 1));
            let k: Vec<i64> = cols[..n]
                .iter()
                .map(|c| c.trim().parse().map_err(|_| bad("index")))
                .collect::<Result<_>>()?;
            let re: f64 = cols[n].trim().parse().map_err(|_| bad("real part"))?;
            let im: f64 = cols[n + 1]
                .trim()
                .parse()
                .map_err(|_| bad("imaginary part"))?;
            if let Some(i) = f.geom.flat_index(&k) {
                f.coeffs[i] = Complex64::new(re, im);
            }
        }
        f.real = conjugate_symmetric(&f.coeffs, REALITY_TOL);
        Ok(f)
    }
}

fn conjugate_symmetric(coeffs: &[Complex64], tol: f64) -> bool {
    let len = coeffs.len();
    let scale = coeffs
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    (0..len).all(|i| (coeffs[i] - coeffs[len - 1 - i].conj()).norm() <= tol * scale)
}

/// Samples on the uniform grid x_j = origin + j·r/N along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub periods: Vec<f64>,
    pub origin: Vec<f64>,
    pub counts: Vec<usize>,
    /// Row-major, last axis fastest.
    pub values: Vec<Complex64>,
}

impl GridSamples {
    /// Sample a function of position on the grid.
    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(
        periods: Vec<f64>,
        origin: Vec<f64>,
        counts: Vec<usize>,
        f: F,
    ) -> Self {
        let total: usize = counts.iter().product();
        let mut values = Vec::with_capacity(total);
        let n = counts.len();
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        for _ in 0..total {
            for d in 0..n {
                x[d] = origin[d] + idx[d] as f64 * periods[d] / counts[d] as f64;
            }
            values.push(f(&x));
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self {
            periods,
            origin,
            counts,
            values,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let n = self.counts.len();
        let total: usize = self.counts.iter().product();
        let mut idx = vec![0usize; n];
        let mut out = Vec::with_capacity(total);
        for _ in 0..total {
            out.push(
                (0..n)
                    .map(|d| {
                        self.origin[d] + idx[d] as f64 * self.periods[d] / self.counts[d] as f64
                    })
                    .collect(),
            );
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < self.counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }
}

/// In-place FFT along every axis of a row-major array.
fn fft_nd(values: &mut [Complex64], counts: &[usize], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let n = counts.len();
    for axis in 0..n {
        let len = counts[axis];
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let stride: usize = counts[axis + 1..].iter().product();
        let outer: usize = counts[..axis].iter().product();
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * len * stride + s;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    values[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Trapezoidal-rule Fourier coefficients (scaled DFT), truncated to ‖k‖_∞ ≤ K.
pub fn analyze(samples: &GridSamples, bandwidth: usize) -> Result<SpectralField> {
    let geom = TorusGeometry::new(samples.periods.clone(), bandwidth)?;
    let n = geom.dim();
    if samples.counts.len() != n || samples.origin.len() != n {
        return Err(Error::GeometryMismatch(
            "grid rank differs from period count".into(),
        ));
    }
    for (axis, &c) in samples.counts.iter().enumerate() {
        if c < geom.side() {
            return Err(Error::GridTooCoarse {
                axis,
                points: c,
                required: geom.side(),
            });
        }
    }
    let total: usize = samples.counts.iter().product();
    if samples.values.len() != total {
        return Err(Error::GeometryMismatch(
            "sample count differs from grid size".into(),
        ));
    }
    let mut data = samples.values.clone();
    fft_nd(&mut data, &samples.counts, false);
    let norm = 1.0 / total as f64;
    let mut coeffs = Vec::with_capacity(geom.len());
    for i in 0..geom.len() {
        let k = geom.lattice_index(i);
        let mut flat = 0usize;
        let mut phase = 0.0;
        for d in 0..n {
            let c = samples.counts[d] as i64;
            flat = flat * samples.counts[d] + k[d].rem_euclid(c) as usize;
            phase -= geom.wavenumber(d, k[d]) * samples.origin[d];
        }
        coeffs.push(data[flat] * norm * Complex64::from_polar(1.0, phase));
    }
    SpectralField::new(geom, coeffs)
}

/// e^{iν_k x} for k = −K..=K along one axis. Advances by rotation and
/// re-anchors with an exact evaluation every 64 steps.
fn axis_phases(geom: &TorusGeometry, axis: usize, x: f64, out: &mut Vec<Complex64>) {
    out.clear();
    let kk = geom.bandwidth() as i64;
    let step = Complex64::from_polar(1.0, geom.wavenumber(axis, 1) * x);
    let mut cur = Complex64::new(0.0, 0.0);
    for (j, k) in (-kk..=kk).enumerate() {
        if j % 64 == 0 {
            cur = Complex64::from_polar(1.0, geom.wavenumber(axis, k) * x);
        } else {
            cur *= step;
        }
        out.push(cur);
    }
}

/// Σ_k ĥ_k e^{iν_k·x} at each point.
pub fn synthesize(field: &SpectralField, points: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let geom = field.geometry();
    let n = geom.dim();
    let side = geom.side();
    let mut phases: Vec<Vec<Complex64>> = vec![Vec::with_capacity(side); n];
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        if x.len() != n {
            return Err(Error::GeometryMismatch(format!(
                "point {x:?} has wrong dimension"
            )));
        }
        for d in 0..n {
            axis_phases(geom, d, x[d], &mut phases[d]);
        }
        let value = match n {
            1 => field
                .coeffs()
                .iter()
                .zip(&phases[0])
                .fold(Complex64::new(0.0, 0.0), |acc, (c, p)| acc + c * p),
            _ => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, c) in field.coeffs().iter().enumerate() {
                    let mut rem = i;
                    let mut ph = Complex64::new(1.0, 0.0);
                    for d in (0..n).rev() {
                        ph *= phases[d][rem % side];
                        rem /= side;
                    }
                    acc += c * ph;
                }
                acc
            }
        };
        out.push(value);
    }
    Ok(out)
}

/// Values on the uniform grid with `counts[i] ≥ 2K+1` points per axis, by
/// inverse FFT.
pub fn synthesize_grid(
    field: &SpectralField,
    origin: &[f64],
    counts: &[usize],
) -> Result<GridSamples> {
    let geom = field.geometry();
    let n = geom.dim();
    if origin.len() != n || counts.len() != n {
        return Err(Error::GeometryMismatch(
            "grid rank differs from field dimension".into(),
        ));
    }
    for (axis, &c) in counts.iter().enumerate() {
        if c < geom.side() {
            return Err(Error::GridTooCoarse {
                axis,
                points: c,
                required: geom.side(),
            });
        }
    }
    let total: usize = counts.iter().product();
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    for (i, c) in field.coeffs().iter().enumerate() {
        let k = geom.lattice_index(i);
        let mut flat = 0usize;
        let mut phase = 0.0;
        for d in 0..n {
            flat = flat * counts[d] + k[d].rem_euclid(counts[d] as i64) as usize;
            phase += geom.wavenumber(d, k[d]) * origin[d];
        }
        data[flat] = c * Complex64::from_polar(1.0, phase);
    }
    fft_nd(&mut data, counts, true);
    Ok(GridSamples {
        periods: geom.periods().to_vec(),
        origin: origin.to_vec(),
        counts: counts.to_vec(),
        values: data,
    })
}

/// ‖h‖_{H^s} = sqrt(Σ_k (1+‖k‖²)^s |ĥ_k|²), summed in lexicographic k order.
pub fn sobolev_norm(field: &SpectralField, s: SobolevIndex) -> f64 {
    let ksq = field.geometry().k_norm_sq_all();
    let mut sum = CompensatedSum::default();
    for (c, k2) in field.coeffs().iter().zip(ksq) {
        let w = if s.0 == 0.0 {
            1.0
        } else {
            (1.0 + k2).powf(s.0)
        };
        sum.add(w * c.norm_sqr());
    }
    sum.value().max(0.0).sqrt()
}
