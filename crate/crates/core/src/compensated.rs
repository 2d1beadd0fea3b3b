//! Neumaier (improved Kahan–Babuška) summation.

#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    correction: f64,
}

impl CompensatedSum {
    pub fn new(initial: f64) -> Self {
        Self {
            sum: initial,
            correction: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.correction += (self.sum - t) + x;
        } else {
            self.correction += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.correction
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        s.extend(iter);
        s
    }
}

/// a + b = s + e exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// (a_hi + a_lo)/(b_hi + b_lo) with one final rounding of a two-word quotient.
pub fn dd_div(a: (f64, f64), b: (f64, f64)) -> f64 {
    let q = a.0 / b.0;
    // remainder a − q·b, the product error recovered with an FMA
    let p = q * b.0;
    let p_err = q.mul_add(b.0, -p);
    let r = ((a.0 - p) - p_err) + a.1 - q * b.1;
    q + r / b.0
}
