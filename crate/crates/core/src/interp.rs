//! Monotone piecewise-cubic Hermite interpolation.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

impl Pchip {
    /// `xs` strictly increasing, at least two points.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n {
            return Err(Error::InvalidParameter(format!(
                "interpolation needs matching abscissae and ordinates (>= 2), got {} and {}",
                n,
                ys.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                let (a, b) = (delta[k - 1], delta[k]);
                if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
                    continue;
                }
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                ds[k] = (w1 + w2) / (w1 / a + w2 / b);
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip { xs, ys, ds })
    }

    pub fn first(&self) -> f64 {
        self.xs[0]
    }

    pub fn last(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Spacing of the first and last intervals.
    pub fn end_spacings(&self) -> (f64, f64) {
        let n = self.xs.len();
        (self.xs[1] - self.xs[0], self.xs[n - 1] - self.xs[n - 2])
    }

    /// Value at `x`; linear continuation with the end slope outside the
    /// data range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.ds[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.ds[n - 1] * (x - self.xs[n - 1]);
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.ds[k] + h01 * self.ys[k + 1] + h11 * h * self.ds[k + 1]
    }
}
