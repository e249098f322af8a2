//! Shape-preserving piecewise-cubic interpolation (Fritsch-Carlson / PCHIP).

use crate::error::{Result, WecError};

/// Monotone cubic interpolant through strictly increasing abscissae.
///
/// Interpolation never overshoots the data; queries outside the tabulated
/// range are errors rather than extrapolations.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(WecError::Config(format!(
                "interpolation table needs >= 2 matched points, got {} x and {} y",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WecError::Config(
                "interpolation abscissae must be strictly increasing".into(),
            ));
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        let mut slope = vec![0.0; n];
        // Interior tangents: weighted harmonic mean when secants agree in sign.
        for i in 1..n - 1 {
            if d[i - 1] * d[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slope[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        slope[0] = edge_slope(h[0], h.get(1).copied().unwrap_or(h[0]), d[0], d.get(1).copied().unwrap_or(d[0]));
        slope[n - 1] = edge_slope(
            h[n - 2],
            if n >= 3 { h[n - 3] } else { h[n - 2] },
            d[n - 2],
            if n >= 3 { d[n - 3] } else { d[n - 2] },
        );
        Ok(Self { x, y, slope })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn eval(&self, q: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if q < lo || q > hi || !q.is_finite() {
            return Err(WecError::TableRange { x: q, lo, hi });
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&q).unwrap()) {
            Ok(i) => return Ok(self.y[i]),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (q - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok(h00 * self.y[i] + h10 * h * self.slope[i] + h01 * self.y[i + 1] + h11 * h * self.slope[i + 1])
    }
}

/// One-sided three-point estimate with the Fritsch-Carlson monotonicity clamp.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes() {
        let t = MonotoneCubic::new(vec![0.0, 1.0, 3.0, 4.0], vec![1.0, 2.0, 0.5, 0.7]).unwrap();
        for (x, y) in [(0.0, 1.0), (1.0, 2.0), (3.0, 0.5), (4.0, 0.7)] {
            assert_eq!(t.eval(x).unwrap(), y);
        }
    }

    #[test]
    fn stays_within_data_bounds_on_monotone_data() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + 1.0).collect();
        let t = MonotoneCubic::new(x, y).unwrap();
        let mut prev = t.eval(0.0).unwrap();
        for i in 1..400 {
            let q = 19.0 * i as f64 / 400.0;
            let v = t.eval(q).unwrap();
            assert!(v >= prev - 1e-12, "not monotone at {q}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn out_of_range_is_error() {
        let t = MonotoneCubic::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(t.eval(-0.1), Err(WecError::TableRange { .. })));
        assert!(matches!(t.eval(1.1), Err(WecError::TableRange { .. })));
    }

    #[test]
    fn rejects_unsorted_abscissae() {
        assert!(MonotoneCubic::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }
}
