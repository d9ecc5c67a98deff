//! Monotone amplitude to Rabi-frequency map.

use crate::PulseError;

/// Piecewise-cubic Hermite interpolant through `(A, Ω)` knots with
/// Fritsch-Carlson slopes, so it stays monotone between knots. Negative
/// amplitudes mirror the positive branch.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpMap {
    a: Vec<f64>,
    omega: Vec<f64>,
    slope: Vec<f64>,
}

impl AmpMap {
    /// `points` are `(A, Ω in Hz)` with `A ≥ 0`. The origin is added when
    /// absent.
    pub fn new(points: &[(f64, f64)]) -> Result<Self, PulseError> {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        if pts
            .iter()
            .any(|(a, w)| !a.is_finite() || !w.is_finite() || *a < 0.0)
        {
            return Err(PulseError::AmpMap(
                "amplitudes must be finite and non-negative".into(),
            ));
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        if pts.first().map_or(true, |p| p.0 > 0.0) {
            pts.insert(0, (0.0, 0.0));
        }
        if pts.len() < 2 {
            return Err(PulseError::AmpMap(
                "need at least one non-zero amplitude".into(),
            ));
        }
        if pts[0].1 != 0.0 {
            return Err(PulseError::AmpMap(
                "zero amplitude must map to zero frequency".into(),
            ));
        }
        for w in pts.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(PulseError::AmpMap(format!(
                    "duplicate amplitude {}",
                    w[1].0
                )));
            }
            if w[1].1 <= w[0].1 {
                return Err(PulseError::AmpMap(format!(
                    "frequency not increasing at A = {}",
                    w[1].0
                )));
            }
        }
        let (a, omega): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let slope = pchip_slopes(&a, &omega);
        Ok(AmpMap { a, omega, slope })
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        self.a
            .iter()
            .copied()
            .zip(self.omega.iter().copied())
            .collect()
    }

    pub fn max_amplitude(&self) -> f64 {
        *self.a.last().expect("non-empty")
    }

    pub fn max_frequency(&self) -> f64 {
        *self.omega.last().expect("non-empty")
    }

    /// Ω(A) in Hz.
    pub fn frequency(&self, amp: f64) -> Result<f64, PulseError> {
        let x = amp.abs();
        if x > self.max_amplitude() * (1.0 + 1e-12) {
            return Err(PulseError::OutOfRange {
                value: amp,
                limit: self.max_amplitude(),
            });
        }
        Ok(amp.signum() * self.eval(x.min(self.max_amplitude())))
    }

    /// A(Ω), the inverse of [`frequency`](Self::frequency).
    pub fn amplitude(&self, freq: f64) -> Result<f64, PulseError> {
        let y = freq.abs();
        if y > self.max_frequency() * (1.0 + 1e-12) {
            return Err(PulseError::OutOfRange {
                value: freq,
                limit: self.max_frequency(),
            });
        }
        let y = y.min(self.max_frequency());
        let k = self.segment_by(&self.omega, y);
        let (mut lo, mut hi) = (self.a[k], self.a[k + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(freq.signum() * 0.5 * (lo + hi))
    }

    fn segment_by(&self, xs: &[f64], x: f64) -> usize {
        match xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(xs.len() - 2),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.segment_by(&self.a, x);
        let h = self.a[k + 1] - self.a[k];
        let t = (x - self.a[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.omega[k]
            + h10 * h * self.slope[k]
            + h01 * self.omega[k + 1]
            + h11 * h * self.slope[k + 1]
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![del[0], del[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], del[0], del[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

/// Shape-preserving three-point end condition.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if s.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_is_linear() {
        let m = AmpMap::new(&[(0.0, 0.0), (0.45, 9.0e7)]).unwrap();
        for a in [0.01, 0.2, 0.37] {
            assert!((m.frequency(a).unwrap() - 2.0e8 * a).abs() < 1e-6);
        }
    }

    #[test]
    fn knots_are_exact_and_odd() {
        let pts: Vec<(f64, f64)> = (1..=6)
            .map(|k| (0.05 * k as f64, 1e6 * (k as f64).powf(1.2)))
            .collect();
        let m = AmpMap::new(&pts).unwrap();
        for (a, w) in &pts {
            assert_eq!(m.frequency(*a).unwrap(), *w);
            assert_eq!(m.frequency(-*a).unwrap(), -*w);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(AmpMap::new(&[(0.1, 2.0), (0.2, 1.0)]).is_err());
        assert!(AmpMap::new(&[(0.1, 1.0), (0.1, 2.0)]).is_err());
        assert!(AmpMap::new(&[]).is_err());
        let m = AmpMap::new(&[(0.4, 1.0)]).unwrap();
        assert!(m.frequency(0.5).is_err());
        assert!(m.amplitude(2.0).is_err());
    }
}
