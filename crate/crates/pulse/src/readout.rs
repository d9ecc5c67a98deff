//! Dispersive readout: the state-dependent resonator shift and a linear
//! IQ discriminator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::PulseError;

/// `χ = g²/Δ`. Fails at `Δ = 0`. The dispersive picture needs `|Δ| ≫ g`;
/// [`dispersive_ok`] reports whether that holds by a factor of ten.
pub fn dispersive_shift(g: f64, delta: f64) -> Result<f64, PulseError> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(PulseError::Model(
            "dispersive shift needs a non-zero detuning".into(),
        ));
    }
    Ok(g * g / delta)
}

pub fn dispersive_ok(g: f64, delta: f64) -> bool {
    delta.abs() >= 10.0 * g.abs()
}

/// Perpendicular bisector of the two calibration means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqDiscriminator {
    pub mean0: Complex64,
    pub mean1: Complex64,
}

impl IqDiscriminator {
    pub fn from_means(mean0: Complex64, mean1: Complex64) -> Self {
        IqDiscriminator { mean0, mean1 }
    }

    pub fn calibrate(shots0: &[Complex64], shots1: &[Complex64]) -> Self {
        let mean = |v: &[Complex64]| v.iter().sum::<Complex64>() / v.len().max(1) as f64;
        Self::from_means(mean(shots0), mean(shots1))
    }

    /// Positive on the `|1⟩` side.
    pub fn signed_distance(&self, p: Complex64) -> f64 {
        let axis = self.mean1 - self.mean0;
        let n = axis.norm();
        if n == 0.0 {
            return 0.0;
        }
        let mid = (self.mean0 + self.mean1) / 2.0;
        let d = p - mid;
        (d.re * axis.re + d.im * axis.im) / n
    }

    /// Ties go to 0.
    pub fn classify(&self, p: Complex64) -> u8 {
        u8::from(self.signed_distance(p) > 0.0)
    }

    /// `1 − ½(P(1|0) + P(0|1))` on labeled shots.
    pub fn assignment_fidelity(&self, shots0: &[Complex64], shots1: &[Complex64]) -> f64 {
        let wrong = |v: &[Complex64], label: u8| {
            v.iter().filter(|p| self.classify(**p) != label).count() as f64 / v.len() as f64
        };
        1.0 - 0.5 * (wrong(shots0, 0) + wrong(shots1, 1))
    }
}

pub fn classify_iq(points: &[Complex64], disc: &IqDiscriminator) -> Vec<u8> {
    points.iter().map(|p| disc.classify(*p)).collect()
}
