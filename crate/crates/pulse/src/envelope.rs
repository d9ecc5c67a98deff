//! Pulse envelopes and their sampled form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::PulseError;

/// Above this many samples `sample_waveform` refuses to allocate.
pub const MAX_SAMPLES: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Shape {
    Square,
    Gaussian { sigma: f64 },
    GaussianSquare { sigma: f64, width: f64 },
    Drag { sigma: f64, beta: f64 },
}

/// A complex envelope `A(t)` on `[0, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub shape: Shape,
    pub duration: f64,
    pub amplitude: Complex64,
}

impl Envelope {
    pub fn new(shape: Shape, duration: f64, amplitude: Complex64) -> Result<Self, PulseError> {
        let env = Envelope {
            shape,
            duration,
            amplitude,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn square(duration: f64, amplitude: f64) -> Result<Self, PulseError> {
        Self::new(Shape::Square, duration, Complex64::new(amplitude, 0.0))
    }

    pub fn gaussian(duration: f64, sigma: f64, amplitude: f64) -> Result<Self, PulseError> {
        Self::new(
            Shape::Gaussian { sigma },
            duration,
            Complex64::new(amplitude, 0.0),
        )
    }

    pub fn gaussian_square(
        duration: f64,
        sigma: f64,
        width: f64,
        amplitude: f64,
    ) -> Result<Self, PulseError> {
        Self::new(
            Shape::GaussianSquare { sigma, width },
            duration,
            Complex64::new(amplitude, 0.0),
        )
    }

    pub fn drag(duration: f64, sigma: f64, beta: f64, amplitude: f64) -> Result<Self, PulseError> {
        Self::new(
            Shape::Drag { sigma, beta },
            duration,
            Complex64::new(amplitude, 0.0),
        )
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        let bad = |what: &str| Err(PulseError::InvalidEnvelope(what.to_string()));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        if !(self.amplitude.norm() <= 1.0) {
            return bad("|A| must not exceed 1");
        }
        match self.shape {
            Shape::Square => {}
            Shape::Gaussian { sigma } | Shape::Drag { sigma, .. } if !(sigma > 0.0) => {
                return bad("sigma must be positive")
            }
            Shape::GaussianSquare { sigma, width } => {
                if !(sigma > 0.0) {
                    return bad("sigma must be positive");
                }
                if !(0.0..=self.duration).contains(&width) {
                    return bad("width must lie in [0, d]");
                }
            }
            Shape::Drag { beta, .. } if !beta.is_finite() => {
                return bad("drag coefficient must be finite")
            }
            _ => {}
        }
        Ok(())
    }

    /// Same shape with a different complex amplitude.
    pub fn with_amplitude(&self, amplitude: Complex64) -> Envelope {
        Envelope { amplitude, ..*self }
    }

    /// Unnormalized profile `g(t)`.
    fn profile(&self, t: f64) -> f64 {
        let d = self.duration;
        match self.shape {
            Shape::Square => 1.0,
            Shape::Gaussian { sigma } | Shape::Drag { sigma, .. } => gauss(t - d / 2.0, sigma),
            Shape::GaussianSquare { sigma, width } => {
                let r = (d - width) / 2.0;
                if t < r {
                    gauss(t - r, sigma)
                } else if t < r + width {
                    1.0
                } else {
                    gauss(t - (r + width), sigma)
                }
            }
        }
    }

    /// `A(t)`. The gaussian kinds are lifted so they vanish one sample
    /// before the start and one sample after the end; `dt` fixes that point.
    pub fn eval(&self, t: f64, dt: f64) -> Complex64 {
        let d = self.duration;
        match self.shape {
            Shape::Square => {
                if (0.0..d).contains(&t) {
                    self.amplitude
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Shape::Gaussian { .. } | Shape::GaussianSquare { .. } => {
                if t <= -dt || t >= d + dt {
                    return Complex64::new(0.0, 0.0);
                }
                self.amplitude * self.lifted(t, dt)
            }
            Shape::Drag { sigma, beta } => {
                if !(0.0..d).contains(&t) {
                    return Complex64::new(0.0, 0.0);
                }
                let f = self.amplitude * self.lifted(t, dt);
                f * Complex64::new(1.0, -beta * (t - d / 2.0) / (sigma * sigma))
            }
        }
    }

    fn lifted(&self, t: f64, dt: f64) -> f64 {
        let edge = self.profile(-dt);
        (self.profile(t) - edge) / (1.0 - edge)
    }
}

fn gauss(x: f64, sigma: f64) -> f64 {
    (-x * x / (2.0 * sigma * sigma)).exp()
}

/// Samples on a uniform grid. Values are dimensionless amplitudes until
/// scaled into angular Rabi rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform {
    pub dt: f64,
    pub samples: Vec<Complex64>,
}

impl SampledWaveform {
    pub fn zeros(n: usize, dt: f64) -> Self {
        SampledWaveform {
            dt,
            samples: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn scaled(&self, k: f64) -> Self {
        SampledWaveform {
            dt: self.dt,
            samples: self.samples.iter().map(|s| s * k).collect(),
        }
    }

    /// Rotates every sample by `e^{-i phi}`.
    pub fn phase_shifted(&self, phi: f64) -> Self {
        let r = Complex64::from_polar(1.0, -phi);
        SampledWaveform {
            dt: self.dt,
            samples: self.samples.iter().map(|s| s * r).collect(),
        }
    }
}

pub fn sample_count(duration: f64, dt: f64) -> Result<usize, PulseError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PulseError::InvalidEnvelope("dt must be positive".into()));
    }
    let ratio = duration / dt;
    if ratio > MAX_SAMPLES {
        return Err(PulseError::TooManySamples(ratio));
    }
    // Absorb float noise so d = k*dt gives exactly k samples.
    let n = (ratio - 1e-9).ceil().max(1.0);
    Ok(n as usize)
}

/// `samples[n] = A(n dt)` for `n < ceil(d / dt)`.
pub fn sample_waveform(env: &Envelope, dt: f64) -> Result<SampledWaveform, PulseError> {
    env.validate()?;
    let n = sample_count(env.duration, dt)?;
    let samples = (0..n).map(|k| env.eval(k as f64 * dt, dt)).collect();
    Ok(SampledWaveform { dt, samples })
}

/// Left Riemann sum of the in-phase quadrature.
pub fn rotation_angle(wf: &SampledWaveform) -> f64 {
    wf.samples.iter().map(|s| s.re).sum::<f64>() * wf.dt
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: f64 = 1e-9;

    #[test]
    fn gaussian_vanishes_one_step_outside() {
        let dt = 0.5 * NS;
        let g = Envelope::gaussian(60.0 * NS, 10.0 * NS, 0.3).unwrap();
        assert_eq!(g.eval(-dt, dt), Complex64::new(0.0, 0.0));
        assert_eq!(g.eval(60.0 * NS + dt, dt), Complex64::new(0.0, 0.0));
        let gs = Envelope::gaussian_square(60.0 * NS, 5.0 * NS, 30.0 * NS, 0.3).unwrap();
        assert_eq!(gs.eval(-dt, dt), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn plateau_center_is_amplitude() {
        let (d, w) = (60.0 * NS, 30.0 * NS);
        let gs = Envelope::gaussian_square(d, 5.0 * NS, w, 0.4).unwrap();
        let r = (d - w) / 2.0;
        assert!((gs.eval(r + w / 2.0, 0.5 * NS) - Complex64::new(0.4, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn drag_without_beta_is_gaussian() {
        let dt = 0.5 * NS;
        let g = Envelope::gaussian(40.0 * NS, 8.0 * NS, 0.5).unwrap();
        let dr = Envelope::drag(40.0 * NS, 8.0 * NS, 0.0, 0.5).unwrap();
        for k in 0..80 {
            let t = k as f64 * dt;
            assert_eq!(g.eval(t, dt), dr.eval(t, dt));
        }
    }

    #[test]
    fn rejects_bad_envelopes() {
        assert!(Envelope::square(10.0 * NS, 1.2).is_err());
        assert!(Envelope::square(0.0, 0.5).is_err());
        assert!(Envelope::gaussian(10.0 * NS, 0.0, 0.5).is_err());
        assert!(Envelope::gaussian_square(10.0 * NS, NS, 20.0 * NS, 0.5).is_err());
        assert!(matches!(
            sample_waveform(&Envelope::square(1.0, 0.1).unwrap(), 1e-8),
            Err(PulseError::TooManySamples(_))
        ));
    }
}
