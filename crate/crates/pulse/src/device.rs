//! Synthetic hardware with hidden ground truth, and the calibration
//! experiments run against it.

use std::f64::consts::PI;

use num_complex::Complex64;
use qstack_core::linalg::Matrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{sample_waveform, Envelope, SampledWaveform};
use crate::fit::{fit_rabi, RabiFit};
use crate::integrate::{constant_step, propagator, ControlModel};
use crate::PulseError;

/// One qubit's true response. Frequencies in Hz unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticQubit {
    pub id: usize,
    pub freq_hz: f64,
    pub anharm_hz: f64,
    /// Spectroscopy linewidth Γ.
    pub linewidth_hz: f64,
    /// `Ω(A) = gain·A·(1 − cubic·A²)`.
    pub rabi_gain_hz: f64,
    #[serde(default)]
    pub rabi_cubic: f64,
    /// Hidden gain error on the in-phase channel that fine-tuning removes.
    #[serde(default = "one")]
    pub s_rel: f64,
    #[serde(default = "one")]
    pub s_amp: f64,
}

fn one() -> f64 {
    1.0
}

impl SyntheticQubit {
    /// A linear device with `Ω(a_ref) = omega_ref`.
    pub fn linear(id: usize, a_ref: f64, omega_ref: f64) -> Self {
        SyntheticQubit {
            id,
            freq_hz: 5.0e9,
            anharm_hz: -3.0e8,
            linewidth_hz: 1.0e6,
            rabi_gain_hz: omega_ref / a_ref,
            rabi_cubic: 0.0,
            s_rel: 1.0,
            s_amp: 1.0,
        }
    }

    /// True Rabi frequency in Hz for a real amplitude.
    pub fn rabi_frequency(&self, amp: f64) -> f64 {
        self.rabi_gain_hz * amp * (1.0 - self.rabi_cubic * amp * amp)
    }

    /// Drive rate `γ` in rad/s produced by the programmed amplitude `a`.
    pub fn response(&self, a: Complex64) -> Complex64 {
        let eff = Complex64::new(a.re / self.s_rel, a.im) / self.s_amp;
        let mag = eff.norm();
        if mag == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        eff / mag * (2.0 * PI * self.rabi_frequency(mag))
    }

    pub fn drive(&self, wf: &SampledWaveform) -> SampledWaveform {
        SampledWaveform {
            dt: wf.dt,
            samples: wf.samples.iter().map(|a| self.response(*a)).collect(),
        }
    }
}

fn sample_p<R: Rng>(p: f64, shots: Option<u64>, rng: &mut R) -> f64 {
    match shots {
        None => p,
        Some(n) => {
            let k = Binomial::new(n, p.clamp(0.0, 1.0))
                .expect("valid binomial")
                .sample(rng);
            k as f64 / n as f64
        }
    }
}

/// Constant-amplitude pulses of each duration; returns `(t, P₁)`.
pub fn run_rabi<R: Rng>(
    device: &SyntheticQubit,
    amplitude: f64,
    durations: &[f64],
    shots: Option<u64>,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let g = device.response(Complex64::new(amplitude, 0.0));
    durations
        .iter()
        .map(|&t| {
            let u = constant_step(g, 0.0, t);
            (t, sample_p(u.get(1, 0).norm_sqr(), shots, rng))
        })
        .collect()
}

/// Saturated spectroscopy: `P₀(f) = 1 − ½Γ²/((f − ω)² + Γ²)` with `f`, `ω`
/// and `Γ` in rad/s.
pub fn run_spectroscopy<R: Rng>(
    device: &SyntheticQubit,
    freqs: &[f64],
    shots: Option<u64>,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let w = 2.0 * PI * device.freq_hz;
    let g2 = (2.0 * PI * device.linewidth_hz).powi(2);
    freqs
        .iter()
        .map(|&f| {
            (
                f,
                sample_p(1.0 - 0.5 * g2 / ((f - w).powi(2) + g2), shots, rng),
            )
        })
        .collect()
}

/// Output of [`fine_tune`].
#[derive(Debug, Clone, PartialEq)]
pub struct FineTune {
    pub s_amp: f64,
    pub s_rel: f64,
    /// Per repetition count: `(S_rel, infidelity)` over the sweep.
    pub curves: Vec<(usize, Vec<(f64, f64)>)>,
    /// Infidelity averaged over the repetition counts.
    pub mean_curve: Vec<(f64, f64)>,
}

/// `1 − |⟨ideal|actual⟩|²` after `n` applications from `|0⟩`.
fn repeated_infidelity(u: &Matrix<f64>, ideal: &Matrix<f64>, n: usize) -> f64 {
    let mut a = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut b = a.clone();
    for _ in 0..n {
        a = u.mat_vec(&a);
        b = ideal.mat_vec(&b);
    }
    let ov = b[0].conj() * a[0] + b[1].conj() * a[1];
    (1.0 - ov.norm_sqr()).max(0.0)
}

/// Sweeps `S_rel` with `S_amp = 1` and returns the minimum of the mean
/// infidelity, refined by a parabola through the best grid point.
///
/// `env` is the uncorrected pulse in programmed amplitude units and
/// `target` is the rotation it should perform about x.
pub fn fine_tune(
    device: &SyntheticQubit,
    env: &Envelope,
    dt: f64,
    target: f64,
    repetitions: &[usize],
    sweep: &[f64],
) -> Result<FineTune, PulseError> {
    if sweep.is_empty() || repetitions.is_empty() {
        return Err(PulseError::Calibration("empty fine-tune sweep".into()));
    }
    let base = sample_waveform(env, dt)?;
    let ideal = Matrix::from_mat2(&qstack_core::ir::Gate::RX(target).matrix::<f64>());
    let rows: Vec<Vec<f64>> = sweep
        .par_iter()
        .map(|&s| {
            let wf = SampledWaveform {
                dt,
                samples: base
                    .samples
                    .iter()
                    .map(|a| Complex64::new(s * a.re, a.im))
                    .collect(),
            };
            let u = propagator::<f64>(&device.drive(&wf), &ControlModel::qubit())
                .expect("finite waveform");
            repetitions
                .iter()
                .map(|&n| repeated_infidelity(&u, &ideal, n))
                .collect()
        })
        .collect();
    let curves: Vec<(usize, Vec<(f64, f64)>)> = repetitions
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            (
                n,
                sweep.iter().zip(&rows).map(|(s, r)| (*s, r[k])).collect(),
            )
        })
        .collect();
    let mean_curve: Vec<(f64, f64)> = sweep
        .iter()
        .zip(&rows)
        .map(|(s, r)| (*s, r.iter().sum::<f64>() / r.len() as f64))
        .collect();
    let s_rel = parabolic_min(&mean_curve);
    Ok(FineTune {
        s_amp: 1.0,
        s_rel,
        curves,
        mean_curve,
    })
}

fn parabolic_min(curve: &[(f64, f64)]) -> f64 {
    let k = curve
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.1 < curve[b].1 { i } else { b });
    if k == 0 || k + 1 == curve.len() {
        return curve[k].0;
    }
    let (x0, y0) = curve[k - 1];
    let (x1, y1) = curve[k];
    let (x2, y2) = curve[k + 1];
    let den = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
    if a > 0.0 {
        (-b / (2.0 * a)).clamp(x0, x2)
    } else {
        x1
    }
}

/// Second-order coefficient of a least-squares parabola through the
/// points within `half_width` of the curve minimum.
pub fn curvature(curve: &[(f64, f64)], half_width: f64) -> f64 {
    let xm = curve
        .iter()
        .fold(curve[0], |b, p| if p.1 < b.1 { *p } else { b })
        .0;
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .copied()
        .filter(|p| (p.0 - xm).abs() <= half_width)
        .collect();
    let mut a = nalgebra::Matrix3::<f64>::zeros();
    let mut b = nalgebra::Vector3::<f64>::zeros();
    for (x, y) in &pts {
        let u = x - xm;
        let row = [1.0, u, u * u];
        for i in 0..3 {
            b[i] += row[i] * y;
            for j in 0..3 {
                a[(i, j)] += row[i] * row[j];
            }
        }
    }
    a.lu().solve(&b).map_or(0.0, |c| c[2])
}

/// Coupled pair for cross-resonance: target Rabi rate per unit amplitude
/// with the control in `|0⟩` and in `|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrPair {
    pub rate0_hz: f64,
    pub rate1_hz: f64,
}

impl CrPair {
    pub fn conditional_rate(&self, control: u8, amplitude: f64) -> f64 {
        if control == 0 {
            self.rate0_hz * amplitude
        } else {
            self.rate1_hz * amplitude
        }
    }

    /// Target `P₁` after a CR drive, control prepared in `control`.
    pub fn run_rabi<R: Rng>(
        &self,
        control: u8,
        amplitude: f64,
        durations: &[f64],
        shots: Option<u64>,
        rng: &mut R,
    ) -> Vec<(f64, f64)> {
        let w = self.conditional_rate(control, amplitude);
        durations
            .iter()
            .map(|&t| (t, sample_p((PI * w * t).sin().powi(2), shots, rng)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrCalibration {
    pub amplitude: f64,
    pub gate_time: f64,
    pub fit0: RabiFit,
    pub fit1: RabiFit,
}

/// First `t ≤ max_time` where `cos(2πΩ₀t) ≥ 1 − tol` and
/// `cos(2πΩ₁t) ≤ −1 + tol`, polished to the best point of that window.
pub fn sync_time(omega0: f64, omega1: f64, tol: f64, max_time: f64) -> Option<f64> {
    let z0 = |t: f64| (2.0 * PI * omega0 * t).cos();
    let z1 = |t: f64| (2.0 * PI * omega1 * t).cos();
    let ok = |t: f64| z0(t) >= 1.0 - tol && z1(t) <= -1.0 + tol;
    let miss = |t: f64| (1.0 - z0(t)) + (1.0 + z1(t));
    let h = 1.0 / (400.0 * omega0.abs().max(omega1.abs()).max(1.0 / max_time));
    let mut t = 0.0;
    while t <= max_time {
        if ok(t) {
            let mut end = t;
            while end + h <= max_time && ok(end + h) {
                end += h;
            }
            let (mut lo, mut hi) = ((t - h).max(0.0), (end + h).min(max_time));
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let a = hi - phi * (hi - lo);
                let b = lo + phi * (hi - lo);
                if miss(a) <= miss(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let best = 0.5 * (lo + hi);
            return Some(if ok(best) { best } else { t });
        }
        t += h;
    }
    None
}

/// Fits the conditional Rabi rates at each amplitude and keeps the
/// amplitude whose synchronization time is shortest.
pub fn cr_calibrate<R: Rng>(
    pair: &CrPair,
    amplitudes: &[f64],
    durations: &[f64],
    shots: Option<u64>,
    rng: &mut R,
) -> Result<CrCalibration, PulseError> {
    const TOL: f64 = 0.02;
    let max_time = durations.iter().copied().fold(0.0, f64::max);
    let mut best: Option<CrCalibration> = None;
    for &a in amplitudes {
        let fit0 = fit_rabi(&pair.run_rabi(0, a, durations, shots, rng))?;
        let fit1 = fit_rabi(&pair.run_rabi(1, a, durations, shots, rng))?;
        if let Some(t) = sync_time(fit0.frequency, fit1.frequency, TOL, max_time) {
            if best.as_ref().map_or(true, |b| t < b.gate_time) {
                best = Some(CrCalibration {
                    amplitude: a,
                    gate_time: t,
                    fit0,
                    fit1,
                });
            }
        }
    }
    best.ok_or_else(|| {
        PulseError::Calibration(format!(
            "no control-conditioned anti-alignment within {max_time:.3e} s"
        ))
    })
}
