//! Curve fits for Rabi oscillations and spectroscopy dips.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("data shows no oscillation")]
    NoOscillation,
    #[error("data shows no resonance dip")]
    NoDip,
    #[error("no convergence after {iterations} iterations (rms residual {rms:.3e})")]
    NotConverged { iterations: usize, rms: f64 },
    #[error("non-finite data")]
    NonFinite,
}

/// `P₁(t) = 𝒜 cos²(Ωπt + Φ) + δ` with `Ω` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub offset: f64,
    pub rms: f64,
}

impl RabiFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * PI * t + self.phase).cos().powi(2) + self.offset
    }
}

/// `ℒ(f) = −A Γ² / ((f − ω)² + Γ²) + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub amplitude: f64,
    pub offset: f64,
    pub center: f64,
    pub linewidth: f64,
    pub rms: f64,
}

impl LorentzianFit {
    pub fn eval(&self, f: f64) -> f64 {
        let g2 = self.linewidth * self.linewidth;
        -self.amplitude * g2 / ((f - self.center).powi(2) + g2) + self.offset
    }
}

/// Levenberg-Marquardt on `model(x, p) -> (value, gradient)`.
/// Returns the parameters and the final rms residual.
fn levenberg_marquardt<F>(
    xs: &[f64],
    ys: &[f64],
    p0: Vec<f64>,
    model: F,
) -> Result<(Vec<f64>, f64), FitError>
where
    F: Fn(f64, &[f64]) -> (f64, Vec<f64>),
{
    let m = p0.len();
    let cost = |p: &[f64]| {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (model(*x, p).0 - y).powi(2))
            .sum::<f64>()
    };
    let rms = |c: f64| (c / xs.len() as f64).sqrt();
    let mut p = p0;
    let mut c = cost(&p);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = DMatrix::<f64>::zeros(m, m);
        let mut jtr = DVector::<f64>::zeros(m);
        for (x, y) in xs.iter().zip(ys) {
            let (v, g) = model(*x, &p);
            let r = y - v;
            for i in 0..m {
                jtr[i] += g[i] * r;
                for j in 0..m {
                    jtj[(i, j)] += g[i] * g[j];
                }
            }
        }
        if jtr.amax() <= 1e-15 * (1.0 + c) {
            return Ok((p, rms(c)));
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let step = match a.lu().solve(&jtr) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let ct = cost(&trial);
            if ct.is_finite() && ct <= c {
                let small = step
                    .iter()
                    .zip(&p)
                    .all(|(s, q)| s.abs() <= 1e-13 * (q.abs() + 1e-12));
                let flat = c - ct <= 1e-15 * c.max(1e-300);
                p = trial;
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small || flat {
                    return Ok((p, rms(c)));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step exists at any damping: a minimum.
            return Ok((p, rms(c)));
        }
    }
    Err(FitError::NotConverged {
        iterations: MAX_ITERATIONS,
        rms: rms(c),
    })
}

fn check(data: &[(f64, f64)], need: usize) -> Result<(), FitError> {
    if data.len() < need {
        return Err(FitError::TooFewPoints {
            need,
            got: data.len(),
        });
    }
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

/// Least-squares `c0 + c1 cos(2πνs) + c2 sin(2πνs)`; returns coefficients
/// and the residual sum of squares.
fn sinusoid_lsq(s: &[f64], y: &[f64], nu: f64) -> Option<([f64; 3], f64)> {
    let mut a = DMatrix::<f64>::zeros(3, 3);
    let mut b = DVector::<f64>::zeros(3);
    for (x, v) in s.iter().zip(y) {
        let (sn, cs) = (2.0 * PI * nu * x).sin_cos();
        let row = [1.0, cs, sn];
        for i in 0..3 {
            b[i] += row[i] * v;
            for j in 0..3 {
                a[(i, j)] += row[i] * row[j];
            }
        }
    }
    let c = a.lu().solve(&b)?;
    let rss = s
        .iter()
        .zip(y)
        .map(|(x, v)| {
            let (sn, cs) = (2.0 * PI * nu * x).sin_cos();
            (v - c[0] - c[1] * cs - c[2] * sn).powi(2)
        })
        .sum();
    Some(([c[0], c[1], c[2]], rss))
}

/// Fits `P₁(t) = 𝒜cos²(Ωπt + Φ) + δ`. The frequency is seeded from the
/// peak of a Fourier periodogram and refined by Levenberg-Marquardt.
pub fn fit_rabi(data: &[(f64, f64)]) -> Result<RabiFit, FitError> {
    check(data, 8)?;
    let t0 = data.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let t1 = data.iter().map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    let span = t1 - t0;
    if !(span > 0.0) {
        return Err(FitError::TooFewPoints { need: 2, got: 1 });
    }
    // Dimensionless time so the frequency parameter is O(periods).
    let s: Vec<f64> = data.iter().map(|d| (d.0 - t0) / span).collect();
    let y: Vec<f64> = data.iter().map(|d| d.1).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    if var.sqrt() < 1e-9 {
        return Err(FitError::NoOscillation);
    }
    let nyquist = (data.len() as f64 - 1.0) / 2.0;
    let step = 1.0 / 16.0;
    let mut best: Option<(f64, f64)> = None;
    let mut nu = 0.5;
    while nu <= nyquist {
        if let Some((_, rss)) = sinusoid_lsq(&s, &y, nu) {
            if best.map_or(true, |b| rss < b.1) {
                best = Some((nu, rss));
            }
        }
        nu += step;
    }
    let (nu0, _) = best.ok_or(FitError::NoOscillation)?;
    let (c, _) = sinusoid_lsq(&s, &y, nu0).ok_or(FitError::NoOscillation)?;
    let model = |x: f64, p: &[f64]| {
        let (sn, cs) = (2.0 * PI * p[3] * x).sin_cos();
        let v = p[0] + p[1] * cs + p[2] * sn;
        let dnu = 2.0 * PI * x * (-p[1] * sn + p[2] * cs);
        (v, vec![1.0, cs, sn, dnu])
    };
    let (p, rms) = levenberg_marquardt(&s, &y, vec![c[0], c[1], c[2], nu0], model)?;
    let (mut c1, mut c2, mut nu) = (p[1], p[2], p[3]);
    if nu < 0.0 {
        nu = -nu;
        c2 = -c2;
    }
    let r = c1.hypot(c2);
    if r < 1e-6 * var.sqrt().max(1e-12) || !(nu > 0.0) {
        return Err(FitError::NoOscillation);
    }
    let freq = nu / span;
    // Express the phase at absolute time: shift the cosine by t0.
    let psi = c2.atan2(c1) + 2.0 * PI * freq * t0;
    c1 = r * psi.cos();
    c2 = r * psi.sin();
    let phase = (-c2).atan2(c1) / 2.0;
    Ok(RabiFit {
        amplitude: (2.0 * r).min(1.0),
        frequency: freq,
        phase,
        offset: p[0] - r,
        rms,
    })
}

/// Fits a Lorentzian dip.
pub fn fit_lorentzian(data: &[(f64, f64)]) -> Result<LorentzianFit, FitError> {
    check(data, 8)?;
    let mut pts = data.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let f0 = pts[0].0;
    let span = pts[pts.len() - 1].0 - f0;
    if !(span > 0.0) {
        return Err(FitError::NoDip);
    }
    let x: Vec<f64> = pts.iter().map(|p| (p.0 - f0) / span).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (imin, ymin) =
        y.iter().copied().enumerate().fold(
            (0, f64::INFINITY),
            |a, (i, v)| if v < a.1 { (i, v) } else { a },
        );
    let base = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let depth = base - ymin;
    if depth < 1e-9 * base.abs().max(1.0) {
        return Err(FitError::NoDip);
    }
    let half = base - depth / 2.0;
    let left = (0..imin)
        .rev()
        .find(|&i| y[i] >= half)
        .map_or(x[0], |i| x[i]);
    let right = (imin..y.len())
        .find(|&i| y[i] >= half)
        .map_or(x[x.len() - 1], |i| x[i]);
    let gamma0 = ((right - left) / 2.0).max(1.0 / x.len() as f64);
    let model = |f: f64, p: &[f64]| {
        let (a, b, w, g) = (p[0], p[1], p[2], p[3]);
        let g2 = g * g;
        let den = (f - w).powi(2) + g2;
        let l = g2 / den;
        let v = -a * l + b;
        let dw = -a * g2 * 2.0 * (f - w) / (den * den);
        let dg = -a * (2.0 * g * den - g2 * 2.0 * g) / (den * den);
        (v, vec![-l, 1.0, dw, dg])
    };
    let (p, rms) = levenberg_marquardt(&x, &y, vec![depth, base, x[imin], gamma0], model)?;
    if !(p[0] > 0.0) || p[3] == 0.0 {
        return Err(FitError::NoDip);
    }
    Ok(LorentzianFit {
        amplitude: p[0],
        offset: p[1],
        center: f0 + p[2] * span,
        linewidth: p[3].abs() * span,
        rms,
    })
}
