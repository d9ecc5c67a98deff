//! Calibration tables and the end-to-end single-qubit calibration run.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use num_complex::Complex64;
use qstack_core::mapper::NoiseModel;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ampmap::AmpMap;
use crate::device::{cr_calibrate, fine_tune, run_rabi, run_spectroscopy, CrPair, SyntheticQubit};
use crate::envelope::{sample_waveform, Envelope, Shape};
use crate::fit::{fit_lorentzian, fit_rabi, FitError};
use crate::PulseError;

/// Shape and length used for every calibrated single-qubit rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub shape: Shape,
    pub duration_s: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig {
            shape: Shape::Gaussian { sigma: 10e-9 },
            duration_s: 60e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitCalibration {
    pub id: usize,
    pub freq_hz: f64,
    pub anharm_hz: f64,
    /// `(A, Ω in Hz)` pairs for `A ≥ 0`.
    pub amp_map: Vec<(f64, f64)>,
    #[serde(default = "one")]
    pub s_amp: f64,
    #[serde(default = "one")]
    pub s_rel: f64,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl QubitCalibration {
    pub fn omega(&self) -> f64 {
        2.0 * PI * self.freq_hz
    }

    pub fn alpha(&self) -> f64 {
        2.0 * PI * self.anharm_hz
    }

    pub fn map(&self) -> Result<AmpMap, PulseError> {
        AmpMap::new(&self.amp_map)
    }

    /// Programmed amplitude after the fine-tune factors.
    pub fn fine(&self, a: Complex64) -> Complex64 {
        Complex64::new(self.s_rel * a.re, a.im) * self.s_amp
    }

    /// Inverse of [`fine`](Self::fine): what the device effectively sees.
    pub fn unfine(&self, a: Complex64) -> Complex64 {
        Complex64::new(a.re / self.s_rel, a.im) / self.s_amp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Cz,
    Iswap,
    Cr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairCalibration {
    pub a: usize,
    pub b: usize,
    pub g_hz: f64,
    pub kind: PairKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

impl PairCalibration {
    pub fn g(&self) -> f64 {
        2.0 * PI * self.g_hz
    }

    /// Explicit time, else the exchange time of the interaction: `π/2g` for
    /// iSWAP, one `|11⟩↔|20⟩` cycle `π/(√2 g)` for CZ, `π/2g` for CR.
    pub fn gate_time(&self) -> f64 {
        self.gate_time_s.unwrap_or(match self.kind {
            PairKind::Iswap | PairKind::Cr => FRAC_PI_2 / self.g(),
            PairKind::Cz => PI / (SQRT_2 * self.g()),
        })
    }

    pub fn joins(&self, x: usize, y: usize) -> bool {
        (self.a, self.b) == (x, y) || (self.a, self.b) == (y, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTable {
    pub qubits: Vec<QubitCalibration>,
    #[serde(default)]
    pub pairs: Vec<PairCalibration>,
}

impl CalibrationTable {
    pub fn qubit(&self, id: usize) -> Result<&QubitCalibration, PulseError> {
        self.qubits
            .iter()
            .find(|q| q.id == id)
            .ok_or_else(|| PulseError::Uncalibrated(format!("qubit {id}")))
    }

    pub fn pair(&self, x: usize, y: usize) -> Result<&PairCalibration, PulseError> {
        self.pairs
            .iter()
            .find(|p| p.joins(x, y))
            .ok_or_else(|| PulseError::Uncalibrated(format!("pair ({x}, {y})")))
    }

    /// `Δ₁₂ = ω_a − ω_b` in rad/s.
    pub fn detuning(&self, pair: &PairCalibration) -> Result<f64, PulseError> {
        Ok(self.qubit(pair.a)?.omega() - self.qubit(pair.b)?.omega())
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        let mut seen = BTreeMap::new();
        for q in &self.qubits {
            if seen.insert(q.id, ()).is_some() {
                return Err(PulseError::Table(format!("qubit {} listed twice", q.id)));
            }
            if !(q.anharm_hz < 0.0) {
                return Err(PulseError::Table(format!(
                    "qubit {}: anharmonicity must be negative",
                    q.id
                )));
            }
            if !(q.s_amp > 0.0 && q.s_rel > 0.0) {
                return Err(PulseError::Table(format!(
                    "qubit {}: fine-tune factors must be positive",
                    q.id
                )));
            }
            q.map()?;
            Envelope::new(q.pulse.shape, q.pulse.duration_s, Complex64::new(0.0, 0.0))?;
        }
        for p in &self.pairs {
            self.qubit(p.a)?;
            self.qubit(p.b)?;
            if p.a == p.b || !(p.g_hz > 0.0) {
                return Err(PulseError::Table(format!(
                    "pair ({}, {}) is malformed",
                    p.a, p.b
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, PulseError> {
        let t: CalibrationTable =
            serde_json::from_str(s).map_err(|e| PulseError::Table(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    /// Error rates for noise-aware routing; absent entries count as zero.
    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            node_error: self
                .qubits
                .iter()
                .filter_map(|q| q.error.map(|e| (q.id, e)))
                .collect(),
            edge_error: self
                .pairs
                .iter()
                .filter_map(|p| p.error.map(|e| ((p.a.min(p.b), p.a.max(p.b)), e)))
                .collect(),
            default_node: 0.0,
            default_edge: 0.0,
        }
    }
}

impl From<&CalibrationTable> for NoiseModel {
    fn from(t: &CalibrationTable) -> Self {
        t.noise_model()
    }
}

/// Amplitude `a ≥ 0` whose pulse `a·shape` turns by `angle` about x.
pub fn solve_amplitude(
    map: &AmpMap,
    pulse: &PulseConfig,
    dt: f64,
    angle: f64,
) -> Result<f64, PulseError> {
    if matches!(pulse.shape, Shape::Drag { .. }) {
        return Err(PulseError::Schedule(
            "DRAG pulses are not scheduled: replay is two-level".into(),
        ));
    }
    let unit = sample_waveform(
        &Envelope::new(pulse.shape, pulse.duration_s, Complex64::new(1.0, 0.0))?,
        dt,
    )?;
    let peak = unit.samples.iter().map(|s| s.re).fold(0.0, f64::max);
    let area = |a: f64| -> f64 {
        unit.samples
            .iter()
            .map(|s| 2.0 * PI * map.frequency(a * s.re).unwrap_or(f64::NAN) * dt)
            .sum()
    };
    let a_max = (map.max_amplitude() / peak).min(1.0);
    let target = angle.abs();
    if target > area(a_max) * (1.0 + 1e-12) {
        return Err(PulseError::OutOfRange {
            value: angle,
            limit: area(a_max),
        });
    }
    let (mut lo, mut hi) = (0.0, a_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if area(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Hidden-truth device description read by `calibrate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceModel {
    pub qubits: Vec<SyntheticQubit>,
    #[serde(default)]
    pub pairs: Vec<DevicePair>,
    #[serde(default)]
    pub pulse: PulseConfig,
    #[serde(default)]
    pub plan: CalibrationPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevicePair {
    pub a: usize,
    pub b: usize,
    pub g_hz: f64,
    pub kind: PairKind,
    /// Conditional Rabi rates for CR pairs; triggers a CR calibration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cr: Option<CrPair>,
}

/// Knobs of the calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationPlan {
    /// Spectroscopy centre guess offset from the true frequency, Hz.
    pub freq_guess_offset_hz: f64,
    pub freq_window_hz: f64,
    pub freq_points: usize,
    pub rabi_amplitudes: Vec<f64>,
    /// Length of the first, blind Rabi scan.
    pub first_window_s: f64,
    pub first_points: usize,
    pub shots: Option<u64>,
    pub fine_tune_reps: Vec<usize>,
    pub fine_tune_span: f64,
    pub fine_tune_points: usize,
    pub dt: f64,
    pub cr_amplitudes: Vec<f64>,
    pub cr_window_s: f64,
}

impl Default for CalibrationPlan {
    fn default() -> Self {
        CalibrationPlan {
            freq_guess_offset_hz: 2.0e6,
            freq_window_hz: 2.0e7,
            freq_points: 201,
            rabi_amplitudes: (0..18)
                .map(|k| 0.005 + (0.45 - 0.005) * k as f64 / 17.0)
                .collect(),
            first_window_s: 10e-6,
            first_points: 400,
            shots: None,
            fine_tune_reps: vec![17, 41],
            fine_tune_span: 0.02,
            fine_tune_points: 201,
            dt: 0.5e-9,
            cr_amplitudes: vec![0.25, 0.5, 0.75, 1.0],
            cr_window_s: 2e-6,
        }
    }
}

/// One CSV artifact: a name, column headers and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Sweep {
    fn xy(name: String, hx: &str, hy: &str, data: &[(f64, f64)]) -> Self {
        Sweep {
            name,
            header: vec![hx.into(), hy.into()],
            rows: data.iter().map(|(x, y)| vec![*x, *y]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRun {
    pub table: CalibrationTable,
    pub sweeps: Vec<Sweep>,
}

fn stage(step: &str, qubit: usize) -> impl Fn(FitError) -> PulseError + '_ {
    move |e| PulseError::Calibration(format!("qubit {qubit} {step}: {e}"))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1).max(1) as f64)
        .collect()
}

/// Spectroscopy, Rabi sweep, amplitude map and fine-tune for every qubit,
/// then CR timing for pairs that expose conditional rates.
pub fn calibrate<R: Rng>(model: &DeviceModel, rng: &mut R) -> Result<CalibrationRun, PulseError> {
    let plan = &model.plan;
    let mut sweeps = Vec::new();
    let mut qubits = Vec::new();
    for dev in &model.qubits {
        let id = dev.id;
        // Qubit line, then the |1⟩→|2⟩ line for the anharmonicity.
        let mut lines = Vec::new();
        for (label, truth) in [
            ("spectroscopy", dev.freq_hz),
            ("spectroscopy12", dev.freq_hz + dev.anharm_hz),
        ] {
            let centre = 2.0 * PI * (truth + plan.freq_guess_offset_hz);
            let half = PI * plan.freq_window_hz;
            let freqs = linspace(centre - half, centre + half, plan.freq_points);
            let probe = SyntheticQubit {
                freq_hz: truth,
                ..dev.clone()
            };
            let data = run_spectroscopy(&probe, &freqs, plan.shots, rng);
            let fit = fit_lorentzian(&data).map_err(stage(label, id))?;
            lines.push(fit.center / (2.0 * PI));
            sweeps.push(Sweep::xy(
                format!("q{id}_{label}"),
                "freq_rad_s",
                "p0",
                &data,
            ));
        }
        let (freq_hz, anharm_hz) = (lines[0], lines[1] - lines[0]);

        let mut points = Vec::new();
        let mut last: Option<(f64, f64)> = None;
        for &a in &plan.rabi_amplitudes {
            let durations = match last {
                None => linspace(0.0, plan.first_window_s, plan.first_points),
                Some((a0, w0)) => {
                    // Four expected periods at 16 points each.
                    let period = a0 / (w0 * a);
                    linspace(0.0, 4.0 * period, 64)
                }
            };
            let data = run_rabi(dev, a, &durations, plan.shots, rng);
            let fit = fit_rabi(&data).map_err(stage(&format!("rabi at A={a}"), id))?;
            points.push((a, fit.frequency));
            last = Some((a, fit.frequency));
            sweeps.push(Sweep::xy(format!("q{id}_rabi_a{a:.4}"), "t_s", "p1", &data));
        }
        let map = AmpMap::new(&points)
            .map_err(|e| PulseError::Calibration(format!("qubit {id} amp map: {e}")))?;

        let a = solve_amplitude(&map, &model.pulse, plan.dt, FRAC_PI_2)?;
        let env = Envelope::new(
            model.pulse.shape,
            model.pulse.duration_s,
            Complex64::new(a, 0.0),
        )?;
        let sweep = linspace(
            1.0 - plan.fine_tune_span,
            1.0 + plan.fine_tune_span,
            plan.fine_tune_points,
        );
        let ft = fine_tune(dev, &env, plan.dt, FRAC_PI_2, &plan.fine_tune_reps, &sweep)?;
        let mut header = vec!["s_rel".to_string()];
        header.extend(ft.curves.iter().map(|(n, _)| format!("infidelity_n{n}")));
        header.push("mean".into());
        let rows = (0..sweep.len())
            .map(|k| {
                let mut r = vec![sweep[k]];
                r.extend(ft.curves.iter().map(|(_, c)| c[k].1));
                r.push(ft.mean_curve[k].1);
                r
            })
            .collect();
        sweeps.push(Sweep {
            name: format!("q{id}_fine_tune"),
            header,
            rows,
        });

        qubits.push(QubitCalibration {
            id,
            freq_hz,
            anharm_hz,
            amp_map: points,
            s_amp: ft.s_amp,
            s_rel: ft.s_rel,
            pulse: model.pulse,
            error: None,
        });
    }

    let mut pairs = Vec::new();
    for p in &model.pairs {
        let mut gate_time_s = None;
        if let Some(cr) = &p.cr {
            let durations = linspace(0.0, plan.cr_window_s, 400);
            let cal = cr_calibrate(cr, &plan.cr_amplitudes, &durations, plan.shots, rng)
                .map_err(|e| PulseError::Calibration(format!("pair ({}, {}) cr: {e}", p.a, p.b)))?;
            let zs = |f: f64| {
                durations
                    .iter()
                    .map(|t| (*t, (2.0 * PI * f * t).cos()))
                    .collect::<Vec<_>>()
            };
            sweeps.push(Sweep::xy(
                format!("pair{}_{}_cr_control0", p.a, p.b),
                "t_s",
                "z_target",
                &zs(cal.fit0.frequency),
            ));
            sweeps.push(Sweep::xy(
                format!("pair{}_{}_cr_control1", p.a, p.b),
                "t_s",
                "z_target",
                &zs(cal.fit1.frequency),
            ));
            gate_time_s = Some(cal.gate_time);
        }
        pairs.push(PairCalibration {
            a: p.a,
            b: p.b,
            g_hz: p.g_hz,
            kind: p.kind,
            gate_time_s,
            error: None,
        });
    }
    let table = CalibrationTable { qubits, pairs };
    table.validate()?;
    Ok(CalibrationRun { table, sweeps })
}
