//! Lowering native circuits to pulse schedules, and replaying schedules
//! through the integrator.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use qstack_core::ir::{Circuit, Gate, Instruction};
use qstack_core::linalg::Matrix;
use serde::{Deserialize, Serialize};

use crate::calib::{solve_amplitude, CalibrationTable, PairKind, QubitCalibration};
use crate::envelope::{sample_count, sample_waveform, Envelope, SampledWaveform};
use crate::frames::FrameTracker;
use crate::integrate::{propagator, ControlModel};
use crate::twoq::{two_qubit_model, xy_evolution, FluxTrajectory, TwoQubitKind};
use crate::PulseError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub t0_samples: u64,
    /// Programmed `(I, Q)` amplitudes.
    pub samples: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEvent {
    pub t_samples: u64,
    /// Frame phase after the update.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub qubit: usize,
    pub dt: f64,
    pub pulses: Vec<Pulse>,
    pub frames: Vec<FrameEvent>,
}

/// A coupler operation, modeled at the unitary level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitEvent {
    pub t0_samples: u64,
    pub duration_samples: u64,
    pub kind: PairKind,
    /// CR control, or the first operand.
    pub a: usize,
    pub b: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    /// Target frame phase at the start, used by CR.
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub dt: f64,
    pub num_qubits: usize,
    pub channels: Vec<Channel>,
    #[serde(default)]
    pub two_qubit: Vec<TwoQubitEvent>,
}

impl PulseSchedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, PulseError> {
        serde_json::from_str(s).map_err(|e| PulseError::Schedule(e.to_string()))
    }

    /// Last sample index in use on any channel.
    pub fn duration_samples(&self) -> u64 {
        let p = self.channels.iter().flat_map(|c| {
            c.pulses
                .iter()
                .map(|p| p.t0_samples + p.samples.len() as u64)
        });
        let q = self
            .two_qubit
            .iter()
            .map(|e| e.t0_samples + e.duration_samples);
        p.chain(q).max().unwrap_or(0)
    }

    pub fn final_phase(&self, qubit: usize) -> f64 {
        self.channels
            .iter()
            .find(|c| c.qubit == qubit)
            .and_then(|c| c.frames.last())
            .map_or(0.0, |f| f.phase)
    }
}

fn x_angle(gate: &Gate) -> Option<f64> {
    match gate {
        Gate::SX => Some(FRAC_PI_2),
        Gate::SXdg => Some(-FRAC_PI_2),
        Gate::X => Some(PI),
        Gate::RX(a) => Some(*a),
        _ => None,
    }
}

/// The emitted pulse for an x rotation by `angle` under the current frame.
fn rotation_pulse(
    q: &QubitCalibration,
    angle: f64,
    dt: f64,
    frame: f64,
) -> Result<Vec<[f64; 2]>, PulseError> {
    let map = q.map()?;
    let a = solve_amplitude(&map, &q.pulse, dt, angle)? * angle.signum();
    let wf = sample_waveform(
        &Envelope::new(q.pulse.shape, q.pulse.duration_s, Complex64::new(1.0, 0.0))?,
        dt,
    )?;
    let rot = Complex64::from_polar(1.0, -frame);
    let mut out = Vec::with_capacity(wf.len());
    for s in &wf.samples {
        let v = q.fine(s * a * rot);
        if v.norm() > 1.0 + 1e-12 {
            return Err(PulseError::Amplitude {
                qubit: q.id,
                value: v.norm(),
            });
        }
        out.push([v.re, v.im]);
    }
    Ok(out)
}

/// Lowers a circuit over `{RZ, SX, SX†, X, RX, CZ, iSWAP, CR}`.
pub fn schedule_circuit(
    native: &Circuit,
    calib: &CalibrationTable,
    dt: f64,
) -> Result<PulseSchedule, PulseError> {
    let n = native.num_qubits;
    let mut frames = FrameTracker::new();
    let mut cursor = vec![0u64; n];
    let mut channels: Vec<Channel> = (0..n)
        .map(|q| Channel {
            qubit: q,
            dt,
            pulses: vec![],
            frames: vec![],
        })
        .collect();
    let mut two_qubit = Vec::new();
    for instr in &native.instructions {
        match instr {
            Instruction::Gate {
                gate: Gate::RZ(theta),
                target,
                controls,
                ..
            } if controls.is_empty() => {
                calib.qubit(*target)?;
                frames.virtual_z(*target, *theta);
                channels[*target].frames.push(FrameEvent {
                    t_samples: cursor[*target],
                    phase: frames.phase(*target),
                });
            }
            Instruction::Gate {
                gate,
                target,
                controls,
                ..
            } if controls.is_empty() && x_angle(gate).is_some() => {
                let q = calib.qubit(*target)?;
                let angle = x_angle(gate).expect("checked");
                if angle == 0.0 {
                    continue;
                }
                let samples = rotation_pulse(q, angle, dt, frames.phase(*target))?;
                let len = samples.len() as u64;
                channels[*target].pulses.push(Pulse {
                    t0_samples: cursor[*target],
                    samples,
                });
                cursor[*target] += len;
            }
            Instruction::Gate {
                gate: Gate::Z,
                target,
                controls,
                ..
            } if controls.len() == 1 => {
                two_qubit.push(coupler(
                    calib,
                    PairKind::Cz,
                    controls[0],
                    *target,
                    None,
                    &mut cursor,
                    &frames,
                    dt,
                )?);
            }
            Instruction::ISwap { a, b } => {
                two_qubit.push(coupler(
                    calib,
                    PairKind::Iswap,
                    *a,
                    *b,
                    None,
                    &mut cursor,
                    &frames,
                    dt,
                )?);
                frames.swap(*a, *b);
                for q in [*a, *b] {
                    channels[q].frames.push(FrameEvent {
                        t_samples: cursor[q],
                        phase: frames.phase(q),
                    });
                }
            }
            Instruction::Cr {
                control,
                target,
                angle,
            } => {
                two_qubit.push(coupler(
                    calib,
                    PairKind::Cr,
                    *control,
                    *target,
                    Some(*angle),
                    &mut cursor,
                    &frames,
                    dt,
                )?);
            }
            other => return Err(PulseError::Uncalibrated(format!("instruction {other:?}"))),
        }
    }
    Ok(PulseSchedule {
        dt,
        num_qubits: n,
        channels,
        two_qubit,
    })
}

#[allow(clippy::too_many_arguments)]
fn coupler(
    calib: &CalibrationTable,
    kind: PairKind,
    a: usize,
    b: usize,
    angle: Option<f64>,
    cursor: &mut [u64],
    frames: &FrameTracker,
    dt: f64,
) -> Result<TwoQubitEvent, PulseError> {
    let pair = calib.pair(a, b)?;
    if pair.kind != kind {
        return Err(PulseError::Uncalibrated(format!(
            "pair ({a}, {b}) is calibrated for {:?}, not {kind:?}",
            pair.kind
        )));
    }
    let len = sample_count(pair.gate_time(), dt)? as u64;
    let t0 = cursor[a].max(cursor[b]);
    cursor[a] = t0 + len;
    cursor[b] = t0 + len;
    Ok(TwoQubitEvent {
        t0_samples: t0,
        duration_samples: len,
        kind,
        a,
        b,
        angle,
        phase: frames.phase(b),
    })
}

fn rz(theta: f64) -> Matrix<f64> {
    Matrix::from_mat2(&Gate::RZ(theta).matrix::<f64>())
}

/// `U ← (op on qubit q) U`, qubit 0 most significant.
fn apply_1q(u: &Matrix<f64>, op: &Matrix<f64>, q: usize, n: usize) -> Matrix<f64> {
    let dim = 1usize << n;
    let bit = 1usize << (n - 1 - q);
    let mut out = u.clone();
    for col in 0..dim {
        for r in 0..dim {
            if r & bit != 0 {
                continue;
            }
            let (x, y) = (u.get(r, col), u.get(r | bit, col));
            out.set(r, col, op.get(0, 0) * x + op.get(0, 1) * y);
            out.set(r | bit, col, op.get(1, 0) * x + op.get(1, 1) * y);
        }
    }
    out
}

/// `U ← (op on (a, b)) U` with `a` as the high bit of `op`.
fn apply_2q(u: &Matrix<f64>, op: &Matrix<f64>, a: usize, b: usize, n: usize) -> Matrix<f64> {
    let dim = 1usize << n;
    let (ba, bb) = (1usize << (n - 1 - a), 1usize << (n - 1 - b));
    let mut out = u.clone();
    for col in 0..dim {
        for r in 0..dim {
            if r & (ba | bb) != 0 {
                continue;
            }
            let idx = [r, r | bb, r | ba, r | ba | bb];
            let v: Vec<Complex64> = idx.iter().map(|i| u.get(*i, col)).collect();
            for (k, i) in idx.iter().enumerate() {
                let s = (0..4).map(|j| op.get(k, j) * v[j]).sum();
                out.set(*i, col, s);
            }
        }
    }
    out
}

fn coupler_unitary(
    calib: &CalibrationTable,
    e: &TwoQubitEvent,
    dt: f64,
) -> Result<Matrix<f64>, PulseError> {
    let pair = calib.pair(e.a, e.b)?;
    Ok(match e.kind {
        PairKind::Iswap => xy_evolution(pair.g(), FRAC_PI_2 / pair.g()),
        PairKind::Cz => {
            let tau = e.duration_samples.max(1) as f64 * dt;
            let traj = FluxTrajectory::constant(PI / tau, PI, dt);
            two_qubit_model(&TwoQubitKind::Cphase {
                trajectory: traj,
                cleaned: true,
            })
        }
        PairKind::Cr => {
            let theta = e
                .angle
                .ok_or_else(|| PulseError::Schedule("CR event without an angle".into()))?;
            // Drive phase p on the target: (I ⊗ RZ(-p)) CR (I ⊗ RZ(p)).
            let cr = two_qubit_model(&TwoQubitKind::Cr { theta });
            let id = Matrix::<f64>::identity(2);
            &(&id.kron(&rz(-e.phase)) * &cr) * &id.kron(&rz(e.phase))
        }
    })
}

/// Device drive rates for a programmed pulse under this calibration.
pub fn pulse_rates(
    q: &QubitCalibration,
    pulse: &Pulse,
    dt: f64,
) -> Result<SampledWaveform, PulseError> {
    let map = q.map()?;
    let samples = pulse
        .samples
        .iter()
        .map(|s| {
            let eff = q.unfine(Complex64::new(s[0], s[1]));
            let mag = eff.norm();
            if mag == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(eff / mag * (2.0 * PI * map.frequency(mag)?))
        })
        .collect::<Result<Vec<_>, PulseError>>()?;
    Ok(SampledWaveform { dt, samples })
}

/// Replays every pulse and coupler event in time order and closes with the
/// outstanding frame rotations.
pub fn replay_unitary(
    schedule: &PulseSchedule,
    calib: &CalibrationTable,
) -> Result<Matrix<f64>, PulseError> {
    let n = schedule.num_qubits;
    if n > qstack_core::sim::UNITARY_CAP {
        return Err(PulseError::Schedule(format!(
            "replay limited to {} qubits",
            qstack_core::sim::UNITARY_CAP
        )));
    }
    enum Ev<'a> {
        One(usize, &'a Pulse),
        Two(&'a TwoQubitEvent),
    }
    let mut events: Vec<(u64, Ev)> = Vec::new();
    for ch in &schedule.channels {
        for p in &ch.pulses {
            events.push((p.t0_samples, Ev::One(ch.qubit, p)));
        }
    }
    for e in &schedule.two_qubit {
        events.push((e.t0_samples, Ev::Two(e)));
    }
    events.sort_by_key(|e| e.0);
    let mut u = Matrix::identity(1 << n);
    for (_, ev) in events {
        match ev {
            Ev::One(q, p) => {
                let rates = pulse_rates(calib.qubit(q)?, p, schedule.dt)?;
                let step = propagator::<f64>(&rates, &ControlModel::qubit())?;
                u = apply_1q(&u, &step, q, n);
            }
            Ev::Two(e) => u = apply_2q(&u, &coupler_unitary(calib, e, schedule.dt)?, e.a, e.b, n),
        }
    }
    for q in 0..n {
        let phi = schedule.final_phase(q);
        if phi != 0.0 {
            u = apply_1q(&u, &rz(phi), q, n);
        }
    }
    Ok(u)
}
