use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use qstack_core::ir::{grover_diffusion, Circuit, Gate, Instruction};
use qstack_core::linalg::Matrix;
use qstack_core::native::{to_native, NativeGateSet, OneQubitBasis, TwoQubitNative};
use qstack_core::sim::unitary_of;
use qstack_pulse::calib::{PairCalibration, PulseConfig, QubitCalibration};
use qstack_pulse::device::SyntheticQubit;
use qstack_pulse::*;

const NS: f64 = 1e-9;
const DT: f64 = 0.5 * NS;

fn qubit(id: usize, pulse: PulseConfig) -> QubitCalibration {
    let dev = SyntheticQubit {
        rabi_cubic: 0.4,
        ..SyntheticQubit::linear(id, 0.45, 6.0e7)
    };
    let amp_map = (1..=18)
        .map(|k| 0.025 * k as f64)
        .map(|a| (a, dev.rabi_frequency(a)))
        .collect();
    QubitCalibration {
        id,
        freq_hz: 5.0e9 + 1.0e8 * id as f64,
        anharm_hz: -3.0e8,
        amp_map,
        s_amp: 1.0,
        s_rel: 1.002,
        pulse,
        error: None,
    }
}

fn table(n: usize, kind: PairKind, pulse: PulseConfig) -> CalibrationTable {
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            pairs.push(PairCalibration {
                a,
                b,
                g_hz: 5.0e7,
                kind,
                gate_time_s: None,
                error: None,
            });
        }
    }
    CalibrationTable {
        qubits: (0..n).map(|i| qubit(i, pulse)).collect(),
        pairs,
    }
}

fn square_pulse() -> PulseConfig {
    PulseConfig {
        shape: Shape::Square,
        duration_s: 60.0 * NS,
    }
}

fn one(gates: &[(Gate, usize)], n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    for (g, q) in gates {
        c.apply(*g, &[*q]).unwrap();
    }
    c
}

#[test]
fn rz_alone_is_a_frame_update() {
    let c = one(&[(Gate::RZ(0.7), 0)], 1);
    let s = schedule_circuit(&c, &table(1, PairKind::Cz, square_pulse()), DT).unwrap();
    assert!(s.channels[0].pulses.is_empty());
    assert_eq!(s.duration_samples(), 0);
    assert_eq!(s.channels[0].frames.len(), 1);
    assert!((s.final_phase(0) - 0.7).abs() < 1e-15);
}

#[test]
fn square_sx_replays_to_rx_half_pi() {
    let calib = table(1, PairKind::Cz, square_pulse());
    let s = schedule_circuit(&one(&[(Gate::SX, 0)], 1), &calib, DT).unwrap();
    assert_eq!(s.channels[0].pulses.len(), 1);
    assert_eq!(s.channels[0].pulses[0].samples.len(), 120);
    let u = replay_unitary(&s, &calib).unwrap();
    let rx = Matrix::from_mat2(&Gate::RX(FRAC_PI_2).matrix::<f64>());
    assert!(u.phase_distance(&rx) <= 1e-6, "{}", u.phase_distance(&rx));
}

fn mixed_three_qubit() -> Circuit {
    let mut c = grover_diffusion(3).unwrap();
    c.apply(Gate::RY(0.3), &[1]).unwrap();
    c.push(Instruction::cnot(2, 0)).unwrap();
    c.apply(Gate::RX(-1.1), &[2]).unwrap();
    c.push(Instruction::cz(0, 1)).unwrap();
    c
}

fn replay_error(logical: &Circuit, set: NativeGateSet, calib: &CalibrationTable) -> f64 {
    let native = to_native(logical, &set).unwrap();
    let s = schedule_circuit(&native, calib, DT).unwrap();
    let u = replay_unitary(&s, calib).unwrap();
    u.phase_distance(&unitary_of::<f64>(&native).unwrap())
}

#[test]
fn three_qubit_replay_matches_the_circuit() {
    let c = mixed_three_qubit();
    for (two, kind) in [
        (TwoQubitNative::Cz, PairKind::Cz),
        (TwoQubitNative::Iswap, PairKind::Iswap),
        (TwoQubitNative::Cr, PairKind::Cr),
    ] {
        for one_q in [OneQubitBasis::RzSx, OneQubitBasis::RzRxArbitrary] {
            for pulse in [PulseConfig::default(), square_pulse()] {
                let set = NativeGateSet {
                    one_qubit: one_q,
                    two_qubit: two,
                    sx_dagger: true,
                };
                let d = replay_error(&c, set, &table(3, kind, pulse));
                assert!(d <= 1e-6, "{two:?} {one_q:?} {:?}: {d}", pulse.shape);
            }
        }
    }
}

#[test]
fn replay_without_sx_dagger() {
    let set = NativeGateSet {
        one_qubit: OneQubitBasis::RzSx,
        two_qubit: TwoQubitNative::Cz,
        sx_dagger: false,
    };
    assert!(
        replay_error(
            &mixed_three_qubit(),
            set,
            &table(3, PairKind::Cz, PulseConfig::default())
        ) <= 1e-6
    );
}

#[test]
fn schedule_json_round_trips() {
    let calib = table(3, PairKind::Iswap, PulseConfig::default());
    let set = NativeGateSet {
        one_qubit: OneQubitBasis::RzSx,
        two_qubit: TwoQubitNative::Iswap,
        sx_dagger: true,
    };
    let native = to_native(&mixed_three_qubit(), &set).unwrap();
    let s = schedule_circuit(&native, &calib, DT).unwrap();
    assert!(!s.two_qubit.is_empty());
    let back = PulseSchedule::from_json(&s.to_json()).unwrap();
    assert_eq!(back, s);
    let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
    assert_eq!(v["dt"], serde_json::json!(DT));
    assert!(
        v["channels"][0]["pulses"][0]["samples"][0]
            .as_array()
            .unwrap()
            .len()
            == 2
    );
}

#[test]
fn coupler_events_synchronize_both_channels() {
    let calib = table(2, PairKind::Cz, square_pulse());
    let mut c = one(&[(Gate::SX, 0), (Gate::SX, 0)], 2);
    c.push(Instruction::cz(0, 1)).unwrap();
    c.apply(Gate::SX, &[1]).unwrap();
    let s = schedule_circuit(&c, &calib, DT).unwrap();
    let cz = &s.two_qubit[0];
    assert_eq!(cz.t0_samples, 240);
    let after = &s.channels[1].pulses[0];
    assert_eq!(after.t0_samples, cz.t0_samples + cz.duration_samples);
}

#[test]
fn uncalibrated_inputs_are_rejected() {
    let calib = table(2, PairKind::Cz, square_pulse());
    let err = |c: &Circuit| schedule_circuit(c, &calib, DT).unwrap_err();
    assert!(matches!(
        err(&one(&[(Gate::H, 0)], 1)),
        PulseError::Uncalibrated(_)
    ));
    assert!(matches!(
        err(&one(&[(Gate::SX, 2)], 3)),
        PulseError::Uncalibrated(_)
    ));
    let mut c = Circuit::new(2);
    c.push(Instruction::ISwap { a: 0, b: 1 }).unwrap();
    assert!(matches!(err(&c), PulseError::Uncalibrated(_)));
    let no_pairs = CalibrationTable {
        pairs: vec![],
        ..calib.clone()
    };
    let mut c = Circuit::new(2);
    c.push(Instruction::cz(0, 1)).unwrap();
    assert!(matches!(
        schedule_circuit(&c, &no_pairs, DT),
        Err(PulseError::Uncalibrated(_))
    ));
}

#[test]
fn amplitude_overflow_is_rejected() {
    // A weak drive that needs A ≈ 0.995 for √X in 60 ns.
    let omega = 1.0 / (4.0 * 60.0 * NS);
    let q = QubitCalibration {
        amp_map: vec![(1.0, omega / 0.995)],
        s_rel: 1.01,
        ..qubit(0, square_pulse())
    };
    let calib = CalibrationTable {
        qubits: vec![q.clone()],
        pairs: vec![],
    };
    let err = schedule_circuit(&one(&[(Gate::SX, 0)], 1), &calib, DT).unwrap_err();
    assert!(
        matches!(err, PulseError::Amplitude { qubit: 0, .. }),
        "{err:?}"
    );
    let ok = CalibrationTable {
        qubits: vec![QubitCalibration { s_rel: 1.0, ..q }],
        pairs: vec![],
    };
    assert!(schedule_circuit(&one(&[(Gate::SX, 0)], 1), &ok, DT).is_ok());
    // Beyond the calibrated range at all.
    assert!(schedule_circuit(&one(&[(Gate::X, 0)], 1), &ok, DT).is_err());
}

#[test]
fn rz_placement_leaves_magnitudes_unchanged() {
    let calib = table(1, PairKind::Cz, PulseConfig::default());
    let a = one(
        &[
            (Gate::RZ(0.3), 0),
            (Gate::SX, 0),
            (Gate::RZ(0.7), 0),
            (Gate::SX, 0),
        ],
        1,
    );
    let b = one(
        &[
            (Gate::SX, 0),
            (Gate::RZ(1.9), 0),
            (Gate::SX, 0),
            (Gate::RZ(-2.2), 0),
        ],
        1,
    );
    let sa = schedule_circuit(&a, &calib, DT).unwrap();
    let sb = schedule_circuit(&b, &calib, DT).unwrap();
    assert_eq!(sa.duration_samples(), sb.duration_samples());
    let mags = |s: &PulseSchedule| -> Vec<f64> {
        s.channels[0]
            .pulses
            .iter()
            .flat_map(|p| p.samples.iter().map(|v| Complex64::new(v[0], v[1])))
            .map(|z| Complex64::new(z.re / 1.002, z.im).norm())
            .collect()
    };
    let (ma, mb) = (mags(&sa), mags(&sb));
    assert_eq!(ma.len(), mb.len());
    for (x, y) in ma.iter().zip(&mb) {
        assert!((x - y).abs() < 1e-15);
    }
    // Frames are free in time.
    let plain = schedule_circuit(&one(&[(Gate::SX, 0), (Gate::SX, 0)], 1), &calib, DT).unwrap();
    assert_eq!(plain.duration_samples(), sa.duration_samples());
}

#[test]
fn iswap_swaps_the_frames() {
    let calib = table(2, PairKind::Iswap, square_pulse());
    let mut c = one(&[(Gate::RZ(0.4), 0), (Gate::RZ(-1.0), 1)], 2);
    c.push(Instruction::ISwap { a: 0, b: 1 }).unwrap();
    c.apply(Gate::SX, &[0]).unwrap();
    let s = schedule_circuit(&c, &calib, DT).unwrap();
    assert!((s.final_phase(0) + 1.0).abs() < 1e-15 && (s.final_phase(1) - 0.4).abs() < 1e-15);
    let u = replay_unitary(&s, &calib).unwrap();
    assert!(u.phase_distance(&unitary_of::<f64>(&c).unwrap()) <= 1e-6);
}
