use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use qstack_core::sim::seeded_rng;
use qstack_pulse::calib::{calibrate, solve_amplitude, DeviceModel, PulseConfig};
use qstack_pulse::device::{
    cr_calibrate, curvature, fine_tune, run_rabi, run_spectroscopy, sync_time, CrPair,
    SyntheticQubit,
};
use qstack_pulse::*;

const NS: f64 = 1e-9;
const RABI_REF: f64 = 668_584.0;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

#[test]
fn rabi_data_follows_the_closed_form() {
    let dev = SyntheticQubit::linear(0, 0.005, RABI_REF);
    let period = 1.0 / RABI_REF;
    assert!((period - 1495.7 * NS).abs() < 0.1 * NS);
    let ts = linspace(0.0, 8.0 * period, 25);
    let data = run_rabi(&dev, 0.005, &ts, None, &mut seeded_rng(0));
    for (t, p) in &data {
        assert!((p - (PI * RABI_REF * t).sin().powi(2)).abs() < 1e-12);
    }
    let fit = fit_rabi(&data).unwrap();
    assert!(
        (665e3..=672e3).contains(&fit.frequency),
        "{}",
        fit.frequency
    );
    assert!((fit.frequency / RABI_REF - 1.0).abs() < 5e-3);
    for (t, p) in &data {
        assert!((fit.eval(*t) - p).abs() < 1e-6);
    }
}

#[test]
fn rabi_fit_survives_shot_noise() {
    let omega = 4.167e6;
    let dev = SyntheticQubit::linear(0, 0.1, omega);
    let ts = linspace(0.0, 6.0 / omega, 120);
    let data = run_rabi(&dev, 0.1, &ts, Some(1024), &mut seeded_rng(11));
    let fit = fit_rabi(&data).unwrap();
    assert!(
        (fit.frequency / omega - 1.0).abs() <= 0.02,
        "{}",
        fit.frequency
    );
}

#[test]
fn zero_amplitude_is_flat_and_unfittable() {
    let dev = SyntheticQubit::linear(0, 0.005, RABI_REF);
    let data = run_rabi(
        &dev,
        0.0,
        &linspace(0.0, 1e-5, 50),
        None,
        &mut seeded_rng(0),
    );
    assert!(data.iter().all(|(_, p)| *p == 0.0));
    assert_eq!(fit_rabi(&data), Err(FitError::NoOscillation));
}

#[test]
fn amp_map_round_trips_on_a_mildly_nonlinear_device() {
    let dev = SyntheticQubit {
        rabi_cubic: 0.3,
        ..SyntheticQubit::linear(0, 0.005, RABI_REF)
    };
    let amps = linspace(0.005, 0.45, 18);
    let pts: Vec<(f64, f64)> = amps.iter().map(|a| (*a, dev.rabi_frequency(*a))).collect();
    let map = AmpMap::new(&pts).unwrap();
    for (a, w) in &pts {
        assert_eq!(map.frequency(*a).unwrap(), *w);
    }
    for a in linspace(0.0, 0.45, 1001) {
        let back = map.amplitude(map.frequency(a).unwrap()).unwrap();
        assert!((back - a).abs() <= 1e-9, "{a}: {back}");
    }
    // Mirrored for negative amplitudes.
    assert_eq!(map.frequency(-0.2).unwrap(), -map.frequency(0.2).unwrap());
}

#[test]
fn two_point_amp_map_is_linear() {
    let map = AmpMap::new(&[(0.0, 0.0), (0.45, 3.0e7)]).unwrap();
    for a in linspace(0.0, 0.45, 37) {
        assert!((map.frequency(a).unwrap() - a / 0.45 * 3.0e7).abs() < 1e-6);
    }
    assert!(AmpMap::new(&[(0.0, 0.0), (0.2, 5.0), (0.4, 3.0)]).is_err());
}

fn fine_tune_setup(s_rel: f64) -> (SyntheticQubit, Envelope) {
    let dev = SyntheticQubit {
        s_rel,
        ..SyntheticQubit::linear(0, 0.005, RABI_REF)
    };
    let map = AmpMap::new(&[(0.0, 0.0), (0.45, dev.rabi_frequency(0.45))]).unwrap();
    let pulse = PulseConfig::default();
    let a = solve_amplitude(&map, &pulse, 0.5 * NS, FRAC_PI_2).unwrap();
    (
        dev,
        Envelope::new(pulse.shape, pulse.duration_s, Complex64::new(a, 0.0)).unwrap(),
    )
}

#[test]
fn fine_tune_recovers_injected_scaling() {
    let (dev, env) = fine_tune_setup(1.003);
    let ft = fine_tune(
        &dev,
        &env,
        0.5 * NS,
        FRAC_PI_2,
        &[17, 41],
        &linspace(0.98, 1.02, 201),
    )
    .unwrap();
    assert!((1.002..=1.004).contains(&ft.s_rel), "{}", ft.s_rel);
    assert!((ft.s_rel - 1.003).abs() <= 1e-3);
    assert_eq!(ft.s_amp, 1.0);

    let c17 = curvature(&ft.curves[0].1, 0.004);
    let c41 = curvature(&ft.curves[1].1, 0.004);
    assert!(c41 > c17 && c17 > 0.0, "{c17} vs {c41}");
}

#[test]
fn fine_tune_is_unbiased_without_miscalibration() {
    let (dev, env) = fine_tune_setup(1.0);
    let ft = fine_tune(
        &dev,
        &env,
        0.5 * NS,
        FRAC_PI_2,
        &[17, 41],
        &linspace(0.98, 1.02, 201),
    )
    .unwrap();
    assert!((ft.s_rel - 1.0).abs() <= 5e-4, "{}", ft.s_rel);
    assert!(fine_tune(&dev, &env, 0.5 * NS, FRAC_PI_2, &[17], &[]).is_err());
}

fn dip(center: f64, gamma: f64, freqs: &[f64]) -> Vec<(f64, f64)> {
    let dev = SyntheticQubit {
        freq_hz: center / (2.0 * PI),
        linewidth_hz: gamma / (2.0 * PI),
        ..SyntheticQubit::linear(0, 1.0, 1.0)
    };
    run_spectroscopy(&dev, freqs, None, &mut seeded_rng(0))
}

#[test]
fn lorentzian_center_within_a_tenth_of_the_linewidth() {
    let (w, g) = (2.0 * PI * 5e9, 2.0 * PI * 1e6);
    let fit = fit_lorentzian(&dip(w, g, &linspace(w - 10.0 * g, w + 10.0 * g, 201))).unwrap();
    assert!(
        (fit.center - w).abs() <= g / 10.0,
        "{}",
        (fit.center - w) / g
    );
    assert!((fit.linewidth / g - 1.0).abs() < 1e-3);
}

#[test]
fn lorentzian_on_an_asymmetric_window() {
    let (w, g) = (2.0 * PI * 5e9, 2.0 * PI * 1e6);
    let fit = fit_lorentzian(&dip(w, g, &linspace(w - 3.0 * g, w + 15.0 * g, 97))).unwrap();
    assert!((fit.center - w).abs() <= g / 10.0);
}

#[test]
fn flat_spectrum_has_no_dip() {
    let data: Vec<(f64, f64)> = linspace(0.0, 1.0, 20)
        .into_iter()
        .map(|f| (f, 0.9))
        .collect();
    assert_eq!(fit_lorentzian(&data), Err(FitError::NoDip));
}

#[test]
fn cr_sync_for_a_two_to_three_ratio() {
    let u = 1.0e6;
    let pair = CrPair {
        rate0_hz: 2.0 * u,
        rate1_hz: 3.0 * u,
    };
    let ts = linspace(0.0, 2e-6, 400);
    let cal = cr_calibrate(&pair, &[0.5, 1.0], &ts, None, &mut seeded_rng(0)).unwrap();
    assert_eq!(cal.amplitude, 1.0);
    // cos(2π·2u·t) = 1 and cos(2π·3u·t) = −1 first meet at t = 1/(2u).
    let exact = 1.0 / (2.0 * u);
    assert!(
        (cal.gate_time - exact).abs() < 2.0 * NS,
        "{}",
        cal.gate_time
    );
    let z0 = (2.0 * PI * cal.fit0.frequency * cal.gate_time).cos();
    let z1 = (2.0 * PI * cal.fit1.frequency * cal.gate_time).cos();
    assert!(z0 >= 0.98 && z1 <= -0.98);
}

#[test]
fn cr_fails_on_equal_rates() {
    let pair = CrPair {
        rate0_hz: 2e6,
        rate1_hz: 2e6,
    };
    let err = cr_calibrate(
        &pair,
        &[1.0],
        &linspace(0.0, 2e-6, 400),
        None,
        &mut seeded_rng(0),
    )
    .unwrap_err();
    assert!(matches!(err, PulseError::Calibration(_)));
    assert!(sync_time(2e6, 2e6, 0.02, 1e-5).is_none());
}

#[test]
fn cr_sync_near_180_ns() {
    let t = 180.0 * NS;
    let pair = CrPair {
        rate0_hz: 1.0 / t,
        rate1_hz: 1.5 / t,
    };
    let cal = cr_calibrate(
        &pair,
        &[0.25, 0.5, 1.0],
        &linspace(0.0, 3e-6, 600),
        None,
        &mut seeded_rng(0),
    )
    .unwrap();
    assert!(
        (175.0 * NS..=185.0 * NS).contains(&cal.gate_time),
        "{}",
        cal.gate_time
    );
}

#[test]
fn end_to_end_calibration_recovers_the_map() {
    let dev = SyntheticQubit::linear(0, 0.005, RABI_REF);
    let model = DeviceModel {
        qubits: vec![dev.clone()],
        pairs: vec![],
        pulse: PulseConfig::default(),
        plan: Default::default(),
    };
    let run = calibrate(&model, &mut seeded_rng(0)).unwrap();
    let q = &run.table.qubits[0];
    assert_eq!(q.amp_map.len(), 18);
    assert!((q.amp_map[0].1 / RABI_REF - 1.0).abs() < 5e-3);
    for (a, w) in &q.amp_map {
        assert!((w / dev.rabi_frequency(*a) - 1.0).abs() < 5e-3, "A = {a}");
    }
    assert!((q.freq_hz - dev.freq_hz).abs() < 0.1 * dev.linewidth_hz);
    assert!((q.anharm_hz - dev.anharm_hz).abs() < 0.2 * dev.linewidth_hz);
    assert!((q.s_rel - 1.0).abs() <= 1e-3);
    assert!(run.sweeps.iter().any(|s| s.name == "q0_fine_tune"));
    let back = CalibrationTable::from_json(&run.table.to_json()).unwrap();
    assert_eq!(back, run.table);
}

/// The Rabi sweep sees an in-phase gain error too, so the map absorbs it
/// and the calibrated √X lands on target.
#[test]
fn calibrated_sx_is_accurate_on_a_miscalibrated_device() {
    use qstack_core::ir::{Circuit, Gate};
    use qstack_pulse::schedule::pulse_rates;
    let dev = SyntheticQubit {
        s_rel: 1.003,
        rabi_cubic: 0.5,
        ..SyntheticQubit::linear(0, 0.005, RABI_REF)
    };
    let model = DeviceModel {
        qubits: vec![dev.clone()],
        pairs: vec![],
        pulse: PulseConfig::default(),
        plan: Default::default(),
    };
    let run = calibrate(&model, &mut seeded_rng(3)).unwrap();
    let q = &run.table.qubits[0];
    for (a, w) in &q.amp_map {
        let seen = dev.rabi_frequency(a / dev.s_rel);
        assert!((w / seen - 1.0).abs() < 5e-3, "A = {a}");
    }
    let mut c = Circuit::new(1);
    c.apply(Gate::SX, &[0]).unwrap();
    let sched = schedule_circuit(&c, &run.table, 0.5 * NS).unwrap();
    let pulse = &sched.channels[0].pulses[0];
    let programmed = SampledWaveform {
        dt: sched.dt,
        samples: pulse
            .samples
            .iter()
            .map(|s| Complex64::new(s[0], s[1]))
            .collect(),
    };
    let u =
        qstack_pulse::integrate::propagator::<f64>(&dev.drive(&programmed), &ControlModel::qubit())
            .unwrap();
    let ideal = qstack_core::linalg::Matrix::from_mat2(&Gate::SX.matrix::<f64>());
    assert!(
        u.phase_distance(&ideal) < 1e-3,
        "{}",
        u.phase_distance(&ideal)
    );
    // The table's own model of the pulse agrees with the device.
    let modeled = qstack_pulse::integrate::propagator::<f64>(
        &pulse_rates(q, pulse, sched.dt).unwrap(),
        &ControlModel::qubit(),
    )
    .unwrap();
    assert!(modeled.phase_distance(&ideal) < 1e-6);
}
