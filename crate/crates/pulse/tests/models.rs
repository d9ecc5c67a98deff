use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use qstack_core::ir::{Circuit, Gate, Instruction};
use qstack_core::linalg::Matrix;
use qstack_core::native::{translate_2q, TwoQubitNative};
use qstack_core::sim::{seeded_rng, unitary_of};
use qstack_pulse::frames::virtual_z;
use qstack_pulse::integrate::propagator;
use qstack_pulse::readout::{classify_iq, dispersive_ok, dispersive_shift, IqDiscriminator};
use qstack_pulse::twoq::{iswap_time, two_qubit_model, FluxTrajectory, TwoQubitKind};
use qstack_pulse::*;
use rand_distr::{Distribution, Normal};

const NS: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn m1(g: Gate) -> Matrix<f64> {
    Matrix::from_mat2(&g.matrix::<f64>())
}

/// `exp(-iθ/2 (cos φ X + sin φ Y))`.
fn axis_rotation(theta: f64, phi: f64) -> Matrix<f64> {
    let (s, co) = (theta / 2.0).sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    Matrix::from_rows(
        2,
        vec![
            c(co, 0.0),
            c(0.0, -s) * e.conj(),
            c(0.0, -s) * e,
            c(co, 0.0),
        ],
    )
}

fn square(theta: f64, n: usize) -> SampledWaveform {
    SampledWaveform {
        dt: 0.5 * NS,
        samples: vec![c(theta / (n as f64 * 0.5 * NS), 0.0); n],
    }
}

#[test]
fn virtual_z_rotates_the_emitted_phase() {
    let frames = virtual_z(&FrameTracker::new(), 0, FRAC_PI_2);
    let x = square(PI, 60);
    let out = frames.emit(0, &x);
    for (a, b) in x.samples.iter().zip(&out.samples) {
        assert!((b.arg() + FRAC_PI_2).abs() < 1e-15);
        assert_eq!(a.norm(), b.norm());
    }
    // The emitted π pulse turns about −y.
    let u = propagator::<f64>(&out, &ControlModel::qubit()).unwrap();
    assert!(u.max_abs_diff(&m1(Gate::RY(-PI))) < 1e-12);
}

#[test]
fn frame_updates_compose() {
    let f = virtual_z(&virtual_z(&FrameTracker::new(), 2, 0.4), 2, 0.9);
    assert!((f.phase(2) - 1.3).abs() < 1e-15);
    let g = virtual_z(&f, 2, 2.0 * PI);
    assert!((g.phase(2) - 1.3).abs() < 1e-12);
}

#[test]
fn framed_pulse_is_a_rotation_about_a_tilted_axis() {
    let theta = 1.1;
    for phi0 in [0.3, -1.2, 2.5] {
        let mut f = FrameTracker::new();
        f.virtual_z(0, phi0);
        let u = propagator::<f64>(&f.emit(0, &square(theta, 40)), &ControlModel::qubit()).unwrap();
        f.virtual_z(0, -phi0);
        assert_eq!(f.phase(0), 0.0);
        // Circuit order RZ(φ₀), RX(θ), RZ(−φ₀) as a matrix product.
        let product = &(&m1(Gate::RZ(-phi0)) * &m1(Gate::RX(theta))) * &m1(Gate::RZ(phi0));
        assert!(u.max_abs_diff(&product) <= 1e-10);
        assert!(u.max_abs_diff(&axis_rotation(theta, -phi0)) <= 1e-10);

        // The opposite frame order tilts the axis to +φ₀.
        let mut f = FrameTracker::new();
        f.virtual_z(0, -phi0);
        let v = propagator::<f64>(&f.emit(0, &square(theta, 40)), &ControlModel::qubit()).unwrap();
        assert!(v.max_abs_diff(&axis_rotation(theta, phi0)) <= 1e-10);
    }
}

fn iswap() -> Matrix<f64> {
    let (o, z, mi) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, -1.0));
    Matrix::from_rows(4, vec![o, z, z, z, z, z, mi, z, z, mi, z, z, z, z, z, o])
}

#[test]
fn iswap_and_its_square_root() {
    let g = 2.0 * PI * 5e7;
    let u = two_qubit_model(&TwoQubitKind::Iswap {
        g,
        t: iswap_time(g),
    });
    assert!(u.max_abs_diff(&iswap()) <= 1e-12);
    let r = FRAC_PI_4.cos();
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    let sqrt = Matrix::from_rows(
        4,
        vec![
            o,
            z,
            z,
            z,
            z,
            c(r, 0.0),
            c(0.0, -r),
            z,
            z,
            c(0.0, -r),
            c(r, 0.0),
            z,
            z,
            z,
            z,
            o,
        ],
    );
    let s = two_qubit_model(&TwoQubitKind::SqrtIswap { g });
    assert!(s.max_abs_diff(&sqrt) <= 1e-12);
    assert!((&s * &s).max_abs_diff(&iswap()) <= 1e-12);
    assert!(
        two_qubit_model(&TwoQubitKind::Iswap { g, t: 0.0 }).max_abs_diff(&Matrix::identity(4))
            == 0.0
    );
}

#[test]
fn cphase_diagonals() {
    let mut traj = FluxTrajectory::constant(2.0 * PI * 1e7, PI, 0.1 * NS);
    assert!((traj.conditional_phase() - PI).abs() < 1e-12);
    let cz = two_qubit_model(&TwoQubitKind::Cphase {
        trajectory: traj.clone(),
        cleaned: true,
    });
    let one = c(1.0, 0.0);
    assert!(cz.max_abs_diff(&Matrix::diag(&[one, one, one, -one])) <= 1e-12);

    traj.omega01 = vec![1e8; traj.zeta.len()];
    traj.omega10 = vec![-3e7; traj.zeta.len()];
    let (t01, t10) = (traj.theta01(), traj.theta10());
    let raw = two_qubit_model(&TwoQubitKind::Cphase {
        trajectory: traj,
        cleaned: false,
    });
    let e = |p: f64| Complex64::from_polar(1.0, p);
    assert!(raw.max_abs_diff(&Matrix::diag(&[one, e(t01), e(t10), e(PI + t01 + t10)])) <= 1e-12);
    // Virtual Z on each qubit removes the single-qubit phases.
    let clean = &m1(Gate::RZ(-t10)).kron(&m1(Gate::RZ(-t01))) * &raw;
    assert!(clean.phase_distance(&cz) <= 1e-12);
}

fn cnot() -> Matrix<f64> {
    let mut c = Circuit::new(2);
    c.push(Instruction::cnot(0, 1)).unwrap();
    unitary_of::<f64>(&c).unwrap()
}

#[test]
fn dressed_cross_resonance_is_cnot() {
    let cr = two_qubit_model(&TwoQubitKind::Cr { theta: -FRAC_PI_2 });
    let dress = m1(Gate::RZ(FRAC_PI_2)).kron(&m1(Gate::SX));
    assert!((&cr * &dress).phase_distance(&cnot()) <= 1e-10);
}

#[test]
fn iswap_decompositions_of_cnot_and_swap() {
    for (instr, want) in [
        (Instruction::cnot(0, 1), cnot()),
        (Instruction::Swap { a: 0, b: 1 }, {
            let mut c = Circuit::new(2);
            c.push(Instruction::Swap { a: 0, b: 1 }).unwrap();
            unitary_of::<f64>(&c).unwrap()
        }),
    ] {
        let frag = translate_2q(&instr, TwoQubitNative::Iswap).unwrap();
        assert!(frag
            .instructions
            .iter()
            .all(|i| i.is_single_qubit() || matches!(i, Instruction::ISwap { .. })));
        let mut u = Matrix::<f64>::identity(4);
        for i in &frag.instructions {
            let op = match i {
                Instruction::ISwap { .. } => iswap(),
                Instruction::Gate {
                    gate, target: 0, ..
                } => m1(*gate).kron(&Matrix::identity(2)),
                Instruction::Gate { gate, .. } => Matrix::identity(2).kron(&m1(*gate)),
                other => panic!("{other:?}"),
            };
            u = &op * &u;
        }
        assert!(u.phase_distance(&want) <= 1e-10, "{instr:?}");
    }
}

#[test]
fn dispersive_shift_at_the_textbook_point() {
    let chi = dispersive_shift(2.0 * PI * 5e7, 2.0 * PI * 1e9).unwrap();
    assert!((chi - 2.0 * PI * 2.5e6).abs() < 1e-6);
    assert!(dispersive_ok(2.0 * PI * 5e7, 2.0 * PI * 1e9));
    assert!(!dispersive_ok(2.0 * PI * 5e7, 2.0 * PI * 2e8));
    assert!(dispersive_shift(1.0, 0.0).is_err());
}

fn cluster(center: Complex64, sigma: f64, n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = seeded_rng(seed);
    let d = Normal::new(0.0, sigma).unwrap();
    (0..n)
        .map(|_| center + c(d.sample(&mut rng), d.sample(&mut rng)))
        .collect()
}

#[test]
fn separated_clusters_are_discriminated() {
    let sigma = 0.1;
    let (m0, m1) = (
        c(0.2, -0.1),
        c(0.2 + 0.6 * FRAC_PI_4.cos(), -0.1 + 0.6 * FRAC_PI_4.sin()),
    );
    let s0 = cluster(m0, sigma, 200_000, 1);
    let s1 = cluster(m1, sigma, 200_000, 2);
    let disc = IqDiscriminator::calibrate(&s0[..1000], &s1[..1000]);
    let f = disc.assignment_fidelity(&s0, &s1);
    // Each side errs with probability Φ(−3) ≈ 0.00135.
    assert!(f >= 0.998, "{f}");
    assert_eq!(classify_iq(&[m0, m1], &disc), vec![0, 1]);
}

#[test]
fn coincident_clusters_are_a_coin_flip() {
    let s0 = cluster(c(0.0, 0.0), 0.1, 100_000, 3);
    let s1 = cluster(c(0.0, 0.0), 0.1, 100_000, 4);
    let disc = IqDiscriminator::calibrate(&s0, &s1);
    let f = disc.assignment_fidelity(&s0, &s1);
    assert!((f - 0.5).abs() < 0.01, "{f}");
}
