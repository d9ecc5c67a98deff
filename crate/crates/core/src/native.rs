//! Lowering to a device's native gate set: single-qubit run fusion, Euler
//! synthesis into `RZ`/`SX` or `RZ`/`RX`, entangling-gate translation and a
//! peephole pass.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{decompose, decompose_circuit, DecomposeBudget, DecomposeError, Objective};
use crate::euler::zyz;
use crate::ir::{Circuit, Gate, Instruction};
use crate::linalg::Mat2;
use crate::scalar::wrap_angle;
use crate::sim::unitary_of;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NativeError {
    #[error("cannot translate {0}")]
    Unsupported(String),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OneQubitBasis {
    /// `RZ` plus fixed `√X` pulses.
    RzSx,
    /// `RZ` plus calibrated `RX(θ)` for any θ.
    RzRxArbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoQubitNative {
    Cz,
    Iswap,
    Cr,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NativeGateSet {
    pub one_qubit: OneQubitBasis,
    pub two_qubit: TwoQubitNative,
    /// Whether `√X†` is calibrated alongside `√X`. Without it every `√X†`
    /// becomes `RZ(π) √X RZ(π)`.
    #[serde(default = "yes")]
    pub sx_dagger: bool,
}

impl Default for NativeGateSet {
    fn default() -> Self {
        NativeGateSet {
            one_qubit: OneQubitBasis::RzSx,
            two_qubit: TwoQubitNative::Cz,
            sx_dagger: true,
        }
    }
}

impl NativeGateSet {
    /// Whether a single instruction is directly executable.
    pub fn admits(&self, instr: &Instruction) -> bool {
        match instr {
            Instruction::Gate { gate, controls, .. } if controls.is_empty() => {
                match (self.one_qubit, gate) {
                    (_, Gate::RZ(_)) => true,
                    (OneQubitBasis::RzSx, Gate::SX) => true,
                    (OneQubitBasis::RzSx, Gate::SXdg) => self.sx_dagger,
                    (OneQubitBasis::RzRxArbitrary, Gate::RX(_)) => true,
                    _ => false,
                }
            }
            Instruction::Gate { .. } => self.two_qubit == TwoQubitNative::Cz && instr.is_cz(),
            Instruction::ISwap { .. } => self.two_qubit == TwoQubitNative::Iswap,
            Instruction::Cr { .. } => self.two_qubit == TwoQubitNative::Cr,
            Instruction::Swap { .. } => false,
        }
    }
}

/// Angles of `U = e^{iγ} RZ(λ) √X RZ(θ) √X† RZ(φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub theta: f64,
    pub phi: f64,
    pub lam: f64,
    pub global_phase: f64,
}

/// A single-qubit gate list in time order and the phase it leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesized {
    pub gates: Vec<Gate>,
    pub global_phase: f64,
}

impl Synthesized {
    pub fn matrix(&self) -> Mat2<f64> {
        product(&self.gates).scale(Complex64::from_polar(1.0, self.global_phase))
    }
}

/// Time-ordered product of single-qubit gates.
fn product(gates: &[Gate]) -> Mat2<f64> {
    gates
        .iter()
        .fold(Mat2::identity(), |acc, g| g.matrix::<f64>() * acc)
}

/// Phase `γ` with `u ≈ e^{iγ} v`, read off the largest entry of `v`.
fn relative_phase(u: &Mat2<f64>, v: &Mat2<f64>) -> f64 {
    let k = (0..4)
        .max_by(|a, b| {
            v.get(a / 2, a % 2)
                .norm()
                .total_cmp(&v.get(b / 2, b % 2).norm())
        })
        .unwrap_or(0);
    (u.get(k / 2, k % 2) / v.get(k / 2, k % 2)).arg()
}

const DEGENERATE: f64 = 1e-12;

/// θ ∈ [0, π]; φ, λ ∈ (-π, π]. At θ = 0 or π only φ ± λ matters and λ is
/// set to 0.
pub fn euler_angles(u: &Mat2<f64>) -> EulerAngles {
    // RY(b) = RZ(π) RY(-b) RZ(-π), and √X RZ(θ) √X† = RY(-θ) up to phase.
    let z = zyz(u);
    let theta = z.b;
    let mut lam = wrap_angle(z.a + PI);
    let mut phi = wrap_angle(z.c - PI);
    if theta < DEGENERATE {
        phi = wrap_angle(phi + lam);
        lam = 0.0;
    } else if PI - theta < DEGENERATE {
        phi = wrap_angle(phi - lam);
        lam = 0.0;
    }
    let mut e = EulerAngles {
        theta,
        phi,
        lam,
        global_phase: 0.0,
    };
    e.global_phase = relative_phase(u, &product(&zxzxz_gates(&e)));
    e
}

fn zxzxz_gates(e: &EulerAngles) -> Vec<Gate> {
    vec![
        Gate::RZ(e.phi),
        Gate::SXdg,
        Gate::RZ(e.theta),
        Gate::SX,
        Gate::RZ(e.lam),
    ]
}

/// `[RZ(φ), √X†, RZ(θ), √X, RZ(λ)]`.
pub fn synth_zxzxz(u: &Mat2<f64>) -> (EulerAngles, Synthesized) {
    let e = euler_angles(u);
    (
        e,
        Synthesized {
            gates: zxzxz_gates(&e),
            global_phase: e.global_phase,
        },
    )
}

/// `[RZ(φ - 3π/2), RX(θ), RZ(λ - π/2)]`.
pub fn synth_zxz(u: &Mat2<f64>) -> Synthesized {
    let e = euler_angles(u);
    let gates = vec![
        Gate::RZ(wrap_angle(e.phi - 3.0 * FRAC_PI_2)),
        Gate::RX(e.theta),
        Gate::RZ(wrap_angle(e.lam - FRAC_PI_2)),
    ];
    let global_phase = relative_phase(u, &product(&gates));
    Synthesized {
        gates,
        global_phase,
    }
}

/// Shortest native form: a lone `RZ` for diagonal `u`, a lone `√X`/`√X†`
/// or `RX` where one fits, otherwise the full Euler sequence.
pub fn synth_native(u: &Mat2<f64>, basis: OneQubitBasis) -> Synthesized {
    let e = euler_angles(u);
    let direct = |gates: Vec<Gate>| {
        let v = product(&gates);
        let phase = relative_phase(u, &v);
        (u.max_abs_diff(&v.scale(Complex64::from_polar(1.0, phase))) < 1e-12).then_some(
            Synthesized {
                gates,
                global_phase: phase,
            },
        )
    };
    if e.theta < DEGENERATE {
        let a = wrap_angle(e.phi + e.lam);
        let gates = if a.abs() < DEGENERATE {
            vec![]
        } else {
            vec![Gate::RZ(a)]
        };
        if let Some(s) = direct(gates) {
            return s;
        }
    }
    let singles = match basis {
        OneQubitBasis::RzSx => vec![Gate::SX, Gate::SXdg],
        OneQubitBasis::RzRxArbitrary => vec![Gate::RX(e.theta), Gate::RX(-e.theta)],
    };
    for g in singles {
        if let Some(s) = direct(vec![g]) {
            return s;
        }
    }
    match basis {
        OneQubitBasis::RzSx => Synthesized {
            gates: zxzxz_gates(&e),
            global_phase: e.global_phase,
        },
        OneQubitBasis::RzRxArbitrary => synth_zxz(u),
    }
}

/// Replaces each maximal single-qubit run on a wire by one `Unitary` gate.
pub fn fuse_1q_runs(circuit: &Circuit) -> Circuit {
    let mut out = Circuit::new(circuit.num_qubits);
    out.global_phase = circuit.global_phase;
    let mut pending: Vec<Option<Mat2<f64>>> = vec![None; circuit.num_qubits];
    let flush = |out: &mut Circuit, pending: &mut Vec<Option<Mat2<f64>>>, q: usize| {
        if let Some(m) = pending[q].take() {
            out.instructions
                .push(Instruction::gate(Gate::Unitary(m), q));
        }
    };
    for instr in &circuit.instructions {
        match instr {
            Instruction::Gate {
                gate,
                target,
                controls,
                ..
            } if controls.is_empty() => {
                let m = gate.matrix::<f64>();
                pending[*target] = Some(match pending[*target] {
                    Some(acc) => m * acc,
                    None => m,
                });
            }
            _ => {
                for q in instr.qubits() {
                    flush(&mut out, &mut pending, q);
                }
                out.instructions.push(instr.clone());
            }
        }
    }
    for q in 0..circuit.num_qubits {
        flush(&mut out, &mut pending, q);
    }
    out
}

fn fragment(width: usize, instrs: Vec<Instruction>) -> Circuit {
    Circuit {
        num_qubits: width,
        instructions: instrs,
        global_phase: 0.0,
    }
}

fn one(g: Gate, q: usize) -> Instruction {
    Instruction::gate(g, q)
}

fn cnot_in(basis: TwoQubitNative, c: usize, t: usize) -> Vec<Instruction> {
    let sz = Gate::RZ(FRAC_PI_2);
    match basis {
        TwoQubitNative::Cz => vec![one(Gate::H, t), Instruction::cz(c, t), one(Gate::H, t)],
        TwoQubitNative::Iswap => vec![
            one(Gate::SX, t),
            one(Gate::RZ(-FRAC_PI_2), c),
            one(sz, t),
            Instruction::ISwap { a: c, b: t },
            one(Gate::SXdg, c),
            Instruction::ISwap { a: c, b: t },
            one(sz, t),
        ],
        TwoQubitNative::Cr => {
            vec![
                one(sz, c),
                one(Gate::SX, t),
                Instruction::Cr {
                    control: c,
                    target: t,
                    angle: -FRAC_PI_2,
                },
            ]
        }
    }
}

fn swap_in(basis: TwoQubitNative, a: usize, b: usize) -> Vec<Instruction> {
    match basis {
        TwoQubitNative::Iswap => vec![
            Instruction::ISwap { a, b },
            one(Gate::SXdg, b),
            Instruction::ISwap { a, b },
            one(Gate::SXdg, a),
            Instruction::ISwap { a, b },
            one(Gate::SXdg, b),
        ],
        _ => [
            cnot_in(basis, a, b),
            cnot_in(basis, b, a),
            cnot_in(basis, a, b),
        ]
        .concat(),
    }
}

/// Expands one two-qubit instruction into the entangling gate of `basis`
/// plus single-qubit gates. The fragment's global phase makes it exact.
pub fn translate_2q(instr: &Instruction, basis: TwoQubitNative) -> Result<Circuit, NativeError> {
    let qs = instr.qubits();
    let width = qs.iter().max().map_or(0, |m| m + 1);
    let instrs = match instr {
        Instruction::Swap { a, b } => swap_in(basis, *a, *b),
        Instruction::ISwap { a, b } => match basis {
            TwoQubitNative::Iswap => vec![instr.clone()],
            // iSWAP = SWAP · CZ · (S† ⊗ S†).
            _ => {
                let mut v = vec![one(Gate::RZ(-FRAC_PI_2), *a), one(Gate::RZ(-FRAC_PI_2), *b)];
                v.extend(cz_in(basis, *a, *b));
                v.extend(swap_in(basis, *a, *b));
                v
            }
        },
        Instruction::Cr {
            control,
            target,
            angle,
        } => match basis {
            TwoQubitNative::Cr => vec![instr.clone()],
            // CR(θ) = (I⊗H) · CX · (I⊗RZ(θ)) · CX · (I⊗H).
            _ => {
                let (c, t) = (*control, *target);
                let mut v = vec![one(Gate::H, t)];
                v.extend(cnot_in(basis, c, t));
                v.push(one(Gate::RZ(*angle), t));
                v.extend(cnot_in(basis, c, t));
                v.push(one(Gate::H, t));
                v
            }
        },
        Instruction::Gate {
            controls, target, ..
        } if controls.len() == 1 => {
            if instr.is_cz() {
                cz_in(basis, controls[0], *target)
            } else if instr.is_cnot() {
                cnot_in(basis, controls[0], *target)
            } else {
                let frag = decompose(instr, &DecomposeBudget::none())?;
                let mut out = fragment(width.max(frag.num_qubits), vec![]);
                out.global_phase = frag.global_phase;
                for i in &frag.instructions {
                    if i.arity() == 1 {
                        out.instructions.push(i.clone());
                    } else {
                        let sub = translate_2q(i, basis)?;
                        out.instructions.extend(sub.instructions);
                        out.global_phase += sub.global_phase;
                    }
                }
                return Ok(out);
            }
        }
        other => return Err(NativeError::Unsupported(format!("{other:?}"))),
    };
    let mut out = fragment(width, instrs);
    out.global_phase = phase_gap(instr, &out.instructions);
    Ok(out)
}

/// Phase `γ` with `source = e^{iγ} · fragment`, on the two operands only.
fn phase_gap(source: &Instruction, frag: &[Instruction]) -> f64 {
    let qs = source.qubits();
    let local = |q: usize| {
        qs.iter()
            .position(|x| *x == q)
            .expect("fragment stays on the operands")
    };
    let mut a = Circuit::new(2);
    a.instructions.push(source.relabel(local));
    let mut b = Circuit::new(2);
    b.instructions.extend(frag.iter().map(|i| i.relabel(local)));
    let (ua, ub) = match (unitary_of::<f64>(&a), unitary_of::<f64>(&b)) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return 0.0,
    };
    let k = (0..16)
        .max_by(|x, y| {
            ub.get(x / 4, x % 4)
                .norm()
                .total_cmp(&ub.get(y / 4, y % 4).norm())
        })
        .unwrap_or(0);
    (ua.get(k / 4, k % 4) / ub.get(k / 4, k % 4)).arg()
}

fn cz_in(basis: TwoQubitNative, a: usize, b: usize) -> Vec<Instruction> {
    match basis {
        TwoQubitNative::Cz => vec![Instruction::cz(a, b)],
        _ => {
            let mut v = vec![one(Gate::H, b)];
            v.extend(cnot_in(basis, a, b));
            v.push(one(Gate::H, b));
            v
        }
    }
}

fn rotation_axis(g: &Gate) -> Option<(u8, f64)> {
    match *g {
        Gate::RX(a) => Some((0, a)),
        Gate::RY(a) => Some((1, a)),
        Gate::RZ(a) => Some((2, a)),
        Gate::P(a) => Some((3, a)),
        _ => None,
    }
}

/// Canonical angle of a merged rotation and the global phase split off.
/// Rotations are 4π-periodic with a sign flip at 2π, `P` is 2π-periodic.
fn canonical(axis: u8, a: f64) -> (f64, f64) {
    let w = wrap_angle(a);
    if axis == 3 {
        return (w, 0.0);
    }
    let turns = ((a - w) / (2.0 * PI)).round() as i64;
    (w, if turns.rem_euclid(2) == 1 { PI } else { 0.0 })
}

fn is_zero_angle(a: f64) -> bool {
    wrap_angle(a).abs() < 1e-12
}

/// Result of folding a single-qubit gate onto its predecessor.
enum Fold {
    Keep,
    Cancel(f64),
    Replace(Gate, f64),
}

fn fold_1q(prev: &Gate, next: &Gate) -> Fold {
    if let (Some((ax, a)), Some((bx, b))) = (rotation_axis(prev), rotation_axis(next)) {
        if ax == bx {
            let (sum, phase) = canonical(ax, a + b);
            return if is_zero_angle(sum) {
                Fold::Cancel(phase)
            } else {
                Fold::Replace(prev.with_angle(sum), phase)
            };
        }
        return Fold::Keep;
    }
    match (prev, next) {
        (Gate::Unitary(p), Gate::Unitary(n)) => {
            let m = *n * *p;
            let ph = m.get(0, 0).arg();
            if m.max_abs_diff(&Mat2::identity().scale(Complex64::from_polar(1.0, ph))) < 1e-12 {
                Fold::Cancel(ph)
            } else {
                Fold::Keep
            }
        }
        _ if rotation_axis(next).is_none() && prev.adjoint() == *next => Fold::Cancel(0.0),
        _ => Fold::Keep,
    }
}

fn inverse_pair(prev: &Instruction, next: &Instruction) -> bool {
    match (prev, next) {
        (Instruction::Swap { a, b }, Instruction::Swap { a: c, b: d }) => {
            (a, b) == (c, d) || (a, b) == (d, c)
        }
        (
            Instruction::Cr {
                control,
                target,
                angle,
            },
            Instruction::Cr {
                control: c,
                target: t,
                angle: b,
            },
        ) => (control, target) == (c, t) && is_zero_angle(angle + b),
        (Instruction::Gate { .. }, Instruction::Gate { .. }) if prev.is_cz() && next.is_cz() => {
            let (mut p, mut n) = (prev.qubits(), next.qubits());
            p.sort_unstable();
            n.sort_unstable();
            p == n
        }
        (
            Instruction::Gate {
                gate,
                target,
                controls,
                ..
            },
            Instruction::Gate {
                gate: g,
                target: t,
                controls: cs,
                ..
            },
        ) => target == t && controls == cs && rotation_axis(gate).is_none() && gate.adjoint() == *g,
        _ => false,
    }
}

/// Cancels adjacent inverse pairs, merges consecutive same-axis rotations
/// and drops zero rotations. Idempotent.
pub fn peephole(circuit: &Circuit) -> Circuit {
    let mut out: Vec<Option<Instruction>> = Vec::with_capacity(circuit.instructions.len());
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); circuit.num_qubits];
    let mut phase = circuit.global_phase;
    for instr in &circuit.instructions {
        let qs = instr.qubits();
        let top = stacks[qs[0]].last().copied();
        let shared = top.filter(|k| {
            qs.iter().all(|q| stacks[*q].last() == Some(k))
                && out[*k]
                    .as_ref()
                    .is_some_and(|p| p.qubits().len() == qs.len())
        });
        match instr {
            Instruction::Gate {
                gate,
                target,
                controls,
                ..
            } if controls.is_empty() => {
                if let Some(a) = gate.angle() {
                    let axis = rotation_axis(gate).map(|r| r.0).unwrap_or(3);
                    if is_zero_angle(a) {
                        phase += canonical(axis, a).1;
                        continue;
                    }
                }
                if let Some(k) = shared {
                    if let Some(Instruction::Gate { gate: prev, .. }) = &out[k] {
                        match fold_1q(prev, gate) {
                            Fold::Keep => {}
                            Fold::Cancel(ph) => {
                                phase += ph;
                                out[k] = None;
                                stacks[*target].pop();
                                continue;
                            }
                            Fold::Replace(g, ph) => {
                                phase += ph;
                                out[k] = Some(Instruction::gate(g, *target));
                                continue;
                            }
                        }
                    }
                }
            }
            Instruction::Cr {
                control,
                target,
                angle,
            } => {
                if let Some(k) = shared {
                    if let Some(Instruction::Cr {
                        control: c,
                        target: t,
                        angle: b,
                    }) = out[k].clone()
                    {
                        if (c, t) == (*control, *target) {
                            let sum = angle + b;
                            let (w, ph) = canonical(0, sum);
                            phase += ph;
                            if is_zero_angle(w) {
                                out[k] = None;
                                for q in &qs {
                                    stacks[*q].pop();
                                }
                            } else {
                                out[k] = Some(Instruction::Cr {
                                    control: c,
                                    target: t,
                                    angle: w,
                                });
                            }
                            continue;
                        }
                    }
                }
            }
            _ => {}
        }
        if let Some(k) = shared {
            if out[k].as_ref().is_some_and(|p| inverse_pair(p, instr)) {
                out[k] = None;
                for q in &qs {
                    stacks[*q].pop();
                }
                continue;
            }
        }
        for q in &qs {
            stacks[*q].push(out.len());
        }
        out.push(Some(instr.clone()));
    }
    Circuit {
        num_qubits: circuit.num_qubits,
        instructions: out.into_iter().flatten().collect(),
        global_phase: phase,
    }
}

/// Full lowering: controlled gates to CNOT/CZ, two-qubit gates to the
/// native entangler, single-qubit runs fused and resynthesized, then
/// peephole.
pub fn to_native(circuit: &Circuit, set: &NativeGateSet) -> Result<Circuit, NativeError> {
    let flat = decompose_circuit(circuit, &DecomposeBudget::none(), Objective::MinGates)?;
    let mut lowered = Circuit::new(flat.num_qubits);
    lowered.global_phase = flat.global_phase;
    for instr in &flat.instructions {
        if instr.arity() == 1 || set.admits(instr) {
            lowered.instructions.push(instr.clone());
        } else {
            let frag = translate_2q(instr, set.two_qubit)?;
            lowered.instructions.extend(frag.instructions);
            lowered.global_phase += frag.global_phase;
        }
    }
    let fused = fuse_1q_runs(&lowered);
    let mut out = Circuit::new(fused.num_qubits);
    out.global_phase = fused.global_phase;
    for instr in fused.instructions {
        match instr {
            Instruction::Gate {
                gate: Gate::Unitary(m),
                target,
                ..
            } => {
                let s = synth_native(&m, set.one_qubit);
                out.global_phase += s.global_phase;
                for g in s.gates {
                    if g == Gate::SXdg && !set.sx_dagger {
                        // RZ(π) √X RZ(π) = -i √X†.
                        out.instructions.push(one(Gate::RZ(PI), target));
                        out.instructions.push(one(Gate::SX, target));
                        out.instructions.push(one(Gate::RZ(PI), target));
                        out.global_phase += FRAC_PI_2;
                    } else {
                        out.instructions.push(one(g, target));
                    }
                }
            }
            other => out.instructions.push(other),
        }
    }
    let out = peephole(&out);
    if let Some(bad) = out.instructions.iter().find(|i| !set.admits(i)) {
        return Err(NativeError::Unsupported(format!("{bad:?}")));
    }
    Ok(out)
}

/// Instruction-kind histogram, e.g. for compile reports.
pub fn gate_histogram(circuit: &Circuit) -> std::collections::BTreeMap<String, usize> {
    let mut h = std::collections::BTreeMap::new();
    for i in &circuit.instructions {
        let name = match i {
            Instruction::Gate { gate, controls, .. } => {
                format!("{}{}", "C".repeat(controls.len()), gate.name())
            }
            Instruction::Swap { .. } => "SWAP".into(),
            Instruction::ISwap { .. } => "ISWAP".into(),
            Instruction::Cr { .. } => "CR".into(),
        };
        *h.entry(name).or_insert(0) += 1;
    }
    h
}
