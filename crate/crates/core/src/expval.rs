//! Expectation values of Pauli sums: qubit-wise-commuting grouping,
//! basis-change circuits, shot-based estimation and parameter-shift
//! gradients.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use thiserror::Error;

use crate::ir::{Circuit, Gate, Instruction, ParamId};
use crate::pauli::{Observable, Pauli, PauliString};
use crate::sim::{seeded_rng, Mode, QuantumState, SimError, Simulator, DEFAULT_DENSE_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpvalError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("parameter {0} is not attached to any instruction")]
    ParamNotFound(u32),
    #[error("parameter {0} is attached to more than one instruction")]
    ParamShared(u32),
    #[error("parameter shift needs an uncontrolled RX, RY or RZ, found {0}")]
    UnsupportedGate(String),
}

/// Terms measured together from one basis-rotated circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    /// Indices into the observable's term list.
    pub terms: Vec<usize>,
    pub strings: Vec<PauliString>,
    pub shared_basis: BTreeMap<usize, Pauli>,
}

impl MeasurementGroup {
    fn accepts(&self, s: &PauliString) -> bool {
        s.iter()
            .all(|(q, p)| self.shared_basis.get(&q).map_or(true, |b| *b == p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Greedy first-fit over the terms in sorted order. Identity terms need no
/// measurement and are left out.
pub fn qwc_group(obs: &Observable) -> Vec<MeasurementGroup> {
    let mut groups: Vec<MeasurementGroup> = Vec::new();
    for (i, (_, s)) in obs.terms().iter().enumerate() {
        if s.is_identity() {
            continue;
        }
        let slot = match groups.iter().position(|g| g.accepts(s)) {
            Some(k) => k,
            None => {
                groups.push(MeasurementGroup {
                    terms: vec![],
                    strings: vec![],
                    shared_basis: BTreeMap::new(),
                });
                groups.len() - 1
            }
        };
        let g = &mut groups[slot];
        g.terms.push(i);
        g.strings.push(s.clone());
        g.shared_basis.extend(s.iter());
    }
    groups
}

/// `base` followed by the rotations that map each qubit's group axis to Z.
pub fn measurement_circuit(base: &Circuit, group: &MeasurementGroup) -> Circuit {
    let mut c = base.clone();
    for (&q, p) in &group.shared_basis {
        match p {
            Pauli::X => c.instructions.push(Instruction::gate(Gate::H, q)),
            Pauli::Y => {
                c.instructions
                    .push(Instruction::gate(Gate::RZ(-FRAC_PI_2), q));
                c.instructions.push(Instruction::gate(Gate::H, q));
            }
            Pauli::Z => {}
        }
    }
    c
}

fn simulator_for(n: usize) -> Simulator {
    Simulator::new(if n <= DEFAULT_DENSE_CAP {
        Mode::Dense
    } else {
        Mode::Sparse
    })
}

fn identity_part(obs: &Observable) -> f64 {
    obs.terms()
        .iter()
        .filter(|(_, s)| s.is_identity())
        .map(|(c, _)| c)
        .sum()
}

fn check_range(obs: &Observable, n: usize) -> Result<(), SimError> {
    match obs.max_qubit() {
        Some(q) if q >= n => Err(SimError::ObservableRange {
            qubit: q,
            num_qubits: n,
        }),
        _ => Ok(()),
    }
}

/// `⟨base|H|base⟩`, either exactly or from one sampled run per group.
pub fn estimate(obs: &Observable, base: &Circuit, mode: EstimateMode) -> Result<f64, ExpvalError> {
    let n = base.num_qubits;
    check_range(obs, n)?;
    if obs.terms().iter().all(|(_, s)| s.is_identity()) {
        return Ok(identity_part(obs));
    }
    let sim = simulator_for(n);
    match mode {
        EstimateMode::Exact => {
            let st: QuantumState<f64> = sim.run(base)?;
            Ok(st.exp_value(obs)?)
        }
        EstimateMode::Shots { shots, seed } => {
            let mut rng = seeded_rng(seed);
            let mut total = identity_part(obs);
            for g in qwc_group(obs) {
                total += estimate_group(obs, base, &g, &sim, shots, &mut rng)?;
            }
            Ok(total)
        }
    }
}

fn estimate_group<R: Rng>(
    obs: &Observable,
    base: &Circuit,
    group: &MeasurementGroup,
    sim: &Simulator,
    shots: u64,
    rng: &mut R,
) -> Result<f64, ExpvalError> {
    let qubits: Vec<usize> = group.shared_basis.keys().copied().collect();
    let st: QuantumState<f64> = sim.run(&measurement_circuit(base, group))?;
    let counts = st.sample(&qubits, shots, rng)?.counts;
    let w = qubits.len();
    let mut sum = 0.0;
    for (&t, s) in group.terms.iter().zip(&group.strings) {
        // Bits of the outcome index follow `qubits`, first as most significant.
        let mask: u64 = s
            .support()
            .iter()
            .map(|q| 1u64 << (w - 1 - qubits.binary_search(q).expect("in basis")))
            .sum();
        let parity: i64 = counts
            .iter()
            .map(|(k, c)| {
                if (k & mask).count_ones() % 2 == 0 {
                    *c as i64
                } else {
                    -(*c as i64)
                }
            })
            .sum();
        sum += obs.terms()[t].0 * parity as f64 / shots as f64;
    }
    Ok(sum)
}

/// Index of the single instruction carrying `param`.
fn find_param(base: &Circuit, param: ParamId) -> Result<usize, ExpvalError> {
    let mut hits = base
        .instructions
        .iter()
        .enumerate()
        .filter(|(_, i)| match i {
            Instruction::Gate { param: p, .. } => *p == Some(param),
            _ => false,
        });
    let first = hits
        .next()
        .map(|(k, _)| k)
        .ok_or(ExpvalError::ParamNotFound(param.0))?;
    if hits.next().is_some() {
        return Err(ExpvalError::ParamShared(param.0));
    }
    Ok(first)
}

/// Copy of `base` with the angle of instruction `k` moved by `delta`.
pub fn shifted(base: &Circuit, k: usize, delta: f64) -> Circuit {
    let mut c = base.clone();
    if let Instruction::Gate { gate, .. } = &mut c.instructions[k] {
        if let Some(a) = gate.angle() {
            *gate = gate.with_angle(a + delta);
        }
    }
    c
}

/// `∂⟨H⟩/∂θ = [E(θ + π/2) − E(θ − π/2)] / 2` in exact mode.
pub fn parameter_shift_grad(
    base: &Circuit,
    obs: &Observable,
    param: ParamId,
) -> Result<f64, ExpvalError> {
    let k = find_param(base, param)?;
    match &base.instructions[k] {
        Instruction::Gate {
            gate: Gate::RX(_) | Gate::RY(_) | Gate::RZ(_),
            controls,
            ..
        } if controls.is_empty() => {}
        Instruction::Gate { gate, controls, .. } => {
            let name = format!("{}{}", "C".repeat(controls.len()), gate.name());
            return Err(ExpvalError::UnsupportedGate(name));
        }
        other => return Err(ExpvalError::UnsupportedGate(format!("{other:?}"))),
    }
    let plus = estimate(obs, &shifted(base, k, FRAC_PI_2), EstimateMode::Exact)?;
    let minus = estimate(obs, &shifted(base, k, -FRAC_PI_2), EstimateMode::Exact)?;
    Ok((plus - minus) / 2.0)
}
