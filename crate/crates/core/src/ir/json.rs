//! Circuit JSON. Two-qubit primitives reuse the same record: SWAP and ISWAP
//! put their first qubit in `controls`, CR puts its control there.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Circuit, Gate, Instruction, IrError, ParamId};
use crate::linalg::Mat2;

#[derive(Serialize, Deserialize)]
struct WireCircuit {
    num_qubits: usize,
    instructions: Vec<WireInstr>,
    #[serde(default)]
    global_phase: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireInstr {
    gate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    target: usize,
    #[serde(default)]
    controls: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<[f64; 2]>>,
}

fn to_wire(instr: &Instruction) -> WireInstr {
    let base = |gate: &str, target: usize, controls: Vec<usize>| WireInstr {
        gate: gate.to_string(),
        angle: None,
        target,
        controls,
        param: None,
        matrix: None,
    };
    match instr {
        Instruction::Gate {
            gate,
            target,
            controls,
            param,
        } => {
            let mut w = base(gate.name(), *target, controls.clone());
            w.angle = gate.angle();
            w.param = param.map(|p| p.0);
            if let Gate::Unitary(m) = gate {
                w.matrix = Some(m.m.iter().map(|z| [z.re, z.im]).collect());
            }
            w
        }
        Instruction::Swap { a, b } => base("SWAP", *b, vec![*a]),
        Instruction::ISwap { a, b } => base("ISWAP", *b, vec![*a]),
        Instruction::Cr {
            control,
            target,
            angle,
        } => {
            let mut w = base("CR", *target, vec![*control]);
            w.angle = Some(*angle);
            w
        }
    }
}

fn from_wire(w: WireInstr) -> Result<Instruction, IrError> {
    let name = w.gate.to_ascii_uppercase();
    let pair = |what: &str| -> Result<usize, IrError> {
        match w.controls.as_slice() {
            [a] => Ok(*a),
            _ => Err(IrError::Parse(format!(
                "{what} needs exactly one entry in `controls`"
            ))),
        }
    };
    let instr = match name.as_str() {
        "SWAP" => Instruction::Swap {
            a: pair("SWAP")?,
            b: w.target,
        },
        "ISWAP" => Instruction::ISwap {
            a: pair("ISWAP")?,
            b: w.target,
        },
        "CR" => {
            let angle = w.angle.filter(|a| a.is_finite()).ok_or(IrError::Angle {
                gate: "CR".into(),
                problem: "needs a finite angle",
            })?;
            Instruction::Cr {
                control: pair("CR")?,
                target: w.target,
                angle,
            }
        }
        "U" => {
            let entries = w
                .matrix
                .as_ref()
                .ok_or_else(|| IrError::Parse("U needs `matrix`".into()))?;
            if entries.len() != 4 {
                return Err(IrError::Parse("U matrix needs 4 entries".into()));
            }
            let z: Vec<Complex64> = entries.iter().map(|e| Complex64::new(e[0], e[1])).collect();
            let m = Mat2::new(z[0], z[1], z[2], z[3]);
            if m.unitarity_error() > 1e-9 {
                return Err(IrError::Parse("U matrix is not unitary".into()));
            }
            Instruction::Gate {
                gate: Gate::Unitary(m),
                target: w.target,
                controls: w.controls,
                param: None,
            }
        }
        "CNOT" | "CX" | "CZ" => {
            if w.controls.is_empty() {
                return Err(IrError::Parse(format!("{name} needs at least one control")));
            }
            let gate = if name == "CZ" { Gate::Z } else { Gate::X };
            Instruction::Gate {
                gate,
                target: w.target,
                controls: w.controls,
                param: None,
            }
        }
        _ => {
            let gate = Gate::from_name(&name, w.angle)?;
            if w.param.is_some() && gate.angle().is_none() {
                return Err(IrError::Angle {
                    gate: name,
                    problem: "cannot carry a parameter",
                });
            }
            Instruction::Gate {
                gate,
                target: w.target,
                controls: w.controls,
                param: w.param.map(ParamId),
            }
        }
    };
    Ok(instr)
}

pub(super) fn circuit_to_json(c: &Circuit) -> String {
    let wire = WireCircuit {
        num_qubits: c.num_qubits,
        instructions: c.instructions.iter().map(to_wire).collect(),
        global_phase: c.global_phase,
    };
    serde_json::to_string_pretty(&wire).expect("circuit serialization cannot fail")
}

pub(super) fn circuit_from_json(s: &str) -> Result<Circuit, IrError> {
    let wire: WireCircuit = serde_json::from_str(s).map_err(|e| IrError::Parse(e.to_string()))?;
    if !wire.global_phase.is_finite() {
        return Err(IrError::Parse("global_phase must be finite".into()));
    }
    let mut c = Circuit::new(wire.num_qubits);
    c.global_phase = wire.global_phase;
    for w in wire.instructions {
        c.push(from_wire(w)?)?;
    }
    Ok(c)
}
