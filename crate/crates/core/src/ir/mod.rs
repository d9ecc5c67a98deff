//! Hardware-agnostic circuit representation.
//!
//! A [`Circuit`] is an ordered list of [`Instruction`]s over qubits
//! `0..num_qubits`, plus an explicit global phase. Circuits are normally
//! produced with [`CircuitBuilder`], whose `ctrl`/`adj`/`around` modifiers
//! wrap gate-emitting closures.

mod builder;
mod draw;
mod json;

pub use builder::CircuitBuilder;
pub use draw::draw_text;

use num_complex::Complex;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

use crate::linalg::{Mat2, Matrix};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrError {
    #[error("cannot allocate {requested} qubits: only {available} of the capacity remain")]
    Capacity { requested: usize, available: usize },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {qubit} is both a control and a target")]
    ControlTargetOverlap { qubit: usize },
    #[error("qubit {qubit} listed twice in one instruction")]
    DuplicateQubit { qubit: usize },
    #[error("qubits cannot be allocated inside a gate body")]
    AllocationInBody,
    #[error("gate {gate} {problem}")]
    Angle { gate: String, problem: &'static str },
    #[error("conjugation block of `around` touches control qubit {qubit}")]
    ConjugationTouchesControl { qubit: usize },
    #[error("{0} cannot be controlled")]
    NotControllable(&'static str),
    #[error("invalid circuit document: {0}")]
    Parse(String),
}

/// Handle for an allocated qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitRef(pub usize);

impl QubitRef {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<QubitRef> for usize {
    fn from(q: QubitRef) -> usize {
        q.0
    }
}

/// Symbolic parameter id attached to a rotation so gradients can shift it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub u32);

/// Single-qubit gate. `SXdg` and `Unitary` are produced by the compiler passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    RX(f64),
    RY(f64),
    RZ(f64),
    P(f64),
    SX,
    SXdg,
    Unitary(Mat2<f64>),
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::RX(_) => "RX",
            Gate::RY(_) => "RY",
            Gate::RZ(_) => "RZ",
            Gate::P(_) => "P",
            Gate::SX => "SX",
            Gate::SXdg => "SXDG",
            Gate::Unitary(_) => "U",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::RX(a) | Gate::RY(a) | Gate::RZ(a) | Gate::P(a) => Some(a),
            _ => None,
        }
    }

    /// Same kind with a new angle; non-parameterized gates are returned as is.
    pub fn with_angle(&self, a: f64) -> Gate {
        match self {
            Gate::RX(_) => Gate::RX(a),
            Gate::RY(_) => Gate::RY(a),
            Gate::RZ(_) => Gate::RZ(a),
            Gate::P(_) => Gate::P(a),
            g => *g,
        }
    }

    /// Builds a gate from its wire name; parameterized kinds need `angle`.
    pub fn from_name(name: &str, angle: Option<f64>) -> Result<Gate, IrError> {
        let need = |a: Option<f64>| {
            a.filter(|x| x.is_finite()).ok_or(IrError::Angle {
                gate: name.to_string(),
                problem: "needs a finite angle",
            })
        };
        let none = |g: Gate| match angle {
            Some(_) => Err(IrError::Angle {
                gate: name.to_string(),
                problem: "takes no angle",
            }),
            None => Ok(g),
        };
        match name.to_ascii_uppercase().as_str() {
            "X" => none(Gate::X),
            "Y" => none(Gate::Y),
            "Z" => none(Gate::Z),
            "H" => none(Gate::H),
            "SX" => none(Gate::SX),
            "SXDG" => none(Gate::SXdg),
            "RX" => Ok(Gate::RX(need(angle)?)),
            "RY" => Ok(Gate::RY(need(angle)?)),
            "RZ" => Ok(Gate::RZ(need(angle)?)),
            "P" => Ok(Gate::P(need(angle)?)),
            other => Err(IrError::Parse(format!("unknown gate `{other}`"))),
        }
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::RX(a) => Gate::RX(-a),
            Gate::RY(a) => Gate::RY(-a),
            Gate::RZ(a) => Gate::RZ(-a),
            Gate::P(a) => Gate::P(-a),
            Gate::SX => Gate::SXdg,
            Gate::SXdg => Gate::SX,
            Gate::Unitary(m) => Gate::Unitary(m.adjoint()),
            g => g,
        }
    }

    pub fn matrix<T: Real>(&self) -> Mat2<T> {
        let c = |re: f64, im: f64| Complex::new(T::lit(re), T::lit(im));
        let z = c(0.0, 0.0);
        match *self {
            Gate::X => Mat2::new(z, c(1.0, 0.0), c(1.0, 0.0), z),
            Gate::Y => Mat2::new(z, c(0.0, -1.0), c(0.0, 1.0), z),
            Gate::Z => Mat2::diag(c(1.0, 0.0), c(-1.0, 0.0)),
            Gate::H => {
                let h = FRAC_1_SQRT_2;
                Mat2::new(c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0))
            }
            Gate::RX(a) => {
                let (s, co) = (T::lit(a) / T::lit(2.0)).sin_cos();
                Mat2::new(
                    Complex::new(co, T::zero()),
                    Complex::new(T::zero(), -s),
                    Complex::new(T::zero(), -s),
                    Complex::new(co, T::zero()),
                )
            }
            Gate::RY(a) => {
                let (s, co) = (T::lit(a) / T::lit(2.0)).sin_cos();
                Mat2::new(
                    Complex::new(co, T::zero()),
                    Complex::new(-s, T::zero()),
                    Complex::new(s, T::zero()),
                    Complex::new(co, T::zero()),
                )
            }
            Gate::RZ(a) => {
                let h = T::lit(a) / T::lit(2.0);
                Mat2::diag(
                    Complex::from_polar(T::one(), -h),
                    Complex::from_polar(T::one(), h),
                )
            }
            Gate::P(a) => Mat2::diag(c(1.0, 0.0), Complex::from_polar(T::one(), T::lit(a))),
            Gate::SX => Mat2::new(c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)),
            Gate::SXdg => Mat2::new(c(0.5, -0.5), c(0.5, 0.5), c(0.5, 0.5), c(0.5, -0.5)),
            Gate::Unitary(m) => m.cast(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    /// A single-qubit gate with an arbitrary (possibly empty) control set.
    Gate {
        gate: Gate,
        target: usize,
        controls: Vec<usize>,
        param: Option<ParamId>,
    },
    /// Routing pseudo-gate; expanded by the native translation.
    Swap {
        a: usize,
        b: usize,
    },
    ISwap {
        a: usize,
        b: usize,
    },
    /// Cross-resonance `exp(-i angle/2 Z⊗X)` with `control` as the Z side.
    Cr {
        control: usize,
        target: usize,
        angle: f64,
    },
}

impl Instruction {
    pub fn gate(gate: Gate, target: usize) -> Self {
        Instruction::Gate {
            gate,
            target,
            controls: Vec::new(),
            param: None,
        }
    }

    pub fn controlled(gate: Gate, controls: Vec<usize>, target: usize) -> Self {
        Instruction::Gate {
            gate,
            target,
            controls,
            param: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::controlled(Gate::X, vec![control], target)
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::controlled(Gate::Z, vec![a], b)
    }

    /// All operand qubits; for controlled gates the controls come first.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Gate {
                target, controls, ..
            } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            Instruction::Swap { a, b } | Instruction::ISwap { a, b } => vec![*a, *b],
            Instruction::Cr {
                control, target, ..
            } => vec![*control, *target],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Instruction::Gate { controls, .. } => controls.len() + 1,
            _ => 2,
        }
    }

    pub fn is_single_qubit(&self) -> bool {
        self.arity() == 1
    }

    pub fn is_cz(&self) -> bool {
        matches!(self, Instruction::Gate { gate: Gate::Z, controls, .. } if controls.len() == 1)
    }

    pub fn is_cnot(&self) -> bool {
        matches!(self, Instruction::Gate { gate: Gate::X, controls, .. } if controls.len() == 1)
    }

    /// Applies `f` to every qubit index.
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Instruction {
        match self {
            Instruction::Gate {
                gate,
                target,
                controls,
                param,
            } => Instruction::Gate {
                gate: *gate,
                target: f(*target),
                controls: controls.iter().map(|q| f(*q)).collect(),
                param: *param,
            },
            Instruction::Swap { a, b } => Instruction::Swap { a: f(*a), b: f(*b) },
            Instruction::ISwap { a, b } => Instruction::ISwap { a: f(*a), b: f(*b) },
            Instruction::Cr {
                control,
                target,
                angle,
            } => Instruction::Cr {
                control: f(*control),
                target: f(*target),
                angle: *angle,
            },
        }
    }

    /// The inverse as an instruction sequence in time order.
    pub fn adjoint(&self) -> Vec<Instruction> {
        match self {
            Instruction::Gate {
                gate,
                target,
                controls,
                param,
            } => vec![Instruction::Gate {
                gate: gate.adjoint(),
                target: *target,
                controls: controls.clone(),
                param: *param,
            }],
            Instruction::Swap { .. } => vec![self.clone()],
            // iSWAP^-1 = iSWAP · (Z⊗Z); the two factors commute.
            Instruction::ISwap { a, b } => {
                vec![
                    Instruction::gate(Gate::Z, *a),
                    Instruction::gate(Gate::Z, *b),
                    self.clone(),
                ]
            }
            Instruction::Cr {
                control,
                target,
                angle,
            } => {
                vec![Instruction::Cr {
                    control: *control,
                    target: *target,
                    angle: -angle,
                }]
            }
        }
    }

    /// 4x4 matrix of a two-qubit primitive, first listed qubit as high bit.
    pub fn two_qubit_matrix<T: Real>(&self) -> Option<Matrix<T>> {
        let c = |re: f64, im: f64| Complex::new(T::lit(re), T::lit(im));
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        match self {
            Instruction::Swap { .. } => Some(Matrix::from_rows(
                4,
                vec![o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o],
            )),
            Instruction::ISwap { .. } => {
                let mi = c(0.0, -1.0);
                Some(Matrix::from_rows(
                    4,
                    vec![o, z, z, z, z, z, mi, z, z, mi, z, z, z, z, z, o],
                ))
            }
            Instruction::Cr { angle, .. } => Some(cr_matrix(T::lit(*angle))),
            Instruction::Gate { .. } => None,
        }
    }

    fn validate(&self, num_qubits: usize) -> Result<(), IrError> {
        let qs = self.qubits();
        for (i, q) in qs.iter().enumerate() {
            if *q >= num_qubits {
                return Err(IrError::QubitOutOfRange {
                    qubit: *q,
                    num_qubits,
                });
            }
            if qs[..i].contains(q) {
                return match self {
                    Instruction::Gate { target, .. } if target == q => {
                        Err(IrError::ControlTargetOverlap { qubit: *q })
                    }
                    _ => Err(IrError::DuplicateQubit { qubit: *q }),
                };
            }
        }
        if let Instruction::Gate { gate, .. } = self {
            if let Some(a) = gate.angle() {
                if !a.is_finite() {
                    return Err(IrError::Angle {
                        gate: gate.name().into(),
                        problem: "needs a finite angle",
                    });
                }
            }
        }
        Ok(())
    }
}

/// `CR(θ) = exp(-i θ/2 Z⊗X)`, control as the high bit.
pub fn cr_matrix<T: Real>(theta: T) -> Matrix<T> {
    let (s, co) = (theta / T::lit(2.0)).sin_cos();
    let z = Complex::new(T::zero(), T::zero());
    let cc = Complex::new(co, T::zero());
    let is = Complex::new(T::zero(), s);
    Matrix::from_rows(
        4,
        vec![cc, -is, z, z, -is, cc, z, z, z, z, cc, is, z, z, is, cc],
    )
}

/// Ordered instruction list with an explicit global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub instructions: Vec<Instruction>,
    pub global_phase: f64,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            instructions: Vec::new(),
            global_phase: 0.0,
        }
    }

    /// Appends after validating operands.
    pub fn push(&mut self, instr: Instruction) -> Result<(), IrError> {
        instr.validate(self.num_qubits)?;
        self.instructions.push(instr);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Instruction>>(&mut self, it: I) -> Result<(), IrError> {
        for i in it {
            self.push(i)?;
        }
        Ok(())
    }

    /// `apply` from the programming model: one instruction per target.
    pub fn apply(&mut self, gate: Gate, targets: &[usize]) -> Result<(), IrError> {
        for t in targets {
            self.push(Instruction::gate(gate, *t))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), IrError> {
        self.instructions
            .iter()
            .try_for_each(|i| i.validate(self.num_qubits))
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.arity() == 2).count()
    }

    pub fn max_controls(&self) -> usize {
        self.instructions
            .iter()
            .map(|i| match i {
                Instruction::Gate { controls, .. } => controls.len(),
                _ => 1,
            })
            .max()
            .unwrap_or(0)
    }

    /// Circuit depth counting every instruction as one layer on its qubits.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for instr in &self.instructions {
            let qs = instr.qubits();
            let l = qs.iter().map(|q| level[*q]).max().unwrap_or(0) + 1;
            for q in qs {
                level[q] = l;
            }
            depth = depth.max(l);
        }
        depth
    }

    /// Exact inverse circuit.
    pub fn inverse(&self) -> Circuit {
        let mut out = Circuit::new(self.num_qubits);
        for instr in self.instructions.iter().rev() {
            out.instructions.extend(instr.adjoint());
        }
        out.global_phase = -self.global_phase;
        out
    }

    /// Appends another circuit on the same register.
    pub fn append(&mut self, other: &Circuit) -> Result<(), IrError> {
        if other.num_qubits > self.num_qubits {
            return Err(IrError::QubitOutOfRange {
                qubit: other.num_qubits - 1,
                num_qubits: self.num_qubits,
            });
        }
        self.instructions.extend(other.instructions.iter().cloned());
        self.global_phase += other.global_phase;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        json::circuit_to_json(self)
    }

    pub fn from_json(s: &str) -> Result<Circuit, IrError> {
        json::circuit_from_json(s)
    }
}

/// Grover diffusion over `n` qubits: `around(H+X, CZ over all qubits)`.
pub fn grover_diffusion(n: usize) -> Result<Circuit, IrError> {
    let mut b = CircuitBuilder::new(n.max(1));
    let qs = b.alloc(n)?;
    let (last, rest) = qs.split_last().ok_or(IrError::Capacity {
        requested: 0,
        available: 0,
    })?;
    let rest = rest.to_vec();
    let last = *last;
    b.around(
        |b| {
            b.apply(Gate::H, &qs)?;
            b.apply(Gate::X, &qs)
        },
        |b| b.ctrl(&rest, |b| b.apply(Gate::Z, &[last])),
    )?;
    Ok(b.finish())
}
