use super::{Circuit, Gate, Instruction, IrError, ParamId, QubitRef};

#[derive(Debug, Clone)]
struct Emitted {
    instr: Instruction,
    // Set on the conjugation blocks of `around`; `ctrl` leaves these alone.
    exempt: bool,
}

/// Records gate emissions. Modifiers run their body against a child
/// builder and re-emit the transformed instructions into the parent.
#[derive(Debug)]
pub struct CircuitBuilder {
    capacity: usize,
    allocated: usize,
    ops: Vec<Emitted>,
    global_phase: f64,
    in_body: bool,
}

impl Default for CircuitBuilder {
    fn default() -> Self {
        Self::new(32)
    }
}

impl CircuitBuilder {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            allocated: 0,
            ops: Vec::new(),
            global_phase: 0.0,
            in_body: false,
        }
    }

    /// Allocates `n` contiguous qubits, each starting in |0⟩.
    pub fn alloc(&mut self, n: usize) -> Result<Vec<QubitRef>, IrError> {
        if self.in_body {
            return Err(IrError::AllocationInBody);
        }
        let available = self.capacity - self.allocated;
        if n > available {
            return Err(IrError::Capacity {
                requested: n,
                available,
            });
        }
        let start = self.allocated;
        self.allocated += n;
        Ok((start..start + n).map(QubitRef).collect())
    }

    pub fn num_allocated(&self) -> usize {
        self.allocated
    }

    pub fn apply(&mut self, gate: Gate, targets: &[QubitRef]) -> Result<(), IrError> {
        for t in targets {
            self.emit(Instruction::gate(gate, t.0))?;
        }
        Ok(())
    }

    /// Emits a rotation tagged with a symbolic parameter.
    pub fn apply_param(
        &mut self,
        gate: Gate,
        target: QubitRef,
        param: ParamId,
    ) -> Result<(), IrError> {
        if gate.angle().is_none() {
            return Err(IrError::Angle {
                gate: gate.name().into(),
                problem: "cannot carry a parameter",
            });
        }
        self.emit(Instruction::Gate {
            gate,
            target: target.0,
            controls: Vec::new(),
            param: Some(param),
        })
    }

    pub fn cnot(&mut self, control: QubitRef, target: QubitRef) -> Result<(), IrError> {
        self.emit(Instruction::cnot(control.0, target.0))
    }

    pub fn cz(&mut self, a: QubitRef, b: QubitRef) -> Result<(), IrError> {
        self.emit(Instruction::cz(a.0, b.0))
    }

    pub fn add_global_phase(&mut self, phi: f64) {
        self.global_phase += phi;
    }

    /// Emits a raw instruction after validation.
    pub fn emit(&mut self, instr: Instruction) -> Result<(), IrError> {
        self.push(Emitted {
            instr,
            exempt: false,
        })
    }

    fn push(&mut self, e: Emitted) -> Result<(), IrError> {
        e.instr.validate(self.allocated)?;
        self.ops.push(e);
        Ok(())
    }

    fn child(&self) -> CircuitBuilder {
        CircuitBuilder {
            capacity: self.allocated,
            allocated: self.allocated,
            ops: Vec::new(),
            global_phase: 0.0,
            in_body: true,
        }
    }

    fn record<F>(&self, body: F) -> Result<CircuitBuilder, IrError>
    where
        F: FnOnce(&mut CircuitBuilder) -> Result<(), IrError>,
    {
        let mut child = self.child();
        body(&mut child)?;
        Ok(child)
    }

    /// Adds `controls` to every instruction the body emits.
    pub fn ctrl<F>(&mut self, controls: &[QubitRef], body: F) -> Result<(), IrError>
    where
        F: FnOnce(&mut CircuitBuilder) -> Result<(), IrError>,
    {
        let child = self.record(body)?;
        let cs: Vec<usize> = controls.iter().map(|q| q.0).collect();
        for e in child.ops {
            if e.exempt {
                if let Some(q) = e.instr.qubits().into_iter().find(|q| cs.contains(q)) {
                    return Err(IrError::ConjugationTouchesControl { qubit: q });
                }
                self.push(e)?;
                continue;
            }
            let instr = match e.instr {
                Instruction::Gate {
                    gate,
                    target,
                    controls,
                    param,
                } => {
                    let mut all = cs.clone();
                    all.extend(controls);
                    Instruction::Gate {
                        gate,
                        target,
                        controls: all,
                        param,
                    }
                }
                Instruction::Swap { .. } => return Err(IrError::NotControllable("SWAP")),
                Instruction::ISwap { .. } => return Err(IrError::NotControllable("iSWAP")),
                Instruction::Cr { .. } => return Err(IrError::NotControllable("CR")),
            };
            self.push(Emitted {
                instr,
                exempt: false,
            })?;
        }
        if child.global_phase != 0.0 {
            // A phase under control becomes a (multi-)controlled phase on the controls.
            if let Some((last, rest)) = cs.split_last() {
                self.push(Emitted {
                    instr: Instruction::controlled(
                        Gate::P(child.global_phase),
                        rest.to_vec(),
                        *last,
                    ),
                    exempt: false,
                })?;
            } else {
                self.global_phase += child.global_phase;
            }
        }
        Ok(())
    }

    /// Emits the inverse of the body: reversed order, each gate adjointed.
    pub fn adj<F>(&mut self, body: F) -> Result<(), IrError>
    where
        F: FnOnce(&mut CircuitBuilder) -> Result<(), IrError>,
    {
        let child = self.record(body)?;
        self.global_phase -= child.global_phase;
        for e in child.ops.into_iter().rev() {
            for instr in e.instr.adjoint() {
                self.push(Emitted {
                    instr,
                    exempt: e.exempt,
                })?;
            }
        }
        Ok(())
    }

    /// Emits `outer`, `inner`, then the inverse of `outer`.
    pub fn around<F, G>(&mut self, outer: F, inner: G) -> Result<(), IrError>
    where
        F: FnOnce(&mut CircuitBuilder) -> Result<(), IrError>,
        G: FnOnce(&mut CircuitBuilder) -> Result<(), IrError>,
    {
        let u = self.record(outer)?;
        let v = self.record(inner)?;
        for e in &u.ops {
            self.push(Emitted {
                instr: e.instr.clone(),
                exempt: true,
            })?;
        }
        self.global_phase += v.global_phase;
        for e in v.ops {
            self.push(e)?;
        }
        for e in u.ops.iter().rev() {
            for instr in e.instr.adjoint() {
                self.push(Emitted {
                    instr,
                    exempt: true,
                })?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Circuit {
        Circuit {
            num_qubits: self.allocated,
            instructions: self.ops.into_iter().map(|e| e.instr).collect(),
            global_phase: self.global_phase,
        }
    }
}
