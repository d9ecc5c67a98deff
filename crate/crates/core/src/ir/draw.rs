use super::{Circuit, Gate, Instruction};

fn gate_label(g: &Gate) -> String {
    match g.angle() {
        Some(a) => format!("{}({:.3})", g.name(), a),
        None => g.name().to_string(),
    }
}

/// Cell text per touched qubit for one instruction.
fn cells(instr: &Instruction) -> Vec<(usize, String)> {
    match instr {
        Instruction::Gate {
            gate,
            target,
            controls,
            ..
        } => {
            let mut v: Vec<(usize, String)> =
                controls.iter().map(|c| (*c, "●".to_string())).collect();
            let label = if matches!(gate, Gate::X) && !controls.is_empty() {
                "⊕".to_string()
            } else {
                gate_label(gate)
            };
            v.push((*target, label));
            v
        }
        Instruction::Swap { a, b } => vec![(*a, "x".into()), (*b, "x".into())],
        Instruction::ISwap { a, b } => vec![(*a, "iSW".into()), (*b, "iSW".into())],
        Instruction::Cr {
            control,
            target,
            angle,
        } => {
            vec![(*control, "●".into()), (*target, format!("CR({angle:.3})"))]
        }
    }
}

fn pad(label: &str, width: usize, fill: char) -> String {
    let len = label.chars().count();
    let left = (width - len) / 2;
    let right = width - len - left;
    let mut s = String::new();
    s.extend(std::iter::repeat(fill).take(left));
    s.push_str(label);
    s.extend(std::iter::repeat(fill).take(right));
    s
}

/// Monospace rendering: one row per qubit, one column per instruction.
pub fn draw_text(circuit: &Circuit) -> String {
    let n = circuit.num_qubits;
    let prefix_w = format!("q{}", n.saturating_sub(1)).len();
    let mut rows: Vec<String> = (0..n)
        .map(|q| format!("{:<w$}: ─", format!("q{q}"), w = prefix_w))
        .collect();
    for instr in &circuit.instructions {
        let cs = cells(instr);
        let width = cs.iter().map(|(_, l)| l.chars().count()).max().unwrap_or(1) + 2;
        let lo = cs.iter().map(|(q, _)| *q).min().unwrap_or(0);
        let hi = cs.iter().map(|(q, _)| *q).max().unwrap_or(0);
        for (q, row) in rows.iter_mut().enumerate() {
            let cell = if let Some((_, l)) = cs.iter().find(|(t, _)| *t == q) {
                pad(l, width, '─')
            } else if q > lo && q < hi {
                pad("┼", width, '─')
            } else {
                pad("", width, '─')
            };
            row.push_str(&cell);
        }
    }
    let mut out = String::new();
    for r in rows {
        out.push_str(&r);
        out.push_str("─\n");
    }
    out
}
