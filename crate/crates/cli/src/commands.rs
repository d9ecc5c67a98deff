//! Subcommand bodies. Each takes document text and returns the text to emit.

use std::collections::BTreeMap;
use std::path::Path;

use qstack_core::decompose::{decompose_circuit, DecomposeBudget, Objective};
use qstack_core::ir::{draw_text, Circuit};
use qstack_core::mapper::{map_and_route, MapperError};
use qstack_core::native::{gate_histogram, to_native, NativeGateSet};
use qstack_core::pauli::Observable;
use qstack_core::sim::{self, seeded_rng, Mode, SimError};
use qstack_pulse::calib::{self, DeviceModel, Sweep};
use qstack_pulse::{replay_unitary, schedule_circuit, CalibrationTable, PulseError};
use serde::Serialize;

use crate::target::TargetDescriptor;
use crate::{read_input, CliError, ErrorKind};

/// Replay tolerance for `schedule --verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub primary: String,
    pub report: Option<String>,
    pub exit_code: i32,
}

impl Output {
    fn new(primary: String, report: Option<String>) -> Self {
        Output {
            primary,
            report,
            exit_code: 0,
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serialization cannot fail")
}

fn parse_circuit(text: &str) -> Result<Circuit, CliError> {
    Circuit::from_json(text).map_err(|e| CliError::input(format!("circuit: {e}")))
}

fn mapper_error(e: MapperError) -> CliError {
    let kind = match e {
        MapperError::TooLarge { .. } => ErrorKind::Resource,
        MapperError::NotDecomposed { .. } => ErrorKind::Internal,
        _ => ErrorKind::InvalidInput,
    };
    CliError::new(kind, e.to_string())
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::QubitCap { .. } => CliError::new(ErrorKind::Resource, e.to_string()),
        _ => CliError::input(e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub gates: usize,
    pub two_qubit: usize,
    pub depth: usize,
    pub histogram: BTreeMap<String, usize>,
}

impl StageReport {
    fn of(stage: &str, c: &Circuit) -> Self {
        StageReport {
            stage: stage.into(),
            gates: c.len(),
            two_qubit: c.two_qubit_count(),
            depth: c.depth(),
            histogram: gate_histogram(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompileReport {
    pub logical_qubits: usize,
    pub physical_qubits: usize,
    pub native_gates: NativeGateSet,
    pub stages: Vec<StageReport>,
    pub swap_count: usize,
    /// Physical position of each logical qubit before and after the circuit.
    pub initial_mapping: Vec<usize>,
    pub final_mapping: Vec<usize>,
}

/// decompose → place → refine → route → fuse → synthesize → peephole.
/// Unused device qubits serve as decomposition ancillas.
pub fn compile(
    circuit: &str,
    target: &str,
    passes: usize,
) -> Result<(Circuit, CompileReport), CliError> {
    let logical = parse_circuit(circuit)?;
    let target = TargetDescriptor::from_json(target)?;
    let graph = target.routing_graph()?;
    let n = logical.num_qubits;
    let width = graph.num_nodes();
    if n > width {
        return Err(mapper_error(MapperError::TooLarge {
            needed: n,
            available: width,
        }));
    }
    let mut wide = Circuit::new(width);
    wide.append(&logical)
        .map_err(|e| CliError::input(e.to_string()))?;
    let budget = DecomposeBudget::with_free((n..width).collect());
    let dec = decompose_circuit(&wide, &budget, Objective::MinGates)
        .map_err(|e| CliError::input(e.to_string()))?;
    let routed = map_and_route(&dec, &graph, passes).map_err(mapper_error)?;
    let native = to_native(&routed.circuit, &target.native_gates)
        .map_err(|e| CliError::new(ErrorKind::Internal, e.to_string()))?;
    let report = CompileReport {
        logical_qubits: n,
        physical_qubits: width,
        native_gates: target.native_gates,
        stages: vec![
            StageReport::of("input", &logical),
            StageReport::of("decomposed", &dec),
            StageReport::of("routed", &routed.circuit),
            StageReport::of("native", &native),
        ],
        swap_count: routed.swap_count,
        initial_mapping: routed.initial_mapping.l2p[..n].to_vec(),
        final_mapping: routed.final_mapping.l2p[..n].to_vec(),
    };
    Ok((native, report))
}

pub(crate) fn compile_files(
    circuit: &Path,
    target: &Path,
    passes: usize,
) -> Result<Output, CliError> {
    let (native, report) = compile(&read_input(circuit)?, &read_input(target)?, passes)?;
    Ok(Output::new(native.to_json(), Some(pretty(&report))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub mode: Mode,
    pub shots: Option<u64>,
    /// Observable JSON text.
    pub observable: Option<String>,
    pub dump: bool,
    pub qubits: Option<Vec<usize>>,
    pub seed: u64,
}

pub fn run(circuit: &str, req: &RunRequest) -> Result<Output, CliError> {
    if req.shots.is_none() && req.observable.is_none() && !req.dump {
        return Err(CliError::input(
            "nothing to do: give --shots, --observable or --dump",
        ));
    }
    if req.shots == Some(0) {
        return Err(CliError::input("--shots must be positive"));
    }
    if req.qubits.is_some() && req.shots.is_none() && !req.dump {
        return Err(CliError::input("--qubits needs --shots or --dump"));
    }
    let obs = req
        .observable
        .as_deref()
        .map(Observable::from_json)
        .transpose()
        .map_err(|e| CliError::input(format!("observable: {e}")))?;
    let c = parse_circuit(circuit)?;
    let state = sim::run::<f64>(&c, req.mode).map_err(sim_error)?;
    let qubits = req
        .qubits
        .clone()
        .unwrap_or_else(|| (0..c.num_qubits).collect());
    let mut doc = serde_json::Map::new();
    doc.insert("seed".into(), req.seed.into());
    doc.insert(
        "mode".into(),
        if req.mode == Mode::Dense {
            "dense"
        } else {
            "sparse"
        }
        .into(),
    );
    doc.insert("num_qubits".into(), c.num_qubits.into());
    if let Some(shots) = req.shots {
        let mut rng = seeded_rng(req.seed);
        let s = state.sample(&qubits, shots, &mut rng).map_err(sim_error)?;
        doc.insert("qubits".into(), serde_json::json!(qubits));
        doc.insert("samples".into(), s.to_json());
    }
    if let Some(obs) = &obs {
        doc.insert(
            "exp_value".into(),
            state.exp_value(obs).map_err(sim_error)?.into(),
        );
    }
    if req.dump {
        doc.insert("dump".into(), state.dump_json(&qubits).map_err(sim_error)?);
    }
    Ok(Output::new(pretty(&doc), None))
}

/// A calibration table plus the sweep data behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateOutput {
    pub output: Output,
    pub table: CalibrationTable,
    pub sweeps: Vec<Sweep>,
}

pub fn calibrate(device: &str, seed: u64) -> Result<CalibrateOutput, CliError> {
    let model: DeviceModel =
        serde_json::from_str(device).map_err(|e| CliError::input(format!("device model: {e}")))?;
    if model.qubits.is_empty() {
        return Err(CliError::input("device model has no qubits"));
    }
    let run = calib::calibrate(&model, &mut seeded_rng(seed)).map_err(|e| match e {
        PulseError::InvalidEnvelope(_) | PulseError::Model(_) => {
            CliError::input(format!("device model: {e}"))
        }
        _ => CliError::new(ErrorKind::Calibration, e.to_string()),
    })?;
    let report = serde_json::json!({
        "qubits": run.table.qubits.iter().map(|q| serde_json::json!({
            "id": q.id,
            "freq_hz": q.freq_hz,
            "anharm_hz": q.anharm_hz,
            "rabi_points": q.amp_map.len(),
            "s_rel": q.s_rel,
        })).collect::<Vec<_>>(),
        "pairs": run.table.pairs.iter().map(|p| serde_json::json!({
            "a": p.a, "b": p.b, "kind": p.kind, "gate_time_s": p.gate_time(),
        })).collect::<Vec<_>>(),
        "sweeps": run.sweeps.iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
    });
    Ok(CalibrateOutput {
        output: Output::new(run.table.to_json(), Some(pretty(&report))),
        table: run.table,
        sweeps: run.sweeps,
    })
}

/// One CSV per sweep, named after it.
pub fn write_sweeps(dir: &Path, sweeps: &[Sweep]) -> Result<(), CliError> {
    let io = |e: &dyn std::fmt::Display| {
        CliError::new(ErrorKind::Internal, format!("{}: {e}", dir.display()))
    };
    std::fs::create_dir_all(dir).map_err(|e| io(&e))?;
    for s in sweeps {
        let mut w =
            csv::Writer::from_path(dir.join(format!("{}.csv", s.name))).map_err(|e| io(&e))?;
        w.write_record(&s.header).map_err(|e| io(&e))?;
        for row in &s.rows {
            w.write_record(row.iter().map(|x| x.to_string()))
                .map_err(|e| io(&e))?;
        }
        w.flush().map_err(|e| io(&e))?;
    }
    Ok(())
}

pub fn schedule(
    native: &str,
    calibration: &str,
    dt: f64,
    verify: bool,
) -> Result<Output, CliError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::input("--dt must be positive"));
    }
    let c = parse_circuit(native)?;
    let table = CalibrationTable::from_json(calibration)
        .map_err(|e| CliError::input(format!("calibration: {e}")))?;
    let sched = schedule_circuit(&c, &table, dt).map_err(|e| CliError::input(e.to_string()))?;
    let mut out = Output::new(sched.to_json(), None);
    if verify {
        if c.num_qubits > sim::UNITARY_CAP {
            return Err(CliError::new(
                ErrorKind::Resource,
                format!(
                    "replay is limited to {} qubits, circuit has {}",
                    sim::UNITARY_CAP,
                    c.num_qubits
                ),
            ));
        }
        let replayed = replay_unitary(&sched, &table)
            .map_err(|e| CliError::new(ErrorKind::Internal, e.to_string()))?;
        let ideal = sim::unitary_of::<f64>(&c).map_err(sim_error)?;
        let d = replayed.phase_distance(&ideal);
        let ok = d <= VERIFY_TOLERANCE;
        out.report = Some(pretty(&serde_json::json!({
            "verify": {"max_unitary_distance": d, "tolerance": VERIFY_TOLERANCE, "ok": ok}
        })));
        if !ok {
            out.exit_code = ErrorKind::Internal.exit_code();
        }
    }
    Ok(out)
}

pub fn draw(circuit: &str) -> Result<Output, CliError> {
    Ok(Output::new(draw_text(&parse_circuit(circuit)?), None))
}
