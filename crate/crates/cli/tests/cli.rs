use std::path::{Path, PathBuf};
use std::time::Instant;

use qstack_cli::{calibrate, compile, draw, main_with, run, schedule, RunRequest};
use qstack_core::ir::{Circuit, Instruction};
use qstack_core::mapper::CouplingGraph;
use qstack_core::sim::Mode;
use qstack_pulse::CalibrationTable;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(data(name)).unwrap()
}

fn qstack(args: &[&str]) -> i32 {
    main_with(std::iter::once("qstack").chain(args.iter().copied()))
}

fn request(mode: Mode) -> RunRequest {
    RunRequest {
        mode,
        shots: None,
        observable: None,
        dump: false,
        qubits: None,
        seed: 0,
    }
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn grover_ten_compiles_to_the_native_set_on_edges() {
    let t = Instant::now();
    let (native, report) =
        compile(&read("grover10.json"), &read("target_lattice20.json"), 3).unwrap();
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let graph = CouplingGraph::lattice20();
    for i in &native.instructions {
        match i {
            Instruction::Gate { gate, controls, .. } if controls.is_empty() => {
                assert!(["RZ", "SX", "SXDG"].contains(&gate.name()), "{i:?}");
            }
            _ => {
                assert!(i.is_cz(), "{i:?}");
                let q = i.qubits();
                assert!(graph.has_edge(q[0], q[1]), "{i:?}");
            }
        }
    }
    assert_eq!(report.logical_qubits, 10);
    assert_eq!(report.physical_qubits, 20);
    assert_eq!(report.stages.len(), 4);
    assert_eq!(report.stages[3].two_qubit, native.two_qubit_count());
    let mut placed = report.initial_mapping.clone();
    placed.sort_unstable();
    placed.dedup();
    assert_eq!(placed.len(), 10);
}

#[test]
fn compile_via_files_writes_the_native_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("native.json");
    let code = qstack(&[
        "compile",
        data("grover4.json").to_str().unwrap(),
        data("target_grid8.json").to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let c = Circuit::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(c.num_qubits, 8);
    assert!(c.two_qubit_count() > 0);
}

#[test]
fn empty_circuit_compiles_to_nothing() {
    let (native, report) = compile(&read("empty.json"), &read("target_grid8.json"), 3).unwrap();
    assert!(native.instructions.is_empty());
    assert_eq!(report.swap_count, 0);
}

#[test]
fn oversized_circuit_is_a_resource_error() {
    let err = compile(&read("wide30.json"), &read("target_lattice20.json"), 3).unwrap_err();
    assert_eq!(err.kind.exit_code(), 3);
    assert_eq!(
        qstack(&[
            "compile",
            data("wide30.json").to_str().unwrap(),
            data("target_lattice20.json").to_str().unwrap()
        ]),
        3
    );
}

#[test]
fn bad_inputs_exit_two() {
    let bell = data("bell.json");
    let bell = bell.to_str().unwrap();
    assert_eq!(qstack(&["run", bell]), 2);
    assert_eq!(qstack(&["run", bell, "--shots", "0"]), 2);
    assert_eq!(
        qstack(&["run", bell, "--mode", "tensor", "--shots", "4"]),
        2
    );
    assert_eq!(
        qstack(&[
            "run",
            bell,
            "--qubits",
            "0",
            "--observable",
            data("chsh.json").to_str().unwrap()
        ]),
        2
    );
    assert_eq!(qstack(&["run", "/no/such/file.json", "--shots", "4"]), 2);
    assert_eq!(qstack(&["frobnicate"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.json");
    std::fs::write(
        &junk,
        "{\"num_qubits\": 2, \"instructions\": [{\"gate\": \"WHAT\"}]}",
    )
    .unwrap();
    assert_eq!(qstack(&["draw", junk.to_str().unwrap()]), 2);
    let mut lopsided: Value = json(&read("target_grid8.json"));
    lopsided["coupling"]["edges"]
        .as_array_mut()
        .unwrap()
        .push(serde_json::json!({"a": 0, "b": 99}));
    assert_eq!(
        compile(&read("grover4.json"), &lopsided.to_string(), 3)
            .unwrap_err()
            .kind
            .exit_code(),
        2
    );
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(qstack(&["--version"]), 0);
    assert_eq!(qstack(&["run", "--help"]), 0);
}

#[test]
fn bell_sampling_is_seeded() {
    let req = RunRequest {
        shots: Some(1024),
        seed: 7,
        ..request(Mode::Dense)
    };
    let a = run(&read("bell.json"), &req).unwrap();
    let v = json(&a.primary);
    let counts = v["samples"]["counts"].as_object().unwrap();
    assert_eq!(counts.keys().collect::<Vec<_>>(), ["0", "3"]);
    let total: u64 = counts.values().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 1024);
    assert_eq!(run(&read("bell.json"), &req).unwrap(), a);
    let other = run(
        &read("bell.json"),
        &RunRequest {
            seed: 8,
            ..req.clone()
        },
    )
    .unwrap();
    assert_ne!(other.primary, a.primary);
}

#[test]
fn chsh_expectation_is_exact() {
    let req = RunRequest {
        observable: Some(read("chsh.json")),
        ..request(Mode::Sparse)
    };
    let v = json(&run(&read("bell.json"), &req).unwrap().primary);
    let e = v["exp_value"].as_f64().unwrap();
    assert!((e + 2.0 * 2f64.sqrt()).abs() < 1e-9, "{e}");
}

#[test]
fn sparse_ghz_thirty_dumps_two_amplitudes() {
    let req = RunRequest {
        dump: true,
        ..request(Mode::Sparse)
    };
    let v = json(&run(&read("ghz30.json"), &req).unwrap().primary);
    let dump = v["dump"]["amplitudes"].as_object().unwrap();
    assert_eq!(
        dump.keys().collect::<Vec<_>>(),
        ["0", &((1u64 << 30) - 1).to_string()]
    );
    for amp in dump.values() {
        let amp = amp.as_array().unwrap();
        let norm = amp[0].as_f64().unwrap().hypot(amp[1].as_f64().unwrap());
        assert!((norm - 0.5f64.sqrt()).abs() < 1e-10);
    }
    let dense = run(
        &read("ghz30.json"),
        &RunRequest {
            dump: true,
            ..request(Mode::Dense)
        },
    )
    .unwrap_err();
    assert_eq!(dense.kind.exit_code(), 3);
}

#[test]
fn calibrate_recovers_the_device_and_writes_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal.json");
    let code = qstack(&[
        "calibrate",
        data("device_linear.json").to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let table = CalibrationTable::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let q = &table.qubits[0];
    // The device is linear with 668584 Hz at A = 0.005.
    for (a, f) in &q.amp_map {
        let want = 668_584.0 * a / 0.005;
        assert!((f - want).abs() <= 0.005 * want, "{a}: {f} vs {want}");
    }
    assert!((q.freq_hz - 5.0e9).abs() < 1.0e5);
    let sweeps: Vec<String> = std::fs::read_dir(dir.path().join("cal_sweeps"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(sweeps.iter().any(|s| s == "q0_fine_tune.csv"));
    assert_eq!(
        sweeps.iter().filter(|s| s.starts_with("q0_rabi_")).count(),
        q.amp_map.len()
    );
    let rabi = std::fs::read_to_string(dir.path().join("cal_sweeps/q0_rabi_a0.0050.csv")).unwrap();
    assert!(rabi.starts_with("t_s,p1\n"));
}

#[test]
fn calibration_failure_exits_four() {
    let mut dead = json(&read("device_linear.json"));
    dead["qubits"][0]["rabi_gain_hz"] = 0.0.into();
    let err = calibrate(&dead.to_string(), 0).unwrap_err();
    assert_eq!(err.kind.exit_code(), 4);
    assert_eq!(
        calibrate("{\"qubits\": []}", 0)
            .unwrap_err()
            .kind
            .exit_code(),
        2
    );
}

#[test]
fn calibration_is_deterministic() {
    let a = calibrate(&read("device_linear.json"), 5).unwrap();
    let b = calibrate(&read("device_linear.json"), 5).unwrap();
    assert_eq!(a.output.primary, b.output.primary);
    assert_eq!(
        CalibrationTable::from_json(&a.output.primary).unwrap(),
        a.table
    );
}

fn native_3q() -> String {
    let (native, _) = compile(&read("corpus/grover3.json"), &triangle_target(), 3).unwrap();
    native.to_json()
}

fn triangle_target() -> String {
    serde_json::json!({
        "coupling": {
            "nodes": [{"id": 0}, {"id": 1}, {"id": 2}],
            "edges": [{"a": 0, "b": 1}, {"a": 1, "b": 2}, {"a": 0, "b": 2}]
        },
        "calibration": json(&read("calibration_3q.json")),
    })
    .to_string()
}

#[test]
fn schedule_verify_replays_the_circuit() {
    let out = schedule(&native_3q(), &read("calibration_3q.json"), 0.5e-9, true).unwrap();
    assert_eq!(out.exit_code, 0);
    let report = json(out.report.as_deref().unwrap());
    let d = report["verify"]["max_unitary_distance"].as_f64().unwrap();
    assert!(d <= 1e-6, "{d}");
    assert_eq!(report["verify"]["ok"], Value::Bool(true));
    let again = schedule(&native_3q(), &read("calibration_3q.json"), 0.5e-9, true).unwrap();
    assert_eq!(again.primary, out.primary);
}

#[test]
fn rz_only_schedule_has_no_waveforms() {
    let mut c = Circuit::new(3);
    c.apply(qstack_core::ir::Gate::RZ(0.4), &[1]).unwrap();
    let out = schedule(&c.to_json(), &read("calibration_3q.json"), 0.5e-9, false).unwrap();
    let v = json(&out.primary);
    for ch in v["channels"].as_array().unwrap() {
        assert!(ch["pulses"].as_array().unwrap().is_empty());
    }
    assert!(out.report.is_none());
}

#[test]
fn schedule_rejects_non_native_input() {
    let err = schedule(
        &read("bell.json"),
        &read("calibration_3q.json"),
        0.5e-9,
        false,
    )
    .unwrap_err();
    assert_eq!(err.kind.exit_code(), 2);
    assert_eq!(
        schedule(&native_3q(), &read("calibration_3q.json"), 0.0, false)
            .unwrap_err()
            .kind
            .exit_code(),
        2
    );
}

#[test]
fn draw_matches_the_golden_diagram() {
    assert_eq!(
        draw(&read("grover10.json")).unwrap().primary,
        read("grover10_draw.txt")
    );
    let bell = draw(&read("bell.json")).unwrap().primary;
    assert_eq!(bell.lines().count(), 2);
}

#[test]
fn compile_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (circuit, target) = (data("grover10.json"), data("target_lattice20.json"));
    let outs: Vec<String> = (0..2)
        .map(|k| {
            let out = dir.path().join(format!("n{k}.json"));
            let args = [
                "compile",
                circuit.to_str().unwrap(),
                target.to_str().unwrap(),
                "-o",
                out.to_str().unwrap(),
            ];
            assert_eq!(qstack(&args), 0);
            std::fs::read_to_string(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    let c = Circuit::from_json(&outs[0]).unwrap();
    assert_eq!(c.to_json(), outs[0]);
}

#[test]
fn calibrated_target_is_accepted() {
    let (native, report) = compile(&read("corpus/toffoli.json"), &triangle_target(), 3).unwrap();
    assert_eq!(report.physical_qubits, 3);
    assert!(native.two_qubit_count() > 0);
}
