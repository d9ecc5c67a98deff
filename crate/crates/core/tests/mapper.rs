use qstack_core::decompose::{decompose_circuit, DecomposeBudget, Objective};
use qstack_core::ir::{grover_diffusion, Circuit, Gate, Instruction};
use qstack_core::mapper::{
    apply_noise_weights, edge_weight, initial_map, map_and_route, refine_forward_backward, route,
    CouplingGraph, Edge, MapperError, Mapping, Node, NoiseModel, RoutedCircuit,
};
use qstack_core::sim::unitary_of;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_circuit(n: usize, gates: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    for _ in 0..gates {
        if rng.gen_bool(0.4) {
            let g = [
                Gate::H,
                Gate::RX(rng.gen_range(-3.0..3.0)),
                Gate::P(rng.gen_range(-3.0..3.0)),
            ][rng.gen_range(0..3)];
            c.push(Instruction::gate(g, rng.gen_range(0..n))).unwrap();
        } else {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let i = if rng.gen_bool(0.5) {
                Instruction::cnot(a, b)
            } else {
                Instruction::cz(a, b)
            };
            c.push(i).unwrap();
        }
    }
    c
}

/// Input circuit placed on the device by the initial mapping.
fn placed(c: &Circuit, m: &Mapping, width: usize) -> Circuit {
    let mut out = Circuit::new(width);
    for i in &c.instructions {
        out.push(i.relabel(|l| m.physical(l))).unwrap();
    }
    out
}

fn semantic_error(c: &Circuit, r: &RoutedCircuit) -> f64 {
    let width = r.circuit.num_qubits;
    let mut undone = r.circuit.clone();
    undone.instructions.extend(r.restoring_swaps());
    let a = unitary_of::<f64>(&undone).unwrap();
    let b = unitary_of::<f64>(&placed(c, &r.initial_mapping, width)).unwrap();
    let mut err: f64 = 0.0;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        err = err.max((*x - *y).norm());
    }
    err
}

#[test]
fn path_graph_needs_one_swap() {
    let g = CouplingGraph::line(3);
    let mut c = Circuit::new(3);
    c.push(Instruction::cz(0, 2)).unwrap();
    let r = route(&c, &g, &Mapping::identity(3), 20).unwrap();
    assert_eq!(r.swap_count, 1);
    r.assert_connectivity(&g);
    assert!(semantic_error(&c, &r) < 1e-9);
}

#[test]
fn on_edge_circuit_is_unchanged() {
    let g = CouplingGraph::line(4);
    let mut c = Circuit::new(4);
    c.push(Instruction::gate(Gate::H, 0)).unwrap();
    c.push(Instruction::cnot(0, 1)).unwrap();
    c.push(Instruction::cz(2, 3)).unwrap();
    let r = route(&c, &g, &Mapping::identity(4), 20).unwrap();
    assert_eq!(r.swap_count, 0);
    assert_eq!(r.circuit.instructions, c.instructions);
}

#[test]
fn routing_preserves_semantics() {
    let graphs = [
        CouplingGraph::line(5),
        CouplingGraph::grid(2, 4),
        CouplingGraph::grid(2, 3),
    ];
    for (k, g) in graphs.iter().enumerate() {
        for seed in 0..6 {
            let n = g.num_nodes().min(6);
            let c = random_circuit(n, 30, seed + 10 * k as u64);
            let r = map_and_route(&c, g, 3).unwrap();
            r.assert_connectivity(g);
            let e = semantic_error(&c, &r);
            assert!(e < 1e-9, "graph {k} seed {seed}: {e}");
        }
    }
}

#[test]
fn deterministic_across_runs() {
    let g = CouplingGraph::grid(3, 3);
    let c = random_circuit(7, 60, 3);
    let a = map_and_route(&c, &g, 4).unwrap();
    let b = map_and_route(&c, &g, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.circuit.to_json(), b.circuit.to_json());
}

fn relabeled_graph(g: &CouplingGraph, pi: &[usize]) -> CouplingGraph {
    CouplingGraph::new(
        g.nodes
            .iter()
            .map(|n| Node {
                id: pi[n.id],
                error: n.error,
            })
            .collect(),
        g.edges
            .iter()
            .map(|e| Edge {
                a: pi[e.a],
                b: pi[e.b],
                error: e.error,
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn permutation_equivariance() {
    let g = CouplingGraph::grid(2, 4);
    let pi = [5, 2, 7, 0, 1, 6, 4, 3];
    let h = relabeled_graph(&g, &pi);
    for seed in 0..4 {
        let c = random_circuit(6, 40, seed);
        let m = initial_map(&c, &g).unwrap();
        let mh = initial_map(&c, &h).unwrap();
        assert_eq!(mh.l2p, m.l2p.iter().map(|p| pi[*p]).collect::<Vec<_>>());
        let r = map_and_route(&c, &g, 3).unwrap();
        let rh = map_and_route(&c, &h, 3).unwrap();
        let mapped: Vec<Instruction> = r
            .circuit
            .instructions
            .iter()
            .map(|i| i.relabel(|q| pi[q]))
            .collect();
        assert_eq!(rh.circuit.instructions, mapped);
        assert_eq!(rh.swap_count, r.swap_count);
    }
}

#[test]
fn subgraph_interaction_needs_no_swaps() {
    let g = CouplingGraph::grid(2, 3);
    let mut c = Circuit::new(4);
    for (a, b) in [(0, 1), (1, 2), (2, 3), (0, 1)] {
        c.push(Instruction::cz(a, b)).unwrap();
    }
    let m = initial_map(&c, &g).unwrap();
    assert_eq!(route(&c, &g, &m, 20).unwrap().swap_count, 0);
}

#[test]
fn single_qubit_goes_to_top_ranked_node() {
    let mut c = Circuit::new(1);
    c.push(Instruction::gate(Gate::H, 0)).unwrap();
    // Centre of a 3x3 grid has the highest degree.
    assert_eq!(
        initial_map(&c, &CouplingGraph::grid(3, 3)).unwrap().l2p,
        vec![4]
    );
    // On a line the degree ties; the earliest interior node wins.
    assert_eq!(
        initial_map(&c, &CouplingGraph::line(4)).unwrap().l2p,
        vec![1]
    );
}

#[test]
fn too_large_and_undecomposed() {
    let c = Circuit::new(5);
    assert_eq!(
        initial_map(&c, &CouplingGraph::line(4)),
        Err(MapperError::TooLarge {
            needed: 5,
            available: 4
        })
    );
    let mut c = Circuit::new(3);
    c.push(Instruction::controlled(Gate::X, vec![0, 1], 2))
        .unwrap();
    assert!(matches!(
        route(&c, &CouplingGraph::line(3), &Mapping::identity(3), 20),
        Err(MapperError::NotDecomposed { .. })
    ));
}

#[test]
fn refine_single_pass_is_initial_map() {
    let g = CouplingGraph::grid(2, 3);
    let c = random_circuit(6, 40, 9);
    assert_eq!(
        refine_forward_backward(&c, &g, 1).unwrap(),
        initial_map(&c, &g).unwrap()
    );
}

#[test]
fn refine_never_worse_than_first_pass() {
    let g = CouplingGraph::grid(2, 4);
    for seed in 0..10 {
        let c = random_circuit(8, 50, 100 + seed);
        let first = route(&c, &g, &initial_map(&c, &g).unwrap(), 20)
            .unwrap()
            .cost;
        for passes in [2, 3, 4, 6] {
            let m = refine_forward_backward(&c, &g, passes).unwrap();
            assert!(route(&c, &g, &m, 20).unwrap().cost <= first);
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn refined_within_two_swaps_of_exhaustive() {
    let g = CouplingGraph::grid(2, 3);
    let all = permutations(6);
    for seed in 0..3 {
        let c = random_circuit(6, 30, 200 + seed);
        let best = all
            .iter()
            .map(|p| {
                route(&c, &g, &Mapping { l2p: p.clone() }, 20)
                    .unwrap()
                    .swap_count
            })
            .min()
            .unwrap();
        let m = refine_forward_backward(&c, &g, 4).unwrap();
        let got = route(&c, &g, &m, 20).unwrap().swap_count;
        assert!(got <= best + 2, "seed {seed}: {got} vs best {best}");
    }
}

fn four_cycle() -> CouplingGraph {
    CouplingGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
}

#[test]
fn noise_aware_routing_avoids_bad_edge() {
    let g = four_cycle();
    let mut noise = NoiseModel {
        default_edge: 0.01,
        ..Default::default()
    };
    noise.edge_error.insert((0, 1), 0.5);
    let w = apply_noise_weights(&g, &noise).unwrap();
    let mut c = Circuit::new(4);
    c.push(Instruction::cz(0, 2)).unwrap();
    let plain = route(&c, &g, &Mapping::identity(4), 20).unwrap();
    let touches_bad = |r: &RoutedCircuit| {
        r.circuit.instructions.iter().any(|i| {
            let mut q = i.qubits();
            q.sort();
            q == vec![0, 1]
        })
    };
    assert!(
        touches_bad(&plain),
        "unweighted tie-break should take the first edge"
    );
    let aware = route(&c, &w, &Mapping::identity(4), 20).unwrap();
    assert!(!touches_bad(&aware));
    assert_eq!(aware.swap_count, 1);
}

#[test]
fn equal_errors_match_unweighted() {
    let g = CouplingGraph::grid(2, 4);
    let w = apply_noise_weights(
        &g,
        &NoiseModel {
            default_edge: 0.02,
            default_node: 0.001,
            ..Default::default()
        },
    )
    .unwrap();
    for seed in 0..5 {
        let c = random_circuit(8, 40, 300 + seed);
        let a = map_and_route(&c, &g, 3).unwrap();
        let b = map_and_route(&c, &w, 3).unwrap();
        assert_eq!(a.circuit, b.circuit);
    }
}

#[test]
fn error_rates_validated() {
    let bad = NoiseModel {
        default_edge: 1.0,
        ..Default::default()
    };
    assert_eq!(
        apply_noise_weights(&four_cycle(), &bad),
        Err(MapperError::ErrorRate(1.0))
    );
    let w = apply_noise_weights(&four_cycle(), &NoiseModel::default()).unwrap();
    assert_eq!(edge_weight(&w, &w.edges[0]), 0.0);
}

#[test]
fn graph_json_and_validation() {
    let s = r#"{"nodes": [{"id": 1, "error": 0.001}, {"id": 0}], "edges": [{"a": 0, "b": 1, "error": 0.01}]}"#;
    let g = CouplingGraph::from_json(s).unwrap();
    assert_eq!(g.nodes[0].id, 1);
    assert_eq!(CouplingGraph::from_json(&g.to_json()).unwrap(), g);
    let split = r#"{"nodes": [{"id": 0}, {"id": 1}, {"id": 2}], "edges": [{"a": 0, "b": 1}]}"#;
    assert!(matches!(
        CouplingGraph::from_json(split),
        Err(MapperError::InvalidGraph(_))
    ));
    let self_loop = r#"{"nodes": [{"id": 0}], "edges": [{"a": 0, "b": 0}]}"#;
    assert!(matches!(
        CouplingGraph::from_json(self_loop),
        Err(MapperError::InvalidGraph(_))
    ));
    let rate = r#"{"nodes": [{"id": 0, "error": 1.5}], "edges": []}"#;
    assert!(matches!(
        CouplingGraph::from_json(rate),
        Err(MapperError::ErrorRate(_))
    ));
}

#[test]
fn grover_ten_on_lattice20() {
    let g = CouplingGraph::lattice20();
    let diff = grover_diffusion(10).unwrap();
    let mut wide = Circuit::new(20);
    wide.append(&diff).unwrap();
    let budget = DecomposeBudget::with_free((10..20).collect());
    let dec = decompose_circuit(&wide, &budget, Objective::MinGates).unwrap();
    assert!(dec.max_controls() <= 1);
    let r = map_and_route(&dec, &g, 3).unwrap();
    r.assert_connectivity(&g);
}
