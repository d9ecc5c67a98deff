//! Qubit placement and SWAP routing onto a coupling graph.
//!
//! Internally every node is addressed by its position in the node list, so
//! relabeling ids only relabels the output. Ties always go to the earlier
//! node or edge in list order.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{Circuit, Instruction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapperError {
    #[error("invalid coupling graph: {0}")]
    InvalidGraph(String),
    #[error("circuit needs {needed} qubits but the device has {available}")]
    TooLarge { needed: usize, available: usize },
    #[error("instruction {index} acts on more than two qubits; decompose first")]
    NotDecomposed { index: usize },
    #[error("mapping is not total and injective over the circuit's qubits: {0}")]
    BadMapping(String),
    #[error("physical qubits {a} and {b} are not connected")]
    Disconnected { a: usize, b: usize },
    #[error("error rate {0} outside [0, 1)")]
    ErrorRate(f64),
    #[error("malformed graph JSON: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

/// Device connectivity. Node ids are `0..N` in any list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Route by `-ln(1 - error)` costs instead of SWAP counts.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub noise_aware: bool,
}

impl CouplingGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, MapperError> {
        let g = Self {
            nodes,
            edges,
            noise_aware: false,
        };
        g.validate()?;
        Ok(g)
    }

    /// Unweighted graph from an edge list over `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, MapperError> {
        Self::new(
            (0..n).map(|id| Node { id, error: None }).collect(),
            edges
                .iter()
                .map(|&(a, b)| Edge { a, b, error: None })
                .collect(),
        )
    }

    pub fn line(n: usize) -> Self {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &e).expect("line is valid")
    }

    /// `rows × cols` square lattice, ids row-major.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut e = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    e.push((q, q + 1));
                }
                if r + 1 < rows {
                    e.push((q, q + cols));
                }
            }
        }
        Self::from_edges(rows * cols, &e).expect("grid is valid")
    }

    /// The 20-qubit square-lattice target used for the Grover workload.
    pub fn lattice20() -> Self {
        Self::grid(4, 5)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges
            .iter()
            .any(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    pub fn validate(&self) -> Result<(), MapperError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(MapperError::InvalidGraph("no nodes".into()));
        }
        let mut seen = vec![false; n];
        for node in &self.nodes {
            if node.id >= n || seen[node.id] {
                return Err(MapperError::InvalidGraph(format!(
                    "node ids must be a permutation of 0..{n}"
                )));
            }
            seen[node.id] = true;
            check_rate(node.error)?;
        }
        let mut pairs = std::collections::HashSet::new();
        for e in &self.edges {
            if e.a >= n || e.b >= n {
                return Err(MapperError::InvalidGraph(format!(
                    "edge ({}, {}) names an unknown node",
                    e.a, e.b
                )));
            }
            if e.a == e.b {
                return Err(MapperError::InvalidGraph(format!("self-loop on {}", e.a)));
            }
            if !pairs.insert((e.a.min(e.b), e.a.max(e.b))) {
                return Err(MapperError::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    e.a, e.b
                )));
            }
            check_rate(e.error)?;
        }
        let t = Topology::new(self);
        if t.dist[0].iter().any(|d| d.is_infinite()) {
            return Err(MapperError::InvalidGraph("graph is not connected".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, MapperError> {
        let g: CouplingGraph =
            serde_json::from_str(s).map_err(|e| MapperError::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

fn check_rate(e: Option<f64>) -> Result<(), MapperError> {
    match e {
        Some(x) if !(0.0..1.0).contains(&x) || x.is_nan() => Err(MapperError::ErrorRate(x)),
        _ => Ok(()),
    }
}

/// Error rates to fold into a graph; missing entries use the defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NoiseModel {
    pub node_error: BTreeMap<usize, f64>,
    pub edge_error: BTreeMap<(usize, usize), f64>,
    pub default_node: f64,
    pub default_edge: f64,
}

impl NoiseModel {
    fn edge(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        *self.edge_error.get(&key).unwrap_or(&self.default_edge)
    }
}

/// Copies error rates onto the graph and switches routing to
/// `-ln(1 - error)` costs.
pub fn apply_noise_weights(
    graph: &CouplingGraph,
    noise: &NoiseModel,
) -> Result<CouplingGraph, MapperError> {
    let mut g = graph.clone();
    for n in &mut g.nodes {
        let e = *noise.node_error.get(&n.id).unwrap_or(&noise.default_node);
        check_rate(Some(e))?;
        n.error = Some(e);
    }
    for e in &mut g.edges {
        let r = noise.edge(e.a, e.b);
        check_rate(Some(r))?;
        e.error = Some(r);
    }
    g.noise_aware = true;
    Ok(g)
}

/// `-ln(1 - e_ab) - ½ln(1 - e_a) - ½ln(1 - e_b)`: the log-infidelity of one
/// use of the edge. Zero for perfect hardware.
pub fn edge_weight(graph: &CouplingGraph, edge: &Edge) -> f64 {
    let node_err = |id: usize| {
        graph
            .nodes
            .iter()
            .find(|n| n.id == id)
            .and_then(|n| n.error)
            .unwrap_or(0.0)
    };
    -(1.0 - edge.error.unwrap_or(0.0)).ln()
        - 0.5 * (1.0 - node_err(edge.a)).ln()
        - 0.5 * (1.0 - node_err(edge.b)).ln()
}

// Keeps zero-weight graphs routable and favors fewer hops among equals.
const HOP_EPS: f64 = 1e-9;

struct Topology {
    ids: Vec<usize>,
    pos: HashMap<usize, usize>,
    /// `(a, b, weight)` by edge index, in positions.
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, usize)>>,
    dist: Vec<Vec<f64>>,
    linked: Vec<Vec<bool>>,
    next: Vec<Vec<usize>>,
    rank: Vec<usize>,
}

impl Topology {
    fn new(g: &CouplingGraph) -> Self {
        let n = g.nodes.len();
        let ids: Vec<usize> = g.nodes.iter().map(|x| x.id).collect();
        let pos: HashMap<usize, usize> = ids.iter().enumerate().map(|(p, id)| (*id, p)).collect();
        let mut adj = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(g.edges.len());
        for (k, e) in g.edges.iter().enumerate() {
            let (a, b) = (pos[&e.a], pos[&e.b]);
            let w = if g.noise_aware {
                edge_weight(g, e) + HOP_EPS
            } else {
                1.0
            };
            edges.push((a, b, w));
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        let mut dist = vec![vec![f64::INFINITY; n]; n];
        let mut linked = vec![vec![false; n]; n];
        let mut next = vec![vec![usize::MAX; n]; n];
        for p in 0..n {
            dist[p][p] = 0.0;
            next[p][p] = p;
        }
        for &(a, b, w) in &edges {
            for (x, y) in [(a, b), (b, a)] {
                dist[x][y] = w;
                linked[x][y] = true;
                next[x][y] = y;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if dist[i][k].is_infinite() {
                    continue;
                }
                for j in 0..n {
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] - 1e-15 {
                        dist[i][j] = via;
                        next[i][j] = next[i][k];
                    }
                }
            }
        }
        let node_err: Vec<f64> = g.nodes.iter().map(|x| x.error.unwrap_or(0.0)).collect();
        let mut rank: Vec<usize> = (0..n).collect();
        rank.sort_by(|&x, &y| {
            adj[y]
                .len()
                .cmp(&adj[x].len())
                .then(node_err[x].total_cmp(&node_err[y]))
                .then(x.cmp(&y))
        });
        Self {
            ids,
            pos,
            edges,
            adj,
            dist,
            linked,
            next,
            rank,
        }
    }
}

/// Logical → physical assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    pub l2p: Vec<usize>,
}

impl Mapping {
    pub fn identity(n: usize) -> Self {
        Self {
            l2p: (0..n).collect(),
        }
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.l2p[logical]
    }

    fn validate(&self, circuit: &Circuit, graph: &CouplingGraph) -> Result<(), MapperError> {
        if self.l2p.len() < circuit.num_qubits {
            return Err(MapperError::BadMapping(format!(
                "{} entries for {} logical qubits",
                self.l2p.len(),
                circuit.num_qubits
            )));
        }
        let mut used = vec![false; graph.num_nodes()];
        for &p in &self.l2p {
            if p >= used.len() || used[p] {
                return Err(MapperError::BadMapping(format!(
                    "physical {p} unknown or reused"
                )));
            }
            used[p] = true;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    pub circuit: Circuit,
    pub initial_mapping: Mapping,
    pub final_mapping: Mapping,
    pub swap_count: usize,
    /// SWAP count, or summed SWAP log-infidelity on a noise-aware graph.
    pub cost: f64,
}

impl RoutedCircuit {
    /// Panics unless every two-qubit instruction sits on an edge.
    pub fn assert_connectivity(&self, graph: &CouplingGraph) {
        for (k, i) in self.circuit.instructions.iter().enumerate() {
            if i.arity() == 2 {
                let q = i.qubits();
                assert!(
                    graph.has_edge(q[0], q[1]),
                    "instruction {k} on ({}, {}) is off-graph",
                    q[0],
                    q[1]
                );
            }
        }
    }

    /// SWAPs that move every logical qubit from its final back to its
    /// initial physical position.
    pub fn restoring_swaps(&self) -> Vec<Instruction> {
        let n = self.circuit.num_qubits;
        let mut at: Vec<Option<usize>> = vec![None; n];
        for (l, &p) in self.final_mapping.l2p.iter().enumerate() {
            at[p] = Some(l);
        }
        let mut out = Vec::new();
        for (l, &want) in self.initial_mapping.l2p.iter().enumerate() {
            let here = at
                .iter()
                .position(|x| *x == Some(l))
                .expect("logical qubit is placed");
            if here != want {
                out.push(Instruction::Swap { a: here, b: want });
                at.swap(here, want);
            }
        }
        out
    }
}

fn two_qubit_pairs(circuit: &Circuit) -> Result<Vec<Option<(usize, usize)>>, MapperError> {
    circuit
        .instructions
        .iter()
        .enumerate()
        .map(|(k, i)| match i.qubits().as_slice() {
            [_] => Ok(None),
            [a, b] => Ok(Some((*a, *b))),
            _ => Err(MapperError::NotDecomposed { index: k }),
        })
        .collect()
}

/// Greedy placement: the busiest logical qubit goes to the best-ranked node
/// (highest degree, then lowest error), and each next qubit, picked by its
/// interaction with those already placed, goes to the free node closest to
/// its partners.
pub fn initial_map(circuit: &Circuit, graph: &CouplingGraph) -> Result<Mapping, MapperError> {
    let n = circuit.num_qubits;
    if n > graph.num_nodes() {
        return Err(MapperError::TooLarge {
            needed: n,
            available: graph.num_nodes(),
        });
    }
    let topo = Topology::new(graph);
    let pairs = two_qubit_pairs(circuit)?;
    let mut w = vec![vec![0.0f64; n]; n];
    for &(a, b) in pairs.iter().flatten() {
        w[a][b] += 1.0;
        w[b][a] += 1.0;
    }
    let total: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let mut place: Vec<Option<usize>> = vec![None; n];
    let mut taken = vec![false; graph.num_nodes()];
    for _ in 0..n {
        let pick = (0..n)
            .filter(|l| place[*l].is_none())
            .max_by(|&x, &y| {
                let link = |l: usize| {
                    (0..n)
                        .filter(|m| place[*m].is_some())
                        .map(|m| w[l][m])
                        .sum::<f64>()
                };
                link(x)
                    .total_cmp(&link(y))
                    .then(total[x].total_cmp(&total[y]))
                    .then(y.cmp(&x))
            })
            .expect("an unplaced logical qubit remains");
        let placed: Vec<(usize, f64)> = (0..n)
            .filter_map(|m| place[m].map(|p| (p, w[pick][m])))
            .collect();
        let linked = placed.iter().any(|(_, x)| *x > 0.0);
        let score = |p: usize| -> f64 {
            if linked {
                placed.iter().map(|&(q, x)| x * topo.dist[p][q]).sum()
            } else {
                placed.iter().map(|&(q, _)| topo.dist[p][q]).sum()
            }
        };
        let best = topo
            .rank
            .iter()
            .copied()
            .filter(|p| !taken[*p])
            .fold(None::<(usize, f64)>, |acc, p| {
                let s = score(p);
                match acc {
                    Some((_, bs)) if bs <= s + 1e-12 * bs.abs().max(1.0) => acc,
                    _ => Some((p, s)),
                }
            })
            .expect("device has a free node")
            .0;
        taken[best] = true;
        place[pick] = Some(best);
    }
    let mut pos: Vec<usize> = place.into_iter().map(|p| p.expect("all placed")).collect();
    polish(&mut pos, &pairs, &topo);
    Ok(Mapping {
        l2p: pos.into_iter().map(|p| topo.ids[p]).collect(),
    })
}

// Earlier gates weigh more: they are routed with the placement as is.
const EARLY_BIAS: f64 = 0.9;

/// Hill-climbs the placement by exchanging two logical qubits, or moving
/// one to a free node, while the weighted distance of the gate sequence
/// drops.
fn polish(pos: &mut [usize], pairs: &[Option<(usize, usize)>], topo: &Topology) {
    let gates: Vec<(usize, usize, f64)> = pairs
        .iter()
        .flatten()
        .scan(1.0, |w, &(a, b)| {
            let out = (a, b, *w);
            *w *= EARLY_BIAS;
            Some(out)
        })
        .collect();
    if gates.is_empty() {
        return;
    }
    let cost = |pos: &[usize]| -> f64 {
        gates
            .iter()
            .map(|&(a, b, w)| w * topo.dist[pos[a]][pos[b]])
            .sum()
    };
    let n = pos.len();
    let nodes = topo.ids.len();
    let mut current = cost(pos);
    loop {
        let mut improved = false;
        for x in 0..n {
            for target in 0..nodes {
                if target == pos[x] {
                    continue;
                }
                let other = (0..n).find(|y| pos[*y] == target);
                let old = pos[x];
                pos[x] = target;
                if let Some(y) = other {
                    pos[y] = old;
                }
                let c = cost(pos);
                if c < current - 1e-12 * current.max(1.0) {
                    current = c;
                    improved = true;
                } else {
                    if let Some(y) = other {
                        pos[y] = target;
                    }
                    pos[x] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Router knobs. The look-ahead term weighs the `depth` next two-qubit
/// gates, the k-th one by `weight * decay^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteParams {
    pub depth: usize,
    pub decay: f64,
    pub weight: f64,
}

impl Default for RouteParams {
    fn default() -> Self {
        Self {
            depth: DEFAULT_LOOKAHEAD,
            decay: 0.7,
            weight: 1.0,
        }
    }
}

/// Look-ahead SWAP insertion. SWAP candidates are the edges touching a
/// blocked front gate, scored by their own cost plus the distance of the
/// front gates and the decayed distance of the next `lookahead_depth`
/// two-qubit gates.
pub fn route(
    circuit: &Circuit,
    graph: &CouplingGraph,
    mapping: &Mapping,
    lookahead_depth: usize,
) -> Result<RoutedCircuit, MapperError> {
    route_with(
        circuit,
        graph,
        mapping,
        &RouteParams {
            depth: lookahead_depth,
            ..RouteParams::default()
        },
    )
}

pub fn route_with(
    circuit: &Circuit,
    graph: &CouplingGraph,
    mapping: &Mapping,
    params: &RouteParams,
) -> Result<RoutedCircuit, MapperError> {
    mapping.validate(circuit, graph)?;
    let topo = Topology::new(graph);
    let pairs = two_qubit_pairs(circuit)?;
    let nq = graph.num_nodes();
    let mut l2p: Vec<usize> = mapping.l2p.iter().map(|id| topo.pos[id]).collect();
    let mut p2l: Vec<Option<usize>> = vec![None; nq];
    for (l, &p) in l2p.iter().enumerate() {
        p2l[p] = Some(l);
    }
    for &(a, b) in pairs.iter().flatten() {
        if topo.dist[l2p[a]][l2p[b]].is_infinite() {
            return Err(MapperError::Disconnected {
                a: topo.ids[l2p[a]],
                b: topo.ids[l2p[b]],
            });
        }
    }

    // Dependency counts: each instruction waits on the previous one per qubit.
    let m = circuit.instructions.len();
    let mut waiting = vec![0usize; m];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut last: Vec<Option<usize>> = vec![None; circuit.num_qubits];
    for (k, instr) in circuit.instructions.iter().enumerate() {
        for q in instr.qubits() {
            if let Some(p) = last[q] {
                succ[p].push(k);
                waiting[k] += 1;
            }
            last[q] = Some(k);
        }
    }
    let mut front: Vec<usize> = (0..m).filter(|k| waiting[*k] == 0).collect();
    let mut done = vec![false; m];

    let mut out = Circuit::new(nq);
    out.global_phase = circuit.global_phase;
    let mut swap_count = 0;
    let mut cost = 0.0;
    let mut stall = 0usize;
    let mut last_swap: Option<usize> = None;

    loop {
        // Run executable gates, always the earliest one first, so a circuit
        // that needs no SWAP comes out in its original order.
        while let Some(slot) = front.iter().position(|&k| match pairs[k] {
            None => true,
            Some((a, b)) => topo.linked[l2p[a]][l2p[b]],
        }) {
            let k = front.remove(slot);
            done[k] = true;
            stall = 0;
            last_swap = None;
            out.instructions
                .push(circuit.instructions[k].relabel(|l| topo.ids[l2p[l]]));
            for &s in &succ[k] {
                waiting[s] -= 1;
                if waiting[s] == 0 {
                    let at = front.partition_point(|x| *x < s);
                    front.insert(at, s);
                }
            }
        }
        if front.is_empty() {
            break;
        }

        let blocked: Vec<(usize, usize)> = front.iter().filter_map(|k| pairs[*k]).collect();
        let chosen = if stall > 3 * nq {
            // Fallback: walk the first blocked gate's first qubit along a
            // shortest path.
            let (a, b) = blocked[0];
            let (pa, pb) = (l2p[a], l2p[b]);
            let step = topo.next[pa][pb];
            topo.adj[pa]
                .iter()
                .find(|(nb, _)| *nb == step)
                .map(|(_, e)| *e)
                .expect("path step is an edge")
        } else {
            let ahead = lookahead(&pairs, &done, &front, params.depth);
            let mut cand = vec![false; topo.edges.len()];
            for &(a, b) in &blocked {
                for p in [l2p[a], l2p[b]] {
                    for &(_, e) in &topo.adj[p] {
                        cand[e] = true;
                    }
                }
            }
            let mut best: Option<(usize, f64)> = None;
            for e in (0..topo.edges.len()).filter(|e| cand[*e]) {
                if Some(e) == last_swap && cand.iter().filter(|c| **c).count() > 1 {
                    continue;
                }
                let (u, v, w) = topo.edges[e];
                let moved = |p: usize| {
                    if p == u {
                        v
                    } else if p == v {
                        u
                    } else {
                        p
                    }
                };
                let d = |a: usize, b: usize| topo.dist[moved(l2p[a])][moved(l2p[b])];
                let mut s = w + blocked.iter().map(|&(a, b)| d(a, b)).sum::<f64>();
                let mut f = params.weight * params.decay;
                for &(a, b) in &ahead {
                    s += f * d(a, b);
                    f *= params.decay;
                }
                match best {
                    Some((_, bs)) if bs <= s + 1e-12 * bs.abs().max(1.0) => {}
                    _ => best = Some((e, s)),
                }
            }
            best.expect("a blocked gate has candidate edges").0
        };

        let (u, v, w) = topo.edges[chosen];
        p2l.swap(u, v);
        for p in [u, v] {
            if let Some(l) = p2l[p] {
                l2p[l] = p;
            }
        }
        out.instructions.push(Instruction::Swap {
            a: topo.ids[u],
            b: topo.ids[v],
        });
        swap_count += 1;
        cost += if graph.noise_aware { w } else { 1.0 };
        stall += 1;
        last_swap = Some(chosen);
    }

    Ok(RoutedCircuit {
        circuit: out,
        initial_mapping: mapping.clone(),
        final_mapping: Mapping {
            l2p: l2p.iter().map(|p| topo.ids[*p]).collect(),
        },
        swap_count,
        cost,
    })
}

fn lookahead(
    pairs: &[Option<(usize, usize)>],
    done: &[bool],
    front: &[usize],
    depth: usize,
) -> Vec<(usize, usize)> {
    let first = front.iter().copied().min().unwrap_or(0);
    (first..pairs.len())
        .filter(|k| !done[*k] && front.binary_search(k).is_err())
        .filter_map(|k| pairs[k])
        .take(depth)
        .collect()
}

fn reversed(c: &Circuit) -> Circuit {
    Circuit {
        num_qubits: c.num_qubits,
        instructions: c.instructions.iter().rev().cloned().collect(),
        global_phase: 0.0,
    }
}

pub const DEFAULT_LOOKAHEAD: usize = 20;

/// Alternates forward routes and routes of the reversed circuit, each
/// starting where the previous ended, and keeps the initial mapping whose
/// forward route was cheapest.
pub fn refine_forward_backward(
    circuit: &Circuit,
    graph: &CouplingGraph,
    passes: usize,
) -> Result<Mapping, MapperError> {
    let passes = passes.max(1);
    let back = reversed(circuit);
    let start = initial_map(circuit, graph)?;
    let first = route(circuit, graph, &start, DEFAULT_LOOKAHEAD)?;
    let mut best = (first.cost, start);
    let mut current = first.final_mapping;
    let mut pending = false;
    for pass in 2..=passes {
        if pass % 2 == 0 {
            current = route(&back, graph, &current, DEFAULT_LOOKAHEAD)?.final_mapping;
            pending = true;
        } else {
            let r = route(circuit, graph, &current, DEFAULT_LOOKAHEAD)?;
            if r.cost < best.0 {
                best = (r.cost, current.clone());
            }
            current = r.final_mapping;
            pending = false;
        }
    }
    if pending {
        let r = route(circuit, graph, &current, DEFAULT_LOOKAHEAD)?;
        if r.cost < best.0 {
            best = (r.cost, current);
        }
    }
    if passes > 1 {
        best = descend(circuit, graph, best)?;
    }
    Ok(best.1)
}

// Route evaluations allowed for the final descent, and the instruction
// volume they may cover together.
const DESCENT_BUDGET: usize = 2000;
const DESCENT_VOLUME: usize = 2_000_000;

/// Exchanges pairs of physical positions in the placement while the
/// forward routing cost strictly drops.
fn descend(
    circuit: &Circuit,
    graph: &CouplingGraph,
    mut best: (f64, Mapping),
) -> Result<(f64, Mapping), MapperError> {
    let nodes: Vec<usize> = graph.nodes.iter().map(|n| n.id).collect();
    let mut budget = DESCENT_BUDGET.min(DESCENT_VOLUME / circuit.instructions.len().max(1));
    'outer: loop {
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if budget == 0 {
                    break 'outer;
                }
                let (a, b) = (nodes[i], nodes[j]);
                let li = best.1.l2p.iter().position(|p| *p == a);
                let lj = best.1.l2p.iter().position(|p| *p == b);
                if li.is_none() && lj.is_none() {
                    continue;
                }
                let mut cand = best.1.clone();
                if let Some(l) = li {
                    cand.l2p[l] = b;
                }
                if let Some(l) = lj {
                    cand.l2p[l] = a;
                }
                budget -= 1;
                let r = route(circuit, graph, &cand, DEFAULT_LOOKAHEAD)?;
                if r.cost < best.0 - 1e-12 * best.0.max(1.0) {
                    best = (r.cost, cand);
                    continue 'outer;
                }
            }
        }
        break;
    }
    Ok(best)
}

/// Refined placement followed by the final route.
pub fn map_and_route(
    circuit: &Circuit,
    graph: &CouplingGraph,
    passes: usize,
) -> Result<RoutedCircuit, MapperError> {
    let m = refine_forward_backward(circuit, graph, passes)?;
    route(circuit, graph, &m, DEFAULT_LOOKAHEAD)
}
