//! Dense and sparse state-vector simulation.
//!
//! Dense states hold all `2^n` amplitudes; sparse states keep a hash map of
//! the nonzero ones and prune anything below [`PRUNE_THRESHOLD`] after each
//! gate. Both kernels implement the same math and must agree entry-wise.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ir::{Circuit, Instruction};
use crate::linalg::{Mat2, Matrix};
use crate::pauli::Observable;
use crate::scalar::Real;

pub const PRUNE_THRESHOLD: f64 = 1e-14;
pub const DEFAULT_DENSE_CAP: usize = 12;
pub const DEFAULT_SPARSE_CAP: usize = 32;
pub const UNITARY_CAP: usize = 10;

const PARALLEL_MIN_LEN: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{requested} qubits exceed the {mode} simulator cap of {cap}")]
    QubitCap {
        requested: usize,
        cap: usize,
        mode: &'static str,
    },
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} listed twice")]
    DuplicateQubit(usize),
    #[error("no qubits given")]
    EmptyQubitList,
    #[error("shots must be positive")]
    ZeroShots,
    #[error("dumped qubits are entangled with the rest of the register")]
    Entangled,
    #[error("observable acts on qubit {qubit} of a {num_qubits}-qubit state")]
    ObservableRange { qubit: usize, num_qubits: usize },
    #[error("state has zero norm")]
    ZeroNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dense,
    Sparse,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" => Ok(Mode::Dense),
            "sparse" => Ok(Mode::Sparse),
            _ => Err(format!("unknown mode `{s}` (expected dense or sparse)")),
        }
    }
}

/// Seeded generator used for every stochastic simulator operation.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn bit(n: usize, q: usize) -> u64 {
    1u64 << (n - 1 - q)
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState<T: Real> {
    num_qubits: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> DenseState<T> {
    pub fn basis(num_qubits: usize, index: u64) -> Self {
        let mut amps = vec![czero(); 1usize << num_qubits];
        amps[index as usize] = Complex::new(T::one(), T::zero());
        Self { num_qubits, amps }
    }

    /// Wraps raw amplitudes; the caller is responsible for normalization.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex<T>>) -> Self {
        assert_eq!(
            amps.len(),
            1usize << num_qubits,
            "amplitude count must be 2^n"
        );
        Self { num_qubits, amps }
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    fn apply_1q(&mut self, m: &Mat2<T>, target: usize, controls: &[usize]) {
        let n = self.num_qubits;
        let tbit = bit(n, target) as usize;
        let cmask = controls
            .iter()
            .fold(0usize, |acc, c| acc | bit(n, *c) as usize);
        let m = m.m;
        let kernel = |chunk_idx: usize, chunk: &mut [Complex<T>]| {
            let (lo, hi) = chunk.split_at_mut(tbit);
            let base = chunk_idx * 2 * tbit;
            for k in 0..tbit {
                if (base + k) & cmask != cmask {
                    continue;
                }
                let (a, b) = (lo[k], hi[k]);
                lo[k] = m[0] * a + m[1] * b;
                hi[k] = m[2] * a + m[3] * b;
            }
        };
        if self.amps.len() >= PARALLEL_MIN_LEN {
            self.amps
                .par_chunks_mut(2 * tbit)
                .enumerate()
                .for_each(|(i, c)| kernel(i, c));
        } else {
            self.amps
                .chunks_mut(2 * tbit)
                .enumerate()
                .for_each(|(i, c)| kernel(i, c));
        }
    }

    fn apply_2q(&mut self, m: &Matrix<T>, qa: usize, qb: usize) {
        let n = self.num_qubits;
        let (ba, bb) = (bit(n, qa) as usize, bit(n, qb) as usize);
        for i in 0..self.amps.len() {
            if i & (ba | bb) != 0 {
                continue;
            }
            let idx = [i, i | bb, i | ba, i | ba | bb];
            let v: Vec<Complex<T>> = idx.iter().map(|j| self.amps[*j]).collect();
            let w = m.mat_vec(&v);
            for (j, x) in idx.iter().zip(w) {
                self.amps[*j] = x;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseState<T: Real> {
    num_qubits: usize,
    amps: HashMap<u64, Complex<T>>,
}

impl<T: Real> SparseState<T> {
    pub fn basis(num_qubits: usize, index: u64) -> Self {
        let mut amps = HashMap::new();
        amps.insert(index, Complex::new(T::one(), T::zero()));
        Self { num_qubits, amps }
    }

    pub fn stored_len(&self) -> usize {
        self.amps.len()
    }

    fn prune(map: &mut HashMap<u64, Complex<T>>) {
        let th = T::lit(PRUNE_THRESHOLD);
        map.retain(|_, a| a.norm() >= th);
    }

    fn apply_1q(&mut self, m: &Mat2<T>, target: usize, controls: &[usize]) {
        let n = self.num_qubits;
        let tbit = bit(n, target);
        let cmask = controls.iter().fold(0u64, |acc, c| acc | bit(n, *c));
        let mut out: HashMap<u64, Complex<T>> = HashMap::with_capacity(self.amps.len() * 2);
        for (k, a) in &self.amps {
            if k & cmask != cmask {
                *out.entry(*k).or_insert_with(czero) += *a;
                continue;
            }
            let col = usize::from(k & tbit != 0);
            let base = k & !tbit;
            for row in 0..2 {
                let v = m.m[2 * row + col] * *a;
                if v != czero() {
                    let key = if row == 1 { base | tbit } else { base };
                    *out.entry(key).or_insert_with(czero) += v;
                }
            }
        }
        Self::prune(&mut out);
        self.amps = out;
    }

    fn apply_2q(&mut self, m: &Matrix<T>, qa: usize, qb: usize) {
        let n = self.num_qubits;
        let (ba, bb) = (bit(n, qa), bit(n, qb));
        let mut out: HashMap<u64, Complex<T>> = HashMap::with_capacity(self.amps.len() * 2);
        for (k, a) in &self.amps {
            let base = k & !(ba | bb);
            let col = (usize::from(k & ba != 0) << 1) | usize::from(k & bb != 0);
            for row in 0..4 {
                let v = m.get(row, col) * *a;
                if v != czero() {
                    let key = base
                        | if row & 2 != 0 { ba } else { 0 }
                        | if row & 1 != 0 { bb } else { 0 };
                    *out.entry(key).or_insert_with(czero) += v;
                }
            }
        }
        Self::prune(&mut out);
        self.amps = out;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState<T: Real> {
    Dense(DenseState<T>),
    Sparse(SparseState<T>),
}

impl<T: Real> QuantumState<T> {
    pub fn basis(num_qubits: usize, index: u64, mode: Mode) -> Self {
        match mode {
            Mode::Dense => QuantumState::Dense(DenseState::basis(num_qubits, index)),
            Mode::Sparse => QuantumState::Sparse(SparseState::basis(num_qubits, index)),
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            QuantumState::Dense(s) => s.num_qubits,
            QuantumState::Sparse(s) => s.num_qubits,
        }
    }

    pub fn amplitude(&self, index: u64) -> Complex<T> {
        match self {
            QuantumState::Dense(s) => s.amps[index as usize],
            QuantumState::Sparse(s) => s.amps.get(&index).copied().unwrap_or_else(czero),
        }
    }

    /// Nonzero amplitudes in increasing basis order.
    pub fn entries(&self) -> Vec<(u64, Complex<T>)> {
        match self {
            QuantumState::Dense(s) => s
                .amps
                .iter()
                .enumerate()
                .filter(|(_, a)| **a != czero())
                .map(|(i, a)| (i as u64, *a))
                .collect(),
            QuantumState::Sparse(s) => {
                let mut v: Vec<(u64, Complex<T>)> = s.amps.iter().map(|(k, a)| (*k, *a)).collect();
                v.sort_by_key(|(k, _)| *k);
                v
            }
        }
    }

    pub fn norm_sqr(&self) -> T {
        match self {
            QuantumState::Dense(s) => s.amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()),
            QuantumState::Sparse(_) => self
                .entries()
                .iter()
                .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr()),
        }
    }

    fn check_qubit(&self, q: usize) -> Result<(), SimError> {
        if q >= self.num_qubits() {
            return Err(SimError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits(),
            });
        }
        Ok(())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<(), SimError> {
        if qubits.is_empty() {
            return Err(SimError::EmptyQubitList);
        }
        for (i, q) in qubits.iter().enumerate() {
            self.check_qubit(*q)?;
            if qubits[..i].contains(q) {
                return Err(SimError::DuplicateQubit(*q));
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, instr: &Instruction) -> Result<(), SimError> {
        let qs = instr.qubits();
        for (i, q) in qs.iter().enumerate() {
            self.check_qubit(*q)?;
            if qs[..i].contains(q) {
                return Err(SimError::DuplicateQubit(*q));
            }
        }
        match instr {
            Instruction::Gate {
                gate,
                target,
                controls,
                ..
            } => {
                let m = gate.matrix::<T>();
                match self {
                    QuantumState::Dense(s) => s.apply_1q(&m, *target, controls),
                    QuantumState::Sparse(s) => s.apply_1q(&m, *target, controls),
                }
            }
            other => {
                let m = other.two_qubit_matrix::<T>().expect("two-qubit primitive");
                let (a, b) = (qs[0], qs[1]);
                match self {
                    QuantumState::Dense(s) => s.apply_2q(&m, a, b),
                    QuantumState::Sparse(s) => s.apply_2q(&m, a, b),
                }
            }
        }
        Ok(())
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn apply_global_phase(&mut self, phi: f64) {
        if phi == 0.0 {
            return;
        }
        let p = Complex::from_polar(T::one(), T::lit(phi));
        match self {
            QuantumState::Dense(s) => s.amps.iter_mut().for_each(|a| *a *= p),
            QuantumState::Sparse(s) => s.amps.values_mut().for_each(|a| *a *= p),
        }
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        if circuit.num_qubits > self.num_qubits() {
            return Err(SimError::QubitOutOfRange {
                qubit: circuit.num_qubits - 1,
                num_qubits: self.num_qubits(),
            });
        }
        for instr in &circuit.instructions {
            self.apply(instr)?;
        }
        self.apply_global_phase(circuit.global_phase);
        Ok(())
    }

    /// Outcome probabilities over `qubits` (first listed = most significant).
    pub fn marginal(&self, qubits: &[usize]) -> Result<BTreeMap<u64, T>, SimError> {
        self.check_qubits(qubits)?;
        let n = self.num_qubits();
        let mut probs = BTreeMap::new();
        for (k, a) in self.entries() {
            let outcome = extract(k, n, qubits);
            *probs.entry(outcome).or_insert(T::zero()) += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Projective measurement that collapses and renormalizes the state.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<u64, SimError> {
        let probs = self.marginal(qubits)?;
        let outcome = draw(&probs, rng).ok_or(SimError::ZeroNorm)?;
        let p = probs[&outcome];
        let n = self.num_qubits();
        let scale = T::one() / p.sqrt();
        match self {
            QuantumState::Dense(s) => {
                for (k, a) in s.amps.iter_mut().enumerate() {
                    if extract(k as u64, n, qubits) == outcome {
                        *a *= scale;
                    } else {
                        *a = czero();
                    }
                }
            }
            QuantumState::Sparse(s) => {
                s.amps.retain(|k, _| extract(*k, n, qubits) == outcome);
                s.amps.values_mut().for_each(|a| *a *= scale);
            }
        }
        Ok(outcome)
    }

    /// Draws `shots` outcomes without touching the state.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        qubits: &[usize],
        shots: u64,
        rng: &mut R,
    ) -> Result<SampleResult, SimError> {
        if shots == 0 {
            return Err(SimError::ZeroShots);
        }
        let probs = self.marginal(qubits)?;
        let outcomes: Vec<u64> = probs.keys().copied().collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0f64;
        for p in probs.values() {
            acc += p.to_f64_lossy();
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            return Err(SimError::ZeroNorm);
        }
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * acc;
            let i = cumulative
                .partition_point(|c| *c <= u)
                .min(outcomes.len() - 1);
            *counts.entry(outcomes[i]).or_insert(0u64) += 1;
        }
        Ok(SampleResult { shots, counts })
    }

    /// Exact `⟨ψ|H|ψ⟩`.
    pub fn exp_value(&self, obs: &Observable) -> Result<T, SimError> {
        let n = self.num_qubits();
        if let Some(q) = obs.max_qubit() {
            if q >= n {
                return Err(SimError::ObservableRange {
                    qubit: q,
                    num_qubits: n,
                });
            }
        }
        let mut total = T::zero();
        for (c, s) in obs.terms() {
            if s.is_identity() {
                total += T::lit(*c) * self.norm_sqr();
                continue;
            }
            let (flip, sign, ny) = s.masks(n);
            let mut acc = czero::<T>();
            let mut term = |k: u64, a: Complex<T>| {
                let partner = self.amplitude(k ^ flip);
                let v = partner.conj() * a;
                if (k & sign).count_ones() % 2 == 1 {
                    acc -= v;
                } else {
                    acc += v;
                }
            };
            match self {
                QuantumState::Dense(st) => st
                    .amps
                    .iter()
                    .enumerate()
                    .for_each(|(k, a)| term(k as u64, *a)),
                QuantumState::Sparse(_) => self.entries().into_iter().for_each(|(k, a)| term(k, a)),
            }
            // Multiply by i^{#Y} and keep the real part.
            let re = match ny % 4 {
                0 => acc.re,
                1 => -acc.im,
                2 => -acc.re,
                _ => acc.im,
            };
            total += T::lit(*c) * re;
        }
        Ok(total)
    }

    /// Reduced pure state of `qubits`, phase-fixed so the first nonzero
    /// amplitude is real and positive.
    pub fn dump(&self, qubits: &[usize]) -> Result<BTreeMap<u64, Complex<T>>, SimError> {
        self.check_qubits(qubits)?;
        let n = self.num_qubits();
        let rest: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
        let th = T::lit(1e-12);
        let entries: Vec<(u64, u64, Complex<T>)> = self
            .entries()
            .into_iter()
            .filter(|(_, a)| a.norm() > th)
            .map(|(k, a)| (extract(k, n, qubits), extract(k, n, &rest), a))
            .collect();
        let (s0, r0, pivot) = entries
            .iter()
            .copied()
            .max_by(|x, y| {
                x.2.norm()
                    .partial_cmp(&y.2.norm())
                    .expect("finite amplitudes")
            })
            .ok_or(SimError::ZeroNorm)?;
        let mut col: BTreeMap<u64, Complex<T>> = BTreeMap::new();
        let mut row: BTreeMap<u64, Complex<T>> = BTreeMap::new();
        for (s, r, a) in &entries {
            if *r == r0 {
                col.insert(*s, *a);
            }
            if *s == s0 {
                row.insert(*r, *a);
            }
        }
        // Rank-one test: every amplitude must factor as col[s]·row[r]/pivot.
        if entries.len() != col.len() * row.len() {
            return Err(SimError::Entangled);
        }
        let tol = T::lit(1e-9);
        for (s, r, a) in &entries {
            let (Some(cs), Some(rr)) = (col.get(s), row.get(r)) else {
                return Err(SimError::Entangled);
            };
            if (*a - *cs * *rr / pivot).norm() > tol {
                return Err(SimError::Entangled);
            }
        }
        let norm = col
            .values()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt();
        let first = *col.values().next().expect("pivot column is nonempty");
        let fix = first.conj() / (first.norm() * norm);
        Ok(col.into_iter().map(|(s, a)| (s, a * fix)).collect())
    }

    /// Full-register dump in the wire format.
    pub fn dump_json(&self, qubits: &[usize]) -> Result<serde_json::Value, SimError> {
        let d = self.dump(qubits)?;
        let amps: serde_json::Map<String, serde_json::Value> = d
            .iter()
            .map(|(k, a)| {
                (
                    k.to_string(),
                    serde_json::json!([a.re.to_f64_lossy(), a.im.to_f64_lossy()]),
                )
            })
            .collect();
        Ok(serde_json::json!({"num_qubits": qubits.len(), "amplitudes": amps}))
    }
}

/// Packs the bits of `qubits` (first = most significant) out of index `k`.
fn extract(k: u64, n: usize, qubits: &[usize]) -> u64 {
    qubits
        .iter()
        .fold(0u64, |acc, q| (acc << 1) | u64::from(k & bit(n, *q) != 0))
}

fn draw<T: Real, R: Rng + ?Sized>(probs: &BTreeMap<u64, T>, rng: &mut R) -> Option<u64> {
    let total: f64 = probs.values().map(|p| p.to_f64_lossy()).sum();
    if total <= 0.0 {
        return None;
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (k, p) in probs {
        acc += p.to_f64_lossy();
        last = Some(*k);
        if u < acc {
            return Some(*k);
        }
    }
    last
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleResult {
    pub shots: u64,
    pub counts: BTreeMap<u64, u64>,
}

impl SampleResult {
    pub fn to_json(&self) -> serde_json::Value {
        let counts: serde_json::Map<String, serde_json::Value> = self
            .counts
            .iter()
            .map(|(k, c)| (k.to_string(), (*c).into()))
            .collect();
        serde_json::json!({"shots": self.shots, "counts": counts})
    }
}

/// Simulator with configurable qubit caps.
#[derive(Debug, Clone, Copy)]
pub struct Simulator {
    pub mode: Mode,
    pub dense_cap: usize,
    pub sparse_cap: usize,
}

impl Simulator {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            dense_cap: DEFAULT_DENSE_CAP,
            sparse_cap: DEFAULT_SPARSE_CAP,
        }
    }

    pub fn run<T: Real>(&self, circuit: &Circuit) -> Result<QuantumState<T>, SimError> {
        let n = circuit.num_qubits;
        let (cap, name) = match self.mode {
            Mode::Dense => (self.dense_cap, "dense"),
            Mode::Sparse => (self.sparse_cap.min(63), "sparse"),
        };
        if n > cap {
            return Err(SimError::QubitCap {
                requested: n,
                cap,
                mode: name,
            });
        }
        let mut st = QuantumState::basis(n, 0, self.mode);
        st.apply_circuit(circuit)?;
        Ok(st)
    }
}

/// Runs with the default caps.
pub fn run<T: Real>(circuit: &Circuit, mode: Mode) -> Result<QuantumState<T>, SimError> {
    Simulator::new(mode).run(circuit)
}

/// Full unitary, column `k` being the evolution of `|k⟩`.
pub fn unitary_of<T: Real>(circuit: &Circuit) -> Result<Matrix<T>, SimError> {
    let n = circuit.num_qubits;
    if n > UNITARY_CAP {
        return Err(SimError::QubitCap {
            requested: n,
            cap: UNITARY_CAP,
            mode: "unitary",
        });
    }
    let dim = 1usize << n;
    let cols: Result<Vec<Vec<Complex<T>>>, SimError> = (0..dim)
        .into_par_iter()
        .map(|k| {
            let mut st = QuantumState::Dense(DenseState::basis(n, k as u64));
            st.apply_circuit(circuit)?;
            match st {
                QuantumState::Dense(d) => Ok(d.amps),
                QuantumState::Sparse(_) => unreachable!(),
            }
        })
        .collect();
    let mut m = Matrix::zeros(dim);
    for (k, col) in cols?.iter().enumerate() {
        m.set_column(k, col);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Gate;

    fn bell() -> Circuit {
        let mut c = Circuit::new(2);
        c.push(Instruction::gate(Gate::H, 0)).unwrap();
        c.push(Instruction::cnot(0, 1)).unwrap();
        c
    }

    #[test]
    fn bell_amplitudes() {
        for mode in [Mode::Dense, Mode::Sparse] {
            let s = run::<f64>(&bell(), mode).unwrap();
            let r = std::f64::consts::FRAC_1_SQRT_2;
            assert!((s.amplitude(0).re - r).abs() < 1e-15);
            assert!((s.amplitude(3).re - r).abs() < 1e-15);
            assert_eq!(s.entries().len(), 2);
        }
    }

    #[test]
    fn qubit_zero_is_high_bit() {
        let mut c = Circuit::new(3);
        c.push(Instruction::gate(Gate::X, 0)).unwrap();
        let s = run::<f64>(&c, Mode::Dense).unwrap();
        assert_eq!(s.entries()[0].0, 4);
    }

    #[test]
    fn dense_cap_enforced() {
        let c = Circuit::new(13);
        assert!(matches!(
            run::<f64>(&c, Mode::Dense),
            Err(SimError::QubitCap { .. })
        ));
        assert!(run::<f64>(&c, Mode::Sparse).is_ok());
    }

    #[test]
    fn x_unitary() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate(Gate::X, 0)).unwrap();
        let u = unitary_of::<f64>(&c).unwrap();
        assert!(Matrix::from_mat2(&Gate::X.matrix()).max_abs_diff(&u) < 1e-15);
        assert!(
            unitary_of::<f64>(&Circuit::new(2))
                .unwrap()
                .max_abs_diff(&Matrix::identity(4))
                == 0.0
        );
    }

    #[test]
    fn sparse_prunes_cancellations() {
        let mut c = Circuit::new(1);
        c.push(Instruction::gate(Gate::H, 0)).unwrap();
        c.push(Instruction::gate(Gate::H, 0)).unwrap();
        match run::<f64>(&c, Mode::Sparse).unwrap() {
            QuantumState::Sparse(s) => assert_eq!(s.stored_len(), 1),
            _ => unreachable!(),
        }
    }

    #[test]
    fn f32_state_runs() {
        let s = run::<f32>(&bell(), Mode::Dense).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-6);
    }
}
