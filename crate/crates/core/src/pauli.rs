//! Pauli strings and real-weighted Pauli sums.

use std::collections::BTreeMap;

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("observable is not Hermitian: term {term} has imaginary coefficient {imag}")]
    NonHermitian { term: String, imag: f64 },
    #[error("coefficient of term {0} is not finite")]
    NonFinite(String),
    #[error("invalid observable document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// `self · other = phase · result`; `None` result means identity.
    fn mul(self, other: Pauli) -> (Complex64, Option<Pauli>) {
        use Pauli::*;
        let i = Complex64::new(0.0, 1.0);
        match (self, other) {
            (a, b) if a == b => (Complex64::new(1.0, 0.0), None),
            (X, Y) => (i, Some(Z)),
            (Y, X) => (-i, Some(Z)),
            (Y, Z) => (i, Some(X)),
            (Z, Y) => (-i, Some(X)),
            (Z, X) => (i, Some(Y)),
            (X, Z) => (-i, Some(Y)),
            _ => unreachable!(),
        }
    }
}

/// Tensor product of Paulis; qubits not present act as identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(BTreeMap<usize, Pauli>);

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new<I: IntoIterator<Item = (usize, Pauli)>>(ops: I) -> Self {
        Self(ops.into_iter().collect())
    }

    /// Parses compact text such as `"Z0 X1"`; the empty string is identity.
    pub fn parse(s: &str) -> Result<Self, ObservableError> {
        let mut m = BTreeMap::new();
        for tok in s.split_whitespace() {
            let mut chars = tok.chars();
            let p = chars
                .next()
                .and_then(Pauli::from_char)
                .ok_or_else(|| ObservableError::Parse(format!("bad Pauli token `{tok}`")))?;
            let q: usize = chars
                .as_str()
                .parse()
                .map_err(|_| ObservableError::Parse(format!("bad qubit in `{tok}`")))?;
            if m.insert(q, p).is_some() {
                return Err(ObservableError::Parse(format!(
                    "qubit {q} repeated in `{s}`"
                )));
            }
        }
        Ok(Self(m))
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, q: usize) -> Option<Pauli> {
        self.0.get(&q).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.0.iter().map(|(q, p)| (*q, *p))
    }

    pub fn support(&self) -> Vec<usize> {
        self.0.keys().copied().collect()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.0.keys().next_back().copied()
    }

    fn mul(&self, other: &Self) -> (Complex64, PauliString) {
        let mut phase = Complex64::new(1.0, 0.0);
        let mut out = self.0.clone();
        for (q, p) in &other.0 {
            match out.get(q).copied() {
                None => {
                    out.insert(*q, *p);
                }
                Some(a) => {
                    let (ph, r) = a.mul(*p);
                    phase *= ph;
                    match r {
                        Some(r) => {
                            out.insert(*q, r);
                        }
                        None => {
                            out.remove(q);
                        }
                    }
                }
            }
        }
        (phase, PauliString(out))
    }

    /// Bit masks over an `n`-qubit basis index: (flip mask, sign mask, #Y).
    pub fn masks(&self, n: usize) -> (u64, u64, usize) {
        let mut flip = 0u64;
        let mut sign = 0u64;
        let mut ny = 0;
        for (q, p) in &self.0 {
            let bit = 1u64 << (n - 1 - q);
            match p {
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    ny += 1;
                }
                Pauli::Z => sign |= bit,
            }
        }
        (flip, sign, ny)
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(q, p)| format!("{}{}", p.as_char(), q))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// `Σ c_i P_i` with real coefficients; terms kept sorted by string and
/// duplicates merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observable {
    terms: Vec<(f64, PauliString)>,
}

impl Observable {
    pub fn new<I: IntoIterator<Item = (f64, PauliString)>>(
        terms: I,
    ) -> Result<Self, ObservableError> {
        let mut m: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, s) in terms {
            if !c.is_finite() {
                return Err(ObservableError::NonFinite(s.to_string()));
            }
            *m.entry(s).or_insert(0.0) += c;
        }
        Ok(Self {
            terms: m.into_iter().map(|(s, c)| (c, s)).collect(),
        })
    }

    pub fn term(coeff: f64, s: PauliString) -> Self {
        Self {
            terms: vec![(coeff, s)],
        }
    }

    /// Parses `"Z0 X1"` into a unit-coefficient single term.
    pub fn single(s: &str) -> Result<Self, ObservableError> {
        Ok(Self::term(1.0, PauliString::parse(s)?))
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(_, s)| s.max_qubit()).max()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(c, s)| (c * a, s.clone())).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.terms.iter().chain(other.terms.iter()).cloned())
            .expect("finite inputs stay finite")
    }

    /// Operator product; fails when the result is not Hermitian.
    pub fn mul(&self, other: &Self) -> Result<Self, ObservableError> {
        let mut m: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (a, sa) in &self.terms {
            for (b, sb) in &other.terms {
                let (ph, s) = sa.mul(sb);
                *m.entry(s).or_insert(Complex64::new(0.0, 0.0)) += ph * (a * b);
            }
        }
        let mut terms = Vec::with_capacity(m.len());
        for (s, c) in m {
            if c.im.abs() > 1e-12 {
                return Err(ObservableError::NonHermitian {
                    term: s.to_string(),
                    imag: c.im,
                });
            }
            terms.push((c.re, s));
        }
        Ok(Self { terms })
    }

    /// Dense `2^n x 2^n` matrix; intended for small-n oracles.
    pub fn to_matrix<T: Real>(&self, n: usize) -> Matrix<T> {
        let dim = 1usize << n;
        let mut out = Matrix::zeros(dim);
        for (c, s) in &self.terms {
            let (flip, sign, ny) = s.masks(n);
            let iy = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][ny % 4];
            for k in 0..dim as u64 {
                let neg = (k & sign).count_ones() % 2 == 1;
                let f = if neg { -c } else { *c };
                let v = Complex::new(T::lit(f * iy.0), T::lit(f * iy.1));
                let r = (k ^ flip) as usize;
                out.set(r, k as usize, out.get(r, k as usize) + v);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(c, s)| {
                let paulis: serde_json::Map<String, serde_json::Value> = s
                    .iter()
                    .map(|(q, p)| (q.to_string(), p.as_char().to_string().into()))
                    .collect();
                serde_json::json!({"coeff": c, "paulis": paulis})
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "terms": terms })).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ObservableError> {
        #[derive(Deserialize)]
        struct Doc {
            terms: Vec<Term>,
        }
        #[derive(Deserialize)]
        struct Term {
            coeff: serde_json::Value,
            #[serde(default)]
            paulis: BTreeMap<String, String>,
        }
        let doc: Doc =
            serde_json::from_str(text).map_err(|e| ObservableError::Parse(e.to_string()))?;
        let mut terms = Vec::with_capacity(doc.terms.len());
        for t in doc.terms {
            let mut ops = BTreeMap::new();
            for (q, p) in &t.paulis {
                let q: usize = q
                    .parse()
                    .map_err(|_| ObservableError::Parse(format!("bad qubit key `{q}`")))?;
                let mut cs = p.chars();
                let pauli = match (cs.next(), cs.next()) {
                    (Some(c), None) => Pauli::from_char(c),
                    _ => None,
                }
                .ok_or_else(|| ObservableError::Parse(format!("bad Pauli `{p}`")))?;
                ops.insert(q, pauli);
            }
            let s = PauliString(ops);
            let coeff = match &t.coeff {
                serde_json::Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
                serde_json::Value::Array(v) if v.len() == 2 => {
                    let re = v[0].as_f64().unwrap_or(f64::NAN);
                    let im = v[1].as_f64().unwrap_or(f64::NAN);
                    if im != 0.0 {
                        return Err(ObservableError::NonHermitian {
                            term: s.to_string(),
                            imag: im,
                        });
                    }
                    re
                }
                other => return Err(ObservableError::Parse(format!("bad coefficient {other}"))),
            };
            terms.push((coeff, s));
        }
        Self::new(terms)
    }
}

/// The CHSH operator `A0B0 + A0B1 + A1B0 − A1B1` with
/// `A0 = Z0`, `A1 = X0`, `B0 = −(X1+Z1)/√2`, `B1 = (X1−Z1)/√2`.
pub fn chsh() -> Observable {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let p = |s: &str| Observable::single(s).expect("static string");
    let a0 = p("Z0");
    let a1 = p("X0");
    let b0 = p("X1").add(&p("Z1")).scale(-r);
    let b1 = p("X1").add(&p("Z1").scale(-1.0)).scale(r);
    let t = |a: &Observable, b: &Observable| a.mul(b).expect("disjoint supports commute");
    t(&a0, &b0)
        .add(&t(&a0, &b1))
        .add(&t(&a1, &b0))
        .add(&t(&a1, &b1).scale(-1.0))
}
