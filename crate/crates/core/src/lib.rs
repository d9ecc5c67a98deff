//! Gate-level half of qstack: circuit IR, dense and sparse state-vector
//! simulators, multi-controlled gate decomposition, routing onto a coupling
//! graph, native-gate translation and Pauli expectation values.
//!
//! Qubit 0 is the most significant bit of every basis index.

pub mod decompose;
pub mod euler;
pub mod expval;
pub mod ir;
pub mod linalg;
pub mod mapper;
pub mod native;
pub mod pauli;
pub mod scalar;
pub mod sim;

pub use num_complex::Complex;
pub use scalar::Real;

/// Double-precision instances of the generic numeric types.
pub type Mat2f = linalg::Mat2<f64>;
pub type Matrixf = linalg::Matrix<f64>;
pub type DenseStatef = sim::DenseState<f64>;
pub type SparseStatef = sim::SparseState<f64>;
pub type QuantumStatef = sim::QuantumState<f64>;
