//! Stabilizer-rank simulation of Clifford+T-style circuits.
//!
//! The building blocks are phase-exact stabilizer states ([`stabilizer`]),
//! stabilizer-projector decompositions of non-Clifford gates
//! ([`decomposition`]), layered circuits ([`circuit`]) and the amplitude
//! engines built on top of them ([`engines`]). [`cost`] holds the analytic
//! cost model.

pub mod exact;
pub mod pauli;
pub mod dense;
pub mod gates;
pub mod stabilizer;
pub mod decomposition;
pub mod circuit;
pub mod engines;
pub mod cost;

pub use exact::ExactScalar;
pub use gates::GateKind;
pub use pauli::PauliOperator;
pub use stabilizer::StabilizerState;

#[derive(Debug, thiserror::Error)]
pub enum StabError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown gate '{0}'")]
    UnknownGate(String),
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("gate expects {expected} qubits, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("qubit {0} listed twice")]
    DuplicateQubit(usize),
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("operator {0} is not Hermitian")]
    NonHermitian(String),
    #[error("gate '{0}' is not Clifford")]
    NotClifford(String),
    #[error("invalid stabilizer state: {0}")]
    InvalidState(String),
    #[error("{n} qubits exceeds the dense limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("no decomposition named '{0}'")]
    UnknownDecomposition(String),
    #[error("decomposition '{name}' fails verification: error {error:.3e} > tol {tol:.1e}")]
    Verification { name: String, error: f64, tol: f64 },
    #[error("{0}")]
    Usage(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("capacity exceeded at non-Clifford layer {layer}: kappa {kappa} > memory cap {cap}")]
    Capacity { layer: usize, kappa: String, cap: usize },
    #[error("inner-product budget of {cap} exhausted")]
    Budget { cap: u64 },
    #[error("i/o error: {0}")]
    Io(String),
}
