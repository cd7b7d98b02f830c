//! Exact simulation of the per-millionaire comparison circuit.
//!
//! Two paths produce the same readout distribution:
//!
//! * the full state-vector path ([`GhzCircuit::run_full`], [`run_qc_full`]),
//!   which materializes every qubit including the |−⟩ output registers and
//!   is capped at [`FULL_PATH_QUBIT_CAP`] qubits;
//! * the factored sampler ([`run_qc_factored`]), which draws each bit
//!   position independently and uniformly from the tuples whose XOR matches
//!   the XOR of the oracles. It serves every production run.

mod circuit;
mod layout;
mod state;

use thiserror::Error;

use crate::bitcore::BitError;

pub use circuit::{
    factored_distribution, prepare_ghz3_registers, prepare_ghz_registers, run_qc_factored,
    run_qc_full, sample_parity_constrained, total_variation, GhzCircuit, MeasurementOutcome,
    OutcomeDistribution, Party, FULL_PATH_QUBIT_CAP,
};
pub use layout::{PartyRegisters, RegisterLayout};
pub use state::{measure_register, StateVector, MAX_STATE_QUBITS, TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("state of {requested} qubits exceeds the limit of {cap}")]
    TooManyQubits { requested: usize, cap: usize },
    #[error("circuit needs {requested} qubits but the full path is capped at {cap}; use the factored sampler")]
    FullPathCap { requested: usize, cap: usize },
    #[error("basis index {index} invalid for dimension {dim}")]
    BasisIndex { index: usize, dim: usize },
    #[error("amplitudes have squared norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("register of {register} qubits does not match a {secret}-bit secret")]
    RegisterLength { register: usize, secret: usize },
    #[error("output qubit {0} is not in the |−⟩ state")]
    OutputNotMinus(usize),
    #[error("registers must hold at least one qubit")]
    EmptyRegister,
    #[error("a GHZ circuit needs at least two parties, got {0}")]
    TooFewParties(usize),
    #[error(transparent)]
    Bit(#[from] BitError),
}
