#![no_std]

extern crate alloc;

pub mod circuit;
mod error;
pub mod exact;
pub mod linalg;
pub mod merge;
pub mod oracle;
pub mod register;
pub mod sparse;
pub mod state;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use circuit::{Circuit, CircuitOp, Simulator};
pub use linalg::{c64, CMatrix, Matrix2, C64};
pub use oracle::{AccessMode, BlackBoxUnitary, QueryCounts, Realization};
pub use register::Register;
pub use sparse::{BasisKey, SparseState, MAX_SPARSE_QUBITS};
pub use state::{Control, PureState, QubitLayout};
