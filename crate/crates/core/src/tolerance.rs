//! Numerical tolerances shared across the crate.

/// Default absolute tolerance for norms, unitarity of 2x2 gates and inner products.
pub const ATOL: f64 = 1e-10;

/// Tolerance for oracle unitarity and the cleanliness promises of circuit-form oracles.
pub const ORACLE_ATOL: f64 = 1e-9;

/// Overlaps below this are treated as exact orthogonality by the constructions.
pub const ORTHOGONALITY_ATOL: f64 = 1e-9;

/// Sparse amplitudes with modulus below this are dropped after each gate.
pub const PRUNE: f64 = 1e-14;

/// Largest register the dense simulator will allocate.
pub const MAX_DENSE_QUBITS: usize = 24;

/// Largest register `circuit_to_matrix` will expand.
pub const MAX_MATRIX_QUBITS: usize = 12;
