use alloc::string::String;
use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong while building or simulating a circuit.
///
/// The variants map onto the failure classes callers care about: bad
/// arguments, numerical validation of gates, broken construction contracts,
/// infeasible estimation and resource guards.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("gate is not unitary: max deviation {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("estimation infeasible: {required:.4e} samples required, limit is {limit}")]
    Infeasible { required: f64, limit: u64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("singular point: {0}")]
    Singular(String),
}

macro_rules! argument {
    ($($arg:tt)*) => { $crate::error::Error::Argument(alloc::format!($($arg)*)) };
}

macro_rules! contract {
    ($($arg:tt)*) => { $crate::error::Error::Contract(alloc::format!($($arg)*)) };
}

pub(crate) use argument;
pub(crate) use contract;
