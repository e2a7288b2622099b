//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not square-free")]
    NotSquarefree(u64),

    #[error("{x} is not invertible mod {q}")]
    NotInvertible { x: i64, q: u64 },

    #[error("moduli {q1} and {q2} are not coprime")]
    ModuliNotCoprime { q1: u64, q2: u64 },

    #[error("residue {a} is not coprime to {q}")]
    NotCoprime { a: u64, q: u64 },

    #[error("exact integer overflow while building table up to {0}")]
    Overflow(usize),

    #[error("index {index} out of range (table holds 1..={n_max})")]
    IndexOutOfRange { index: u64, n_max: u64 },

    #[error("table of size {n_max} too small, need {needed}")]
    TableTooSmall { n_max: u64, needed: u64 },

    #[error("bad interval [{0}, {1}]")]
    BadInterval(f64, f64),

    #[error("quadrature did not converge to {rel_tol} within {max_panels} panels")]
    QuadratureNotConverged { rel_tol: f64, max_panels: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
