//! Stochastic-numerics core: vector-field calculus, ODE flows, splitting
//! schemes for SDEs and strong-error / limit-law analysis.
//!
//! The crate is `no_std` (with `alloc`) so the numerical kernels stay free of
//! IO and platform dependence; all randomness is counter-based and every
//! operation is a pure function of its inputs.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod errorlab;
pub mod flows;
pub mod grid;
pub mod linalg;
pub(crate) mod num;
pub mod registry;
pub mod rng;
pub mod schemes;
pub mod stats;
pub mod vecfield;

use alloc::string::String;
use core::fmt;

/// Error type shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Incompatible dimensions between operands.
    Dimension { expected: usize, got: usize },
    /// A computation produced a non-finite or overflowing value.
    NumericalFailure(String),
    /// The requested scheme does not apply to this model.
    UnsupportedModel(String),
    /// Invalid experiment configuration.
    Config(String),
    /// Data unfit for the requested estimate (e.g. errors at the floor).
    DegenerateData(String),
    /// Argument outside the mathematical domain of the operation.
    Domain(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NumericalFailure(s) => write!(f, "numerical failure: {s}"),
            Error::UnsupportedModel(s) => write!(f, "unsupported model: {s}"),
            Error::Config(s) => write!(f, "config error: {s}"),
            Error::DegenerateData(s) => write!(f, "degenerate data: {s}"),
            Error::Domain(s) => write!(f, "domain error: {s}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
