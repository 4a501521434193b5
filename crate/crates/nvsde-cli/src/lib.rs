//! Command-line experiment runner: model construction from flat key=value
//! configs, convergence studies, error-distribution studies, commutativity
//! reports and bracket-formula checks, all emitting CSV.

pub mod commands;
pub mod config;
pub mod output;
pub mod par;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;
