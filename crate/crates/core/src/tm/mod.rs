//! Deterministic d-tape Turing machines over the two symbols {-1, +1}.
//!
//! The blank symbol is -1. Heads start at cell 1; cells 0 and tau-1 are guard
//! cells that an admitted run never touches.

mod machine;
mod sim;
mod spec;
mod triple;

pub use machine::{Move, Symbol, Transition, TuringMachine};
pub use sim::{frame_bits, make_initial, run, step, Configuration, ExecutionTrace};
pub use spec::{MachineSpec, TransitionSpec};
pub use triple::{back_step_pairs, satisfies_no_back_step, triple_states, TRIPLE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TmError {
    #[error("tape-bound violation: head of tape {tape} would reach cell {position} (tau = {tau})")]
    TapeBound {
        tape: usize,
        position: i64,
        tau: usize,
    },
    #[error("machine already halted in accepting state {state}")]
    AlreadyHalted { state: String },
    #[error("payload of {len} cells does not fit a tape of length {tau}")]
    PayloadTooLong { len: usize, tau: usize },
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("configuration does not match machine: {0}")]
    MalformedConfiguration(String),
}
