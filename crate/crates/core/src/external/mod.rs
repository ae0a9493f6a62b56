//! Tracing with the finite control and head symbols as simplex vertices.
//!
//! Vertices are pairs `(q, t)` of a state of the tripled machine and the
//! symbols under the heads. The tapes live in a separate matrix `T` and the
//! head positions in one-hot columns `H`. Three stop-gradient least-squares
//! terms write to `T`, read from `T` into the next vertex and move `H`.

mod constants;
mod loss;
mod trace;

pub use constants::ExternalParams;
pub use loss::{LossParts, MachineState, TapeLoss};
pub use trace::{gd_step, trace, ExternalTrace, StepInfo};

use crate::simplex::SimplexError;
use crate::tm::TmError;

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error(transparent)]
    Machine(#[from] TmError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("constant check failed: {0}")]
    Constants(String),
    #[error("machine has back-and-forth vertex pairs (first: {first:?}); triple its states first")]
    BackStep { first: (usize, usize), count: usize },
    #[error("state does not match the loss: {0}")]
    Shape(String),
    #[error("construction violated at step {step}: {detail}\nstate: {dump}")]
    Violation { step: usize, detail: String, dump: String },
    #[error("no halt within {0} iterations")]
    NoHalt(usize),
}
