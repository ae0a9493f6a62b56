//! The extended network wrapping a primary model.
//!
//! The output is `s_init(s_net(f_theta(x), f_TM), z)`. While the labels are
//! still unread, `s_init` passes `z` through so the first step copies `y`
//! into `z`. Afterwards `s_net` shows `f_TM = sqrt(2 l_TM) f_perp(z)`, whose
//! least-squares gradient equals the gradient of the machine loss `l_TM`,
//! until the machine halts and the primary network takes over with the
//! weights the machine wrote to its tape.

mod dataset;
mod extended;
mod primary;
mod switch;
mod train;

pub use dataset::Dataset;
pub use extended::{payload, read_theta, Branch, Construction, ExtendedNet, NetConfig, NetNodes, PrimaryKind, ThetaWindow};
pub use primary::{ConstantNet, LinearNet, PrimaryNetwork};
pub use switch::{phi, psi, s_init, s_net, SwitchParams};
pub use train::{train, StepRecord, TrainOptions, TrainReport};

use crate::codec::CodecError;
use crate::engine::EngineError;
use crate::external::ExternalError;
use crate::internal::InternalError;
use crate::tm::TmError;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid dataset: {0}")]
    Dataset(String),
    #[error("labels too small: ||y||^2 = {norm} < epsilon = {epsilon}")]
    LabelsTooSmall { norm: f64, epsilon: f64 },
    #[error("shape: {0}")]
    Shape(String),
    #[error("constant check failed: {0}")]
    Constants(String),
    #[error("machine does not halt within {0} steps")]
    NoHalt(usize),
    #[error("training did not stop within {0} steps")]
    NoStop(usize),
    #[error("stopping rule holds before the first step (loss {0})")]
    StopsAtStart(f64),
    #[error("s left the vertices at step {0}")]
    NotVertex(usize),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Machine(#[from] TmError),
    #[error(transparent)]
    External(#[from] ExternalError),
    #[error(transparent)]
    Internal(#[from] InternalError),
}

impl From<crate::simplex::SimplexError> for NetworkError {
    fn from(e: crate::simplex::SimplexError) -> Self {
        NetworkError::Shape(e.to_string())
    }
}
