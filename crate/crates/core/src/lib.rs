//! Gradient-descent tracing of Turing machines.
//!
//! A Turing machine run is encoded as a walk over the vertices of a simplex.
//! Piecewise-linear losses on the simplex make every Frank-Wolfe step land on
//! the vertex of the next machine configuration; a wrapper network then uses
//! this to install machine-computed weights into a primary model by ordinary
//! least-squares training.
//!
//! Layout:
//! - [`tm`]: machines, simulator, state tripling.
//! - [`simplex`]: corner basis functions, simplex losses, Frank-Wolfe argmin.
//! - [`internal`]: configurations as vertices.
//! - [`external`]: finite control and head symbols as vertices, tapes as
//!   separate variables.
//! - [`engine`]: computation graph with stop-gradients and one-sided
//!   directional derivatives.
//! - [`codec`]: float/bit conversion for tape I/O.
//! - [`network`]: the extended network and its training loop.

pub mod codec;
pub mod corpus;
pub mod engine;
pub mod external;
pub mod internal;
pub mod network;
pub mod scalar;
pub mod simplex;
pub mod tm;
pub mod trace_io;
pub mod verify;

use num_rational::Ratio;

pub use scalar::{Real, Scalar};

/// Exact rational scalar used by the oracle tests and exact tracers.
pub type Rational = Ratio<i128>;

pub type SimplexLossF64 = simplex::SimplexLoss<f64>;
pub type SimplexLossExact = simplex::SimplexLoss<Rational>;
pub type SimplexPointF64 = simplex::SimplexPoint<f64>;
pub type GraphF64 = engine::Graph<f64>;
pub type TapeLossF64 = external::TapeLoss<f64>;
pub type MachineStateF64 = external::MachineState<f64>;
