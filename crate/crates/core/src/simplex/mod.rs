//! Piecewise-linear functions on the standard simplex and the Frank-Wolfe
//! primitives used by both tracers.

mod basis;
mod descent;
mod loss;
mod point;

pub use basis::{edge_bump_dense, edge_plane, hat, unsymmetric_corner, AffinePiece, Basis, ReducedPiece};
pub use descent::{corner_argmin, corner_objective, dir_deriv, line_search, Quadratic};
pub use loss::{SimplexLoss, Term};
pub use point::SimplexPoint;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimplexError {
    #[error("not a point of the simplex: {0}")]
    NotInSimplex(String),
    #[error("invalid basis function: {0}")]
    InvalidBasis(String),
    #[error("singular interpolation system: {0}")]
    Singular(String),
}
