//! Self-contained small-scale solvers used by the certification paths:
//! an exact simplex method for linear programs and a dense primal-dual
//! interior-point method for semidefinite programs, with an independent
//! alternating-projection SDP oracle for cross-checks.

pub mod lp;
pub mod projection;
pub mod sdp;

pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use sdp::{solve_sdp, SdpSolution, SdpStatus, SemidefiniteProgram};
