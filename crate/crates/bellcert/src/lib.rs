//! Certification of intrinsic randomness in Bell-test behaviors.
//!
//! The crate bounds the guessing probability of measurement outcomes under
//! three correlation sets:
//!
//! * **No-signaling** — exact linear programming over the no-signaling
//!   polytope ([`randomness::guessing_probability_ns`]) together with
//!   vertex enumeration and the zero-count bound ([`polytope`]);
//! * **Quantum** — symmetry certificates for maximal violations of
//!   parity Bell inequalities, backed by dense state-vector simulation
//!   ([`randomness::certify_uniform_output`], [`quantum`]);
//! * **Supra-quantum** — a moment-matrix relaxation of the quantum set in
//!   the tripartite dichotomic scenario, solved both by semidefinite
//!   programming and by analytic stabilizer propagation ([`npa`]).
//!
//! See the `book/` guide for a walkthrough of the underlying machinery.

pub mod error;
pub mod inequalities;
pub mod npa;
pub mod optim;
pub mod polytope;
pub mod quantum;
pub mod randomness;
pub mod scenario;
pub mod value;

pub use error::{Error, Result};
pub use scenario::{Behavior, CorrelatorTable, MarginalDistribution, Scenario};
pub use value::{Rat, Scalar};
