//! Solver toolkit for constrained 2-local Hamiltonian problems built on
//! vertex-cover structure: local-ratio approximation algorithms, exact
//! small-instance oracles, a polynomial-time entangled-constraint solver,
//! and perturbative gadget reductions.

pub mod bench;
pub mod bloch;
pub mod error;
pub mod evc;
pub mod exact;
pub mod gadgets;
pub mod generate;
pub mod json;
pub mod instance;
pub mod localratio;
pub mod state;

pub use bloch::{assemble_local_term, BlochProjector, LocalTerm};
pub use error::{QlrError, Result};
pub use instance::{Edge, Instance, Kind, Psi};
pub use state::ProductState;
