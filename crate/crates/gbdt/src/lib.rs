//! Bäcklund-Darboux transformations for dynamical canonical systems.
//!
//! The PDE under study is `∂t Y(x,t) = j ∂x(𝓗(x) Y(x,t))` with signature
//! matrix `j = diag(I_{m1}, -I_{m2})` and Hamiltonian `𝓗(x) > 0`. Starting
//! from a parameter triple `{A, S(0), Π(0)}` satisfying
//! `A S(0) - S(0) A* = i Π(0) j Π(0)*`, the transformation produces a new
//! Hamiltonian together with explicit solutions `Y(x,t)`.
//!
//! The crate is organized around two engines and a verification harness:
//!
//! * [`explicit`] — closed-form engine for the trivial initial Hamiltonian
//!   `H(x) ≡ I` (matrix exponentials plus Sylvester solutions, no ODE
//!   integration),
//! * [`generalham`] — RK4 engine for an arbitrary initial Hamiltonian
//!   `H(x) > 0`, which doubles as an independent oracle for the closed forms,
//! * [`verify`] — PDE residuals, energy and supply-rate accounting,
//!   asymptotics, and boundary-matrix construction.
//!
//! See the `examples/` directory for runnable entry points; the `gbdt` binary
//! wraps the same functionality behind scenario files.

pub mod matcore;
pub mod triple;
pub mod explicit;
pub mod generalham;
pub mod verify;
pub mod io;
pub mod scenario;

pub use matcore::CMatrix;
pub use triple::{GbdtTriple, SignatureJ};
pub use explicit::{ExplicitModel, SolutionField};
pub use generalham::{HamiltonianField, Trajectory};
pub use verify::Report;

