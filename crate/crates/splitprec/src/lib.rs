//! Matrix-free iterative linear solvers built around the universal split
//! preconditioner `Γ⁻¹ = α B (A + B)⁻¹` with `B = 1 − V`.
//!
//! A linear problem `A x = b` is split as `A = L + V`, where `L + 1` is
//! analytically invertible and the discrepancy `V` is scaled to `‖V‖ < 1`.
//! For accretive `A` the preconditioned fixed-point iteration then converges
//! monotonically, and the same preconditioned operator accelerates GMRES and
//! BiCGSTAB.
//!
//! Crate layout:
//! - [`vector`], [`operator`], [`dense`]: vector/operator primitives and
//!   small dense oracles.
//! - [`splitting`]: canonical-form machinery (smallest enclosing circle,
//!   scaling, equilibration, antisymmetrization, preconditioner assembly).
//! - [`solvers`]: fixed-point, restarted GMRES, BiCGSTAB, shift-splitting.
//! - [`problems`]: builders for Helmholtz, stationary diffusion, pantograph
//!   and shifted Schrödinger systems.
//! - [`analysis`]: dense-scale contraction norms, thresholds and bounds.
//! - [`bench`]: suite runner and table/residual reporting for the CLI.

pub mod analysis;
pub mod bench;
pub mod dense;
pub mod error;
pub mod operator;
pub mod problems;
pub mod solvers;
pub mod splitting;
pub mod vector;

pub use dense::DenseOperator;
pub use error::Error;
pub use operator::LinearMap;
pub use vector::ComplexVector;
