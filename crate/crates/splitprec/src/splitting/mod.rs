//! Canonical-form machinery: bias selection, rescaling to `‖V‖ < 1`,
//! equilibration, antisymmetrization, and assembly of the preconditioned
//! operator `Γ⁻¹A = αB[1 − (L+1)⁻¹B]`.

mod circle;
mod scale;
mod system;

pub use circle::{smallest_enclosing_circle, Circle};
pub use scale::{compute_scalar_scale, equilibrate, ScaleFactor, ScaleRecord};
pub use system::{antisymmetrize, PreconditionedSystem, SplitSystem, DEFAULT_ALPHA, DEFAULT_TARGET_NORM};
