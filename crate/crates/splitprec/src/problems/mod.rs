//! Builders turning physical problem specifications into canonical split
//! systems, plus configuration loading and condition-number estimation.

mod condition;
mod config;
mod diffusion;
mod helmholtz;
mod pantograph;
mod schrodinger;
mod spectral;

pub use condition::estimate_condition_number;
pub use config::{
    load_problem, CoeffSpec, FieldData, HistorySpec, ProblemConfig, ProblemKind,
};
pub use diffusion::{build_diffusion_split, recover_physical, DiffusionSpec};
pub use helmholtz::{build_helmholtz_split, BiasMode, HelmholtzSpec};
pub use pantograph::{build_pantograph_split, PantographSpec};
pub use schrodinger::{build_schrodinger_split, schrodinger_forward, SchrodingerSpec};
