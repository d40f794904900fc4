//! Spatial discretization and time stepping.
//!
//! Ω is a box `[0, L₁]` or `[0, L₁] × [0, L₂]` with node-centred grids. The
//! director target stays S² ⊂ ℝ³ in every case.

mod field;
mod grid;
pub mod stencil;
mod stepper;

pub use field::{ChartField, ControlDensity, DirectorField, Field, LinearState, MagneticField, NodeValue};
pub use grid::{Axis, ControlRegion, Grid, DEFAULT_OMEGA_FRACTION};
pub use stencil::{gradient, neumann_laplacian, ImplicitDiffusion};
pub use stepper::{
    chart_gamma, max_stable_dt, step_chart, step_director, step_linearized, Direction, DirectorStep, Stepper,
    BLOWUP_DRIFT, NORM_TOL,
};
