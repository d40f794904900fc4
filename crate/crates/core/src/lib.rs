//! Numerical laboratory for the magnetically controlled harmonic map heat flow
//!
//! ```text
//! ∂t d − Δd = |∇d|² d + (H·d) H − (H·d)² d,   ∂ν d = 0,   |d| = 1
//! ```
//!
//! on a box domain, together with the stereographic reduction to an internal
//! control system, the staged steering schedule (large uniform field, local
//! null control in the chart, rotation through trisecting waypoints) and
//! runtime monitors for the maximum-principle estimates of the flow.
//!
//! Module map:
//!
//! - [`geometry`]: stereographic chart, Jacobian, frame matrix, rotations
//! - [`field_synthesis`]: chart control density → physical magnetic field
//! - [`grid_pde`]: grids, Neumann stencils and the semi-implicit steppers
//! - [`stage_control`]: amplitude profile, required amplitude, waypoints
//! - [`null_control`]: linearized coefficients, penalized HUM, Picard loop
//! - [`monitors`]: hemisphere, gradient, time-derivative and energy monitors
//! - [`presets`]: initial director fields satisfying the hemisphere condition
//! - [`snapshot`]: binary and CSV field snapshots

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field_synthesis;
pub mod geometry;
pub mod grid_pde;
pub mod monitors;
pub mod null_control;
pub mod presets;
pub mod snapshot;
pub mod stage_control;

pub use error::{Error, Result};
pub use field_synthesis::{
    build_synthesis_matrix, synthesis_residual, synthesize_field, uniform_field, SynthesisMatrix,
};
pub use geometry::{
    frame_matrix, rotation_between, stereo_invert, stereo_jacobian, stereo_project, ChartPoint,
    RotationMatrix, UnitVector3,
};
pub use grid_pde::{
    ChartField, ControlDensity, DirectorField, Field, Grid, LinearState, MagneticField,
};
pub use monitors::{TrajectoryRecorder, TrajectoryReport};
pub use stage_control::{Schedule, SteeringPlan};

/// Dense 3-vector used for node values.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Dense 2-vector used for chart and control node values.
pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat3x2 = nalgebra::Matrix3x2<f64>;
