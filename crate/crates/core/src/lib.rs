//! Eulerian-Lagrangian Runge-Kutta finite-volume WENO solvers for scalar
//! convection-diffusion equations on uniform 2D structured grids.
//!
//! The pipeline for one convection evaluation is
//! `weno::reconstruct_field` -> `velocity::trace_offset` ->
//! `remap::Overlay::build` -> `remap::remap_on` -> `operators::flux_divergence`.
//! `timestepping` composes those evaluations into explicit RK3 and IMEX
//! integrators along time-shifted families of upstream cells, and `problems`
//! holds the benchmark definitions used by the CLI and the acceptance suite.

pub mod error;
pub mod field;
pub mod fieldsolve;
pub mod geometry;
pub mod operators;
pub mod problems;
pub mod remap;
pub mod timestepping;
pub mod velocity;
pub mod weno;

mod par;

pub use error::{Error, Result};
pub use field::CellField;
pub use geometry::{Boundary, GridSpec, Point, Polygon, Quad};
pub use weno::{LocalPoly, PiecewisePoly, WenoParams};
