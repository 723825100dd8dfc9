//! Crouzeix-Raviart / Raviart-Thomas discretization of the total-variation
//! (ROF) denoising model on the square (-1, 1)^2: meshes, finite-element
//! spaces, a semi-implicit gradient flow, closed-form benchmarks and the
//! measurements used to study convergence rates.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod analysis;
pub mod benchmarks;
pub mod cli;
pub mod flow;
pub mod fespace;
pub mod geom;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod rof;

pub use error::{Error, Result};
pub use geom::{Point, Vec2};
pub use mesh::Mesh;
