//! Low-order mimetic finite difference solver for Reissner-Mindlin plates on
//! general polygonal meshes.
//!
//! The crate covers the plate bending (source) problem, the free-vibration
//! eigenproblem and the buckling eigenproblem. Unknowns are vertex deflections
//! and vertex rotations; discrete shears live as tangential averages on edges
//! and are derived quantities, never global unknowns. Local bilinear forms are
//! built per polygon from a consistency part (exactness on linear polynomials)
//! plus a scaled stabilization projector, so the scheme runs unchanged on
//! triangles, quads, hexagons and non-convex perturbed cells.
//!
//! Module map:
//! - [`mesh`]: polygonal meshes, the seven built-in unit-square families,
//!   validation and a plain-text file format.
//! - [`spaces`]: degree-of-freedom maps, interpolation, the discrete gradient
//!   and reduction operators, discrete norms.
//! - [`local_forms`]: per-element matrices (bending, shear product, coupling,
//!   mass, buckling, load weights).
//! - [`assembly`]: global sparse symmetric systems with boundary-condition
//!   elimination and Dirichlet lift.
//! - [`solve`]: sparse direct solve for the source problem, shift-invert
//!   subspace iteration for the generalized eigenproblems, shear recovery.
//! - [`postproc`]: manufactured solution, discrete error norms, convergence
//!   rates, least-squares extrapolation, non-dimensional frequencies and
//!   buckling intensities.

pub mod assembly;
pub mod error;
pub mod local_forms;
pub mod mesh;
pub mod postproc;
pub mod solve;
pub mod spaces;

pub use error::{Error, Result};

/// 2D point used for mesh vertices.
pub type Point = nalgebra::Point2<f64>;
/// 2D vector used for normals, tangents and rotation values.
pub type Vec2 = nalgebra::Vector2<f64>;
