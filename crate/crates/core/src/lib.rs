//! Numerical laboratory for peaked solutions of singularly perturbed
//! Klein–Gordon–Maxwell(-Proca) systems on manifolds with boundary.
//!
//! The pipeline follows the Lyapunov–Schmidt construction:
//!
//! * [`ground_state`] — radial model problem, constants `C` and `α`, kernel
//!   fields and the limit profile `γ`;
//! * [`geometry`] — boundary geometries, Fermi charts, curvature, geodesics;
//! * [`fields`] — graded grids on the Fermi box, ε-norms, elliptic operators,
//!   Krylov solvers and the adjoint `i*_ε`;
//! * [`electrostatics`] — the map `ψ(u)`, its derivatives and `Θ`;
//! * [`reduction`] — ansatz, kernel basis, projections and the fixed point `φ`;
//! * [`functional`] — energies, reduced functional, expansion fit, peak search;
//! * [`diagnostics`] — scaling studies and the half-space limit comparison;
//! * [`config`] — the flat key-value run configuration.

// Index loops mirror the stencil formulas, and `!(x > y)` comparisons are
// deliberate: they also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod config;
pub mod diagnostics;
pub mod electrostatics;
pub mod error;
pub mod fields;
pub mod functional;
pub mod geometry;
pub mod linalg;
pub mod ground_state;
pub mod ode;
pub mod params;
pub mod quad;
pub mod reduction;

pub use error::{Error, Result};
pub use params::ModelParams;
