//! Discrete fields on the truncated Fermi box with ε-scaled norms.
//!
//! The box `[-R, R]^{n-1} × [0, R]` carries a graded tensor grid
//! ([`grid`]); the chart metric is sampled once per grid ([`assemble`]),
//! giving the stiffness `S` of `∫ √g g^{ab} ∂_a u ∂_b v` and the lumped
//! mass `M`. With these
//!
//! * `⟨u, v⟩_ε = ε^{-n} (ε² uᵀ S v + m² uᵀ M v)`,
//! * `|u|_{t,ε} = (ε^{-n} Σ_v M_v |u_v|^t)^{1/t}` (the `ε^{-n}` sits inside the root),
//! * `i*_ε(v)` solves `(ε² S + m² M) u = M v`,
//!
//! where `m² = a − ω²`. The `ε^{-n}` factor is applied after the sums.

pub mod assemble;
pub mod dump;
pub mod grid;
pub mod solve;
pub mod sparse;

pub use assemble::{Boundary, Discretization, FaceKind, MetricSamples};
pub use grid::{AxisSpec, Grid};
pub use solve::{assemble_op, minres, pcg, EllipticOp, LinearOperator, SolveStats};

use crate::error::{Error, Result};

/// Default maximum number of Krylov iterations.
pub const MAX_KRYLOV: usize = 20_000;

/// Nodal values on a grid, tagged with the grid fingerprint and the
/// boundary conditions of the operator they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: u64,
    pub values: Vec<f64>,
    pub bc: Boundary,
}

impl Field {
    /// Zero field.
    pub fn zeros(disc: &Discretization, bc: Boundary) -> Self {
        Field { grid: disc.fingerprint(), values: vec![0.0; disc.len()], bc }
    }

    /// Wrap nodal values.
    pub fn from_values(disc: &Discretization, values: Vec<f64>, bc: Boundary) -> Result<Self> {
        if values.len() != disc.len() {
            return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), disc.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("field values must be finite".into()));
        }
        Ok(Field { grid: disc.fingerprint(), values, bc })
    }

    /// Sample a function of the chart coordinates.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(disc: &Discretization, bc: Boundary, f: F) -> Self {
        let g = &disc.grid;
        let values = (0..g.len()).map(|i| f(&g.coords(i))).collect();
        Field { grid: disc.fingerprint(), values, bc }
    }

    /// Check that the field lives on `disc`.
    pub fn check(&self, disc: &Discretization) -> Result<()> {
        if self.grid != disc.fingerprint() || self.values.len() != disc.len() {
            return Err(Error::GridMismatch("field belongs to a different grid".into()));
        }
        Ok(())
    }

    /// Maximum absolute value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check2(disc: &Discretization, u: &Field, v: &Field) -> Result<()> {
    u.check(disc)?;
    v.check(disc)
}

/// `⟨u, v⟩_ε`.
pub fn inner_eps(disc: &Discretization, u: &Field, v: &Field, eps: f64, msq: f64) -> Result<f64> {
    check2(disc, u, v)?;
    Ok(inner_eps_raw(disc, &u.values, &v.values, eps, msq))
}

/// `⟨u, v⟩_ε` on raw nodal vectors.
pub fn inner_eps_raw(disc: &Discretization, u: &[f64], v: &[f64], eps: f64, msq: f64) -> f64 {
    let n = disc.grid.n as i32;
    (eps * eps * disc.stiffness_form(u, v) + msq * disc.mass_form(u, v)) / eps.powi(n)
}

/// `‖u‖_ε`.
pub fn norm_eps(disc: &Discretization, u: &[f64], eps: f64, msq: f64) -> f64 {
    inner_eps_raw(disc, u, u, eps, msq).max(0.0).sqrt()
}

/// `|u|_{t,ε} = (ε^{-n} ∫ |u|^t dμ_g)^{1/t}`.
pub fn lp_norm_eps(disc: &Discretization, u: &[f64], t: f64, eps: f64) -> f64 {
    let s: f64 = disc.mass.iter().zip(u).map(|(m, x)| m * x.abs().powf(t)).sum();
    (s / eps.powi(disc.grid.n as i32)).powf(1.0 / t)
}

/// Unscaled `‖u‖_{H¹_g} = (∫ |∇_g u|² + u²)^{1/2}`.
pub fn h1_norm(disc: &Discretization, u: &[f64]) -> f64 {
    (disc.stiffness_form(u, u) + disc.mass_form(u, u)).max(0.0).sqrt()
}

/// Unscaled `(∫ |u|^t dμ_g)^{1/t}`.
pub fn lp_norm(disc: &Discretization, u: &[f64], t: f64) -> f64 {
    disc.mass.iter().zip(u).map(|(m, x)| m * x.abs().powf(t)).sum::<f64>().powf(1.0 / t)
}

/// Solve `op u = M f` (weak form of `-sΔ_g u + c u = f`) by PCG.
pub fn solve_linear(disc: &Discretization, op: &EllipticOp, source: &Field, tol: f64) -> Result<Field> {
    source.check(disc)?;
    let mut b: Vec<f64> = source.values.iter().zip(&disc.mass).map(|(f, m)| f * m).collect();
    op.restrict_rhs(&mut b);
    let (x, _) = pcg(op, &b, None, tol, MAX_KRYLOV)?;
    Ok(Field { grid: disc.fingerprint(), values: x, bc: op.bc })
}

/// The ε-adjoint of the embedding: `⟨i*_ε(v), φ⟩_ε = ε^{-n} ∫ v φ dμ_g`.
pub struct Adjoint {
    op: EllipticOp,
    mass: Vec<f64>,
    pub tol: f64,
}

impl Adjoint {
    /// Operator `ε² S + m² M` with natural boundary conditions.
    pub fn new(disc: &Discretization, eps: f64, msq: f64, tol: f64) -> Result<Self> {
        let op = assemble_op(disc, eps * eps, &vec![msq; disc.len()], Boundary::NEUMANN)?;
        Ok(Adjoint { op, mass: disc.mass.clone(), tol })
    }

    /// `i*_ε(v)` with an optional warm start.
    pub fn apply(&self, v: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        let b: Vec<f64> = v.iter().zip(&self.mass).map(|(a, m)| a * m).collect();
        pcg(&self.op, &b, guess, self.tol, MAX_KRYLOV)
    }

    /// `i*_ε` of a load vector `b` already integrated against the mass.
    pub fn apply_load(&self, b: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        pcg(&self.op, b, guess, self.tol, MAX_KRYLOV)
    }

    /// The operator `ε² S + m² M`.
    pub fn operator(&self) -> &EllipticOp {
        &self.op
    }
}

/// `i*_ε(v)` as a field.
pub fn adjoint_istar(disc: &Discretization, eps: f64, msq: f64, v: &Field, tol: f64) -> Result<Field> {
    v.check(disc)?;
    let (x, _) = Adjoint::new(disc, eps, msq, tol)?.apply(&v.values, None)?;
    Ok(Field { grid: disc.fingerprint(), values: x, bc: Boundary::NEUMANN })
}

#[cfg(test)]
mod tests;
