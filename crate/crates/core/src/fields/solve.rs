//! Elliptic operators and Krylov solvers.
//!
//! [`EllipticOp`] applies `s·S + diag(c m)` with symmetric Dirichlet
//! elimination. Positive definite systems use Jacobi-preconditioned
//! conjugate gradients; the symmetric indefinite bordered systems of the
//! reduction use preconditioned MINRES. All reductions are sequential so
//! results are bit-reproducible.

use std::sync::Arc;

use super::assemble::{Boundary, Discretization};
use super::sparse::Csr;
use crate::error::{Error, Result};

/// A symmetric linear operator with a symmetric positive definite preconditioner.
pub trait LinearOperator {
    /// Dimension.
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `z = P⁻¹ r`.
    fn precondition(&self, r: &[f64], z: &mut [f64]);
}

/// Convergence record of a Krylov solve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
}

/// `-s Δ_g + c` in weak form: `s S + diag(c_v m_v)`.
#[derive(Debug, Clone)]
pub struct EllipticOp {
    pub stiffness: Arc<Csr>,
    /// Multiplier of the stiffness (`ε²` or 1).
    pub scale: f64,
    /// Lumped zeroth-order part `c_v m_v` (1 on eliminated rows).
    pub diag: Vec<f64>,
    pub bc: Boundary,
    /// Eliminated (Dirichlet) nodes.
    pub mask: Option<Vec<bool>>,
    jacobi: Vec<f64>,
}

/// Assemble `-scale·Δ_g + coeff` with boundary conditions `bc`.
///
/// Fails with `NonPositiveCoefficient` if `coeff` has a negative entry or if
/// the operator would be singular (pure Neumann with `coeff ≡ 0`).
pub fn assemble_op(disc: &Discretization, scale: f64, coeff: &[f64], bc: Boundary) -> Result<EllipticOp> {
    if coeff.len() != disc.len() {
        return Err(Error::GridMismatch(format!("coefficient has {} values, grid {}", coeff.len(), disc.len())));
    }
    if let Some(c) = coeff.iter().find(|c| !(**c >= 0.0)) {
        return Err(Error::NonPositiveCoefficient(format!("negative or non-finite coefficient {c}")));
    }
    if !(scale > 0.0) {
        return Err(Error::NonPositiveCoefficient(format!("stiffness scale {scale}")));
    }
    if !bc.has_dirichlet() && coeff.iter().all(|c| *c == 0.0) {
        return Err(Error::NonPositiveCoefficient("zero coefficient with pure Neumann conditions".into()));
    }
    Ok(EllipticOp::indefinite(disc, scale, coeff, bc))
}

impl EllipticOp {
    /// Assemble without definiteness checks (linearized operators).
    pub fn indefinite(disc: &Discretization, scale: f64, coeff: &[f64], bc: Boundary) -> Self {
        let stiffness = disc.stiffness_for(bc);
        let mask = if bc.has_dirichlet() { Some(disc.dirichlet_mask(bc)) } else { None };
        let mut diag: Vec<f64> = coeff.iter().zip(&disc.mass).map(|(c, m)| c * m).collect();
        if let Some(mk) = &mask {
            for (d, m) in diag.iter_mut().zip(mk) {
                if *m {
                    *d = 1.0;
                }
            }
        }
        let sd = stiffness.diagonal();
        let jacobi = sd
            .iter()
            .zip(&diag)
            .map(|(s, d)| {
                let v = (scale * s + d).abs();
                if v > 0.0 {
                    1.0 / v
                } else {
                    1.0
                }
            })
            .collect();
        EllipticOp { stiffness, scale, diag, bc, mask, jacobi }
    }

    /// Zero the eliminated entries of a right-hand side.
    pub fn restrict_rhs(&self, b: &mut [f64]) {
        if let Some(mk) = &self.mask {
            for (v, m) in b.iter_mut().zip(mk) {
                if *m {
                    *v = 0.0;
                }
            }
        }
    }

    /// Jacobi scaling `1/|A_ii|`.
    pub fn jacobi(&self) -> &[f64] {
        &self.jacobi
    }

    /// Symmetry defect `max |A_ij - A_ji|` of the assembled matrix.
    pub fn symmetry_defect(&self) -> f64 {
        self.scale * self.stiffness.symmetry_defect()
    }
}

impl LinearOperator for EllipticOp {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s = &*self.stiffness;
        for i in 0..s.nrows {
            let mut acc = 0.0;
            for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                acc += s.vals[k] * x[s.cols[k] as usize];
            }
            y[i] = self.scale * acc + self.diag[i] * x[i];
        }
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.jacobi) {
            *zi = ri * d;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients; stops when `‖b - Ax‖ ≤ tol ‖b‖`.
pub fn pcg<A: LinearOperator + ?Sized>(op: &A, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = op.dim();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    op.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return Ok((x, SolveStats { iterations: it, residual: res }));
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::IterationLimit { module: "fields", limit: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        op.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if res <= tol {
        return Ok((x, SolveStats { iterations: max_iter, residual: res }));
    }
    Err(Error::IterationLimit { module: "fields", limit: max_iter, residual: res })
}

/// Preconditioned MINRES for symmetric (possibly indefinite) systems.
///
/// Stops when the preconditioned residual norm has dropped by `tol`; the
/// returned residual is the true relative residual `‖b - Ax‖/‖b‖`.
pub fn minres<A: LinearOperator + ?Sized>(op: &A, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = op.dim();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, residual: 0.0 }));
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r1 = vec![0.0; n];
    op.apply(&x, &mut r1);
    for (ri, bi) in r1.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut y = vec![0.0; n];
    op.precondition(&r1, &mut y);
    let beta1 = dot(&r1, &y);
    if !(beta1 >= 0.0) {
        return Err(Error::IterationLimit { module: "fields", limit: 0, residual: f64::NAN });
    }
    let beta1 = beta1.sqrt();
    let mut r2 = r1.clone();
    let (mut oldb, mut beta, mut dbar, mut epsln, mut phibar) = (0.0, beta1, 0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut iters = 0;
    let mut converged = beta1 == 0.0;
    while !converged && iters < max_iter {
        iters += 1;
        let s = 1.0 / beta;
        for i in 0..n {
            v[i] = s * y[i];
        }
        op.apply(&v, &mut y);
        if iters >= 2 {
            let f = beta / oldb;
            for i in 0..n {
                y[i] -= f * r1[i];
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for i in 0..n {
            y[i] -= f * r2[i];
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        op.precondition(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if !(bb >= 0.0) {
            return Err(Error::IterationLimit { module: "fields", limit: iters, residual: f64::NAN });
        }
        beta = bb.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 || beta == 0.0 {
            converged = true;
        }
    }
    let mut ax = vec![0.0; n];
    op.apply(&x, &mut ax);
    let res = ax.iter().zip(b).map(|(a, bb)| (bb - a) * (bb - a)).sum::<f64>().sqrt() / bnorm;
    if !converged {
        return Err(Error::IterationLimit { module: "fields", limit: max_iter, residual: res });
    }
    Ok((x, SolveStats { iterations: iters, residual: res }))
}
