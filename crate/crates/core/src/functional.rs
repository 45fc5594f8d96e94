//! Energies, the reduced functional `Ĩ_ε(ξ) = I_ε(W_{ε,ξ} + φ_{ε,ξ})`, its
//! boundary gradient, the expansion fit `Ĩ_ε ≈ C - ε α H(ξ)` and the peak
//! search on `∂M`.
//!
//! * `J_ε(u) = ε^{-n} [½ ∫ (ε²|∇_g u|² + m² u²) - (1/p) ∫ (u⁺)^p]`;
//! * `G_ε(u) = ε^{-n} q ∫ ψ(u) u²`, `½ G'_ε(u)[h] = ε^{-n} ∫ (2qψ - q²ψ²) u h`;
//! * `I_ε = J_ε + (ω²/2) G_ε`.

use serde::Serialize;

use crate::electrostatics::{Electrostatics, PsiVariant};
use crate::error::{Error, Result};
use crate::fields::{h1_norm, pcg, Adjoint, Discretization, EllipticOp, Field, LinearOperator, MAX_KRYLOV};
use crate::geometry::{boundary_exp, mean_curvature, BoundaryPoint, FermiChart, Frame, Geometry, GeometryKind};
use crate::ground_state::{compute_constants, GroundState};
use crate::params::ModelParams;
use crate::quad::{fit_line, gauss, GL5};
use crate::reduction::{discretize, ReductionOptions, ReductionState, Reducer};

/// `J`, `G` and `I = J + (ω²/2) G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub j: f64,
    pub g: f64,
    pub i: f64,
}

/// `J_ε(u)` on nodal values.
pub fn energy_j_raw(disc: &Discretization, u: &[f64], eps: f64, params: &ModelParams) -> f64 {
    let quad = 0.5 * (eps * eps * disc.stiffness_form(u, u) + params.msq() * disc.mass_form(u, u));
    let pot: f64 = disc.mass.iter().zip(u).map(|(m, v)| if *v > 0.0 { m * v.powf(params.p) } else { 0.0 }).sum();
    (quad - pot / params.p) / eps.powi(disc.grid.n as i32)
}

/// `J_ε(u)`.
pub fn energy_j(disc: &Discretization, u: &Field, eps: f64, params: &ModelParams) -> Result<f64> {
    u.check(disc)?;
    Ok(energy_j_raw(disc, &u.values, eps, params))
}

/// `G_ε(u)` given `ψ(u)`.
pub fn coupling_g_raw(disc: &Discretization, u: &[f64], psi: &[f64], eps: f64, q: f64) -> f64 {
    q * (0..u.len()).map(|i| disc.mass[i] * psi[i] * u[i] * u[i]).sum::<f64>() / eps.powi(disc.grid.n as i32)
}

/// `G'_ε(u)[h] = 2 ε^{-n} ∫ (2qψ - q²ψ²) u h` given `ψ(u)`.
pub fn coupling_g_grad_raw(disc: &Discretization, u: &[f64], psi: &[f64], h: &[f64], eps: f64, q: f64) -> f64 {
    2.0 * (0..u.len()).map(|i| disc.mass[i] * (2.0 * q * psi[i] - q * q * psi[i] * psi[i]) * u[i] * h[i]).sum::<f64>()
        / eps.powi(disc.grid.n as i32)
}

/// `G_ε(u)` (solves for `ψ(u)`).
pub fn coupling_g(disc: &Discretization, u: &Field, eps: f64, params: &ModelParams, variant: PsiVariant, tol: f64) -> Result<f64> {
    u.check(disc)?;
    let st = Electrostatics::new(disc, params.q, variant, tol)?.psi(&u.values, None)?;
    Ok(coupling_g_raw(disc, &u.values, &st.psi, eps, params.q))
}

/// `G'_ε(u)[h]` (solves for `ψ(u)`).
pub fn coupling_g_grad(disc: &Discretization, u: &Field, h: &Field, eps: f64, params: &ModelParams, variant: PsiVariant, tol: f64) -> Result<f64> {
    u.check(disc)?;
    h.check(disc)?;
    let st = Electrostatics::new(disc, params.q, variant, tol)?.psi(&u.values, None)?;
    Ok(coupling_g_grad_raw(disc, &u.values, &st.psi, &h.values, eps, params.q))
}

/// Energies of `u` with `ψ(u)` given (ignored when `ω = 0`).
pub fn energies(disc: &Discretization, u: &[f64], psi: &[f64], eps: f64, params: &ModelParams) -> EnergyBreakdown {
    let j = energy_j_raw(disc, u, eps, params);
    let g = if psi.is_empty() { 0.0 } else { coupling_g_raw(disc, u, psi, eps, params.q) };
    EnergyBreakdown { j, g, i: j + 0.5 * params.omega * params.omega * g }
}

/// Chart radius and reduction options shared by all evaluations of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSettings {
    pub radius: f64,
    pub opts: ReductionOptions,
}

/// A converged reduction at one boundary point.
pub struct Evaluation {
    pub chart: FermiChart,
    pub disc: Discretization,
    pub state: ReductionState,
    pub energy: EnergyBreakdown,
}

/// Reduce at `xi` (optionally with an explicit chart frame, optionally
/// warm-started from a `φ` on the same grid) and evaluate `Ĩ_ε`.
pub fn evaluate(geom: &Geometry, xi: &BoundaryPoint, frame: Option<Frame>, gs: &GroundState, params: &ModelParams, eps: f64, settings: &RunSettings, guess: Option<&[f64]>) -> Result<Evaluation> {
    let chart = FermiChart::with_frame(geom, xi, settings.radius, frame)?;
    let disc = discretize(&chart, eps, &settings.opts.grid)?;
    let state = Reducer::new(&disc, gs, *params, eps, settings.radius, settings.opts)?.solve_phi_from(guess)?;
    let energy = energies(&disc, &state.solution(), &state.psi, eps, params);
    Ok(Evaluation { chart, disc, state, energy })
}

/// One record of the reduced functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedSample {
    pub xi: BoundaryPoint,
    pub eps: f64,
    pub i_tilde: f64,
    /// `∂/∂y_h Ĩ_ε(exp_ξ(y))` at `y = 0` (empty if not requested).
    pub grad: Vec<f64>,
    pub h_xi: f64,
    /// Finite-difference step `δ_y`.
    pub delta_y: f64,
    pub energy: EnergyBreakdown,
    pub phi_norm: f64,
    /// Nodal `φ_{ε,ξ}` (chart grid), kept for warm starts.
    #[serde(skip)]
    pub phi: Vec<f64>,
}

/// Frame at a neighbour of `xi`, transported from the frame at `xi`.
fn neighbour_frame(geom: &Geometry, base: Option<Frame>, nb: &BoundaryPoint) -> Option<Frame> {
    let (s, fr) = (geom.surface()?, base?);
    Some(s.transported_frame(&nb.ambient(geom)?, &fr))
}

/// `Ĩ_ε(ξ)` and, if `gradient`, its central-difference boundary gradient
/// with step `δ_y = ε/4` (each stencil point re-runs the full reduction).
pub fn reduced_value(geom: &Geometry, xi: &BoundaryPoint, gs: &GroundState, params: &ModelParams, eps: f64, settings: &RunSettings, gradient: bool) -> Result<ReducedSample> {
    reduced_value_from(geom, xi, gs, params, eps, settings, gradient, None)
}

/// [`reduced_value`] with every reduction warm-started: the centre from
/// `guess`, the stencil points from the centre's `φ`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_value_from(geom: &Geometry, xi: &BoundaryPoint, gs: &GroundState, params: &ModelParams, eps: f64, settings: &RunSettings, gradient: bool, guess: Option<&[f64]>) -> Result<ReducedSample> {
    let ev = evaluate(geom, xi, None, gs, params, eps, settings, guess)?;
    let h_xi = mean_curvature(geom, xi)?;
    let delta_y = 0.25 * eps;
    let mut grad = Vec::new();
    if gradient {
        let base = geom.frame(xi);
        let d = geom.n - 1;
        for h in 0..d {
            let mut vals = [0.0; 2];
            for (k, s) in [1.0, -1.0].iter().enumerate() {
                let mut y = vec![0.0; d];
                y[h] = s * delta_y;
                let nb = boundary_exp(geom, xi, &y)?;
                let fr = neighbour_frame(geom, base, &nb);
                vals[k] = evaluate(geom, &nb, fr, gs, params, eps, settings, Some(&ev.state.phi))
                    .map_err(|e| Error::NonConvergedAtNeighbor(format!("direction {h}, sign {s}: {e}")))?
                    .energy
                    .i;
            }
            grad.push((vals[0] - vals[1]) / (2.0 * delta_y));
        }
    }
    Ok(ReducedSample { xi: xi.clone(), eps, i_tilde: ev.energy.i, grad, h_xi, delta_y, energy: ev.energy, phi_norm: ev.state.phi_norm, phi: ev.state.phi })
}

/// Samples as CSV: `xi_1..,eps,I_tilde,grad_1..,H,delta_y`.
pub fn samples_csv(samples: &[ReducedSample]) -> String {
    let nx = samples.first().map_or(0, |s| s.xi.coords().len());
    let ng = samples.iter().map(|s| s.grad.len()).max().unwrap_or(0);
    let mut out = String::new();
    for k in 0..nx {
        out.push_str(&format!("xi_{},", k + 1));
    }
    out.push_str("eps,I_tilde,");
    for k in 0..ng {
        out.push_str(&format!("grad_{},", k + 1));
    }
    out.push_str("H,delta_y\n");
    for s in samples {
        for c in s.xi.coords() {
            out.push_str(&format!("{c:.12e},"));
        }
        out.push_str(&format!("{:.12e},{:.12e},", s.eps, s.i_tilde));
        for k in 0..ng {
            out.push_str(&format!("{:.12e},", s.grad.get(k).copied().unwrap_or(f64::NAN)));
        }
        out.push_str(&format!("{:.12e},{:.12e}\n", s.h_xi, s.delta_y));
    }
    out
}

/// Linear regression of `Ĩ_ε` on `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionFit {
    pub c_est: f64,
    pub slope: f64,
    pub rms_residual: f64,
    /// `H(ξ)` of the samples.
    pub h_xi: f64,
    /// Predicted slope `-α H(ξ)`.
    pub predicted_slope: f64,
}

/// Fit `Ĩ_ε = C_est + s ε` over at least four samples at one `ξ`.
pub fn expansion_fit(samples: &[ReducedSample], alpha: f64) -> Result<ExpansionFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples { got: samples.len(), need: 4 });
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.eps).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.i_tilde).collect();
    let fit = fit_line(&xs, &ys).ok_or(Error::InsufficientSamples { got: samples.len(), need: 4 })?;
    let h_xi = samples[0].h_xi;
    Ok(ExpansionFit { c_est: fit.intercept, slope: fit.slope, rms_residual: fit.rms_residual, h_xi, predicted_slope: -alpha * h_xi })
}

/// Critical points of `H` used to report peak locations: the poles and the
/// equator of a spheroid, the bump centre of a synthetic geometry. Returns
/// `None` when every point is critical (ball, constant synthetic `h`).
pub fn nearest_critical_point(geom: &Geometry, xi: &BoundaryPoint) -> Option<(BoundaryPoint, f64)> {
    match (&geom.kind, xi) {
        (GeometryKind::Spheroid { a, c }, BoundaryPoint::Angles { theta, phi }) if a != c => {
            let (a, c) = (*a, *c);
            // Meridians are geodesics: distances are meridian arc lengths.
            let arc = |t0: f64, t1: f64| -> f64 {
                let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
                let m = 64;
                (0..m)
                    .map(|k| {
                        let x0 = lo + (hi - lo) * k as f64 / m as f64;
                        let x1 = lo + (hi - lo) * (k + 1) as f64 / m as f64;
                        gauss(&GL5, x0, x1, |t| (a * a * t.cos().powi(2) + c * c * t.sin().powi(2)).sqrt())
                    })
                    .sum()
            };
            let cands = [
                (BoundaryPoint::Angles { theta: 0.0, phi: *phi }, arc(0.0, *theta)),
                (BoundaryPoint::Angles { theta: std::f64::consts::FRAC_PI_2, phi: *phi }, arc(std::f64::consts::FRAC_PI_2, *theta)),
                (BoundaryPoint::Angles { theta: std::f64::consts::PI, phi: *phi }, arc(std::f64::consts::PI, *theta)),
            ];
            cands.into_iter().min_by(|x, y| x.1.total_cmp(&y.1))
        }
        (GeometryKind::Synthetic(s), BoundaryPoint::Flat(x)) => {
            let b = s.bump.as_ref().filter(|b| b.amplitude != 0.0)?;
            let d = x.iter().zip(&b.center).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            Some((BoundaryPoint::Flat(b.center.clone()), d))
        }
        _ => None,
    }
}

/// Options of the peak search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakOptions {
    /// Stop when `|∇Ĩ_ε| < grad_factor · ε²`.
    pub grad_factor: f64,
    /// Step `c` of the ascent `ξ ← exp_ξ(-c ∇Ĩ_ε / (ε α))`, i.e. a step of
    /// length `c |∇H|` in the leading-order model `Ĩ ≈ C - εαH`.
    pub ascent_step: f64,
    pub max_iter: usize,
}

impl Default for PeakOptions {
    fn default() -> Self {
        PeakOptions { grad_factor: 1.0, ascent_step: 0.05, max_iter: 60 }
    }
}

/// One iterate of the peak search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakStep {
    pub xi: BoundaryPoint,
    pub i_tilde: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Result of the peak search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakResult {
    pub xi: BoundaryPoint,
    pub i_tilde: f64,
    pub grad_norm: f64,
    pub tolerance: f64,
    pub iterations: usize,
    /// Nearest critical point of `H` and its boundary distance (None if every point is critical).
    pub nearest_critical: Option<(BoundaryPoint, f64)>,
    pub history: Vec<PeakStep>,
}

#[allow(clippy::too_many_arguments)]
fn peak_from_seed(geom: &Geometry, gs: &GroundState, params: &ModelParams, eps: f64, settings: &RunSettings, seed: &BoundaryPoint, popts: &PeakOptions, alpha: f64) -> Result<PeakResult> {
    let tol = popts.grad_factor * eps * eps;
    let mut cur = reduced_value(geom, seed, gs, params, eps, settings, true)?;
    let mut history = Vec::new();
    let mut c = popts.ascent_step;
    for it in 0..popts.max_iter {
        let gnorm = cur.grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        history.push(PeakStep { xi: cur.xi.clone(), i_tilde: cur.i_tilde, grad_norm: gnorm, step: c });
        if gnorm < tol {
            return Ok(PeakResult {
                nearest_critical: nearest_critical_point(geom, &cur.xi),
                xi: cur.xi,
                i_tilde: cur.i_tilde,
                grad_norm: gnorm,
                tolerance: tol,
                iterations: it,
                history,
            });
        }
        let mut accepted = None;
        for _ in 0..8 {
            let y: Vec<f64> = cur.grad.iter().map(|g| -c * g / (eps * alpha)).collect();
            let next_xi = boundary_exp(geom, &cur.xi, &y)?;
            let next = reduced_value_from(geom, &next_xi, gs, params, eps, settings, true, Some(&cur.phi))?;
            if next.i_tilde <= cur.i_tilde {
                accepted = Some(next);
                break;
            }
            c *= 0.5;
        }
        cur = accepted.ok_or_else(|| Error::OptimizerStalled(format!("no descent after step halving at iteration {it}")))?;
    }
    Err(Error::OptimizerStalled(format!("gradient above {tol:.3e} after {} iterations", popts.max_iter)))
}

/// Projected-gradient search for a local minimiser of `Ĩ_ε` (a peak
/// location) from each seed; returns the result with the lowest `Ĩ_ε`.
pub fn find_peak(geom: &Geometry, gs: &GroundState, params: &ModelParams, eps: f64, settings: &RunSettings, seeds: &[BoundaryPoint], popts: &PeakOptions) -> Result<PeakResult> {
    if seeds.is_empty() {
        return Err(Error::InvalidParams("find_peak needs at least one seed".into()));
    }
    let alpha = compute_constants(gs)?.alpha;
    let mut best: Option<PeakResult> = None;
    for s in seeds {
        let r = peak_from_seed(geom, gs, params, eps, settings, s, popts, alpha)?;
        if best.as_ref().map_or(true, |b| r.i_tilde < b.i_tilde) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one seed"))
}

/// Residuals of the assembled solution `(u, v) = (W + φ, ψ(u))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionReport {
    /// Dual-norm residual of the matter equation, `‖A_ε⁻¹ r‖_ε`.
    pub residual_u: f64,
    /// `residual_u / ‖u‖_ε`.
    pub residual_u_rel: f64,
    /// Relative algebraic residual of the discrete second equation.
    pub residual_v: f64,
    /// `ε^{-n} ⟨r, Z^i⟩`: the components of the residual along the kernel.
    pub kernel_residual: Vec<f64>,
    /// `max |∂_n u|` on `y_n = 0` relative to `max |∇u|` (one-sided FD).
    pub neumann_defect: f64,
    /// Largest `|v|` on the Dirichlet faces (0 for the Neumann variant).
    pub dirichlet_defect: f64,
    /// `min u / max u` over nodes inside the cutoff support.
    pub min_ratio_support: f64,
}

/// Assemble `u = W + φ`, `v = ψ(u)` and their residuals.
pub fn assemble_solution(red: &Reducer, state: &ReductionState) -> Result<(Vec<f64>, Vec<f64>, SolutionReport)> {
    let disc = red.disc;
    let params = red.params;
    let eps = red.eps;
    let n = disc.len();
    let u = state.solution();
    let q = params.q;
    let om2 = params.omega * params.omega;
    let es = Electrostatics::new(disc, q, red.opts.variant, red.opts.krylov_tol)?;
    let st = es.psi(&u, None)?;
    let v = st.psi.clone();
    let adj = Adjoint::new(disc, eps, params.msq(), red.opts.krylov_tol)?;
    let mut r = vec![0.0; n];
    adj.operator().apply(&u, &mut r);
    for i in 0..n {
        let src = red.gs.f(u[i]) + om2 * (q * q * v[i] * v[i] - 2.0 * q * v[i]) * u[i];
        r[i] -= disc.mass[i] * src;
    }
    let (x, _) = adj.apply_load(&r, None)?;
    let scale = eps.powi(disc.grid.n as i32);
    let residual_u = red.norm(&x);
    let kernel_residual = red.kernel.z.iter().map(|z| z.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / scale).collect();
    // Second equation, on the operator it was solved with.
    let op = &st.op;
    let mut av = vec![0.0; n];
    op.apply(&v, &mut av);
    let mut b: Vec<f64> = u.iter().zip(&disc.mass).map(|(x, m)| q * x * x * m).collect();
    op.restrict_rhs(&mut b);
    let bn = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual_v = if bn > 0.0 { av.iter().zip(&b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt() / bn } else { 0.0 };
    // Boundary defects.
    let g = &disc.grid;
    let nd = g.n;
    let yn = &g.axes[nd - 1];
    let (h1, h2) = (yn[1] - yn[0], yn[2] - yn[1]);
    let (w0, w1, w2) = (-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2)));
    let mut m = vec![0usize; nd];
    let mut dn_max: f64 = 0.0;
    let mut grad_max: f64 = 0.0;
    let mut dir_defect: f64 = 0.0;
    let mut umin = f64::INFINITY;
    let umax = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for i in 0..n {
        g.multi(i, &mut m);
        if m[nd - 1] == 0 {
            let s = g.strides[nd - 1];
            dn_max = dn_max.max((w0 * u[i] + w1 * u[i + s] + w2 * u[i + 2 * s]).abs());
        }
        if m[nd - 1] + 1 < g.dims[nd - 1] {
            let s = g.strides[nd - 1];
            grad_max = grad_max.max(((u[i + s] - u[i]) / (yn[m[nd - 1] + 1] - yn[m[nd - 1]])).abs());
        }
        if red.opts.variant == PsiVariant::Dirichlet && g.on_face(i) {
            dir_defect = dir_defect.max(v[i].abs());
        }
        let y = g.coords(i);
        let rho = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        if rho < state.radius {
            umin = umin.min(u[i]);
        }
    }
    let report = SolutionReport {
        residual_u,
        residual_u_rel: residual_u / red.norm(&u),
        residual_v,
        kernel_residual,
        neumann_defect: if grad_max > 0.0 { dn_max / grad_max } else { 0.0 },
        dirichlet_defect: dir_defect,
        min_ratio_support: umin / umax,
    };
    Ok((u, v, report))
}

/// `‖ψ(u)‖_{H¹}`, a convenience for scaling studies.
pub fn psi_h1(disc: &Discretization, u: &[f64], q: f64, variant: PsiVariant, tol: f64) -> Result<f64> {
    let st = Electrostatics::new(disc, q, variant, tol)?.psi(u, None)?;
    Ok(h1_norm(disc, &st.psi))
}

/// Convenience: PCG solve of `op x = b` (re-exported for diagnostics).
pub fn solve_load(op: &EllipticOp, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    Ok(pcg(op, b, None, tol, MAX_KRYLOV)?.0)
}

#[cfg(test)]
#[path = "functional/tests.rs"]
mod tests;
